#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lncde/training.hpp"

namespace lncde::cli {

struct GenDataArgs {
  std::string out;
  std::size_t num = 10000;
  std::size_t length = 100;
  std::size_t channels = 6;
  int task = 2;
  std::uint64_t seed = 0;
  std::vector<double> splits{0.70, 0.15, 0.15};
};

struct TrainArgs {
  std::string data;
  std::string out;
  std::string model = "logncde";
  std::size_t hidden = 64;
  std::size_t vf_depth = 3;
  std::size_t vf_width = 128;
  std::size_t logode_depth = 2;
  std::size_t logode_step = 4;
  bool logode_depth_given = false;
  double lr = 3e-4;
  std::size_t steps = 10000;
  std::size_t batch = 32;
  double lambda = 0.0;
  bool include_time = false;
  std::uint64_t seed = 0;
  double solver_step = 0.01;
  std::size_t eval_every = 100;
  std::optional<double> target_accuracy;
  bool plot = false;
};

struct EvalArgs {
  std::string checkpoint;
  std::string data;
  std::string split = "test";
  std::string model;  // optional family check
  std::string out;    // optional report path
};

struct SigArgs {
  std::string path;  // inline "x,y;x,y;..." points at times 0,1,2,...
  std::string data;
  std::size_t series = 0;
  std::size_t depth = 2;
  std::string interval;  // "first:last" observation indices
};

struct LipArgs {
  std::string checkpoint;
  std::size_t unit_layers = 0;
};

struct FlopArgs {
  std::int64_t u = 64;
  std::int64_t v = 6;
  std::int64_t width = 128;
  std::int64_t depth = 3;
};

int cmd_gen_data(const GenDataArgs& args);
int cmd_train(const TrainArgs& args);
int cmd_eval(const EvalArgs& args);
int cmd_sig(const SigArgs& args);
int cmd_logsig(const SigArgs& args);
int cmd_lipbound(const LipArgs& args);
int cmd_flops(const FlopArgs& args);

// JSON form of the resolved training configuration (config.json).
std::string train_args_to_json(const TrainArgs& args);
TrainArgs train_args_from_json(const std::string& text);

// Static SVG of metrics: train loss and validation metric against step.
std::string metrics_svg(const std::vector<MetricsRow>& rows, const std::string& metric_name);

}  // namespace lncde::cli
