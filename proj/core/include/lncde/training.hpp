#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "lncde/models.hpp"

namespace lncde {

struct TrainOptions {
  std::size_t steps = 10000;
  std::size_t batch = 32;
  AdamConfig adam;
  std::uint64_t seed = 0;
  // Validation every this many steps (and always at step 0 and the last step).
  std::size_t eval_every = 100;
  // Stop once validation accuracy reaches this value (classification only).
  std::optional<double> target_metric;
};

struct MetricsRow {
  std::size_t step = 0;
  double train_loss = 0.0;  // mean over steps since the previous row; initial row uses the first batch
  double val_metric = 0.0;
  double wall_seconds = 0.0;
};

struct TrainResult {
  TrainState final_state;
  ModelParams best_params;
  double best_val_metric = 0.0;
  std::size_t best_step = 0;
  std::vector<MetricsRow> history;
  bool reached_target = false;
};

using MetricsCallback = std::function<void(const MetricsRow&)>;

// Minibatch Adam on `train`, sampling batches from a seeded shuffle of the
// training set each epoch. Best-validation parameters are kept (highest
// accuracy, or lowest MSE for regression).
TrainResult train_model(const ModelConfig& config, const std::vector<PreparedSeries>& train,
                        const std::vector<PreparedSeries>& val, const TrainOptions& options,
                        const MetricsCallback& on_row = {});

}  // namespace lncde
