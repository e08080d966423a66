#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lncde/signature.hpp"
#include "lncde/solver.hpp"
#include "lncde/vector_field.hpp"

namespace lncde {

enum class LabelMode { Classification, Regression };
enum class NcdeControl { Hermite, Linear };

struct ModelConfig {
  Family family = Family::LogNCDE;
  std::size_t input_channels = 6;  // raw channels, before the optional time channel
  std::size_t hidden = 64;
  std::size_t vf_width = 128;
  std::size_t vf_depth = 3;
  std::size_t logode_depth = 2;
  std::size_t logode_step = 4;
  double lambda = 0.0;
  bool include_time = false;
  std::size_t output_dim = 2;
  LabelMode mode = LabelMode::Classification;
  // Fixed solver step in normalised time; 0 selects SolverConfig::default_for.
  double solver_step = 0.0;
  NcdeControl ncde_control = NcdeControl::Hermite;
  // Overrides the family's default activation placement when non-empty.
  std::vector<Activation> field_activations;

  std::size_t path_width() const noexcept { return input_channels + (include_time ? 1 : 0); }
  // Log-ODE depth actually used; NCDE is always depth 1 with step 1.
  std::size_t effective_depth() const noexcept { return family == Family::NCDE ? 1 : logode_depth; }
  std::size_t effective_step() const noexcept { return family == Family::NCDE ? 1 : logode_step; }
  // Columns of the field network: v for NCDE/Log-NCDE, beta(v, N) for NRDE.
  std::size_t field_columns() const;
  MlpSpec field_spec() const;
  SolverConfig solver_for(std::size_t series_length) const;
  void validate() const;
};

struct ModelParams {
  Eigen::MatrixXd embed_weight;  // u x v
  Eigen::VectorXd embed_bias;
  MlpParams field;
  Eigen::MatrixXd readout_weight;  // w x u
  Eigen::VectorXd readout_bias;

  static ModelParams zeros(const ModelConfig& config);
  std::size_t num_scalars() const;
  // Blocks in declaration order: embed W, embed b, field (W_i, b_i)..., readout W, readout b.
  Eigen::VectorXd flatten() const;
  void assign(const Eigen::VectorXd& flat);
};

struct TrainState {
  ModelParams params;
  Eigen::VectorXd adam_m;
  Eigen::VectorXd adam_v;
  std::uint64_t step = 0;
  std::uint64_t seed = 0;
};

// A labelled series in raw channel space.
struct Example {
  PiecewiseLinearPath path;
  int label = 0;            // class index (classification)
  Eigen::VectorXd target;   // regression target
};

// Parameter-independent per-series data: model-space path, its log-signatures
// over the partition (Log-ODE families) or its control (NCDE).
struct PreparedSeries {
  PiecewiseLinearPath path;
  IntervalPartition partition;
  std::vector<double> boundaries;
  std::vector<LogSignature> logsigs;
  std::shared_ptr<const Control> control;
  int label = 0;
  Eigen::VectorXd target;
};

PreparedSeries prepare_series(const ModelConfig& config, const Example& example);
std::vector<PreparedSeries> prepare_all(const ModelConfig& config, std::span<const Example> examples);

// Named sub-stream seed derivation (SplitMix64 over seed and a tag).
std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag, std::uint64_t index = 0);

TrainState init_params(const ModelConfig& config, std::uint64_t seed);

// Output logits / predictions for each series (w x B).
Eigen::MatrixXd forward_batch(const ModelParams& params, const ModelConfig& config,
                              std::span<const PreparedSeries* const> batch);
Eigen::VectorXd forward(const TrainState& state, const ModelConfig& config, const Example& series);

double loss(const TrainState& state, const ModelConfig& config, std::span<const PreparedSeries* const> batch);

struct LossAndGrad {
  double loss = 0.0;
  double data_loss = 0.0;
  double penalty = 0.0;
  ModelParams grad;
};

LossAndGrad loss_and_grad(const ModelParams& params, const ModelConfig& config,
                          std::span<const PreparedSeries* const> batch);

inline ModelParams grad(const TrainState& state, const ModelConfig& config,
                        std::span<const PreparedSeries* const> batch) {
  return loss_and_grad(state.params, config, batch).grad;
}

struct AdamConfig {
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

TrainState adam_step(const TrainState& state, const ModelParams& grads, const AdamConfig& adam);

// Classification accuracy (argmax) or mean squared error over the batch.
double evaluate_metric(const ModelParams& params, const ModelConfig& config,
                       std::span<const PreparedSeries* const> batch, std::size_t chunk = 64);

// Binary checkpoint: "LNCD", version, family, u, v, w, n_h, m, N, step, flags,
// scalar count, then little-endian float64 parameters in flatten() order.
void save_checkpoint(const std::string& path, const ModelConfig& config, const ModelParams& params);
struct Checkpoint {
  ModelConfig config;
  ModelParams params;
};
Checkpoint load_checkpoint(const std::string& path);

}  // namespace lncde
