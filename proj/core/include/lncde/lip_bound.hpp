#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "lncde/vector_field.hpp"

namespace lncde {

// Spectral norm by power iteration on W^T W from a fixed start vector, with
// the leading singular vectors (used for the gradient u v^T).
struct SpectralNorm {
  double value = 0.0;
  Eigen::VectorXd left;
  Eigen::VectorXd right;
};

SpectralNorm spectral_norm(const Eigen::MatrixXd& w, int max_iterations = 50, double tolerance = 1e-8);

// Per-layer Lip(2) bound for a SiLU layer with input magnitude factor gamma:
//   sqrt( sum_j max{0.5|W_j|^2, 1.1|W_j|, gamma |W_j| + |b_j|}^2 )
// where W_j is row j.
double lip2_layer_bound(const Eigen::MatrixXd& weight, const Eigen::VectorXd& bias, double gamma);

// Composition rule for gamma = 2: 5 * layer * max{1, inner^2}.
double compose_lip2(double outer_layer_bound, double inner_bound);

// Left fold of compose_lip2 over per-layer bounds (input layer first).
double fold_lip2(const std::vector<double>& layer_bounds);

struct Lip2Report {
  std::vector<double> gammas;        // input magnitude factor per layer
  std::vector<double> layer_bounds;  // per-layer bound
  std::vector<double> folded;        // bound of the first k+1 layers composed
  double network_bound = 0.0;
};

// Folds the layer bounds left to right. All layers must use SiLU unless
// silu_prefix_only is set, in which case the fold stops before the first
// non-SiLU layer (the tanh head of a Log-NCDE field).
Lip2Report lip2_network_report(const MlpParams& params, const MlpSpec& spec, bool silu_prefix_only = false);
double lip2_network_bound(const MlpParams& params, const MlpSpec& spec);

// lambda * sum_i (|W_i|_2 + |b_i|_2) and, optionally, its gradient.
double spectral_penalty(const MlpParams& params, double lambda, MlpParams* grad = nullptr);

// Vector-field evaluation cost model (FLOPs) for depth-2 Log-ODE comparisons.
std::int64_t flop_model(std::int64_t u, std::int64_t v, std::int64_t n_h, std::int64_t m, Family family);

}  // namespace lncde
