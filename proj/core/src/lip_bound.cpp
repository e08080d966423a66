#include "lncde/lip_bound.hpp"

#include <algorithm>
#include <cmath>

#include "lncde/errors.hpp"

namespace lncde {

namespace {

// Fixed, direction-rich start vector so results are reproducible.
Eigen::VectorXd start_vector(Eigen::Index n) {
  Eigen::VectorXd v(n);
  std::uint64_t state = 0x9E3779B97F4A7C15ULL;
  for (Eigen::Index i = 0; i < n; ++i) {
    state = state * 6364136223846793005ULL + 1442695040888963407ULL;
    v(i) = 0.5 + static_cast<double>(state >> 11) * 0x1.0p-53;
  }
  return v.normalized();
}

}  // namespace

SpectralNorm spectral_norm(const Eigen::MatrixXd& w, int max_iterations, double tolerance) {
  SpectralNorm out;
  out.left = Eigen::VectorXd::Zero(w.rows());
  out.right = Eigen::VectorXd::Zero(w.cols());
  if (w.size() == 0 || w.isZero(0.0)) return out;

  Eigen::VectorXd v = start_vector(w.cols());
  Eigen::VectorXd u = w * v;
  double sigma = u.norm();
  for (int it = 0; it < max_iterations; ++it) {
    if (sigma == 0.0) break;
    u /= sigma;
    v.noalias() = w.transpose() * u;
    const double vn = v.norm();
    if (vn == 0.0) break;
    v /= vn;
    u.noalias() = w * v;
    const double next = u.norm();
    const bool converged = std::abs(next - sigma) <= tolerance * next;
    sigma = next;
    if (converged) break;
  }
  out.value = sigma;
  out.right = v;
  out.left = sigma > 0.0 ? Eigen::VectorXd(u / sigma) : Eigen::VectorXd::Zero(w.rows());
  return out;
}

double lip2_layer_bound(const Eigen::MatrixXd& weight, const Eigen::VectorXd& bias, double gamma) {
  if (bias.size() != weight.rows()) throw DimensionError("lip2_layer_bound: bias/weight row mismatch");
  double sum = 0.0;
  for (Eigen::Index j = 0; j < weight.rows(); ++j) {
    const double r = weight.row(j).norm();
    const double row_max = std::max({0.5 * r * r, 1.1 * r, gamma * r + std::abs(bias(j))});
    sum += row_max * row_max;
  }
  return std::sqrt(sum);
}

double compose_lip2(double outer_layer_bound, double inner_bound) {
  return 5.0 * outer_layer_bound * std::max(1.0, inner_bound * inner_bound);
}

double fold_lip2(const std::vector<double>& layer_bounds) {
  if (layer_bounds.empty()) return 0.0;
  double acc = layer_bounds.front();
  for (std::size_t i = 1; i < layer_bounds.size(); ++i) acc = compose_lip2(layer_bounds[i], acc);
  return acc;
}

Lip2Report lip2_network_report(const MlpParams& params, const MlpSpec& spec, bool silu_prefix_only) {
  params.check(spec);
  std::size_t layers = spec.depth;
  for (std::size_t i = 0; i < spec.depth; ++i) {
    if (spec.activations[i] != Activation::SiLU) {
      if (!silu_prefix_only) {
        throw UnsupportedError("Lip(2) bound requires SiLU activations; layer " + std::to_string(i + 1) +
                               " uses " + to_string(spec.activations[i]));
      }
      layers = i;
      break;
    }
  }
  if (layers == 0) throw UnsupportedError("Lip(2) bound: network has no SiLU layers");

  Lip2Report report;
  const double sqrt_in = std::sqrt(static_cast<double>(spec.input_dim));
  const double sqrt_h = std::sqrt(static_cast<double>(spec.width));
  double gamma = sqrt_in;
  for (std::size_t i = 0; i < layers; ++i) {
    if (i == 1) {
      gamma = sqrt_in * spectral_norm(params.weights[0]).value + params.biases[0].norm();
    } else if (i >= 2) {
      gamma = sqrt_h * spectral_norm(params.weights[i - 1]).value * gamma + params.biases[i - 1].norm();
    }
    report.gammas.push_back(gamma);
    report.layer_bounds.push_back(lip2_layer_bound(params.weights[i], params.biases[i], gamma));
    const double folded = i == 0 ? report.layer_bounds[0] : compose_lip2(report.layer_bounds[i], report.folded.back());
    report.folded.push_back(folded);
  }
  report.network_bound = report.folded.back();
  return report;
}

double lip2_network_bound(const MlpParams& params, const MlpSpec& spec) {
  return lip2_network_report(params, spec).network_bound;
}

double spectral_penalty(const MlpParams& params, double lambda, MlpParams* grad) {
  if (lambda < 0.0) throw PreconditionError("spectral_penalty: weight must be non-negative");
  if (lambda == 0.0) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < params.weights.size(); ++i) {
    // The gradient u v^T needs converged singular vectors, not just the value.
    const SpectralNorm sn = spectral_norm(params.weights[i], 500, 1e-15);
    const double bn = params.biases[i].norm();
    total += sn.value + bn;
    if (grad != nullptr) {
      grad->weights[i].noalias() += lambda * sn.left * sn.right.transpose();
      if (bn > 0.0) grad->biases[i] += (lambda / bn) * params.biases[i];
    }
  }
  return lambda * total;
}

std::int64_t flop_model(std::int64_t u, std::int64_t v, std::int64_t n_h, std::int64_t m, Family family) {
  const std::int64_t base = 2 * u * n_h + 2 * (m - 1) * n_h * n_h;
  const std::int64_t ncde = base + 2 * u * v * n_h;
  switch (family) {
    case Family::NCDE: return ncde;
    case Family::NRDE: return base + u * (v * v - v) * n_h;
    case Family::LogNCDE: return 3 * v * ncde;
  }
  return 0;
}

}  // namespace lncde
