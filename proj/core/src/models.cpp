#include "lncde/models.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include "lncde/errors.hpp"
#include "lncde/io.hpp"
#include "lncde/lie_basis.hpp"
#include "lncde/lip_bound.hpp"

namespace lncde {

using Eigen::MatrixXd;
using Eigen::VectorXd;

std::size_t ModelConfig::field_columns() const {
  if (family == Family::NRDE) return beta(path_width(), logode_depth);
  return path_width();
}

MlpSpec ModelConfig::field_spec() const {
  MlpSpec spec = MlpSpec::for_family(family, hidden, field_columns(), vf_width, vf_depth);
  if (!field_activations.empty()) {
    spec.activations = field_activations;
    spec.validate();
  }
  return spec;
}

SolverConfig ModelConfig::solver_for(std::size_t series_length) const {
  if (solver_step > 0.0) return SolverConfig{solver_step};
  return SolverConfig::default_for(series_length, effective_step());
}

void ModelConfig::validate() const {
  if (input_channels == 0 || hidden == 0 || output_dim == 0) throw PreconditionError("model dimensions must be positive");
  if (vf_depth == 0 || (vf_depth > 1 && vf_width == 0)) throw PreconditionError("vector field needs depth >= 1 and positive width");
  if (lambda < 0.0) throw PreconditionError("penalty weight must be non-negative");
  if (logode_step == 0) throw PreconditionError("Log-ODE step must be positive");
  if (family == Family::LogNCDE && (logode_depth < 1 || logode_depth > 2)) {
    throw UnsupportedError("Log-NCDE supports Log-ODE depth 1 or 2");
  }
  if (family == Family::NRDE && (logode_depth < 1 || logode_depth > 2)) {
    throw UnsupportedError("NRDE supports Log-ODE depth 1 or 2");
  }
  if (family == Family::NCDE && logode_depth != 1) {
    throw PreconditionError("NCDE has no Log-ODE depth; use depth 1");
  }
  if (mode == LabelMode::Classification && output_dim < 2) {
    throw PreconditionError("classification needs at least two output classes");
  }
  if (solver_step < 0.0) throw PreconditionError("solver step must be non-negative");
}

ModelParams ModelParams::zeros(const ModelConfig& config) {
  const auto u = static_cast<Eigen::Index>(config.hidden);
  const auto v = static_cast<Eigen::Index>(config.path_width());
  const auto w = static_cast<Eigen::Index>(config.output_dim);
  ModelParams p;
  p.embed_weight = MatrixXd::Zero(u, v);
  p.embed_bias = VectorXd::Zero(u);
  p.field = MlpParams::zeros(config.field_spec());
  p.readout_weight = MatrixXd::Zero(w, u);
  p.readout_bias = VectorXd::Zero(w);
  return p;
}

std::size_t ModelParams::num_scalars() const {
  return static_cast<std::size_t>(embed_weight.size() + embed_bias.size() + readout_weight.size() +
                                  readout_bias.size()) +
         field.num_scalars();
}

namespace {

template <typename Fn>
void for_each_block(ModelParams& p, Fn&& fn) {
  fn(p.embed_weight.data(), p.embed_weight.size());
  fn(p.embed_bias.data(), p.embed_bias.size());
  for (std::size_t i = 0; i < p.field.weights.size(); ++i) {
    fn(p.field.weights[i].data(), p.field.weights[i].size());
    fn(p.field.biases[i].data(), p.field.biases[i].size());
  }
  fn(p.readout_weight.data(), p.readout_weight.size());
  fn(p.readout_bias.data(), p.readout_bias.size());
}

}  // namespace

VectorXd ModelParams::flatten() const {
  VectorXd flat(static_cast<Eigen::Index>(num_scalars()));
  Eigen::Index pos = 0;
  for_each_block(const_cast<ModelParams&>(*this), [&](double* data, Eigen::Index n) {
    flat.segment(pos, n) = Eigen::Map<const VectorXd>(data, n);
    pos += n;
  });
  return flat;
}

void ModelParams::assign(const VectorXd& flat) {
  if (static_cast<std::size_t>(flat.size()) != num_scalars()) throw DimensionError("ModelParams::assign: size mismatch");
  Eigen::Index pos = 0;
  for_each_block(*this, [&](double* data, Eigen::Index n) {
    Eigen::Map<VectorXd>(data, n) = flat.segment(pos, n);
    pos += n;
  });
}

std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag, std::uint64_t index) {
  auto mix = [](std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  };
  const std::uint64_t tag_hash =
      io::fnv1a({reinterpret_cast<const std::uint8_t*>(tag.data()), tag.size()});
  return mix(mix(mix(seed) ^ tag_hash) ^ index);
}

PreparedSeries prepare_series(const ModelConfig& config, const Example& example) {
  if (example.path.width() != config.input_channels) {
    throw DimensionError("series has " + std::to_string(example.path.width()) + " channels, model expects " +
                         std::to_string(config.input_channels));
  }
  if (example.path.size() < 2) throw PreconditionError("series needs at least two observations");
  PreparedSeries s;
  s.path = config.include_time ? example.path.with_time_channel() : example.path;
  s.label = example.label;
  s.target = example.target;
  s.partition = make_partition(s.path.size(), config.effective_step());
  s.boundaries = partition_boundaries(s.path, s.partition);
  if (config.family == Family::NCDE) {
    if (config.ncde_control == NcdeControl::Hermite) {
      s.control = std::make_shared<HermiteControl>(s.path);
    } else {
      s.control = std::make_shared<LinearControl>(s.path);
    }
  } else {
    const LyndonBasis basis(s.path.width(), config.effective_depth());
    s.logsigs.reserve(s.partition.num_intervals());
    for (std::size_t i = 0; i < s.partition.num_intervals(); ++i) {
      s.logsigs.push_back(log_signature(s.path, s.partition.interval(i), basis));
    }
  }
  return s;
}

std::vector<PreparedSeries> prepare_all(const ModelConfig& config, std::span<const Example> examples) {
  std::vector<PreparedSeries> out;
  out.reserve(examples.size());
  for (const Example& ex : examples) out.push_back(prepare_series(config, ex));
  return out;
}

TrainState init_params(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  TrainState state;
  state.seed = seed;
  state.params = ModelParams::zeros(config);
  std::mt19937_64 rng(derive_seed(seed, "init"));
  auto fill = [&](MatrixXd& w) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(w.cols()));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (Eigen::Index j = 0; j < w.cols(); ++j) {
      for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = dist(rng);
    }
  };
  fill(state.params.embed_weight);
  for (auto& w : state.params.field.weights) fill(w);
  fill(state.params.readout_weight);
  if (config.family == Family::LogNCDE) state.params.field *= 1e-3;
  const auto n = static_cast<Eigen::Index>(state.params.num_scalars());
  state.adam_m = VectorXd::Zero(n);
  state.adam_v = VectorXd::Zero(n);
  return state;
}

namespace {

// Indices of batch members grouped by identical integration grids.
std::vector<std::vector<std::size_t>> group_by_grid(const ModelConfig& config,
                                                    std::span<const PreparedSeries* const> batch) {
  std::map<std::vector<double>, std::vector<std::size_t>> groups;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    // ControlSchedule needs shared raw knot times; Log-ODE schedules need shared boundaries.
    const auto& key = config.family == Family::NCDE ? batch[b]->path.times() : batch[b]->boundaries;
    groups[key].push_back(b);
  }
  std::vector<std::vector<std::size_t>> out;
  out.reserve(groups.size());
  for (auto& [key, idx] : groups) out.push_back(std::move(idx));
  return out;
}

std::unique_ptr<DriveSchedule> make_schedule(const ModelConfig& config, std::span<const PreparedSeries* const> batch,
                                             const std::vector<std::size_t>& members) {
  if (config.family == Family::NCDE) {
    std::vector<const Control*> controls;
    controls.reserve(members.size());
    for (std::size_t b : members) controls.push_back(batch[b]->control.get());
    return std::make_unique<ControlSchedule>(std::move(controls));
  }
  std::vector<std::vector<LogSignature>> logsigs;
  logsigs.reserve(members.size());
  for (std::size_t b : members) logsigs.push_back(batch[b]->logsigs);
  return std::make_unique<LogOdeSchedule>(batch[members[0]]->boundaries, logsigs, config.family);
}

MatrixXd initial_inputs(std::span<const PreparedSeries* const> batch, const std::vector<std::size_t>& members) {
  const auto v = static_cast<Eigen::Index>(batch[members[0]]->path.width());
  MatrixXd x0(v, static_cast<Eigen::Index>(members.size()));
  for (std::size_t k = 0; k < members.size(); ++k) {
    auto p = batch[members[k]]->path.point(0);
    for (Eigen::Index c = 0; c < v; ++c) x0(c, static_cast<Eigen::Index>(k)) = p[static_cast<std::size_t>(c)];
  }
  return x0;
}

}  // namespace

MatrixXd forward_batch(const ModelParams& params, const ModelConfig& config,
                       std::span<const PreparedSeries* const> batch) {
  const MlpSpec spec = config.field_spec();
  MatrixXd out(static_cast<Eigen::Index>(config.output_dim), static_cast<Eigen::Index>(batch.size()));
  for (const auto& members : group_by_grid(config, batch)) {
    auto schedule = make_schedule(config, batch, members);
    MatrixXd h0 = params.embed_weight * initial_inputs(batch, members);
    h0.colwise() += params.embed_bias;
    const SolverConfig solver = config.solver_for(batch[members[0]]->path.size());
    MatrixXd h = integrate_field(params.field, spec, *schedule, h0, solver);
    MatrixXd z = params.readout_weight * h;
    z.colwise() += params.readout_bias;
    for (std::size_t k = 0; k < members.size(); ++k) out.col(static_cast<Eigen::Index>(members[k])) = z.col(static_cast<Eigen::Index>(k));
  }
  return out;
}

VectorXd forward(const TrainState& state, const ModelConfig& config, const Example& series) {
  const PreparedSeries prepared = prepare_series(config, series);
  const PreparedSeries* ptr = &prepared;
  return forward_batch(state.params, config, std::span<const PreparedSeries* const>(&ptr, 1)).col(0);
}

namespace {

// Data loss for output columns z and its gradient w.r.t. z (already divided by batch size).
double data_loss(const ModelConfig& config, const MatrixXd& z, std::span<const PreparedSeries* const> batch,
                 const std::vector<std::size_t>& members, double batch_total, MatrixXd* z_bar) {
  double total = 0.0;
  if (z_bar != nullptr) z_bar->resize(z.rows(), z.cols());
  for (Eigen::Index k = 0; k < z.cols(); ++k) {
    const PreparedSeries& s = *batch[members[static_cast<std::size_t>(k)]];
    if (config.mode == LabelMode::Classification) {
      if (s.label < 0 || s.label >= z.rows()) throw PreconditionError("class label out of range");
      const double zmax = z.col(k).maxCoeff();
      const VectorXd e = (z.col(k).array() - zmax).exp().matrix();
      const double sum = e.sum();
      total += std::log(sum) + zmax - z(s.label, k);
      if (z_bar != nullptr) {
        z_bar->col(k) = e / sum;
        (*z_bar)(s.label, k) -= 1.0;
        z_bar->col(k) /= batch_total;
      }
    } else {
      if (s.target.size() != z.rows()) throw DimensionError("regression target size mismatch");
      const VectorXd diff = z.col(k) - s.target;
      total += diff.squaredNorm();
      if (z_bar != nullptr) z_bar->col(k) = (2.0 / batch_total) * diff;
    }
  }
  return total;
}

}  // namespace

LossAndGrad loss_and_grad(const ModelParams& params, const ModelConfig& config,
                          std::span<const PreparedSeries* const> batch) {
  if (batch.empty()) throw PreconditionError("loss: empty batch");
  const MlpSpec spec = config.field_spec();
  LossAndGrad out;
  out.grad = ModelParams::zeros(config);
  const double n = static_cast<double>(batch.size());
  double total = 0.0;
  for (const auto& members : group_by_grid(config, batch)) {
    auto schedule = make_schedule(config, batch, members);
    const MatrixXd x0 = initial_inputs(batch, members);
    MatrixXd h0 = params.embed_weight * x0;
    h0.colwise() += params.embed_bias;
    const SolverConfig solver = config.solver_for(batch[members[0]]->path.size());
    SolveTape tape;
    const MatrixXd h = integrate_field(params.field, spec, *schedule, h0, solver, &tape);
    MatrixXd z = params.readout_weight * h;
    z.colwise() += params.readout_bias;
    MatrixXd z_bar;
    total += data_loss(config, z, batch, members, n, &z_bar);

    out.grad.readout_weight.noalias() += z_bar * h.transpose();
    out.grad.readout_bias += z_bar.rowwise().sum();
    const MatrixXd h_bar = params.readout_weight.transpose() * z_bar;
    const MatrixXd h0_bar = integrate_field_adjoint(params.field, spec, *schedule, tape, h_bar, out.grad.field);
    out.grad.embed_weight.noalias() += h0_bar * x0.transpose();
    out.grad.embed_bias += h0_bar.rowwise().sum();
  }
  out.data_loss = total / n;
  out.penalty = spectral_penalty(params.field, config.lambda, &out.grad.field);
  out.loss = out.data_loss + out.penalty;
  return out;
}

double loss(const TrainState& state, const ModelConfig& config, std::span<const PreparedSeries* const> batch) {
  if (batch.empty()) throw PreconditionError("loss: empty batch");
  const MatrixXd z = forward_batch(state.params, config, batch);
  std::vector<std::size_t> all(batch.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  const double n = static_cast<double>(batch.size());
  return data_loss(config, z, batch, all, n, nullptr) / n + spectral_penalty(state.params.field, config.lambda);
}

TrainState adam_step(const TrainState& state, const ModelParams& grads, const AdamConfig& adam) {
  TrainState next = state;
  const VectorXd g = grads.flatten();
  if (g.size() != state.adam_m.size()) throw DimensionError("adam_step: gradient shape mismatch");
  next.step = state.step + 1;
  next.adam_m = adam.beta1 * state.adam_m + (1.0 - adam.beta1) * g;
  next.adam_v = adam.beta2 * state.adam_v + (1.0 - adam.beta2) * g.cwiseAbs2();
  const double t = static_cast<double>(next.step);
  const double c1 = 1.0 - std::pow(adam.beta1, t);
  const double c2 = 1.0 - std::pow(adam.beta2, t);
  const VectorXd m_hat = next.adam_m / c1;
  const VectorXd v_hat = next.adam_v / c2;
  VectorXd theta = state.params.flatten();
  theta.array() -= adam.lr * m_hat.array() / (v_hat.array().sqrt() + adam.eps);
  next.params.assign(theta);
  return next;
}

double evaluate_metric(const ModelParams& params, const ModelConfig& config,
                       std::span<const PreparedSeries* const> batch, std::size_t chunk) {
  if (batch.empty()) return 0.0;
  chunk = std::max<std::size_t>(chunk, 1);
  double acc = 0.0;
  for (std::size_t start = 0; start < batch.size(); start += chunk) {
    const std::size_t len = std::min(chunk, batch.size() - start);
    const auto part = batch.subspan(start, len);
    const MatrixXd z = forward_batch(params, config, part);
    for (std::size_t k = 0; k < len; ++k) {
      if (config.mode == LabelMode::Classification) {
        Eigen::Index arg = 0;
        z.col(static_cast<Eigen::Index>(k)).maxCoeff(&arg);
        acc += (arg == part[k]->label) ? 1.0 : 0.0;
      } else {
        acc += (z.col(static_cast<Eigen::Index>(k)) - part[k]->target).squaredNorm() / static_cast<double>(z.rows());
      }
    }
  }
  return acc / static_cast<double>(batch.size());
}

namespace {
constexpr std::uint32_t kCheckpointVersion = 1;
constexpr char kMagic[4] = {'L', 'N', 'C', 'D'};

std::uint32_t family_tag(Family f) {
  switch (f) {
    case Family::NCDE: return 1;
    case Family::NRDE: return 2;
    case Family::LogNCDE: return 3;
  }
  return 0;
}

Family family_from_tag(std::uint32_t tag) {
  switch (tag) {
    case 1: return Family::NCDE;
    case 2: return Family::NRDE;
    case 3: return Family::LogNCDE;
    default: throw FormatError("checkpoint: unknown family tag " + std::to_string(tag));
  }
}
}  // namespace

void save_checkpoint(const std::string& path, const ModelConfig& config, const ModelParams& params) {
  config.validate();
  if (!config.field_activations.empty()) {
    throw UnsupportedError("checkpoint format stores family-default activations only");
  }
  std::vector<std::uint8_t> bytes(kMagic, kMagic + 4);
  io::put_u32(bytes, kCheckpointVersion);
  io::put_u32(bytes, family_tag(config.family));
  io::put_u32(bytes, static_cast<std::uint32_t>(config.hidden));
  io::put_u32(bytes, static_cast<std::uint32_t>(config.path_width()));
  io::put_u32(bytes, static_cast<std::uint32_t>(config.output_dim));
  io::put_u32(bytes, static_cast<std::uint32_t>(config.vf_width));
  io::put_u32(bytes, static_cast<std::uint32_t>(config.vf_depth));
  io::put_u32(bytes, static_cast<std::uint32_t>(config.logode_depth));
  io::put_u32(bytes, static_cast<std::uint32_t>(config.logode_step));
  std::uint32_t flags = 0;
  if (config.include_time) flags |= 1U;
  if (config.mode == LabelMode::Regression) flags |= 2U;
  if (config.ncde_control == NcdeControl::Linear) flags |= 4U;
  io::put_u32(bytes, flags);
  io::put_f64(bytes, config.solver_step);
  io::put_f64(bytes, config.lambda);
  const VectorXd flat = params.flatten();
  io::put_u64(bytes, static_cast<std::uint64_t>(flat.size()));
  for (Eigen::Index i = 0; i < flat.size(); ++i) io::put_f64(bytes, flat(i));
  io::write_file_atomic(path, bytes);
}

Checkpoint load_checkpoint(const std::string& path) {
  const auto bytes = io::read_file(path);
  io::Reader r(bytes);
  auto magic = r.raw(4);
  if (!std::equal(magic.begin(), magic.end(), kMagic)) throw FormatError("checkpoint: bad magic in '" + path + "'");
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) throw FormatError("checkpoint: unsupported version " + std::to_string(version));
  Checkpoint ck;
  ModelConfig& c = ck.config;
  c.family = family_from_tag(r.u32());
  c.hidden = r.u32();
  const std::uint32_t v = r.u32();
  c.output_dim = r.u32();
  c.vf_width = r.u32();
  c.vf_depth = r.u32();
  c.logode_depth = r.u32();
  c.logode_step = r.u32();
  const std::uint32_t flags = r.u32();
  c.include_time = (flags & 1U) != 0;
  c.mode = (flags & 2U) != 0 ? LabelMode::Regression : LabelMode::Classification;
  c.ncde_control = (flags & 4U) != 0 ? NcdeControl::Linear : NcdeControl::Hermite;
  c.solver_step = r.f64();
  c.lambda = r.f64();
  if (v < (c.include_time ? 2U : 1U)) throw FormatError("checkpoint: invalid channel count");
  c.input_channels = v - (c.include_time ? 1 : 0);
  c.validate();
  ck.params = ModelParams::zeros(c);
  const std::uint64_t count = r.u64();
  if (count != ck.params.num_scalars()) throw FormatError("checkpoint: parameter count does not match header dims");
  VectorXd flat(static_cast<Eigen::Index>(count));
  for (Eigen::Index i = 0; i < flat.size(); ++i) flat(i) = r.f64();
  if (r.remaining() != 0) throw FormatError("checkpoint: trailing bytes");
  ck.params.assign(flat);
  return ck;
}

}  // namespace lncde
