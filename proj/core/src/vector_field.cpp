#include "lncde/vector_field.hpp"

#include <cmath>

#include "lncde/errors.hpp"

namespace lncde {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using RowMajorMap = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using ConstRowMajorMap =
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using StridedMap = Eigen::Map<MatrixXd, 0, Eigen::Stride<Eigen::Dynamic, Eigen::Dynamic>>;
using ConstStridedMap = Eigen::Map<const MatrixXd, 0, Eigen::Stride<Eigen::Dynamic, Eigen::Dynamic>>;
using Strides = Eigen::Stride<Eigen::Dynamic, Eigen::Dynamic>;

std::string to_string(Family family) {
  switch (family) {
    case Family::NCDE: return "ncde";
    case Family::NRDE: return "nrde";
    case Family::LogNCDE: return "logncde";
  }
  return "?";
}

std::string to_string(Activation act) {
  switch (act) {
    case Activation::Identity: return "identity";
    case Activation::ReLU: return "relu";
    case Activation::SiLU: return "silu";
    case Activation::Tanh: return "tanh";
  }
  return "?";
}

Family parse_family(const std::string& name) {
  if (name == "ncde") return Family::NCDE;
  if (name == "nrde") return Family::NRDE;
  if (name == "logncde") return Family::LogNCDE;
  throw PreconditionError("unknown model family '" + name + "'");
}

double silu(double y) { return y / (1.0 + std::exp(-y)); }

MlpSpec MlpSpec::for_family(Family family, std::size_t hidden_state, std::size_t columns,
                            std::size_t width, std::size_t depth) {
  MlpSpec spec{hidden_state, hidden_state, columns, width, depth, {}};
  switch (family) {
    case Family::NCDE:
      spec.activations.assign(depth, Activation::ReLU);
      spec.activations.back() = Activation::Tanh;
      break;
    case Family::NRDE:
      spec.activations.assign(depth, Activation::ReLU);
      spec.activations.back() = Activation::Identity;
      if (depth >= 2) spec.activations[depth - 2] = Activation::Tanh;
      break;
    case Family::LogNCDE:
      spec.activations.assign(depth, Activation::SiLU);
      spec.activations.back() = Activation::Tanh;
      break;
  }
  spec.validate();
  return spec;
}

void MlpSpec::validate() const {
  if (input_dim == 0 || out_rows == 0 || out_cols == 0) throw DimensionError("MlpSpec: dimensions must be positive");
  if (depth == 0) throw DimensionError("MlpSpec: depth must be at least one layer");
  if (depth > 1 && width == 0) throw DimensionError("MlpSpec: hidden width must be positive");
  if (activations.size() != depth) throw DimensionError("MlpSpec: one activation per layer required");
}

MlpParams MlpParams::zeros(const MlpSpec& spec) {
  spec.validate();
  MlpParams p;
  for (std::size_t i = 0; i < spec.depth; ++i) {
    const auto rows = static_cast<Eigen::Index>(spec.layer_out(i));
    const auto cols = static_cast<Eigen::Index>(spec.layer_in(i));
    p.weights.push_back(MatrixXd::Zero(rows, cols));
    p.biases.push_back(VectorXd::Zero(rows));
  }
  return p;
}

void MlpParams::check(const MlpSpec& spec) const {
  if (weights.size() != spec.depth || biases.size() != spec.depth) {
    throw DimensionError("MlpParams: layer count does not match spec");
  }
  for (std::size_t i = 0; i < spec.depth; ++i) {
    if (static_cast<std::size_t>(weights[i].rows()) != spec.layer_out(i) ||
        static_cast<std::size_t>(weights[i].cols()) != spec.layer_in(i) ||
        static_cast<std::size_t>(biases[i].size()) != spec.layer_out(i)) {
      throw DimensionError("MlpParams: layer " + std::to_string(i) + " shape does not match spec");
    }
  }
}

std::size_t MlpParams::num_scalars() const {
  std::size_t n = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    n += static_cast<std::size_t>(weights[i].size() + biases[i].size());
  }
  return n;
}

MlpParams& MlpParams::operator+=(const MlpParams& other) {
  for (std::size_t i = 0; i < weights.size(); ++i) {
    weights[i] += other.weights[i];
    biases[i] += other.biases[i];
  }
  return *this;
}

MlpParams& MlpParams::operator*=(double s) {
  for (std::size_t i = 0; i < weights.size(); ++i) {
    weights[i] *= s;
    biases[i] *= s;
  }
  return *this;
}

void MlpParams::set_zero() {
  for (std::size_t i = 0; i < weights.size(); ++i) {
    weights[i].setZero();
    biases[i].setZero();
  }
}

namespace {

MatrixXd activate(Activation act, const MatrixXd& z) {
  switch (act) {
    case Activation::Identity: return z;
    case Activation::ReLU: return z.cwiseMax(0.0);
    case Activation::SiLU: return (z.array() / (1.0 + (-z.array()).exp())).matrix();
    case Activation::Tanh: return z.array().tanh().matrix();
  }
  return z;
}

MatrixXd activate_d1(Activation act, const MatrixXd& z) {
  switch (act) {
    case Activation::Identity: return MatrixXd::Ones(z.rows(), z.cols());
    case Activation::ReLU: return (z.array() > 0.0).cast<double>().matrix();
    case Activation::SiLU: {
      const Eigen::ArrayXXd s = 1.0 / (1.0 + (-z.array()).exp());
      return (s * (1.0 + z.array() * (1.0 - s))).matrix();
    }
    case Activation::Tanh: {
      const Eigen::ArrayXXd t = z.array().tanh();
      return (1.0 - t * t).matrix();
    }
  }
  return z;
}

MatrixXd activate_d2(Activation act, const MatrixXd& z) {
  switch (act) {
    case Activation::Identity:
    case Activation::ReLU: return MatrixXd::Zero(z.rows(), z.cols());
    case Activation::SiLU: {
      const Eigen::ArrayXXd s = 1.0 / (1.0 + (-z.array()).exp());
      return (s * (1.0 - s) * (2.0 + z.array() * (1.0 - 2.0 * s))).matrix();
    }
    case Activation::Tanh: {
      const Eigen::ArrayXXd t = z.array().tanh();
      return (-2.0 * t * (1.0 - t * t)).matrix();
    }
  }
  return z;
}

void check_input(const MlpParams& params, const MlpSpec& spec, Eigen::Index rows) {
  params.check(spec);
  if (static_cast<std::size_t>(rows) != spec.input_dim) {
    throw DimensionError("network input has " + std::to_string(rows) + " rows, expected " +
                         std::to_string(spec.input_dim));
  }
}

// Scales block b (cols [b*c, (b+1)*c)) of m row-wise by scale.col(b).
void scale_blocks(MatrixXd& m, const MatrixXd& scale, Eigen::Index c) {
  for (Eigen::Index b = 0; b < scale.cols(); ++b) {
    m.middleCols(b * c, c).array().colwise() *= scale.col(b).array();
  }
}

}  // namespace

MatrixXd mlp_forward(const MlpParams& params, const MlpSpec& spec, const VectorXd& h) {
  check_input(params, spec, h.size());
  VectorXd a = h;
  for (std::size_t i = 0; i < spec.depth; ++i) {
    VectorXd z = params.weights[i] * a + params.biases[i];
    a = activate(spec.activations[i], z);
  }
  return ConstRowMajorMap(a.data(), static_cast<Eigen::Index>(spec.out_rows),
                          static_cast<Eigen::Index>(spec.out_cols));
}

MatrixXd mlp_jvp(const MlpParams& params, const MlpSpec& spec, const VectorXd& h, const VectorXd& dir) {
  check_input(params, spec, h.size());
  if (dir.size() != h.size()) throw DimensionError("mlp_jvp: direction size mismatch");
  VectorXd a = h;
  VectorXd da = dir;
  for (std::size_t i = 0; i < spec.depth; ++i) {
    VectorXd z = params.weights[i] * a + params.biases[i];
    VectorXd dz = params.weights[i] * da;
    a = activate(spec.activations[i], z);
    da = activate_d1(spec.activations[i], z).cwiseProduct(dz);
  }
  return ConstRowMajorMap(da.data(), static_cast<Eigen::Index>(spec.out_rows),
                          static_cast<Eigen::Index>(spec.out_cols));
}

MatrixXd bracket_coefficients(const LogSignature& logsig) {
  const auto v = static_cast<Eigen::Index>(logsig.width);
  MatrixXd c = MatrixXd::Zero(v, v);
  if (logsig.depth < 2) return c;
  std::size_t k = logsig.width;
  for (Eigen::Index i = 0; i < v; ++i) {
    for (Eigen::Index j = i + 1; j < v; ++j) {
      c(i, j) = logsig.coeffs[k];
      c(j, i) = -logsig.coeffs[k];
      ++k;
    }
  }
  return c;
}

VectorXd logode_field(const MlpParams& params, const MlpSpec& spec, const VectorXd& h,
                      const LogSignature& logsig, double duration) {
  if (logsig.depth > 2) throw UnsupportedError("logode_field: only depth 1 and 2 are supported");
  if (!(duration > 0.0)) throw PreconditionError("logode_field: duration must be positive");
  if (logsig.width != spec.out_cols) throw DimensionError("logode_field: log-signature width != field columns");
  const auto v = static_cast<Eigen::Index>(logsig.width);
  FieldDrive drive;
  drive.linear = Eigen::Map<const VectorXd>(logsig.coeffs.data(), v) / duration;
  if (logsig.depth == 2) drive.brackets.push_back(bracket_coefficients(logsig) / duration);
  FieldEvaluation eval;
  evaluate_field(params, spec, h, drive, eval);
  return eval.output.col(0);
}

void evaluate_field(const MlpParams& params, const MlpSpec& spec, const MatrixXd& state,
                    const FieldDrive& drive, FieldEvaluation& eval) {
  check_input(params, spec, state.rows());
  const std::size_t m = spec.depth;
  const Eigen::Index batch = state.cols();
  const auto u = static_cast<Eigen::Index>(spec.out_rows);
  const auto c = static_cast<Eigen::Index>(spec.out_cols);
  if (drive.linear.rows() != c || drive.linear.cols() != batch) {
    throw DimensionError("evaluate_field: drive coefficients must be out_cols x batch");
  }

  eval.pre.resize(m);
  eval.post.resize(m + 1);
  eval.post[0] = state;
  for (std::size_t i = 0; i < m; ++i) {
    eval.pre[i].noalias() = params.weights[i] * eval.post[i];
    eval.pre[i].colwise() += params.biases[i];
    eval.post[i + 1] = activate(spec.activations[i], eval.pre[i]);
  }

  eval.output.resize(u, batch);
  for (Eigen::Index b = 0; b < batch; ++b) {
    ConstRowMajorMap f(eval.post[m].col(b).data(), u, c);
    eval.output.col(b).noalias() = f * drive.linear.col(b);
  }
  if (!drive.has_brackets()) {
    eval.tangent.clear();
    eval.tan_pre.clear();
    eval.last_sel.clear();
    return;
  }
  if (static_cast<Eigen::Index>(drive.brackets.size()) != batch) {
    throw DimensionError("evaluate_field: one bracket matrix per batch column required");
  }
  if (spec.input_dim != spec.out_rows) {
    throw DimensionError("evaluate_field: bracket terms need a square field (input dim == rows)");
  }

  // Tangent of every column j is seeded with D_b e_j = F_b C_b e_j.
  eval.tangent.resize(m);
  eval.tan_pre.resize(m > 0 ? m - 1 : 0);
  eval.tangent[0].resize(u, c * batch);
  for (Eigen::Index b = 0; b < batch; ++b) {
    ConstRowMajorMap f(eval.post[m].col(b).data(), u, c);
    eval.tangent[0].middleCols(b * c, c).noalias() = f * drive.brackets[static_cast<std::size_t>(b)];
  }
  for (std::size_t i = 0; i + 1 < m; ++i) {
    eval.tan_pre[i].noalias() = params.weights[i] * eval.tangent[i];
    eval.tangent[i + 1] = eval.tan_pre[i];
    scale_blocks(eval.tangent[i + 1], activate_d1(spec.activations[i], eval.pre[i]), c);
  }

  // Last layer: column j of the JVP along D_b e_j only needs output rows r*c + j.
  const MatrixXd& w_last = params.weights[m - 1];
  const MatrixXd& t_last = eval.tangent[m - 1];
  const MatrixXd s_last = activate_d1(spec.activations[m - 1], eval.pre[m - 1]);
  const Eigen::Index n_in = w_last.cols();
  const Eigen::Index n_out = w_last.rows();
  eval.last_sel.resize(static_cast<std::size_t>(c));
  for (Eigen::Index j = 0; j < c; ++j) {
    ConstStridedMap w_j(w_last.data() + j, u, n_in, Strides(n_out, c));
    Eigen::Map<const MatrixXd, 0, Eigen::OuterStride<>> t_j(t_last.data() + j * t_last.rows(), t_last.rows(),
                                                            batch, Eigen::OuterStride<>(c * t_last.rows()));
    ConstStridedMap s_j(s_last.data() + j, u, batch, Strides(n_out, c));
    auto& sel = eval.last_sel[static_cast<std::size_t>(j)];
    sel.noalias() = w_j * t_j;
    eval.output.array() += s_j.array() * sel.array();
  }
}

void field_vjp(const MlpParams& params, const MlpSpec& spec, const FieldDrive& drive,
               const FieldEvaluation& eval, const MatrixXd& output_bar, MlpParams& grad,
               MatrixXd& state_bar) {
  const std::size_t m = spec.depth;
  const Eigen::Index batch = eval.output.cols();
  const auto u = static_cast<Eigen::Index>(spec.out_rows);
  const auto c = static_cast<Eigen::Index>(spec.out_cols);
  if (output_bar.rows() != u || output_bar.cols() != batch) {
    throw DimensionError("field_vjp: adjoint shape mismatch");
  }
  grad.check(spec);

  std::vector<MatrixXd> pre_bar(m);
  for (std::size_t i = 0; i < m; ++i) pre_bar[i] = MatrixXd::Zero(eval.pre[i].rows(), batch);

  MatrixXd post_bar = MatrixXd::Zero(static_cast<Eigen::Index>(spec.output_dim()), batch);
  for (Eigen::Index b = 0; b < batch; ++b) {
    RowMajorMap f_bar(post_bar.col(b).data(), u, c);
    f_bar.noalias() += output_bar.col(b) * drive.linear.col(b).transpose();
  }

  if (drive.has_brackets()) {
    const MatrixXd& w_last = params.weights[m - 1];
    const MatrixXd& t_last = eval.tangent[m - 1];
    const Eigen::Index n_in = w_last.cols();
    const Eigen::Index n_out = w_last.rows();
    const MatrixXd s1 = activate_d1(spec.activations[m - 1], eval.pre[m - 1]);
    const MatrixXd s2 = activate_d2(spec.activations[m - 1], eval.pre[m - 1]);

    MatrixXd tangent_bar = MatrixXd::Zero(t_last.rows(), t_last.cols());
    for (Eigen::Index j = 0; j < c; ++j) {
      ConstStridedMap w_j(w_last.data() + j, u, n_in, Strides(n_out, c));
      StridedMap w_bar_j(grad.weights[m - 1].data() + j, u, n_in, Strides(n_out, c));
      Eigen::Map<const MatrixXd, 0, Eigen::OuterStride<>> t_j(t_last.data() + j * t_last.rows(), t_last.rows(),
                                                              batch, Eigen::OuterStride<>(c * t_last.rows()));
      Eigen::Map<MatrixXd, 0, Eigen::OuterStride<>> t_bar_j(tangent_bar.data() + j * t_last.rows(),
                                                            t_last.rows(), batch,
                                                            Eigen::OuterStride<>(c * t_last.rows()));
      ConstStridedMap s1_j(s1.data() + j, u, batch, Strides(n_out, c));
      ConstStridedMap s2_j(s2.data() + j, u, batch, Strides(n_out, c));
      StridedMap pre_bar_j(pre_bar[m - 1].data() + j, u, batch, Strides(n_out, c));

      const MatrixXd y_bar = (s1_j.array() * output_bar.array()).matrix();
      pre_bar_j.array() += s2_j.array() * output_bar.array() * eval.last_sel[static_cast<std::size_t>(j)].array();
      w_bar_j.noalias() += y_bar * t_j.transpose();
      t_bar_j.noalias() = w_j.transpose() * y_bar;
    }

    for (std::size_t k = m - 1; k-- > 0;) {
      const MatrixXd d1 = activate_d1(spec.activations[k], eval.pre[k]);
      const MatrixXd d2 = activate_d2(spec.activations[k], eval.pre[k]);
      MatrixXd y_bar = tangent_bar;
      scale_blocks(y_bar, d1, c);
      const Eigen::ArrayXXd prod = tangent_bar.array() * eval.tan_pre[k].array();
      for (Eigen::Index b = 0; b < batch; ++b) {
        pre_bar[k].col(b).array() += d2.col(b).array() * prod.middleCols(b * c, c).rowwise().sum();
      }
      grad.weights[k].noalias() += y_bar * eval.tangent[k].transpose();
      tangent_bar.noalias() = params.weights[k].transpose() * y_bar;
    }

    for (Eigen::Index b = 0; b < batch; ++b) {
      RowMajorMap f_bar(post_bar.col(b).data(), u, c);
      f_bar.noalias() += tangent_bar.middleCols(b * c, c) * drive.brackets[static_cast<std::size_t>(b)].transpose();
    }
  }

  for (std::size_t k = m; k-- > 0;) {
    pre_bar[k].array() += activate_d1(spec.activations[k], eval.pre[k]).array() * post_bar.array();
    grad.weights[k].noalias() += pre_bar[k] * eval.post[k].transpose();
    grad.biases[k] += pre_bar[k].rowwise().sum();
    post_bar.noalias() = params.weights[k].transpose() * pre_bar[k];
  }
  state_bar = std::move(post_bar);
}

}  // namespace lncde
