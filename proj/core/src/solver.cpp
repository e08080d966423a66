#include "lncde/solver.hpp"

#include <algorithm>
#include <cmath>

#include "lncde/errors.hpp"

namespace lncde {

using Eigen::MatrixXd;
using Eigen::VectorXd;

SolverConfig SolverConfig::default_for(std::size_t series_length, std::size_t logode_step) {
  if (logode_step == 0) throw PreconditionError("Log-ODE step must be positive");
  const double steps = std::max(500.0, 1.0 + static_cast<double>(series_length) / static_cast<double>(logode_step));
  return SolverConfig{1.0 / steps};
}

void SolverConfig::validate() const {
  if (!(step > 0.0) || !std::isfinite(step)) throw PreconditionError("solver step must be positive");
}

std::vector<double> step_sizes(double s0, double s1, double step) {
  if (!(s1 > s0)) throw PreconditionError("step_sizes: need s1 > s0");
  if (!(step > 0.0)) throw PreconditionError("step_sizes: step must be positive");
  const double ratio = (s1 - s0) / step;
  const auto n = static_cast<std::size_t>(std::max(1.0, std::ceil(ratio - 1e-9)));
  std::vector<double> sizes(n);
  double s = s0;
  for (std::size_t k = 0; k < n; ++k) {
    const double next = (k + 1 == n) ? s1 : s0 + static_cast<double>(k + 1) * step;
    sizes[k] = next - s;
    s = next;
  }
  return sizes;
}

VectorXd heun_integrate(const StateField& field, const VectorXd& h0, double s0, double s1, double step,
                        std::vector<VectorXd>* trajectory) {
  VectorXd h = h0;
  if (trajectory != nullptr) trajectory->assign(1, h);
  double s = s0;
  std::size_t index = 0;
  for (double ds : step_sizes(s0, s1, step)) {
    const VectorXd k1 = field(h, s);
    const VectorXd k2 = field(h + ds * k1, s + ds);
    h += 0.5 * ds * (k1 + k2);
    s += ds;
    if (!h.allFinite()) throw DivergenceError(index);
    if (trajectory != nullptr) trajectory->push_back(h);
    ++index;
  }
  return h;
}

LogOdeSchedule::LogOdeSchedule(std::vector<double> boundaries,
                               const std::vector<std::vector<LogSignature>>& logsigs, Family family)
    : boundaries_(std::move(boundaries)), batch_(logsigs.size()) {
  if (boundaries_.size() < 2) throw PreconditionError("LogOdeSchedule: need at least one interval");
  if (family == Family::NCDE) throw UnsupportedError("LogOdeSchedule: NCDE uses a control schedule");
  const std::size_t intervals = boundaries_.size() - 1;
  if (batch_ == 0) throw PreconditionError("LogOdeSchedule: empty batch");
  const std::size_t width = logsigs[0].empty() ? 0 : logsigs[0][0].width;
  const std::size_t depth = logsigs[0].empty() ? 0 : logsigs[0][0].depth;
  if (family == Family::LogNCDE && depth > 2) {
    throw UnsupportedError("Log-NCDE supports Log-ODE depth 1 or 2 only");
  }
  const std::size_t coeffs = logsigs[0].empty() ? 0 : logsigs[0][0].coeffs.size();
  // Log-NCDE applies level-1 coefficients to f(h); NRDE applies all of them to fbar(h).
  const std::size_t linear_rows = family == Family::LogNCDE ? width : coeffs;
  const bool brackets = family == Family::LogNCDE && depth == 2;

  linear_.assign(intervals, MatrixXd::Zero(static_cast<Eigen::Index>(linear_rows), static_cast<Eigen::Index>(batch_)));
  brackets_.assign(intervals, {});
  for (std::size_t i = 0; i < intervals; ++i) {
    const double duration = boundaries_[i + 1] - boundaries_[i];
    if (!(duration > 0.0)) throw PreconditionError("LogOdeSchedule: intervals must have positive duration");
    if (brackets) brackets_[i].reserve(batch_);
    for (std::size_t b = 0; b < batch_; ++b) {
      if (logsigs[b].size() != intervals) throw DimensionError("LogOdeSchedule: interval count mismatch");
      const LogSignature& ls = logsigs[b][i];
      if (ls.width != width || ls.depth != depth || ls.coeffs.size() != coeffs) {
        throw DimensionError("LogOdeSchedule: inconsistent log-signature shapes");
      }
      for (std::size_t k = 0; k < linear_rows; ++k) {
        linear_[i](static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(b)) = ls.coeffs[k] / duration;
      }
      if (brackets) brackets_[i].push_back(bracket_coefficients(ls) / duration);
    }
  }
}

void LogOdeSchedule::drive(std::size_t segment, double /*s*/, FieldDrive& out) const {
  out.linear = linear_[segment];
  out.brackets = brackets_[segment];
}

ControlSchedule::ControlSchedule(std::vector<const Control*> controls) : controls_(std::move(controls)) {
  if (controls_.empty()) throw PreconditionError("ControlSchedule: empty batch");
  const auto& knots = controls_[0]->knots();
  for (const Control* c : controls_) {
    if (c->knots() != knots) throw PreconditionError("ControlSchedule: batch members must share knot times");
    if (c->width() != controls_[0]->width()) throw DimensionError("ControlSchedule: width mismatch");
  }
  t0_ = knots.front();
  span_ = knots.back() - knots.front();
  knots_.resize(knots.size());
  for (std::size_t i = 0; i < knots.size(); ++i) knots_[i] = (knots[i] - t0_) / span_;
  knots_.back() = 1.0;
}

void ControlSchedule::drive(std::size_t segment, double s, FieldDrive& out) const {
  const auto width = static_cast<Eigen::Index>(controls_[0]->width());
  out.linear.resize(width, static_cast<Eigen::Index>(controls_.size()));
  out.brackets.clear();
  const auto& knots = controls_[0]->knots();
  const double t = std::clamp(t0_ + s * span_, knots[segment], knots[segment + 1]);
  for (std::size_t b = 0; b < controls_.size(); ++b) {
    const std::vector<double> d = controls_[b]->derivative(segment, t);
    for (Eigen::Index c = 0; c < width; ++c) out.linear(c, static_cast<Eigen::Index>(b)) = d[static_cast<std::size_t>(c)] * span_;
  }
}

MatrixXd integrate_field(const MlpParams& params, const MlpSpec& spec, const DriveSchedule& schedule,
                         const MatrixXd& h0, const SolverConfig& config, SolveTape* tape) {
  config.validate();
  if (static_cast<std::size_t>(h0.cols()) != schedule.batch_size()) {
    throw DimensionError("integrate_field: state batch does not match schedule");
  }
  if (tape != nullptr) {
    tape->steps.clear();
    tape->states.clear();
  }
  MatrixXd h = h0;
  FieldDrive drive_a;
  FieldDrive drive_b;
  FieldEvaluation eval;
  std::size_t index = 0;
  for (std::size_t seg = 0; seg < schedule.num_segments(); ++seg) {
    const double s0 = schedule.segment_begin(seg);
    const double s1 = schedule.segment_end(seg);
    if (schedule.autonomous()) schedule.drive(seg, s0, drive_a);
    double s = s0;
    for (double ds : step_sizes(s0, s1, config.step)) {
      if (tape != nullptr) {
        tape->steps.push_back({seg, s, ds});
        tape->states.push_back(h);
      }
      if (!schedule.autonomous()) {
        schedule.drive(seg, s, drive_a);
        schedule.drive(seg, s + ds, drive_b);
      }
      evaluate_field(params, spec, h, drive_a, eval);
      MatrixXd k1 = std::move(eval.output);
      MatrixXd h2 = h + ds * k1;
      evaluate_field(params, spec, h2, schedule.autonomous() ? drive_a : drive_b, eval);
      h += (0.5 * ds) * (k1 + eval.output);
      if (!h.allFinite()) throw DivergenceError(index);
      s += ds;
      ++index;
    }
  }
  return h;
}

MatrixXd integrate_field_adjoint(const MlpParams& params, const MlpSpec& spec, const DriveSchedule& schedule,
                                 const SolveTape& tape, const MatrixXd& final_bar, MlpParams& grad) {
  MatrixXd h_bar = final_bar;
  FieldDrive drive_a;
  FieldDrive drive_b;
  FieldEvaluation eval1;
  FieldEvaluation eval2;
  MatrixXd h2_bar;
  MatrixXd h1_bar;
  std::size_t cached_segment = static_cast<std::size_t>(-1);
  for (std::size_t k = tape.steps.size(); k-- > 0;) {
    const SolveStep& st = tape.steps[k];
    const MatrixXd& h = tape.states[k];
    if (schedule.autonomous()) {
      if (st.segment != cached_segment) {
        schedule.drive(st.segment, st.s, drive_a);
        cached_segment = st.segment;
      }
    } else {
      schedule.drive(st.segment, st.s, drive_a);
      schedule.drive(st.segment, st.s + st.ds, drive_b);
    }
    const FieldDrive& second = schedule.autonomous() ? drive_a : drive_b;

    evaluate_field(params, spec, h, drive_a, eval1);
    const MatrixXd h2 = h + st.ds * eval1.output;
    evaluate_field(params, spec, h2, second, eval2);

    const MatrixXd k_bar = (0.5 * st.ds) * h_bar;
    field_vjp(params, spec, second, eval2, k_bar, grad, h2_bar);
    h_bar += h2_bar;
    const MatrixXd k1_bar = k_bar + st.ds * h2_bar;
    field_vjp(params, spec, drive_a, eval1, k1_bar, grad, h1_bar);
    h_bar += h1_bar;
  }
  return h_bar;
}

std::vector<double> partition_boundaries(const PiecewiseLinearPath& path, const IntervalPartition& partition) {
  std::vector<double> b;
  b.reserve(partition.breakpoints.size());
  for (std::size_t r : partition.breakpoints) {
    if (r >= path.size()) throw DimensionError("partition breakpoint beyond path length");
    b.push_back(path.normalized_time(r));
  }
  b.back() = 1.0;
  return b;
}

VectorXd solve_ncde(const MlpParams& params, const MlpSpec& spec, const Control& control, const VectorXd& h0,
                    const SolverConfig& config) {
  ControlSchedule schedule({&control});
  return integrate_field(params, spec, schedule, h0, config);
}

VectorXd solve_logode(const MlpParams& params, const MlpSpec& spec, const PiecewiseLinearPath& path,
                      const IntervalPartition& partition, std::size_t depth, const SolverConfig& config,
                      Family family, const VectorXd& h0) {
  if (family == Family::NCDE) throw UnsupportedError("solve_logode: family must be NRDE or LogNCDE");
  if (depth < 1 || depth > 2) throw UnsupportedError("solve_logode: Log-ODE depth must be 1 or 2");
  const LyndonBasis basis(path.width(), depth);
  std::vector<std::vector<LogSignature>> logsigs(1);
  for (std::size_t i = 0; i < partition.num_intervals(); ++i) {
    logsigs[0].push_back(log_signature(path, partition.interval(i), basis));
  }
  LogOdeSchedule schedule(partition_boundaries(path, partition), logsigs, family);
  return integrate_field(params, spec, schedule, h0, config);
}

}  // namespace lncde
