#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <functional>
#include <vector>

#include "lncde/signature.hpp"
#include "lncde/vector_field.hpp"

namespace lncde {

struct SolverConfig {
  double step = 1.0 / 500.0;  // fraction of the normalised time domain [0, 1]

  // 1 / max{500, 1 + series_length / logode_step}.
  static SolverConfig default_for(std::size_t series_length, std::size_t logode_step);
  void validate() const;
};

// Step sizes covering [s0, s1]: full steps of `step`, the last one shortened
// to land exactly on s1.
std::vector<double> step_sizes(double s0, double s1, double step);

using StateField = std::function<Eigen::VectorXd(const Eigen::VectorXd& h, double s)>;

// Heun (explicit trapezoid) integration of dh/ds = field(h, s).
Eigen::VectorXd heun_integrate(const StateField& field, const Eigen::VectorXd& h0, double s0, double s1,
                               double step, std::vector<Eigen::VectorXd>* trajectory = nullptr);

// Time-varying drive for the batched network field: the integration domain is
// split into segments that steps never straddle; within a segment the drive
// may depend on s.
class DriveSchedule {
 public:
  virtual ~DriveSchedule() = default;
  virtual std::size_t num_segments() const = 0;
  virtual double segment_begin(std::size_t segment) const = 0;
  virtual double segment_end(std::size_t segment) const = 0;
  virtual std::size_t batch_size() const = 0;
  virtual void drive(std::size_t segment, double s, FieldDrive& out) const = 0;
  // True when drive() does not depend on s inside a segment.
  virtual bool autonomous() const = 0;
};

// Log-ODE drive: per interval, linear coefficients lambda/duration and, for a
// depth-2 Log-NCDE, the antisymmetric bracket matrices. All batch members
// share the interval boundaries (in normalised time).
class LogOdeSchedule final : public DriveSchedule {
 public:
  // logsigs[b][i] is the log-signature of series b over interval i.
  LogOdeSchedule(std::vector<double> boundaries, const std::vector<std::vector<LogSignature>>& logsigs,
                 Family family);

  std::size_t num_segments() const override { return boundaries_.size() - 1; }
  double segment_begin(std::size_t i) const override { return boundaries_[i]; }
  double segment_end(std::size_t i) const override { return boundaries_[i + 1]; }
  std::size_t batch_size() const override { return batch_; }
  void drive(std::size_t segment, double s, FieldDrive& out) const override;
  bool autonomous() const override { return true; }

 private:
  std::vector<double> boundaries_;
  std::size_t batch_;
  std::vector<Eigen::MatrixXd> linear_;                 // per interval: coeffs x B
  std::vector<std::vector<Eigen::MatrixXd>> brackets_;  // per interval: B matrices (may be empty)
};

// NCDE drive: dX/ds of each batch member's control, segment by segment
// between knots. All members share knot times.
class ControlSchedule final : public DriveSchedule {
 public:
  explicit ControlSchedule(std::vector<const Control*> controls);

  std::size_t num_segments() const override { return knots_.size() - 1; }
  double segment_begin(std::size_t i) const override { return knots_[i]; }
  double segment_end(std::size_t i) const override { return knots_[i + 1]; }
  std::size_t batch_size() const override { return controls_.size(); }
  void drive(std::size_t segment, double s, FieldDrive& out) const override;
  bool autonomous() const override { return false; }

 private:
  std::vector<const Control*> controls_;
  std::vector<double> knots_;  // normalised
  double t0_;
  double span_;
};

struct SolveStep {
  std::size_t segment;
  double s;
  double ds;
};

// States before every step, enough to replay the solve in reverse.
struct SolveTape {
  std::vector<SolveStep> steps;
  std::vector<Eigen::MatrixXd> states;
};

// Batched Heun solve of dH/ds = G(H; drive(s)); H0 is u x B.
Eigen::MatrixXd integrate_field(const MlpParams& params, const MlpSpec& spec, const DriveSchedule& schedule,
                                const Eigen::MatrixXd& h0, const SolverConfig& config, SolveTape* tape = nullptr);

// Reverse pass through a taped solve. Accumulates parameter gradients into
// grad and returns dL/dH0 given dL/dH(final).
Eigen::MatrixXd integrate_field_adjoint(const MlpParams& params, const MlpSpec& spec,
                                        const DriveSchedule& schedule, const SolveTape& tape,
                                        const Eigen::MatrixXd& final_bar, MlpParams& grad);

// Normalised interval boundaries of a partition on a path's time grid.
std::vector<double> partition_boundaries(const PiecewiseLinearPath& path, const IntervalPartition& partition);

Eigen::VectorXd solve_ncde(const MlpParams& params, const MlpSpec& spec, const Control& control,
                           const Eigen::VectorXd& h0, const SolverConfig& config);

Eigen::VectorXd solve_logode(const MlpParams& params, const MlpSpec& spec, const PiecewiseLinearPath& path,
                             const IntervalPartition& partition, std::size_t depth, const SolverConfig& config,
                             Family family, const Eigen::VectorXd& h0);

}  // namespace lncde
