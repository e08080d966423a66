#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "lncde/lie_basis.hpp"
#include "lncde/tensor_algebra.hpp"

namespace lncde {

// Observations (t_i, x_i) joined linearly. Values are stored row-major, one
// row of `width()` channels per observation.
class PiecewiseLinearPath {
 public:
  PiecewiseLinearPath() = default;
  PiecewiseLinearPath(std::vector<double> times, std::vector<double> values, std::size_t width,
                      bool time_augmented = false);

  // Copy of this path with normalised time (t_i - t_0)/(t_n - t_0) prepended as channel 1.
  PiecewiseLinearPath with_time_channel() const;
  // Copy restricted to the listed zero-based channels, in the given order.
  PiecewiseLinearPath select_channels(std::span<const std::size_t> channels) const;

  std::size_t size() const noexcept { return times_.size(); }
  std::size_t width() const noexcept { return width_; }
  bool time_augmented() const noexcept { return time_augmented_; }

  const std::vector<double>& times() const noexcept { return times_; }
  const std::vector<double>& values() const noexcept { return values_; }
  std::span<const double> point(std::size_t i) const { return {values_.data() + i * width_, width_}; }
  // Observation time mapped to [0, 1].
  double normalized_time(std::size_t i) const;
  std::vector<double> increment(std::size_t from, std::size_t to) const;

 private:
  std::vector<double> times_;
  std::vector<double> values_;
  std::size_t width_ = 0;
  bool time_augmented_ = false;
};

// Closed observation-index interval [first, last].
struct Interval {
  std::size_t first = 0;
  std::size_t last = 0;
};

struct IntervalPartition {
  std::vector<std::size_t> breakpoints;  // r_0 = 0 < ... < r_m = n_obs - 1
  std::size_t logode_step = 1;

  std::size_t num_intervals() const noexcept {
    return breakpoints.empty() ? 0 : breakpoints.size() - 1;
  }
  Interval interval(std::size_t i) const { return {breakpoints[i], breakpoints[i + 1]}; }
  friend bool operator==(const IntervalPartition&, const IntervalPartition&) = default;
};

// Chen product of the segment exponentials over the interval. An empty
// interval (first == last) gives the unit tensor.
TruncatedTensor path_signature(const PiecewiseLinearPath& path, Interval interval, std::size_t depth);
TruncatedTensor path_signature(const PiecewiseLinearPath& path, std::size_t depth);

LogSignature log_signature(const PiecewiseLinearPath& path, Interval interval, std::size_t depth);
// Same, reusing a prebuilt basis of matching width/depth.
LogSignature log_signature(const PiecewiseLinearPath& path, Interval interval, const LyndonBasis& basis);

// Breakpoints every `logode_step` observation gaps; a shorter remainder
// interval is kept at the end.
IntervalPartition make_partition(std::size_t n_obs, std::size_t logode_step);

// A differentiable control X(t) built from observations, with knots at the
// observation times. derivative(segment, t) evaluates the derivative on the
// closed segment [t_segment, t_segment+1], which disambiguates knots for
// controls whose derivative jumps there.
class Control {
 public:
  virtual ~Control() = default;

  virtual std::size_t width() const = 0;
  virtual const std::vector<double>& knots() const = 0;
  virtual std::vector<double> position(double t) const = 0;
  virtual std::vector<double> derivative(std::size_t segment, double t) const = 0;

  // Derivative at t using the segment containing t (right-continuous, last
  // knot belongs to the final segment).
  std::vector<double> derivative(double t) const;
  std::size_t segment_of(double t) const;

 protected:
  void check_domain(double t) const;
};

// Piecewise-cubic Hermite interpolant whose knot derivatives are backward
// differences; the first knot copies the second knot's derivative.
class HermiteControl final : public Control {
 public:
  explicit HermiteControl(const PiecewiseLinearPath& path);

  std::size_t width() const override { return width_; }
  const std::vector<double>& knots() const override { return times_; }
  std::vector<double> position(double t) const override;
  std::vector<double> derivative(std::size_t segment, double t) const override;
  using Control::derivative;

 private:
  std::vector<double> times_;
  std::vector<double> values_;
  std::vector<double> slopes_;
  std::size_t width_;
};

// Linear interpolation; derivative is constant on each segment.
class LinearControl final : public Control {
 public:
  explicit LinearControl(const PiecewiseLinearPath& path);

  std::size_t width() const override { return path_.width(); }
  const std::vector<double>& knots() const override { return path_.times(); }
  std::vector<double> position(double t) const override;
  std::vector<double> derivative(std::size_t segment, double t) const override;
  using Control::derivative;

 private:
  PiecewiseLinearPath path_;
};

HermiteControl hermite_interpolant(const PiecewiseLinearPath& path);

}  // namespace lncde
