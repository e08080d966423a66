#include "lncde/signature.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "lncde/errors.hpp"

namespace lncde {

PiecewiseLinearPath::PiecewiseLinearPath(std::vector<double> times, std::vector<double> values,
                                         std::size_t width, bool time_augmented)
    : times_(std::move(times)), values_(std::move(values)), width_(width), time_augmented_(time_augmented) {
  if (width_ == 0) throw DimensionError("path width must be positive");
  if (times_.empty()) throw DimensionError("path needs at least one observation");
  if (values_.size() != times_.size() * width_) {
    throw DimensionError("path values count " + std::to_string(values_.size()) + " != " +
                         std::to_string(times_.size()) + " x " + std::to_string(width_));
  }
  for (std::size_t i = 1; i < times_.size(); ++i) {
    if (!(times_[i] > times_[i - 1])) throw PreconditionError("path times must be strictly increasing");
  }
  for (double x : values_) {
    if (!std::isfinite(x)) throw PreconditionError("path values must be finite");
  }
}

double PiecewiseLinearPath::normalized_time(std::size_t i) const {
  if (times_.size() < 2) return 0.0;
  return (times_[i] - times_.front()) / (times_.back() - times_.front());
}

PiecewiseLinearPath PiecewiseLinearPath::with_time_channel() const {
  const std::size_t w = width_ + 1;
  std::vector<double> vals(times_.size() * w);
  for (std::size_t i = 0; i < times_.size(); ++i) {
    vals[i * w] = normalized_time(i);
    std::copy_n(values_.begin() + static_cast<std::ptrdiff_t>(i * width_), width_,
                vals.begin() + static_cast<std::ptrdiff_t>(i * w + 1));
  }
  return PiecewiseLinearPath(times_, std::move(vals), w, true);
}

PiecewiseLinearPath PiecewiseLinearPath::select_channels(std::span<const std::size_t> channels) const {
  std::vector<double> vals(times_.size() * channels.size());
  for (std::size_t i = 0; i < times_.size(); ++i) {
    for (std::size_t c = 0; c < channels.size(); ++c) {
      if (channels[c] >= width_) throw DimensionError("select_channels: channel out of range");
      vals[i * channels.size() + c] = values_[i * width_ + channels[c]];
    }
  }
  return PiecewiseLinearPath(times_, std::move(vals), channels.size(), false);
}

std::vector<double> PiecewiseLinearPath::increment(std::size_t from, std::size_t to) const {
  std::vector<double> d(width_);
  auto a = point(from);
  auto b = point(to);
  for (std::size_t c = 0; c < width_; ++c) d[c] = b[c] - a[c];
  return d;
}

namespace {
void check_interval(const PiecewiseLinearPath& path, Interval interval) {
  if (interval.first > interval.last || interval.last >= path.size()) {
    throw DimensionError("interval [" + std::to_string(interval.first) + "," +
                         std::to_string(interval.last) + "] out of range for path of " +
                         std::to_string(path.size()) + " observations");
  }
}
}  // namespace

TruncatedTensor path_signature(const PiecewiseLinearPath& path, Interval interval, std::size_t depth) {
  if (depth == 0) throw PreconditionError("signature depth must be positive");
  check_interval(path, interval);
  TruncatedTensor sig = TruncatedTensor::unit(path.width(), depth);
  std::vector<double> delta(path.width());
  for (std::size_t i = interval.first; i < interval.last; ++i) {
    auto a = path.point(i);
    auto b = path.point(i + 1);
    for (std::size_t c = 0; c < delta.size(); ++c) delta[c] = b[c] - a[c];
    mul_segment_exp(sig, delta);
  }
  return sig;
}

TruncatedTensor path_signature(const PiecewiseLinearPath& path, std::size_t depth) {
  return path_signature(path, Interval{0, path.size() - 1}, depth);
}

LogSignature log_signature(const PiecewiseLinearPath& path, Interval interval, const LyndonBasis& basis) {
  if (basis.width() != path.width()) throw DimensionError("log_signature: basis width mismatch");
  if (basis.depth() == 1) {
    check_interval(path, interval);
    return LogSignature{path.width(), 1, path.increment(interval.first, interval.last)};
  }
  return project_to_lyndon(tensor_log(path_signature(path, interval, basis.depth())), basis);
}

LogSignature log_signature(const PiecewiseLinearPath& path, Interval interval, std::size_t depth) {
  return log_signature(path, interval, LyndonBasis(path.width(), depth));
}

IntervalPartition make_partition(std::size_t n_obs, std::size_t logode_step) {
  if (n_obs < 2) throw PreconditionError("make_partition: need at least two observations");
  if (logode_step == 0) throw PreconditionError("make_partition: Log-ODE step must be positive");
  IntervalPartition p;
  p.logode_step = logode_step;
  const std::size_t last = n_obs - 1;
  for (std::size_t r = 0; r < last; r += logode_step) p.breakpoints.push_back(r);
  p.breakpoints.push_back(last);
  return p;
}

std::vector<double> Control::derivative(double t) const {
  return derivative(segment_of(t), t);
}

std::size_t Control::segment_of(double t) const {
  check_domain(t);
  const auto& k = knots();
  auto it = std::upper_bound(k.begin(), k.end(), t);
  std::size_t seg = static_cast<std::size_t>(it - k.begin());
  seg = seg == 0 ? 0 : seg - 1;
  return std::min(seg, k.size() - 2);
}

void Control::check_domain(double t) const {
  const auto& k = knots();
  if (!(t >= k.front() && t <= k.back())) {
    throw DomainError("control queried at t=" + std::to_string(t) + " outside [" +
                      std::to_string(k.front()) + ", " + std::to_string(k.back()) + "]");
  }
}

HermiteControl::HermiteControl(const PiecewiseLinearPath& path)
    : times_(path.times()), values_(path.values()), width_(path.width()) {
  if (path.size() < 2) throw PreconditionError("hermite_interpolant: need at least two observations");
  const std::size_t n = times_.size();
  slopes_.assign(n * width_, 0.0);
  for (std::size_t i = 1; i < n; ++i) {
    const double dt = times_[i] - times_[i - 1];
    for (std::size_t c = 0; c < width_; ++c) {
      slopes_[i * width_ + c] = (values_[i * width_ + c] - values_[(i - 1) * width_ + c]) / dt;
    }
  }
  for (std::size_t c = 0; c < width_; ++c) slopes_[c] = slopes_[width_ + c];
}

std::vector<double> HermiteControl::position(double t) const {
  const std::size_t seg = segment_of(t);
  const double h = times_[seg + 1] - times_[seg];
  const double s = (t - times_[seg]) / h;
  const double s2 = s * s;
  const double s3 = s2 * s;
  const double h00 = 2 * s3 - 3 * s2 + 1;
  const double h10 = s3 - 2 * s2 + s;
  const double h01 = -2 * s3 + 3 * s2;
  const double h11 = s3 - s2;
  std::vector<double> out(width_);
  for (std::size_t c = 0; c < width_; ++c) {
    const double p0 = values_[seg * width_ + c];
    const double p1 = values_[(seg + 1) * width_ + c];
    const double m0 = slopes_[seg * width_ + c];
    const double m1 = slopes_[(seg + 1) * width_ + c];
    out[c] = h00 * p0 + h10 * h * m0 + h01 * p1 + h11 * h * m1;
  }
  return out;
}

std::vector<double> HermiteControl::derivative(std::size_t seg, double t) const {
  check_domain(t);
  if (seg + 1 >= times_.size()) throw DomainError("segment index out of range");
  const double h = times_[seg + 1] - times_[seg];
  const double s = (t - times_[seg]) / h;
  const double s2 = s * s;
  const double d00 = (6 * s2 - 6 * s) / h;
  const double d10 = 3 * s2 - 4 * s + 1;
  const double d01 = (-6 * s2 + 6 * s) / h;
  const double d11 = 3 * s2 - 2 * s;
  std::vector<double> out(width_);
  for (std::size_t c = 0; c < width_; ++c) {
    const double p0 = values_[seg * width_ + c];
    const double p1 = values_[(seg + 1) * width_ + c];
    const double m0 = slopes_[seg * width_ + c];
    const double m1 = slopes_[(seg + 1) * width_ + c];
    out[c] = d00 * p0 + d10 * m0 + d01 * p1 + d11 * m1;
  }
  return out;
}

LinearControl::LinearControl(const PiecewiseLinearPath& path) : path_(path) {
  if (path.size() < 2) throw PreconditionError("linear control: need at least two observations");
}

std::vector<double> LinearControl::position(double t) const {
  const std::size_t seg = segment_of(t);
  const auto& ts = path_.times();
  const double s = (t - ts[seg]) / (ts[seg + 1] - ts[seg]);
  auto a = path_.point(seg);
  auto b = path_.point(seg + 1);
  std::vector<double> out(path_.width());
  for (std::size_t c = 0; c < out.size(); ++c) out[c] = a[c] + s * (b[c] - a[c]);
  return out;
}

std::vector<double> LinearControl::derivative(std::size_t seg, double t) const {
  check_domain(t);
  const auto& ts = path_.times();
  if (seg + 1 >= ts.size()) throw DomainError("segment index out of range");
  const double dt = ts[seg + 1] - ts[seg];
  auto d = path_.increment(seg, seg + 1);
  for (double& x : d) x /= dt;
  return d;
}

HermiteControl hermite_interpolant(const PiecewiseLinearPath& path) { return HermiteControl(path); }

}  // namespace lncde
