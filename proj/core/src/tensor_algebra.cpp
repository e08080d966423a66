#include "lncde/tensor_algebra.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "lncde/errors.hpp"

namespace lncde {

TruncatedTensor::TruncatedTensor(std::size_t width, std::size_t depth)
    : width_(width), depth_(depth) {
  if (width == 0) throw DimensionError("tensor width must be positive");
  offsets_.resize(depth + 2);
  offsets_[0] = 0;
  std::size_t block = 1;
  for (std::size_t k = 0; k <= depth; ++k) {
    offsets_[k + 1] = offsets_[k] + block;
    block *= width;
  }
  coeffs_.assign(offsets_.back(), 0.0);
}

TruncatedTensor TruncatedTensor::unit(std::size_t width, std::size_t depth) {
  TruncatedTensor t(width, depth);
  t.coeffs_[0] = 1.0;
  return t;
}

TruncatedTensor TruncatedTensor::from_level1(std::span<const double> level1, std::size_t depth) {
  TruncatedTensor t(level1.size(), depth);
  if (depth >= 1) std::copy(level1.begin(), level1.end(), t.level(1).begin());
  return t;
}

std::span<double> TruncatedTensor::level(std::size_t k) {
  if (k > depth_) throw DimensionError("level " + std::to_string(k) + " exceeds depth");
  return {coeffs_.data() + offsets_[k], offsets_[k + 1] - offsets_[k]};
}

std::span<const double> TruncatedTensor::level(std::size_t k) const {
  if (k > depth_) throw DimensionError("level " + std::to_string(k) + " exceeds depth");
  return {coeffs_.data() + offsets_[k], offsets_[k + 1] - offsets_[k]};
}

namespace {
std::size_t word_index(std::span<const std::size_t> word, std::size_t width) {
  std::size_t idx = 0;
  for (std::size_t letter : word) {
    if (letter >= width) throw DimensionError("word letter out of range");
    idx = idx * width + letter;
  }
  return idx;
}
}  // namespace

double TruncatedTensor::at(std::span<const std::size_t> word) const {
  return level(word.size())[word_index(word, width_)];
}

double& TruncatedTensor::at(std::span<const std::size_t> word) {
  return level(word.size())[word_index(word, width_)];
}

void TruncatedTensor::check_compatible(const TruncatedTensor& other) const {
  if (width_ != other.width_ || depth_ != other.depth_) {
    throw DimensionError("tensor shape mismatch: (" + std::to_string(width_) + "," +
                         std::to_string(depth_) + ") vs (" + std::to_string(other.width_) + "," +
                         std::to_string(other.depth_) + ")");
  }
}

TruncatedTensor& TruncatedTensor::operator+=(const TruncatedTensor& other) {
  check_compatible(other);
  for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] += other.coeffs_[i];
  return *this;
}

TruncatedTensor& TruncatedTensor::operator-=(const TruncatedTensor& other) {
  check_compatible(other);
  for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] -= other.coeffs_[i];
  return *this;
}

TruncatedTensor& TruncatedTensor::operator*=(double factor) {
  for (double& c : coeffs_) c *= factor;
  return *this;
}

bool TruncatedTensor::all_finite() const noexcept {
  return std::all_of(coeffs_.begin(), coeffs_.end(), [](double c) { return std::isfinite(c); });
}

TruncatedTensor tensor_mul(const TruncatedTensor& a, const TruncatedTensor& b) {
  if (a.width() != b.width() || a.depth() != b.depth()) {
    throw DimensionError("tensor_mul: width/depth mismatch");
  }
  TruncatedTensor z(a.width(), a.depth());
  for (std::size_t k = 0; k <= a.depth(); ++k) {
    auto out = z.level(k);
    for (std::size_t j = 0; j <= k; ++j) {
      auto left = a.level(j);
      auto right = b.level(k - j);
      const std::size_t stride = right.size();
      for (std::size_t p = 0; p < left.size(); ++p) {
        const double lp = left[p];
        if (lp == 0.0) continue;
        double* dst = out.data() + p * stride;
        for (std::size_t q = 0; q < stride; ++q) dst[q] += lp * right[q];
      }
    }
  }
  return z;
}

TruncatedTensor tensor_bracket(const TruncatedTensor& a, const TruncatedTensor& b) {
  return tensor_mul(a, b) - tensor_mul(b, a);
}

TruncatedTensor tensor_exp(const TruncatedTensor& t) {
  if (t.scalar() != 0.0) throw PreconditionError("tensor_exp: scalar part must be zero");
  TruncatedTensor result = TruncatedTensor::unit(t.width(), t.depth());
  TruncatedTensor power = result;
  for (std::size_t n = 1; n <= t.depth(); ++n) {
    power = tensor_mul(power, t);
    power *= 1.0 / static_cast<double>(n);
    result += power;
  }
  return result;
}

TruncatedTensor tensor_log(const TruncatedTensor& x) {
  if (x.scalar() != 1.0) throw PreconditionError("tensor_log: scalar part must be one");
  TruncatedTensor t = x;
  t.scalar() = 0.0;
  TruncatedTensor result(x.width(), x.depth());
  TruncatedTensor power = t;
  for (std::size_t n = 1; n <= x.depth(); ++n) {
    if (n > 1) power = tensor_mul(power, t);
    const double sign = (n % 2 == 1) ? 1.0 : -1.0;
    TruncatedTensor term = power;
    term *= sign / static_cast<double>(n);
    result += term;
  }
  return result;
}

TruncatedTensor segment_exp(std::span<const double> delta, std::size_t depth) {
  TruncatedTensor sig = TruncatedTensor::unit(delta.size(), depth);
  mul_segment_exp(sig, delta);
  return sig;
}

void mul_segment_exp(TruncatedTensor& sig, std::span<const double> delta) {
  const std::size_t v = sig.width();
  if (delta.size() != v) throw DimensionError("mul_segment_exp: increment width mismatch");
  const std::size_t depth = sig.depth();
  std::vector<double> acc;
  std::vector<double> next;
  // Horner form per level, highest level first so lower levels are still unmodified.
  for (std::size_t k = depth; k >= 1; --k) {
    acc.assign(sig.level(0).begin(), sig.level(0).end());
    for (std::size_t j = 0; j < k; ++j) {
      const double scale = 1.0 / static_cast<double>(k - j);
      next.assign(acc.size() * v, 0.0);
      for (std::size_t p = 0; p < acc.size(); ++p) {
        const double ap = acc[p] * scale;
        double* dst = next.data() + p * v;
        for (std::size_t q = 0; q < v; ++q) dst[q] = ap * delta[q];
      }
      acc.swap(next);
      if (j + 1 < k) {
        auto lower = sig.level(j + 1);
        for (std::size_t p = 0; p < acc.size(); ++p) acc[p] += lower[p];
      }
    }
    auto out = sig.level(k);
    for (std::size_t p = 0; p < out.size(); ++p) out[p] += acc[p];
  }
}

double level_norm(const TruncatedTensor& t, std::size_t k) {
  double s = 0.0;
  for (double c : t.level(k)) s += c * c;
  return std::sqrt(s);
}

double norm(const TruncatedTensor& t) {
  double total = 0.0;
  for (std::size_t k = 0; k <= t.depth(); ++k) total += level_norm(t, k);
  return total;
}

double max_abs_diff(const TruncatedTensor& a, const TruncatedTensor& b) {
  if (a.width() != b.width() || a.depth() != b.depth()) {
    throw DimensionError("max_abs_diff: width/depth mismatch");
  }
  double m = 0.0;
  auto ca = a.coefficients();
  auto cb = b.coefficients();
  for (std::size_t i = 0; i < ca.size(); ++i) m = std::max(m, std::abs(ca[i] - cb[i]));
  return m;
}

}  // namespace lncde
