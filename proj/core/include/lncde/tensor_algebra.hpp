#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace lncde {

// Element of the depth-N truncated tensor algebra over R^v.
//
// Coefficients are stored level by level in one contiguous buffer; level k
// holds v^k reals in row-major lexicographic word order (word (i1,...,ik),
// zero-based letters, maps to i1*v^(k-1) + ... + ik). Level 0 is a scalar.
class TruncatedTensor {
 public:
  TruncatedTensor() = default;
  // Zero tensor.
  TruncatedTensor(std::size_t width, std::size_t depth);

  // (1, 0, ..., 0).
  static TruncatedTensor unit(std::size_t width, std::size_t depth);
  // Lie element with the given level-1 block and zeros elsewhere.
  static TruncatedTensor from_level1(std::span<const double> level1, std::size_t depth);

  std::size_t width() const noexcept { return width_; }
  std::size_t depth() const noexcept { return depth_; }
  // Number of coefficients in level k, i.e. v^k.
  std::size_t level_size(std::size_t k) const { return offsets_[k + 1] - offsets_[k]; }

  std::span<double> level(std::size_t k);
  std::span<const double> level(std::size_t k) const;

  double scalar() const noexcept { return coeffs_[0]; }
  double& scalar() noexcept { return coeffs_[0]; }

  // Coefficient of a word given as zero-based letters; word length selects the level.
  double at(std::span<const std::size_t> word) const;
  double& at(std::span<const std::size_t> word);

  std::span<const double> coefficients() const noexcept { return coeffs_; }
  std::span<double> coefficients() noexcept { return coeffs_; }

  TruncatedTensor& operator+=(const TruncatedTensor& other);
  TruncatedTensor& operator-=(const TruncatedTensor& other);
  TruncatedTensor& operator*=(double factor);

  friend TruncatedTensor operator+(TruncatedTensor a, const TruncatedTensor& b) { return a += b; }
  friend TruncatedTensor operator-(TruncatedTensor a, const TruncatedTensor& b) { return a -= b; }
  friend TruncatedTensor operator*(TruncatedTensor a, double s) { return a *= s; }
  friend TruncatedTensor operator*(double s, TruncatedTensor a) { return a *= s; }

  bool all_finite() const noexcept;

 private:
  void check_compatible(const TruncatedTensor& other) const;

  std::size_t width_ = 0;
  std::size_t depth_ = 0;
  std::vector<std::size_t> offsets_;
  std::vector<double> coeffs_;
};

// Truncated product z^k = sum_j a^j (x) b^(k-j).
TruncatedTensor tensor_mul(const TruncatedTensor& a, const TruncatedTensor& b);

// Commutator a(x)b - b(x)a.
TruncatedTensor tensor_bracket(const TruncatedTensor& a, const TruncatedTensor& b);

// Truncated exponential series; requires a zero scalar part.
TruncatedTensor tensor_exp(const TruncatedTensor& t);

// Truncated Mercator series sum_{n>=1} (-1)^(n+1)/n (x-1)^n; requires scalar part 1.
TruncatedTensor tensor_log(const TruncatedTensor& x);

// exp of a pure level-1 element: level k is delta^{(x)k}/k!.
TruncatedTensor segment_exp(std::span<const double> delta, std::size_t depth);

// In-place Chen update sig <- sig (x) exp(delta) without materialising exp(delta).
void mul_segment_exp(TruncatedTensor& sig, std::span<const double> delta);

// Euclidean norm of one level.
double level_norm(const TruncatedTensor& t, std::size_t k);
// Sum of level norms over levels 0..N.
double norm(const TruncatedTensor& t);

double max_abs_diff(const TruncatedTensor& a, const TruncatedTensor& b);

}  // namespace lncde
