#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "lncde/tensor_algebra.hpp"

namespace lncde {

// A Lyndon word over the alphabet {1..v} together with its standard
// factorisation w = prefix . suffix, where suffix is the longest proper
// Lyndon suffix. Letters are one-based.
struct LyndonWord {
  std::vector<int> letters;
  // Length of the prefix in the standard factorisation; 0 for single letters.
  std::size_t split = 0;

  std::size_t size() const noexcept { return letters.size(); }
  std::string to_string() const;  // "[1,2]"
  friend bool operator==(const LyndonWord&, const LyndonWord&) = default;
};

// Log-signature coefficients in the Lyndon basis, ordered by word length then
// lexicographically (the order produced by lyndon_basis).
struct LogSignature {
  std::size_t width = 0;
  std::size_t depth = 0;
  std::vector<double> coeffs;
};

bool is_lyndon(const std::vector<int>& letters);

// Lyndon words of length <= depth over {1..width}, sorted by (length, lex).
std::vector<LyndonWord> lyndon_basis(std::size_t width, std::size_t depth);

// Dimension of the depth-N truncated free Lie algebra (Witt / necklace formula).
std::size_t beta(std::size_t width, std::size_t depth);

// Bracket polynomial of a Lyndon word: letters map to basis vectors and the
// standard factorisation u.z maps to the tensor commutator [P(u), P(z)].
TruncatedTensor word_to_bracket_tensor(const LyndonWord& word, std::size_t width, std::size_t depth);

// Cached basis together with its bracket tensors.
class LyndonBasis {
 public:
  LyndonBasis(std::size_t width, std::size_t depth);

  std::size_t width() const noexcept { return width_; }
  std::size_t depth() const noexcept { return depth_; }
  std::size_t size() const noexcept { return words_.size(); }
  const std::vector<LyndonWord>& words() const noexcept { return words_; }
  const TruncatedTensor& bracket_tensor(std::size_t k) const { return brackets_[k]; }

  // Sum_k coeffs_k * P(w_k).
  TruncatedTensor expand(const LogSignature& ls) const;

 private:
  std::size_t width_;
  std::size_t depth_;
  std::vector<LyndonWord> words_;
  std::vector<TruncatedTensor> brackets_;
};

// Coordinates of a Lie element in the Lyndon basis. Throws ProjectionError when
// the reconstruction residual exceeds tolerance * max(1, max |L|).
LogSignature project_to_lyndon(const TruncatedTensor& lie_element, const LyndonBasis& basis,
                               double tolerance = 1e-9);

}  // namespace lncde
