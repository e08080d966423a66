#include "lncde/lie_basis.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "lncde/errors.hpp"

namespace lncde {

std::string LyndonWord::to_string() const {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < letters.size(); ++i) {
    if (i) os << ',';
    os << letters[i];
  }
  os << ']';
  return os.str();
}

bool is_lyndon(const std::vector<int>& letters) {
  const std::size_t n = letters.size();
  if (n == 0) return false;
  for (std::size_t r = 1; r < n; ++r) {
    // Compare w with its rotation starting at r; w must be strictly smaller.
    for (std::size_t i = 0; i < n; ++i) {
      const int a = letters[i];
      const int b = letters[(i + r) % n];
      if (a < b) break;
      if (a > b) return false;
      if (i + 1 == n) return false;  // equal to a rotation: periodic
    }
  }
  return true;
}

namespace {

std::size_t standard_split(const std::vector<int>& letters) {
  for (std::size_t i = 1; i < letters.size(); ++i) {
    std::vector<int> suffix(letters.begin() + static_cast<std::ptrdiff_t>(i), letters.end());
    if (is_lyndon(suffix)) return i;
  }
  return 0;
}

int mobius(std::size_t n) {
  int result = 1;
  for (std::size_t p = 2; p * p <= n; ++p) {
    if (n % p == 0) {
      n /= p;
      if (n % p == 0) return 0;
      result = -result;
    }
  }
  if (n > 1) result = -result;
  return result;
}

}  // namespace

std::vector<LyndonWord> lyndon_basis(std::size_t width, std::size_t depth) {
  if (width == 0 || depth == 0) throw PreconditionError("lyndon_basis: width and depth must be positive");
  std::vector<LyndonWord> words;
  // Duval's generation of all Lyndon words of length <= depth in lexicographic order.
  std::vector<int> w{1};
  const int max_letter = static_cast<int>(width);
  while (!w.empty()) {
    words.push_back(LyndonWord{w, standard_split(w)});
    const std::size_t m = w.size();
    while (w.size() < depth) w.push_back(w[w.size() - m]);
    while (!w.empty() && w.back() == max_letter) w.pop_back();
    if (!w.empty()) ++w.back();
  }
  std::stable_sort(words.begin(), words.end(),
                   [](const LyndonWord& a, const LyndonWord& b) { return a.size() < b.size(); });
  return words;
}

std::size_t beta(std::size_t width, std::size_t depth) {
  if (width == 0 || depth == 0) throw PreconditionError("beta: width and depth must be positive");
  long long total = 0;
  for (std::size_t k = 1; k <= depth; ++k) {
    long long level = 0;
    for (std::size_t d = 1; d <= k; ++d) {
      if (k % d != 0) continue;
      long long power = 1;
      for (std::size_t e = 0; e < k / d; ++e) power *= static_cast<long long>(width);
      level += mobius(d) * power;
    }
    total += level / static_cast<long long>(k);
  }
  return static_cast<std::size_t>(total);
}

TruncatedTensor word_to_bracket_tensor(const LyndonWord& word, std::size_t width, std::size_t depth) {
  if (word.size() == 0 || word.size() > depth) {
    throw PreconditionError("word_to_bracket_tensor: word length must be in 1..depth");
  }
  if (word.size() == 1) {
    TruncatedTensor t(width, depth);
    const int letter = word.letters[0];
    if (letter < 1 || static_cast<std::size_t>(letter) > width) {
      throw DimensionError("word letter out of range");
    }
    t.level(1)[static_cast<std::size_t>(letter - 1)] = 1.0;
    return t;
  }
  const auto split = static_cast<std::ptrdiff_t>(word.split);
  std::vector<int> left(word.letters.begin(), word.letters.begin() + split);
  std::vector<int> right(word.letters.begin() + split, word.letters.end());
  LyndonWord u{left, standard_split(left)};
  LyndonWord z{right, standard_split(right)};
  return tensor_bracket(word_to_bracket_tensor(u, width, depth), word_to_bracket_tensor(z, width, depth));
}

LyndonBasis::LyndonBasis(std::size_t width, std::size_t depth)
    : width_(width), depth_(depth), words_(lyndon_basis(width, depth)) {
  brackets_.reserve(words_.size());
  for (const auto& w : words_) brackets_.push_back(word_to_bracket_tensor(w, width, depth));
}

TruncatedTensor LyndonBasis::expand(const LogSignature& ls) const {
  if (ls.width != width_ || ls.depth != depth_ || ls.coeffs.size() != words_.size()) {
    throw DimensionError("LyndonBasis::expand: log-signature shape mismatch");
  }
  TruncatedTensor out(width_, depth_);
  for (std::size_t k = 0; k < words_.size(); ++k) {
    if (ls.coeffs[k] != 0.0) out += brackets_[k] * ls.coeffs[k];
  }
  return out;
}

namespace {

std::size_t flat_index(const std::vector<int>& letters, std::size_t width) {
  std::size_t idx = 0;
  for (int l : letters) idx = idx * width + static_cast<std::size_t>(l - 1);
  return idx;
}

}  // namespace

LogSignature project_to_lyndon(const TruncatedTensor& lie_element, const LyndonBasis& basis,
                               double tolerance) {
  if (lie_element.width() != basis.width() || lie_element.depth() != basis.depth()) {
    throw DimensionError("project_to_lyndon: tensor/basis shape mismatch");
  }
  const std::size_t v = basis.width();
  const auto& words = basis.words();
  LogSignature ls{v, basis.depth(), std::vector<double>(words.size(), 0.0)};

  if (basis.depth() <= 2) {
    for (std::size_t k = 0; k < words.size(); ++k) {
      const auto& w = words[k].letters;
      ls.coeffs[k] = lie_element.level(w.size())[flat_index(w, v)];
    }
  } else {
    // P(w) = w + (lexicographically larger words), so solving in increasing
    // lexicographic order within each level is a forward substitution.
    TruncatedTensor residual = lie_element;
    for (std::size_t k = 0; k < words.size(); ++k) {
      const auto& w = words[k].letters;
      const double c = residual.level(w.size())[flat_index(w, v)];
      ls.coeffs[k] = c;
      if (c != 0.0) residual -= basis.bracket_tensor(k) * c;
    }
  }

  double scale = 1.0;
  for (std::size_t k = 1; k <= lie_element.depth(); ++k) {
    for (double c : lie_element.level(k)) scale = std::max(scale, std::abs(c));
  }
  TruncatedTensor rebuilt = basis.expand(ls);
  double err = std::abs(lie_element.scalar());
  for (std::size_t k = 1; k <= lie_element.depth(); ++k) {
    auto a = lie_element.level(k);
    auto b = rebuilt.level(k);
    for (std::size_t i = 0; i < a.size(); ++i) err = std::max(err, std::abs(a[i] - b[i]));
  }
  if (!(err <= tolerance * scale)) {
    std::ostringstream os;
    os << "project_to_lyndon: input is not a Lie element (residual " << err << ")";
    throw ProjectionError(os.str());
  }
  return ls;
}

}  // namespace lncde
