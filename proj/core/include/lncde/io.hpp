#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace lncde::io {

// Little-endian encoders appending to a byte buffer.
void put_u32(std::vector<std::uint8_t>& out, std::uint32_t x);
void put_u64(std::vector<std::uint8_t>& out, std::uint64_t x);
void put_f64(std::vector<std::uint8_t>& out, double x);

// Sequential little-endian decoder; throws FormatError on truncation.
class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}
  std::uint32_t u32();
  std::uint64_t u64();
  double f64();
  std::span<const std::uint8_t> raw(std::size_t n);
  std::size_t remaining() const noexcept { return bytes_.size() - pos_; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

// Writes to "<path>.tmp" then renames over path.
void write_file_atomic(const std::string& path, std::span<const std::uint8_t> bytes);
void write_text_atomic(const std::string& path, const std::string& text);
std::vector<std::uint8_t> read_file(const std::string& path);
std::string read_text(const std::string& path);

// FNV-1a over a byte buffer, used for dataset fingerprints.
std::uint64_t fnv1a(std::span<const std::uint8_t> bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);

}  // namespace lncde::io
