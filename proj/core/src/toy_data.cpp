#include "lncde/toy_data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

#include "lncde/errors.hpp"
#include "lncde/io.hpp"
#include "lncde/models.hpp"

namespace lncde {

namespace {
constexpr int kFormatVersion = 1;
}

void ToySpec::validate() const {
  if (num_series == 0) throw PreconditionError("toy data: num_series must be positive");
  if (length < 2) throw PreconditionError("toy data: length must be at least 2");
  if (task < 1 || task > 4) throw UnsupportedError("toy data: task must be 1..4");
  const auto needed = task_channels(task);
  if (channels < *std::max_element(needed.begin(), needed.end())) {
    throw PreconditionError("toy data: task " + std::to_string(task) + " needs " +
                            std::to_string(*std::max_element(needed.begin(), needed.end())) + " channels");
  }
  if (train_fraction < 0.0 || val_fraction < 0.0 || test_fraction < 0.0 ||
      std::abs(train_fraction + val_fraction + test_fraction - 1.0) > 1e-9) {
    throw PreconditionError("toy data: split fractions must be non-negative and sum to 1");
  }
  if (num_series > std::numeric_limits<std::uint32_t>::max()) {
    throw PreconditionError("toy data: too many series for 32-bit split indices");
  }
}

PiecewiseLinearPath ToyDataset::path(std::size_t series) const {
  if (series >= size()) throw DimensionError("toy data: series index out of range");
  std::vector<double> times(length);
  for (std::size_t i = 0; i < length; ++i) times[i] = static_cast<double>(i) / static_cast<double>(length - 1);
  const auto first = values.begin() + static_cast<std::ptrdiff_t>(series * length * channels);
  return PiecewiseLinearPath(std::move(times), std::vector<double>(first, first + static_cast<std::ptrdiff_t>(length * channels)),
                             channels);
}

long discrete_gaussian_increment(std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  return std::lround(normal(rng));
}

std::vector<std::size_t> task_channels(int task) {
  static const std::size_t word[] = {3, 6, 1, 4};
  if (task < 1 || task > 4) throw UnsupportedError("unsupported toy task " + std::to_string(task));
  return {word, word + task};
}

double task_statistic(const PiecewiseLinearPath& path, int task) {
  const auto channels = task_channels(task);
  std::vector<std::size_t> zero_based(channels.size());
  for (std::size_t i = 0; i < channels.size(); ++i) zero_based[i] = channels[i] - 1;
  if (*std::max_element(zero_based.begin(), zero_based.end()) >= path.width()) {
    throw DimensionError("toy task " + std::to_string(task) + " needs channel " +
                         std::to_string(*std::max_element(channels.begin(), channels.end())));
  }
  const PiecewiseLinearPath restricted = path.select_channels(zero_based);
  const TruncatedTensor sig = path_signature(restricted, channels.size());
  std::vector<std::size_t> word(channels.size());
  std::iota(word.begin(), word.end(), std::size_t{0});
  return sig.at(word);
}

bool label_task(const PiecewiseLinearPath& path, int task) { return task_statistic(path, task) > 0.0; }

void split_sizes(std::size_t n, const ToySpec& spec, std::size_t& train, std::size_t& val, std::size_t& test) {
  train = static_cast<std::size_t>(std::floor(spec.train_fraction * static_cast<double>(n) + 1e-9));
  val = static_cast<std::size_t>(std::floor(spec.val_fraction * static_cast<double>(n) + 1e-9));
  train = std::min(train, n);
  val = std::min(val, n - train);
  test = n - train - val;
}

ToyDataset generate(const ToySpec& spec) {
  spec.validate();
  ToyDataset data;
  data.channels = spec.channels;
  data.length = spec.length;
  data.task = spec.task;
  data.seed = spec.seed;
  const std::size_t stride = spec.length * spec.channels;
  data.values.assign(spec.num_series * stride, 0.0);
  data.labels.resize(spec.num_series);
  for (std::size_t s = 0; s < spec.num_series; ++s) {
    std::mt19937_64 rng(derive_seed(spec.seed, "toy-series", s));
    double* x = data.values.data() + s * stride;
    for (std::size_t t = 1; t < spec.length; ++t) {
      for (std::size_t c = 0; c < spec.channels; ++c) {
        x[t * spec.channels + c] = x[(t - 1) * spec.channels + c] + static_cast<double>(discrete_gaussian_increment(rng));
      }
    }
    data.labels[s] = label_task(data.path(s), spec.task) ? 1 : 0;
  }

  std::vector<std::uint32_t> order(spec.num_series);
  std::iota(order.begin(), order.end(), 0U);
  std::mt19937_64 rng(derive_seed(spec.seed, "toy-split"));
  std::shuffle(order.begin(), order.end(), rng);
  std::size_t n_train = 0, n_val = 0, n_test = 0;
  split_sizes(spec.num_series, spec, n_train, n_val, n_test);
  data.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  data.val.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train),
                  order.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
  data.test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), order.end());
  return data;
}

namespace {

std::vector<std::uint8_t> encode_indices(const std::vector<std::uint32_t>& idx) {
  std::vector<std::uint8_t> out;
  out.reserve(idx.size() * 4);
  for (std::uint32_t i : idx) io::put_u32(out, i);
  return out;
}

std::vector<std::uint32_t> decode_indices(const std::string& file, std::size_t count, std::size_t n) {
  const auto bytes = io::read_file(file);
  if (bytes.size() != count * 4) throw FormatError("'" + file + "' has unexpected size");
  io::Reader r(bytes);
  std::vector<std::uint32_t> idx(count);
  for (auto& i : idx) {
    i = r.u32();
    if (i >= n) throw FormatError("'" + file + "' contains out-of-range index");
  }
  return idx;
}

std::size_t parse_size(const std::map<std::string, std::string>& meta, const std::string& key) {
  auto it = meta.find(key);
  if (it == meta.end()) throw FormatError("meta.txt: missing key '" + key + "'");
  std::size_t value = 0;
  const auto& s = it->second;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw FormatError("meta.txt: bad value for '" + key + "'");
  return value;
}

}  // namespace

void write_dataset(const std::string& dir, const ToyDataset& data) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const fs::path root(dir);

  std::vector<std::uint8_t> values;
  values.reserve(data.values.size() * 8);
  for (double x : data.values) io::put_f64(values, x);
  io::write_file_atomic((root / "values.bin").string(), values);
  io::write_file_atomic((root / "labels.bin").string(), data.labels);
  io::write_file_atomic((root / "train.idx").string(), encode_indices(data.train));
  io::write_file_atomic((root / "val.idx").string(), encode_indices(data.val));
  io::write_file_atomic((root / "test.idx").string(), encode_indices(data.test));

  std::ostringstream meta;
  meta << "format_version=" << kFormatVersion << "\n"
       << "channels=" << data.channels << "\n"
       << "length=" << data.length << "\n"
       << "count=" << data.size() << "\n"
       << "task=" << data.task << "\n"
       << "seed=" << data.seed << "\n"
       << "train=" << data.train.size() << "\n"
       << "val=" << data.val.size() << "\n"
       << "test=" << data.test.size() << "\n";
  io::write_text_atomic((root / "meta.txt").string(), meta.str());
}

ToyDataset read_dataset(const std::string& dir) {
  namespace fs = std::filesystem;
  const fs::path root(dir);
  if (!fs::is_directory(root)) throw FormatError("dataset directory '" + dir + "' does not exist");
  std::map<std::string, std::string> meta;
  std::istringstream text(io::read_text((root / "meta.txt").string()));
  for (std::string line; std::getline(text, line);) {
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw FormatError("meta.txt: malformed line '" + line + "'");
    meta[line.substr(0, eq)] = line.substr(eq + 1);
  }
  if (parse_size(meta, "format_version") != kFormatVersion) throw FormatError("meta.txt: unsupported format version");

  ToyDataset data;
  data.channels = parse_size(meta, "channels");
  data.length = parse_size(meta, "length");
  data.task = static_cast<int>(parse_size(meta, "task"));
  data.seed = parse_size(meta, "seed");
  const std::size_t count = parse_size(meta, "count");
  if (data.channels == 0 || data.length < 2) throw FormatError("meta.txt: invalid dimensions");

  const auto values = io::read_file((root / "values.bin").string());
  if (values.size() != count * data.length * data.channels * 8) throw FormatError("values.bin has unexpected size");
  io::Reader r(values);
  data.values.resize(count * data.length * data.channels);
  for (double& x : data.values) x = r.f64();
  data.labels = io::read_file((root / "labels.bin").string());
  if (data.labels.size() != count) throw FormatError("labels.bin has unexpected size");
  data.train = decode_indices((root / "train.idx").string(), parse_size(meta, "train"), count);
  data.val = decode_indices((root / "val.idx").string(), parse_size(meta, "val"), count);
  data.test = decode_indices((root / "test.idx").string(), parse_size(meta, "test"), count);
  return data;
}

std::uint64_t dataset_hash(const ToyDataset& data) {
  std::vector<std::uint8_t> bytes;
  bytes.reserve(data.values.size() * 8 + data.labels.size() + 4 * (data.train.size() + data.val.size() + data.test.size()));
  for (double x : data.values) io::put_f64(bytes, x);
  bytes.insert(bytes.end(), data.labels.begin(), data.labels.end());
  for (const auto* idx : {&data.train, &data.val, &data.test}) {
    for (std::uint32_t i : *idx) io::put_u32(bytes, i);
  }
  return io::fnv1a(bytes);
}

}  // namespace lncde
