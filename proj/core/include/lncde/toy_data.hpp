#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "lncde/signature.hpp"

namespace lncde {

struct ToySpec {
  std::size_t num_series = 10000;
  std::size_t channels = 6;
  std::size_t length = 100;
  int task = 2;
  std::uint64_t seed = 0;
  // Train / validation / test fractions.
  double train_fraction = 0.70;
  double val_fraction = 0.15;
  double test_fraction = 0.15;

  void validate() const;
};

struct ToyDataset {
  std::size_t channels = 0;
  std::size_t length = 0;
  int task = 0;
  std::uint64_t seed = 0;
  // Series-major, then time, then channel.
  std::vector<double> values;
  std::vector<std::uint8_t> labels;
  std::vector<std::uint32_t> train;
  std::vector<std::uint32_t> val;
  std::vector<std::uint32_t> test;

  std::size_t size() const noexcept { return labels.size(); }
  // Observation times 0..length-1 scaled to [0, 1].
  PiecewiseLinearPath path(std::size_t series) const;
};

// Standard normal rounded half away from zero.
long discrete_gaussian_increment(std::mt19937_64& rng);

// One-based channel indices whose iterated integral defines each task.
std::vector<std::size_t> task_channels(int task);

// Exact iterated integral over the whole path for the task's word; label is value > 0.
double task_statistic(const PiecewiseLinearPath& path, int task);
bool label_task(const PiecewiseLinearPath& path, int task);

ToyDataset generate(const ToySpec& spec);

// Split sizes for n series: train and val are rounded down, test takes the rest.
void split_sizes(std::size_t n, const ToySpec& spec, std::size_t& train, std::size_t& val, std::size_t& test);

// Directory with meta.txt, values.bin, labels.bin, train.idx, val.idx, test.idx.
void write_dataset(const std::string& dir, const ToyDataset& data);
ToyDataset read_dataset(const std::string& dir);

// FNV-1a over values, labels and split indices.
std::uint64_t dataset_hash(const ToyDataset& data);

}  // namespace lncde
