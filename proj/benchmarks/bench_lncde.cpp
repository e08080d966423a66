#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "lncde/models.hpp"
#include "lncde/signature.hpp"
#include "lncde/toy_data.hpp"
#include "lncde/vector_field.hpp"

using namespace lncde;

namespace {

PiecewiseLinearPath random_walk(std::size_t width, std::size_t length, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<double> times(length), values(length * width, 0.0);
  for (std::size_t i = 0; i < length; ++i) {
    times[i] = static_cast<double>(i);
    for (std::size_t c = 0; c < width && i > 0; ++c) values[i * width + c] = values[(i - 1) * width + c] + n(rng);
  }
  return PiecewiseLinearPath(times, values, width);
}

void BM_PathSignature(benchmark::State& state) {
  const auto path = random_walk(6, 100, 1);
  const auto depth = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(path_signature(path, depth));
}
BENCHMARK(BM_PathSignature)->Arg(2)->Arg(3)->Arg(4);

void BM_LogSignatureWindow(benchmark::State& state) {
  const auto path = random_walk(6, 100, 2);
  const LyndonBasis basis(6, static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(log_signature(path, Interval{0, 4}, basis));
}
BENCHMARK(BM_LogSignatureWindow)->Arg(2)->Arg(3);

void BM_LogOdeField(benchmark::State& state) {
  std::mt19937_64 rng(3);
  const auto spec = MlpSpec::for_family(Family::LogNCDE, 64, 6, 128, 3);
  MlpParams p = MlpParams::zeros(spec);
  std::normal_distribution<double> n(0.0, 0.1);
  for (auto& w : p.weights) w = w.unaryExpr([&](double) { return n(rng); });
  const Eigen::VectorXd h = Eigen::VectorXd::Random(64);
  const auto path = random_walk(6, 5, 4);
  const auto ls = log_signature(path, Interval{0, 4}, 2);
  for (auto _ : state) benchmark::DoNotOptimize(logode_field(p, spec, h, ls, 0.04));
}
BENCHMARK(BM_LogOdeField);

void BM_LossAndGrad(benchmark::State& state) {
  ModelConfig c;
  c.family = static_cast<Family>(state.range(0));
  if (c.family == Family::NCDE) c.logode_depth = 1;
  c.solver_step = 0.01;
  ToySpec spec;
  spec.num_series = 32;
  spec.task = 2;
  const ToyDataset data = generate(spec);
  std::vector<Example> ex;
  for (std::size_t i = 0; i < data.size(); ++i) ex.push_back({data.path(i), data.labels[i], {}});
  const auto prepared = prepare_all(c, ex);
  std::vector<const PreparedSeries*> batch;
  for (const auto& s : prepared) batch.push_back(&s);
  const TrainState init = init_params(c, 0);
  for (auto _ : state) benchmark::DoNotOptimize(loss_and_grad(init.params, c, batch));
  state.SetLabel(to_string(c.family));
}
BENCHMARK(BM_LossAndGrad)
    ->Arg(static_cast<int>(Family::NCDE))
    ->Arg(static_cast<int>(Family::NRDE))
    ->Arg(static_cast<int>(Family::LogNCDE))
    ->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
