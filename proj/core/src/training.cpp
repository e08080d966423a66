#include "lncde/training.hpp"

#include <algorithm>
#include <chrono>
#include <numeric>
#include <random>

#include "lncde/errors.hpp"

namespace lncde {

namespace {

std::vector<const PreparedSeries*> pointers(const std::vector<PreparedSeries>& set) {
  std::vector<const PreparedSeries*> out(set.size());
  for (std::size_t i = 0; i < set.size(); ++i) out[i] = &set[i];
  return out;
}

bool improves(const ModelConfig& config, double candidate, double best) {
  return config.mode == LabelMode::Classification ? candidate > best : candidate < best;
}

}  // namespace

TrainResult train_model(const ModelConfig& config, const std::vector<PreparedSeries>& train,
                        const std::vector<PreparedSeries>& val, const TrainOptions& options,
                        const MetricsCallback& on_row) {
  config.validate();
  if (train.empty()) throw PreconditionError("training set is empty");
  if (val.empty()) throw PreconditionError("validation set is empty");
  if (options.batch == 0) throw PreconditionError("batch size must be positive");
  const std::size_t eval_every = std::max<std::size_t>(options.eval_every, 1);

  const auto t0 = std::chrono::steady_clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(); };

  const auto train_ptrs = pointers(train);
  const auto val_ptrs = pointers(val);
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 shuffle_rng(derive_seed(options.seed, "batches"));
  std::size_t cursor = order.size();

  std::vector<const PreparedSeries*> batch;
  auto next_batch = [&] {
    batch.clear();
    while (batch.size() < std::min(options.batch, train.size())) {
      if (cursor == order.size()) {
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        cursor = 0;
      }
      batch.push_back(train_ptrs[order[cursor++]]);
    }
  };

  TrainResult result;
  result.final_state = init_params(config, derive_seed(options.seed, "params"));
  TrainState& state = result.final_state;

  auto record = [&](std::size_t step, double train_loss) {
    MetricsRow row{step, train_loss, evaluate_metric(state.params, config, val_ptrs), elapsed()};
    result.history.push_back(row);
    if (result.history.size() == 1 || improves(config, row.val_metric, result.best_val_metric)) {
      result.best_val_metric = row.val_metric;
      result.best_params = state.params;
      result.best_step = step;
    }
    if (on_row) on_row(row);
    if (options.target_metric && config.mode == LabelMode::Classification &&
        row.val_metric >= *options.target_metric) {
      result.reached_target = true;
    }
  };

  next_batch();
  record(0, loss(state, config, batch));

  double loss_sum = 0.0;
  std::size_t loss_count = 0;
  for (std::size_t step = 1; step <= options.steps && !result.reached_target; ++step) {
    next_batch();
    const LossAndGrad lg = loss_and_grad(state.params, config, batch);
    state = adam_step(state, lg.grad, options.adam);
    loss_sum += lg.loss;
    ++loss_count;
    if (step % eval_every == 0 || step == options.steps) {
      record(step, loss_sum / static_cast<double>(loss_count));
      loss_sum = 0.0;
      loss_count = 0;
    }
  }
  return result;
}

}  // namespace lncde
