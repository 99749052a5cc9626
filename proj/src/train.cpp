#include "unlearn/train.hpp"

#include <algorithm>
#include <cmath>

#include "unlearn/error.hpp"
#include "unlearn/repair.hpp"
#include "unlearn/rng.hpp"

namespace unlearn {

std::vector<std::size_t> iota_indices(std::size_t n) {
  std::vector<std::size_t> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = i;
  return out;
}

TrainOutcome sgd_train(const Mlp& model, ParamVector theta, const Dataset& data,
                       std::span<const std::size_t> indices, const TrainConfig& cfg,
                       bool ascend, const EpochHook& hook) {
  if (cfg.batch_size == 0) throw InvalidArgument("batch size must be >= 1");
  if (!(cfg.learning_rate >= 0.0)) throw InvalidArgument("learning rate must be >= 0");
  TrainOutcome out{std::move(theta), 0, 0, false};
  if (cfg.epochs == 0) return out;
  if (indices.empty()) throw InvalidArgument("cannot train on an empty index set");

  std::vector<std::size_t> order(indices.begin(), indices.end());
  std::vector<std::size_t> mb;
  Rng rng(cfg.seed);
  const double sign = ascend ? 1.0 : -1.0;

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      mb.assign(order.begin() + static_cast<std::ptrdiff_t>(start),
                order.begin() + static_cast<std::ptrdiff_t>(end));
      std::sort(mb.begin(), mb.end());
      double loss = 0.0;
      const auto g = model.grad(out.theta, data.gather(mb), &loss);
      if (!std::isfinite(loss) || std::abs(loss) > kDivergenceBound) {
        if (ascend) {
          out.diverged = true;
          return out;
        }
        throw DivergenceError("training loss diverged at step " +
                              std::to_string(out.steps));
      }
      ParamVector next = out.theta;
      for (std::size_t j = 0; j < g.size(); ++j) {
        next[j] += sign * cfg.learning_rate * g[j];
      }
      if (!next.all_finite()) {
        if (ascend) {
          out.diverged = true;
          return out;
        }
        throw DivergenceError("parameters became non-finite at step " +
                              std::to_string(out.steps));
      }
      out.theta = std::move(next);
      ++out.steps;
    }
    out.epochs_run = epoch;
    if (hook && hook(epoch, out.theta)) break;
  }
  return out;
}

}  // namespace unlearn
