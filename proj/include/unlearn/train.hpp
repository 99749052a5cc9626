#pragma once

#include <cstdint>
#include <functional>
#include <span>

#include "unlearn/data.hpp"
#include "unlearn/nn.hpp"

namespace unlearn {

struct TrainConfig {
  std::size_t epochs = 100;
  double learning_rate = 0.1;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;
};

// Called after every completed epoch (1-based). Returning true stops early.
using EpochHook = std::function<bool(std::size_t epoch, const ParamVector& theta)>;

struct TrainOutcome {
  ParamVector theta;
  std::size_t epochs_run = 0;
  std::size_t steps = 0;
  // Gradient-ascent mode only: a step produced a non-finite or out-of-bound
  // loss and theta holds the last finite iterate.
  bool diverged = false;
};

// Plain minibatch SGD (no momentum) over data rows `indices`. The row order
// is reshuffled each epoch from the seed; rows inside a minibatch are
// visited in ascending index order. With ascend set, steps follow +gradient
// and divergence stops training instead of throwing.
// Throws DivergenceError (descent mode) when a minibatch loss is
// non-finite or exceeds kDivergenceBound.
TrainOutcome sgd_train(const Mlp& model, ParamVector theta, const Dataset& data,
                       std::span<const std::size_t> indices, const TrainConfig& cfg,
                       bool ascend = false, const EpochHook& hook = {});

// [0, n)
std::vector<std::size_t> iota_indices(std::size_t n);

}  // namespace unlearn
