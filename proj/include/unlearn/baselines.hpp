#pragma once

#include <string_view>

#include "unlearn/data.hpp"
#include "unlearn/nn.hpp"
#include "unlearn/train.hpp"

namespace unlearn {

enum class BaselineMethod { retrain, finetune, gradient_ascent };

std::string_view to_string(BaselineMethod m);

struct BaselineConfig {
  BaselineMethod method = BaselineMethod::retrain;
  TrainConfig train;
};

// Only the retain rows are copied into the dataset the trainer sees, so no
// forget row can influence the result.
Dataset materialize(const Dataset& data, std::span<const std::size_t> indices);

// Fresh init_params(spec) trained on D_r only.
ParamVector retrain(const ModelSpec& spec, const Dataset& data,
                    const SplitSpec& split, const TrainConfig& cfg);

// Continue SGD on D_r from the original parameters.
ParamVector finetune(const Mlp& model, const ParamVector& original,
                     const Dataset& data, const SplitSpec& split,
                     const TrainConfig& cfg);

struct AscentResult {
  ParamVector theta;
  bool diverged = false;
};

// SGD along +gradient on D_f minibatches. Divergence returns the last
// finite iterate with diverged set.
AscentResult gradient_ascent(const Mlp& model, const ParamVector& original,
                             const Dataset& data, const SplitSpec& split,
                             const TrainConfig& cfg);

}  // namespace unlearn
