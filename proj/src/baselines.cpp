#include "unlearn/baselines.hpp"

#include "unlearn/error.hpp"

namespace unlearn {

std::string_view to_string(BaselineMethod m) {
  switch (m) {
    case BaselineMethod::retrain:
      return "retrain";
    case BaselineMethod::finetune:
      return "finetune";
    case BaselineMethod::gradient_ascent:
      return "gradient_ascent";
  }
  return "unknown";
}

Dataset materialize(const Dataset& data, std::span<const std::size_t> indices) {
  Dataset out;
  out.name = data.name;
  out.class_count = data.class_count;
  out.cols = data.cols;
  const Batch b = data.gather(indices);
  out.inputs = b.inputs;
  out.labels = b.labels;
  return out;
}

ParamVector retrain(const ModelSpec& spec, const Dataset& data,
                    const SplitSpec& split, const TrainConfig& cfg) {
  if (split.total != data.size()) throw InvalidArgument("split does not match dataset");
  const Dataset retained = materialize(data, split.retain_indices());
  const Mlp model(spec);
  const auto rows = iota_indices(retained.size());
  return sgd_train(model, model.init_params(), retained, rows, cfg).theta;
}

ParamVector finetune(const Mlp& model, const ParamVector& original,
                     const Dataset& data, const SplitSpec& split,
                     const TrainConfig& cfg) {
  if (split.total != data.size()) throw InvalidArgument("split does not match dataset");
  const auto rows = split.retain_indices();
  return sgd_train(model, original, data, rows, cfg).theta;
}

AscentResult gradient_ascent(const Mlp& model, const ParamVector& original,
                             const Dataset& data, const SplitSpec& split,
                             const TrainConfig& cfg) {
  if (split.total != data.size()) throw InvalidArgument("split does not match dataset");
  auto out = sgd_train(model, original, data, split.forget_indices, cfg, true);
  return {std::move(out.theta), out.diverged};
}

}  // namespace unlearn
