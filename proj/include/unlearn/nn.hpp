#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace unlearn {

enum class Activation : std::uint32_t { relu = 0, tanh = 1 };

std::string_view to_string(Activation a);
Activation parse_activation(std::string_view name);

// Architecture of a fully connected classifier. layer_sizes runs from the
// input dimension through the hidden widths to the class count.
struct ModelSpec {
  std::vector<std::size_t> layer_sizes;
  Activation activation = Activation::relu;
  std::uint64_t seed = 0;

  // Throws InvalidArgument unless there are >= 2 layers, all >= 1.
  void validate() const;

  std::size_t input_dim() const { return layer_sizes.front(); }
  std::size_t class_count() const { return layer_sizes.back(); }
  // d = sum over layers of (in + 1) * out.
  std::size_t param_count() const;

  bool operator==(const ModelSpec&) const = default;
};

enum class ParamKind { weight, bias };

struct ParamSlot {
  std::size_t layer = 0;
  ParamKind kind = ParamKind::weight;
  std::size_t row = 0;  // output unit
  std::size_t col = 0;  // input unit; 0 for biases

  bool operator==(const ParamSlot&) const = default;
};

// Flat-index layout. Layer l stores its out x in weight matrix row-major,
// followed by its out biases; layers are concatenated in order.
class ParamLayout {
 public:
  explicit ParamLayout(const ModelSpec& spec);

  std::size_t size() const { return size_; }
  std::size_t layer_count() const { return in_.size(); }
  std::size_t in(std::size_t layer) const { return in_[layer]; }
  std::size_t out(std::size_t layer) const { return out_[layer]; }
  std::size_t weight_offset(std::size_t layer) const { return offset_[layer]; }
  std::size_t bias_offset(std::size_t layer) const {
    return offset_[layer] + in_[layer] * out_[layer];
  }
  // One past the last index of the layer.
  std::size_t layer_end(std::size_t layer) const {
    return bias_offset(layer) + out_[layer];
  }

  ParamSlot locate(std::size_t j) const;
  std::size_t fan_in(std::size_t j) const { return in_[locate(j).layer]; }
  std::size_t index_of(const ParamSlot& slot) const;

 private:
  std::vector<std::size_t> in_;
  std::vector<std::size_t> out_;
  std::vector<std::size_t> offset_;
  std::size_t size_ = 0;
};

struct ParamVector {
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
  double& operator[](std::size_t j) { return values[j]; }
  double operator[](std::size_t j) const { return values[j]; }
  std::span<const double> view() const { return values; }

  bool all_finite() const;
  bool operator==(const ParamVector&) const = default;
};

// Row-major B x cols inputs with one class label per row.
struct Batch {
  std::size_t cols = 0;
  std::vector<double> inputs;
  std::vector<std::uint32_t> labels;

  std::size_t size() const { return labels.size(); }
  std::span<const double> row(std::size_t i) const {
    return std::span<const double>(inputs).subspan(i * cols, cols);
  }
  void push_back(std::span<const double> x, std::uint32_t label);
};

// Number of forward/backward sweeps an Mlp has performed over batches.
// A loss or masked-loss call counts one forward; a gradient call counts one
// gradient evaluation (its forward pass is not counted separately).
struct EvalCounts {
  std::size_t loss_evals = 0;
  std::size_t grad_evals = 0;
};

// Deterministic multilayer perceptron over a flat parameter vector:
// hidden layers use the spec's activation, the output layer is linear and
// feeds a softmax cross-entropy. Every reduction runs in sample order, so
// results are bit-reproducible.
class Mlp {
 public:
  explicit Mlp(ModelSpec spec);
  Mlp(const Mlp& other);
  Mlp& operator=(const Mlp&) = delete;

  const ModelSpec& spec() const { return spec_; }
  const ParamLayout& layout() const { return layout_; }
  std::size_t param_count() const { return layout_.size(); }

  // Weights ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)) per layer, biases 0.
  ParamVector init_params() const;

  // Mean softmax cross-entropy over the batch.
  double loss(const ParamVector& theta, const Batch& batch) const;

  // Analytic gradient of loss(). Optionally reports the loss computed on
  // the same forward pass.
  std::vector<double> grad(const ParamVector& theta, const Batch& batch,
                           double* loss_out = nullptr) const;

  // loss() evaluated as if theta[j] were zero. theta is not modified.
  double masked_loss(const ParamVector& theta, std::size_t j,
                     const Batch& batch) const;

  // Fraction of rows whose argmax logit (lowest index on ties) matches the
  // label. Throws InvalidArgument on an empty batch.
  double accuracy(const ParamVector& theta, const Batch& batch) const;

  std::vector<std::uint32_t> predict(const ParamVector& theta,
                                     const Batch& batch) const;
  // Per-row cross-entropy, in row order.
  std::vector<double> sample_losses(const ParamVector& theta,
                                    const Batch& batch) const;
  // B x classes, row-major.
  std::vector<double> logits(const ParamVector& theta,
                             const Batch& batch) const;

  EvalCounts counts() const;
  void reset_counts();

 private:
  void check(const ParamVector& theta, const Batch& batch) const;
  // Writes the logits of x into out. When masked is set, that parameter is
  // treated as zero.
  void forward(std::span<const double> params, std::span<const double> x,
               std::optional<std::size_t> masked,
               std::vector<std::vector<double>>& acts,
               std::vector<std::vector<double>>& pre) const;

  ModelSpec spec_;
  ParamLayout layout_;
  mutable std::atomic<std::size_t> loss_evals_{0};
  mutable std::atomic<std::size_t> grad_evals_{0};
};

// Stable cross-entropy of one logit row against a label.
double cross_entropy(std::span<const double> logits, std::uint32_t label);
// argmax with ties resolved toward the lowest index.
std::uint32_t argmax(std::span<const double> logits);

// Free-function spellings of the engine operations.
inline ParamVector init_params(const ModelSpec& spec) {
  return Mlp(spec).init_params();
}

}  // namespace unlearn
