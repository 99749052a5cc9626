#include "unlearn/nn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "unlearn/error.hpp"
#include "unlearn/rng.hpp"

namespace unlearn {

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::relu:
      return "relu";
    case Activation::tanh:
      return "tanh";
  }
  return "unknown";
}

Activation parse_activation(std::string_view name) {
  if (name == "relu") return Activation::relu;
  if (name == "tanh") return Activation::tanh;
  throw InvalidArgument("unknown activation '" + std::string(name) + "'");
}

void ModelSpec::validate() const {
  if (layer_sizes.size() < 2) {
    throw InvalidArgument("layer_sizes needs at least 2 entries");
  }
  for (auto n : layer_sizes) {
    if (n == 0) throw InvalidArgument("layer_sizes entries must be >= 1");
  }
  if (activation != Activation::relu && activation != Activation::tanh) {
    throw InvalidArgument("unknown activation tag");
  }
}

std::size_t ModelSpec::param_count() const {
  std::size_t d = 0;
  for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
    d += (layer_sizes[l] + 1) * layer_sizes[l + 1];
  }
  return d;
}

ParamLayout::ParamLayout(const ModelSpec& spec) {
  spec.validate();
  for (std::size_t l = 0; l + 1 < spec.layer_sizes.size(); ++l) {
    in_.push_back(spec.layer_sizes[l]);
    out_.push_back(spec.layer_sizes[l + 1]);
    offset_.push_back(size_);
    size_ += (in_.back() + 1) * out_.back();
  }
}

ParamSlot ParamLayout::locate(std::size_t j) const {
  if (j >= size_) throw DimensionError("parameter index out of range");
  // upper_bound over layer starts; offset_[0] == 0 so l >= 0.
  const auto it = std::upper_bound(offset_.begin(), offset_.end(), j);
  const auto l = static_cast<std::size_t>(it - offset_.begin()) - 1;
  const std::size_t local = j - offset_[l];
  const std::size_t nw = in_[l] * out_[l];
  if (local < nw) {
    return {l, ParamKind::weight, local / in_[l], local % in_[l]};
  }
  return {l, ParamKind::bias, local - nw, 0};
}

std::size_t ParamLayout::index_of(const ParamSlot& s) const {
  if (s.layer >= in_.size() || s.row >= out_[s.layer] ||
      (s.kind == ParamKind::weight && s.col >= in_[s.layer])) {
    throw DimensionError("parameter slot out of range");
  }
  if (s.kind == ParamKind::weight) {
    return offset_[s.layer] + s.row * in_[s.layer] + s.col;
  }
  return bias_offset(s.layer) + s.row;
}

bool ParamVector::all_finite() const {
  return std::all_of(values.begin(), values.end(),
                     [](double v) { return std::isfinite(v); });
}

void Batch::push_back(std::span<const double> x, std::uint32_t label) {
  if (cols == 0 && inputs.empty()) cols = x.size();
  if (x.size() != cols) throw DimensionError("row width mismatch");
  inputs.insert(inputs.end(), x.begin(), x.end());
  labels.push_back(label);
}

double cross_entropy(std::span<const double> z, std::uint32_t label) {
  const double m = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (double v : z) sum += std::exp(v - m);
  return m + std::log(sum) - z[label];
}

std::uint32_t argmax(std::span<const double> z) {
  std::uint32_t best = 0;
  for (std::uint32_t c = 1; c < z.size(); ++c) {
    if (z[c] > z[best]) best = c;
  }
  return best;
}

Mlp::Mlp(ModelSpec spec) : spec_(std::move(spec)), layout_(spec_) {}

Mlp::Mlp(const Mlp& other)
    : spec_(other.spec_),
      layout_(other.layout_),
      loss_evals_(other.loss_evals_.load()),
      grad_evals_(other.grad_evals_.load()) {}

ParamVector Mlp::init_params() const {
  ParamVector theta;
  theta.values.assign(layout_.size(), 0.0);
  Rng rng(spec_.seed);
  for (std::size_t l = 0; l < layout_.layer_count(); ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(layout_.in(l)));
    for (std::size_t j = layout_.weight_offset(l); j < layout_.bias_offset(l);
         ++j) {
      theta[j] = rng.uniform(-bound, bound);
    }
  }
  return theta;
}

void Mlp::check(const ParamVector& theta, const Batch& batch) const {
  if (theta.size() != layout_.size()) {
    throw DimensionError("parameter vector length " +
                         std::to_string(theta.size()) + " != model size " +
                         std::to_string(layout_.size()));
  }
  if (batch.size() == 0) throw InvalidArgument("empty batch");
  if (batch.cols != spec_.input_dim()) {
    throw DimensionError("batch width " + std::to_string(batch.cols) +
                         " != input dim " +
                         std::to_string(spec_.input_dim()));
  }
  if (batch.inputs.size() != batch.size() * batch.cols) {
    throw DimensionError("batch inputs do not match its label count");
  }
  for (auto y : batch.labels) {
    if (y >= spec_.class_count()) {
      throw DimensionError("label " + std::to_string(y) +
                           " >= class count");
    }
  }
}

void Mlp::forward(std::span<const double> p, std::span<const double> x,
                  std::optional<std::size_t> masked,
                  std::vector<std::vector<double>>& acts,
                  std::vector<std::vector<double>>& pre) const {
  const std::size_t layers = layout_.layer_count();
  acts.resize(layers + 1);
  pre.resize(layers);
  acts[0].assign(x.begin(), x.end());
  std::optional<ParamSlot> mslot;
  if (masked) mslot = layout_.locate(*masked);

  for (std::size_t l = 0; l < layers; ++l) {
    const std::size_t in = layout_.in(l);
    const std::size_t out = layout_.out(l);
    const double* w = p.data() + layout_.weight_offset(l);
    const double* b = p.data() + layout_.bias_offset(l);
    const auto& a = acts[l];
    auto& z = pre[l];
    z.assign(out, 0.0);
    const bool mask_here = mslot && mslot->layer == l;
    for (std::size_t o = 0; o < out; ++o) {
      const double* wr = w + o * in;
      double s = 0.0;
      if (mask_here && mslot->kind == ParamKind::weight && mslot->row == o) {
        for (std::size_t i = 0; i < in; ++i) {
          if (i != mslot->col) s += wr[i] * a[i];
        }
      } else {
        for (std::size_t i = 0; i < in; ++i) s += wr[i] * a[i];
      }
      if (!(mask_here && mslot->kind == ParamKind::bias && mslot->row == o)) {
        s += b[o];
      }
      z[o] = s;
    }
    auto& next = acts[l + 1];
    if (l + 1 == layers) {
      next = z;
    } else if (spec_.activation == Activation::relu) {
      next.resize(out);
      for (std::size_t o = 0; o < out; ++o) next[o] = z[o] > 0.0 ? z[o] : 0.0;
    } else {
      next.resize(out);
      for (std::size_t o = 0; o < out; ++o) next[o] = std::tanh(z[o]);
    }
  }
}

double Mlp::loss(const ParamVector& theta, const Batch& batch) const {
  check(theta, batch);
  ++loss_evals_;
  std::vector<std::vector<double>> acts, pre;
  double total = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    forward(theta.view(), batch.row(i), std::nullopt, acts, pre);
    total += cross_entropy(acts.back(), batch.labels[i]);
  }
  return total / static_cast<double>(batch.size());
}

double Mlp::masked_loss(const ParamVector& theta, std::size_t j,
                        const Batch& batch) const {
  check(theta, batch);
  if (j >= layout_.size()) throw DimensionError("masked index out of range");
  ++loss_evals_;
  std::vector<std::vector<double>> acts, pre;
  double total = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    forward(theta.view(), batch.row(i), j, acts, pre);
    total += cross_entropy(acts.back(), batch.labels[i]);
  }
  return total / static_cast<double>(batch.size());
}

std::vector<double> Mlp::grad(const ParamVector& theta, const Batch& batch,
                              double* loss_out) const {
  check(theta, batch);
  ++grad_evals_;
  const std::size_t layers = layout_.layer_count();
  const std::size_t classes = spec_.class_count();
  std::vector<double> g(layout_.size(), 0.0);
  std::vector<std::vector<double>> acts, pre;
  std::vector<double> delta, prev;
  const double* p = theta.values.data();
  double total = 0.0;

  for (std::size_t n = 0; n < batch.size(); ++n) {
    forward(theta.view(), batch.row(n), std::nullopt, acts, pre);
    const auto& z = acts.back();
    const std::uint32_t y = batch.labels[n];
    total += cross_entropy(z, y);

    // dL/dz for softmax cross-entropy: softmax(z) - onehot(y).
    const double m = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    delta.assign(classes, 0.0);
    for (std::size_t c = 0; c < classes; ++c) {
      delta[c] = std::exp(z[c] - m);
      sum += delta[c];
    }
    for (std::size_t c = 0; c < classes; ++c) delta[c] /= sum;
    delta[y] -= 1.0;

    for (std::size_t l = layers; l-- > 0;) {
      const std::size_t in = layout_.in(l);
      const std::size_t out = layout_.out(l);
      const auto& a = acts[l];
      double* gw = g.data() + layout_.weight_offset(l);
      double* gb = g.data() + layout_.bias_offset(l);
      for (std::size_t o = 0; o < out; ++o) {
        const double d = delta[o];
        double* row = gw + o * in;
        for (std::size_t i = 0; i < in; ++i) row[i] += d * a[i];
        gb[o] += d;
      }
      if (l == 0) break;
      const double* w = p + layout_.weight_offset(l);
      prev.assign(in, 0.0);
      for (std::size_t o = 0; o < out; ++o) {
        const double d = delta[o];
        const double* wr = w + o * in;
        for (std::size_t i = 0; i < in; ++i) prev[i] += wr[i] * d;
      }
      const auto& zp = pre[l - 1];
      if (spec_.activation == Activation::relu) {
        for (std::size_t i = 0; i < in; ++i) {
          if (!(zp[i] > 0.0)) prev[i] = 0.0;
        }
      } else {
        for (std::size_t i = 0; i < in; ++i) {
          const double t = a[i];
          prev[i] *= 1.0 - t * t;
        }
      }
      delta.swap(prev);
    }
  }
  const double inv = 1.0 / static_cast<double>(batch.size());
  for (auto& v : g) v *= inv;
  if (loss_out) *loss_out = total * inv;
  return g;
}

std::vector<double> Mlp::logits(const ParamVector& theta,
                                const Batch& batch) const {
  check(theta, batch);
  std::vector<std::vector<double>> acts, pre;
  std::vector<double> out;
  out.reserve(batch.size() * spec_.class_count());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    forward(theta.view(), batch.row(i), std::nullopt, acts, pre);
    out.insert(out.end(), acts.back().begin(), acts.back().end());
  }
  return out;
}

std::vector<std::uint32_t> Mlp::predict(const ParamVector& theta,
                                        const Batch& batch) const {
  const auto z = logits(theta, batch);
  const std::size_t c = spec_.class_count();
  std::vector<std::uint32_t> out(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    out[i] = argmax(std::span<const double>(z).subspan(i * c, c));
  }
  return out;
}

double Mlp::accuracy(const ParamVector& theta, const Batch& batch) const {
  if (batch.size() == 0) throw InvalidArgument("accuracy of an empty batch");
  const auto pred = predict(theta, batch);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred[i] == batch.labels[i]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(pred.size());
}

std::vector<double> Mlp::sample_losses(const ParamVector& theta,
                                       const Batch& batch) const {
  const auto z = logits(theta, batch);
  const std::size_t c = spec_.class_count();
  std::vector<double> out(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    out[i] = cross_entropy(std::span<const double>(z).subspan(i * c, c),
                           batch.labels[i]);
  }
  return out;
}

EvalCounts Mlp::counts() const {
  return {loss_evals_.load(), grad_evals_.load()};
}

void Mlp::reset_counts() {
  loss_evals_ = 0;
  grad_evals_ = 0;
}

}  // namespace unlearn
