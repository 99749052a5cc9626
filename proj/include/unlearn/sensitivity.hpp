#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "unlearn/nn.hpp"

namespace unlearn {

enum class SaliencyKind : std::uint32_t { exact = 0, approx = 1 };

// Connection sensitivity of every parameter with respect to one batch.
struct SaliencyVector {
  std::vector<double> scores;
  std::uint64_t batch_fingerprint = 0;
  SaliencyKind kind = SaliencyKind::approx;

  std::size_t size() const { return scores.size(); }
};

// FNV-1a over the batch's width, features and labels.
std::uint64_t fingerprint(const Batch& batch);

// Leave-one-parameter-out definition:
//   s_j = loss(theta) - loss(theta with theta_j = 0)
// Costs d + 1 loss evaluations over the batch.
SaliencyVector sensitivity_exact(const Mlp& model, const ParamVector& theta,
                                 const Batch& batch);

// First-order surrogate s_j = (dL/dtheta_j) * theta_j, where the gradient
// is the batch mean. One gradient evaluation regardless of d.
SaliencyVector sensitivity_approx(const Mlp& model, const ParamVector& theta,
                                  const Batch& batch);

// Sidecar: "UFSL", u32 version, u32 kind, u64 fingerprint, u64 d, d x f64.
void save_saliency(const std::filesystem::path& path, const SaliencyVector& s);
SaliencyVector load_saliency(const std::filesystem::path& path);

}  // namespace unlearn
