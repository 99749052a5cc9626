#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "unlearn/nn.hpp"
#include "unlearn/sensitivity.hpp"

namespace unlearn {

enum class InitStrategy { uniform, gaussian, zeros, ones };

std::string_view to_string(InitStrategy s);
InitStrategy parse_init_strategy(std::string_view name);

struct RankOptions {
  // Rank by signed score instead of |score|.
  bool signed_scores = false;
  // Take the top k% of each layer separately instead of globally.
  bool per_layer = false;
  // Never select bias parameters.
  bool exclude_biases = false;
};

struct TrimPlan {
  std::vector<std::size_t> selected;  // sorted, unique
  double k = 0.0;                     // percentile in [0, 100)
  InitStrategy strategy = InitStrategy::uniform;
  std::uint64_t seed = 0;
};

// Selects ceil(k/100 * d) indices with the largest |s_j|, ties to the lower
// index. k must lie in [0, 100). With options, k% of the eligible entries
// (per layer, or weights only) are taken instead.
TrimPlan rank_topk(const SaliencyVector& s, double k);
TrimPlan rank_topk(const SaliencyVector& s, double k, const ParamLayout& layout,
                   const RankOptions& options);

// Re-initializes the selected entries; every other coordinate is copied
// bit-for-bit. uniform draws U(-1/sqrt(fan_in), 1/sqrt(fan_in)) of the owning
// layer, gaussian N(0, 1/fan_in).
ParamVector apply_trim(const ParamVector& theta, const TrimPlan& plan,
                       const ModelSpec& spec);

}  // namespace unlearn
