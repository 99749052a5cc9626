#include "unlearn/trim.hpp"

#include <algorithm>
#include <cmath>

#include "unlearn/error.hpp"
#include "unlearn/numeric.hpp"
#include "unlearn/rng.hpp"

namespace unlearn {

std::string_view to_string(InitStrategy s) {
  switch (s) {
    case InitStrategy::uniform:
      return "uniform";
    case InitStrategy::gaussian:
      return "gaussian";
    case InitStrategy::zeros:
      return "zeros";
    case InitStrategy::ones:
      return "ones";
  }
  return "unknown";
}

InitStrategy parse_init_strategy(std::string_view name) {
  if (name == "uniform") return InitStrategy::uniform;
  if (name == "gaussian") return InitStrategy::gaussian;
  if (name == "zeros") return InitStrategy::zeros;
  if (name == "ones") return InitStrategy::ones;
  throw InvalidArgument("unknown init strategy '" + std::string(name) + "'");
}

namespace {

void check_k(double k) {
  if (!(k >= 0.0 && k < 100.0)) {
    throw InvalidArgument("trim percentile k must lie in [0, 100)");
  }
}

// Appends the top ceil(k% of candidates) of `candidates` to `out`.
void select_top(const SaliencyVector& s, double k, bool signed_scores,
                std::vector<std::size_t> candidates, std::vector<std::size_t>& out) {
  const std::size_t m = ceil_count(k / 100.0, candidates.size());
  auto key = [&](std::size_t j) {
    return signed_scores ? s.scores[j] : std::abs(s.scores[j]);
  };
  std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(m),
                    candidates.end(), [&](std::size_t a, std::size_t b) {
                      const double ka = key(a), kb = key(b);
                      if (ka != kb) return ka > kb;
                      return a < b;
                    });
  out.insert(out.end(), candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(m));
}

}  // namespace

TrimPlan rank_topk(const SaliencyVector& s, double k) {
  check_k(k);
  TrimPlan plan;
  plan.k = k;
  std::vector<std::size_t> all(s.size());
  for (std::size_t j = 0; j < all.size(); ++j) all[j] = j;
  select_top(s, k, false, std::move(all), plan.selected);
  std::sort(plan.selected.begin(), plan.selected.end());
  return plan;
}

TrimPlan rank_topk(const SaliencyVector& s, double k, const ParamLayout& layout,
                   const RankOptions& options) {
  check_k(k);
  if (s.size() != layout.size()) {
    throw DimensionError("saliency length does not match the model");
  }
  TrimPlan plan;
  plan.k = k;
  auto eligible = [&](std::size_t begin, std::size_t end) {
    std::vector<std::size_t> c;
    for (std::size_t j = begin; j < end; ++j) {
      if (options.exclude_biases && layout.locate(j).kind == ParamKind::bias) continue;
      c.push_back(j);
    }
    return c;
  };
  if (options.per_layer) {
    for (std::size_t l = 0; l < layout.layer_count(); ++l) {
      select_top(s, k, options.signed_scores,
                 eligible(layout.weight_offset(l), layout.layer_end(l)), plan.selected);
    }
  } else {
    select_top(s, k, options.signed_scores, eligible(0, layout.size()), plan.selected);
  }
  std::sort(plan.selected.begin(), plan.selected.end());
  return plan;
}

ParamVector apply_trim(const ParamVector& theta, const TrimPlan& plan,
                       const ModelSpec& spec) {
  const ParamLayout layout(spec);
  if (theta.size() != layout.size()) {
    throw DimensionError("parameter vector does not match the model spec");
  }
  ParamVector out = theta;
  Rng rng(plan.seed);
  for (auto j : plan.selected) {
    if (j >= out.size()) throw DimensionError("trim index out of range");
    const double fan_in = static_cast<double>(layout.fan_in(j));
    switch (plan.strategy) {
      case InitStrategy::uniform: {
        const double bound = 1.0 / std::sqrt(fan_in);
        out[j] = rng.uniform(-bound, bound);
        break;
      }
      case InitStrategy::gaussian:
        out[j] = rng.normal() / std::sqrt(fan_in);
        break;
      case InitStrategy::zeros:
        out[j] = 0.0;
        break;
      case InitStrategy::ones:
        out[j] = 1.0;
        break;
    }
  }
  return out;
}

}  // namespace unlearn
