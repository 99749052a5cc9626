#include "unlearn/repair.hpp"

#include <algorithm>
#include <cmath>

#include "unlearn/error.hpp"
#include "unlearn/numeric.hpp"
#include "unlearn/rng.hpp"

namespace unlearn {

Objective objective_and_grads(const Mlp& model, const ParamVector& theta,
                              const Batch& retain, const Batch& forget,
                              double lambda) {
  Objective obj;
  auto g_r = model.grad(theta, retain, &obj.loss_retain);
  obj.grads.g_f = model.grad(theta, forget, &obj.loss_forget);
  obj.value = obj.loss_retain - lambda * obj.loss_forget;
  for (std::size_t j = 0; j < g_r.size(); ++j) {
    g_r[j] -= lambda * obj.grads.g_f[j];
  }
  obj.grads.g_o = std::move(g_r);
  return obj;
}

Projection project_gradient(const GradientPair& pair) {
  const auto& go = pair.g_o;
  const auto& gf = pair.g_f;
  if (go.size() != gf.size()) throw InvalidArgument("gradient length mismatch");
  for (std::size_t j = 0; j < go.size(); ++j) {
    if (!std::isfinite(go[j]) || !std::isfinite(gf[j])) {
      throw InvalidArgument("non-finite gradient entry");
    }
  }
  Projection p;
  p.direction = go;
  p.dot_o_f = dot(go, gf);
  const double ff = dot(gf, gf);
  if (!(p.dot_o_f > 0.0) || ff == 0.0) return p;

  p.projected = true;
  p.v = p.dot_o_f / ff;
  for (std::size_t j = 0; j < go.size(); ++j) p.direction[j] -= p.v * gf[j];
  // One correction pass for rounding left on the wrong side of the plane.
  const double residual = dot(gf, p.direction);
  if (residual > 0.0) {
    const double dv = residual / ff;
    p.v += dv;
    for (std::size_t j = 0; j < go.size(); ++j) p.direction[j] -= dv * gf[j];
  }
  return p;
}

bool halfspace_holds(const std::vector<RepairStep>& trace, double rel_tol) {
  return std::all_of(trace.begin(), trace.end(), [&](const RepairStep& s) {
    return s.dot_f_g <= rel_tol * s.norm_f * s.norm_g;
  });
}

namespace {

// Endless stream of forget indices, reshuffled at every pass.
class CyclicSampler {
 public:
  CyclicSampler(std::span<const std::size_t> pool, std::uint64_t seed)
      : order_(pool.begin(), pool.end()), rng_(seed) {
    reshuffle();
  }

  std::vector<std::size_t> next(std::size_t n) {
    std::vector<std::size_t> out;
    out.reserve(n);
    while (out.size() < n) {
      if (cursor_ == order_.size()) reshuffle();
      out.push_back(order_[cursor_++]);
    }
    return out;
  }

 private:
  void reshuffle() {
    rng_.shuffle(std::span<std::size_t>(order_));
    cursor_ = 0;
  }

  std::vector<std::size_t> order_;
  Rng rng_;
  std::size_t cursor_ = 0;
};

}  // namespace

RepairResult repair_loop(const Mlp& model, const ParamVector& trimmed,
                         const Dataset& data, std::span<const std::size_t> retain,
                         std::span<const std::size_t> forget,
                         const RepairConfig& cfg) {
  if (!(cfg.lambda >= 0.0)) throw InvalidArgument("lambda must be >= 0");
  if (!(cfg.learning_rate > 0.0)) throw InvalidArgument("learning rate must be > 0");
  if (cfg.batch_size == 0) throw InvalidArgument("batch size must be >= 1");

  RepairResult result{trimmed, {}};
  if (cfg.epochs == 0) return result;
  if (retain.empty() || forget.empty()) {
    throw InvalidArgument("repair needs non-empty retain and forget sets");
  }

  std::vector<std::size_t> order(retain.begin(), retain.end());
  Rng retain_rng(derive_seed(cfg.seed, 10));
  CyclicSampler forget_sampler(forget, derive_seed(cfg.seed, 11));
  const std::size_t forget_batch = std::min(cfg.batch_size, forget.size());
  auto& theta = result.theta;
  std::size_t step = 0;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    retain_rng.shuffle(std::span<std::size_t>(order));
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      const auto retain_batch =
          data.gather(std::span<const std::size_t>(order).subspan(start, end - start));
      const auto forget_idx = forget_sampler.next(forget_batch);
      const auto forget_b = data.gather(forget_idx);

      auto obj = objective_and_grads(model, theta, retain_batch, forget_b, cfg.lambda);
      if (!std::isfinite(obj.value) || std::abs(obj.value) > kDivergenceBound) {
        throw DivergenceError("repair objective diverged at step " +
                              std::to_string(step));
      }

      RepairStep rec;
      rec.step = step;
      rec.epoch = epoch;
      rec.objective = obj.value;
      rec.loss_retain = obj.loss_retain;
      rec.loss_forget = obj.loss_forget;

      std::vector<double> g;
      if (cfg.projection) {
        auto proj = project_gradient(obj.grads);
        rec.dot_o_f = proj.dot_o_f;
        rec.v = proj.v;
        rec.projected = proj.projected;
        g = std::move(proj.direction);
      } else {
        rec.dot_o_f = dot(obj.grads.g_o, obj.grads.g_f);
        g = std::move(obj.grads.g_o);
      }
      rec.dot_f_g = dot(obj.grads.g_f, g);
      rec.norm_f = norm(obj.grads.g_f);
      rec.norm_g = norm(g);

      for (std::size_t j = 0; j < g.size(); ++j) theta[j] -= cfg.learning_rate * g[j];
      if (!theta.all_finite()) {
        throw DivergenceError("parameters became non-finite at step " +
                              std::to_string(step));
      }
      result.trace.push_back(rec);
      ++step;
    }
  }
  return result;
}

}  // namespace unlearn
