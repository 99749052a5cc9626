#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "unlearn/data.hpp"
#include "unlearn/nn.hpp"

namespace unlearn {

// g_o: gradient of the balanced objective; g_f: gradient of the forget loss.
struct GradientPair {
  std::vector<double> g_o;
  std::vector<double> g_f;
};

struct Objective {
  double value = 0.0;  // loss(retain) - lambda * loss(forget)
  double loss_retain = 0.0;
  double loss_forget = 0.0;
  GradientPair grads;
};

// One gradient evaluation per batch.
Objective objective_and_grads(const Mlp& model, const ParamVector& theta,
                              const Batch& retain, const Batch& forget,
                              double lambda);

struct Projection {
  std::vector<double> direction;
  double v = 0.0;          // dual variable; 0 when no projection happened
  double dot_o_f = 0.0;    // <g_o, g_f> before projection
  bool projected = false;
};

// Euclidean projection of g_o onto the halfspace {u : <g_f, u> <= 0}.
// When <g_o, g_f> > 0 and g_f != 0 the result is g_o - v* g_f with
// v* = <g_o, g_f> / <g_f, g_f>; otherwise g_o is returned unchanged.
// Throws InvalidArgument on length mismatch or non-finite input.
Projection project_gradient(const GradientPair& pair);

struct RepairConfig {
  double lambda = 0.05;
  double learning_rate = 0.05;
  std::size_t epochs = 10;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;
  // Off reproduces the unprojected ablation: steps follow g_o directly.
  bool projection = true;
};

struct RepairStep {
  std::size_t step = 0;
  std::size_t epoch = 0;
  double objective = 0.0;
  double loss_retain = 0.0;
  double loss_forget = 0.0;
  double dot_o_f = 0.0;
  double v = 0.0;
  bool projected = false;
  // Halfspace bookkeeping for the applied direction g.
  double dot_f_g = 0.0;
  double norm_f = 0.0;
  double norm_g = 0.0;
};

struct RepairResult {
  ParamVector theta;
  std::vector<RepairStep> trace;
};

// Projected SGD on the balanced objective. Each epoch walks the retain rows
// in a fresh seeded order; every retain minibatch is paired with the next
// forget minibatch from a cyclic, reshuffled-per-pass forget order.
// Throws DivergenceError if the objective is non-finite or |L| > 1e6.
RepairResult repair_loop(const Mlp& model, const ParamVector& trimmed,
                         const Dataset& data, std::span<const std::size_t> retain,
                         std::span<const std::size_t> forget,
                         const RepairConfig& cfg);

inline constexpr double kDivergenceBound = 1e6;

// Every step satisfies <g_f, g> <= rel_tol * |g_f| |g|.
bool halfspace_holds(const std::vector<RepairStep>& trace, double rel_tol = 1e-9);

}  // namespace unlearn
