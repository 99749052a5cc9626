#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "unlearn/data.hpp"
#include "unlearn/nn.hpp"

namespace unlearn {

// Accuracies in percent.
struct SplitAccuracies {
  double acc_df = 0.0;
  double acc_dr = 0.0;
  double acc_dt = 0.0;
};

SplitAccuracies split_accuracies(const Mlp& model, const ParamVector& theta,
                                 const Dataset& data, const SplitSpec& split,
                                 const Dataset& test);

// Per-sample loss features are clamped to this before the attacker sees
// them, so infinite losses stay usable.
inline constexpr double kLossFeatureCap = 100.0;

// Single-feature logistic model: P(member | loss) =
// sigmoid(weight * (loss - center) / scale + bias).
struct LogisticAttacker {
  double weight = 0.0;
  double bias = 0.0;
  double center = 0.0;
  double scale = 1.0;

  double prob_member(double loss) const;
  double prob_nonmember(double loss) const { return 1.0 - prob_member(loss); }
};

struct AttackerFit {
  LogisticAttacker attacker;
  bool degenerate = false;  // all features identical; attacker outputs 0.5
  std::size_t iterations = 0;
};

// Fits the attacker by gradient descent (L2 1e-4 on the weight) on
// standardized features: members labelled 1, non-members 0.
AttackerFit fit_attacker(std::span<const double> member_losses,
                         std::span<const double> nonmember_losses);

struct MiaResult {
  double mean_prob = 0.0;    // 100 * mean P(non-member | x_f)
  double thresholded = 0.0;  // 100 * fraction with P(non-member) > 0.5
  bool degenerate = false;
};

MiaResult mia_from_attacker(const LogisticAttacker& attacker,
                            std::span<const double> forget_losses);
MiaResult mia_from_losses(std::span<const double> member_losses,
                          std::span<const double> nonmember_losses,
                          std::span<const double> forget_losses);

// Members come from `members` (drawn from D_r by the caller), non-members
// from `nonmembers` (held out); the larger side is truncated so both
// classes are balanced.
MiaResult mia_score(const Mlp& model, const ParamVector& theta,
                    const Batch& members, const Batch& nonmembers,
                    const Batch& forget);

// Seeded member sample of D_r rows with at most `count` rows.
Batch member_sample(const Dataset& data, const SplitSpec& split,
                    std::size_t count, std::uint64_t seed);

struct RelearnResult {
  std::optional<std::size_t> epochs;  // nullopt: cap reached first
  std::size_t cap = 0;

  // Epoch count, or "> cap".
  std::string describe() const;
};

// Fine-tunes on the full training set until Acc_Df (percent) reaches
// target_acc_df, checking after every epoch.
RelearnResult relearn_time(const Mlp& model, const ParamVector& scrubbed,
                           const Dataset& data, const SplitSpec& split,
                           double target_acc_df, double learning_rate,
                           std::size_t cap, std::size_t batch_size,
                           std::uint64_t seed);

// unlearn_seconds / retrain_seconds.
double rte(double unlearn_seconds, double retrain_seconds);

struct MetricsReport {
  double acc_df = 0.0;
  double acc_dr = 0.0;
  double acc_dt = 0.0;
  // MIA fields are meaningful only when mia_computed is set.
  bool mia_computed = true;
  double mia = 0.0;
  double mia_thresholded = 0.0;
  bool mia_degenerate = false;
  std::optional<double> avg_gap;
  std::optional<RelearnResult> relearn;
};

// (|dAcc_Dt| + |dAcc_Df| + |dAcc_Dr| + |dMIA|) / 4. Throws InvalidArgument
// when either side has no MIA value.
double avg_gap(const MetricsReport& report, const MetricsReport& reference);

double round_to(double value, int decimals);

nlohmann::json to_json(const MetricsReport& r);
// Throws ConfigError naming the first missing field.
MetricsReport metrics_from_json(const nlohmann::json& j);

// Comparison table in the column order Acc_Df, Acc_Dt, Acc_Dr, MIA, Avg. Gap.
// Rows are sorted retrain, finetune, gradient_ascent, scissorhands, then any
// other method name alphabetically.
std::string format_table(std::vector<std::pair<std::string, MetricsReport>> rows,
                         bool csv);

}  // namespace unlearn
