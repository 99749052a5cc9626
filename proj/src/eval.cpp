#include "unlearn/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "unlearn/error.hpp"
#include "unlearn/rng.hpp"
#include "unlearn/train.hpp"

namespace unlearn {

namespace {

double percent_accuracy(const Mlp& model, const ParamVector& theta,
                        const Batch& batch, const char* part) {
  if (batch.size() == 0) {
    throw InvalidArgument(std::string("cannot score an empty ") + part);
  }
  return 100.0 * model.accuracy(theta, batch);
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double clamp_feature(double loss) {
  if (std::isnan(loss)) return kLossFeatureCap;
  return std::clamp(loss, 0.0, kLossFeatureCap);
}

}  // namespace

SplitAccuracies split_accuracies(const Mlp& model, const ParamVector& theta,
                                 const Dataset& data, const SplitSpec& split,
                                 const Dataset& test) {
  if (split.total != data.size()) throw InvalidArgument("split does not match dataset");
  SplitAccuracies a;
  a.acc_df = percent_accuracy(model, theta, data.gather(split.forget_indices), "forget set");
  a.acc_dr = percent_accuracy(model, theta, data.gather(split.retain_indices()), "retain set");
  a.acc_dt = percent_accuracy(model, theta, test.to_batch(), "test set");
  return a;
}

double LogisticAttacker::prob_member(double loss) const {
  return sigmoid(weight * (clamp_feature(loss) - center) / scale + bias);
}

AttackerFit fit_attacker(std::span<const double> members,
                         std::span<const double> nonmembers) {
  if (members.empty() || nonmembers.empty()) {
    throw InvalidArgument("attacker needs members and non-members");
  }
  std::vector<double> x;
  std::vector<double> y;
  for (double v : members) {
    x.push_back(clamp_feature(v));
    y.push_back(1.0);
  }
  for (double v : nonmembers) {
    x.push_back(clamp_feature(v));
    y.push_back(0.0);
  }
  const double n = static_cast<double>(x.size());
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= n;
  double var = 0.0;
  for (double v : x) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / n);

  AttackerFit fit;
  fit.attacker.center = mean;
  if (!(sd > 1e-12 * std::max(1.0, std::abs(mean)))) {
    fit.degenerate = true;
    return fit;
  }
  fit.attacker.scale = sd;
  std::vector<double> z(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) z[i] = (x[i] - mean) / sd;

  constexpr double kL2 = 1e-4;
  constexpr double kRate = 2.0;
  constexpr std::size_t kMaxIter = 200000;
  double w = 0.0, b = 0.0;
  for (std::size_t it = 0; it < kMaxIter; ++it) {
    double gw = 0.0, gb = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
      const double r = sigmoid(w * z[i] + b) - y[i];
      gw += r * z[i];
      gb += r;
    }
    gw = gw / n + kL2 * w;
    gb /= n;
    fit.iterations = it + 1;
    if (std::abs(gw) < 1e-10 && std::abs(gb) < 1e-10) break;
    w -= kRate * gw;
    b -= kRate * gb;
  }
  fit.attacker.weight = w;
  fit.attacker.bias = b;
  return fit;
}

MiaResult mia_from_attacker(const LogisticAttacker& attacker,
                            std::span<const double> forget_losses) {
  if (forget_losses.empty()) throw InvalidArgument("MIA needs forget samples");
  double sum = 0.0;
  std::size_t above = 0;
  for (double v : forget_losses) {
    const double p = attacker.prob_nonmember(v);
    sum += p;
    if (p > 0.5) ++above;
  }
  const double n = static_cast<double>(forget_losses.size());
  MiaResult r;
  r.mean_prob = 100.0 * sum / n;
  r.thresholded = 100.0 * static_cast<double>(above) / n;
  return r;
}

MiaResult mia_from_losses(std::span<const double> member_losses,
                          std::span<const double> nonmember_losses,
                          std::span<const double> forget_losses) {
  const auto fit = fit_attacker(member_losses, nonmember_losses);
  if (fit.degenerate) {
    if (forget_losses.empty()) throw InvalidArgument("MIA needs forget samples");
    return {50.0, 50.0, true};
  }
  return mia_from_attacker(fit.attacker, forget_losses);
}

MiaResult mia_score(const Mlp& model, const ParamVector& theta,
                    const Batch& members, const Batch& nonmembers,
                    const Batch& forget) {
  auto m = model.sample_losses(theta, members);
  auto nm = model.sample_losses(theta, nonmembers);
  const std::size_t n = std::min(m.size(), nm.size());
  m.resize(n);
  nm.resize(n);
  // Sorted so the forget-set order cannot change the summation order.
  auto f = model.sample_losses(theta, forget);
  std::sort(f.begin(), f.end());
  return mia_from_losses(m, nm, f);
}

Batch member_sample(const Dataset& data, const SplitSpec& split,
                    std::size_t count, std::uint64_t seed) {
  auto rows = split.retain_indices();
  Rng rng(seed);
  rng.shuffle(std::span<std::size_t>(rows));
  rows.resize(std::min(rows.size(), count));
  std::sort(rows.begin(), rows.end());
  return data.gather(rows);
}

std::string RelearnResult::describe() const {
  if (epochs) return std::to_string(*epochs);
  return "> " + std::to_string(cap);
}

RelearnResult relearn_time(const Mlp& model, const ParamVector& scrubbed,
                           const Dataset& data, const SplitSpec& split,
                           double target_acc_df, double learning_rate,
                           std::size_t cap, std::size_t batch_size,
                           std::uint64_t seed) {
  if (cap < 1) throw InvalidArgument("relearn cap must be >= 1");
  if (split.forget_indices.empty()) throw InvalidArgument("relearn needs a forget set");
  const Batch forget = data.gather(split.forget_indices);
  RelearnResult r;
  r.cap = cap;
  if (100.0 * model.accuracy(scrubbed, forget) >= target_acc_df) {
    r.epochs = 0;
    return r;
  }
  TrainConfig cfg{cap, learning_rate, batch_size, seed};
  const auto rows = iota_indices(data.size());
  sgd_train(model, scrubbed, data, rows, cfg, false,
            [&](std::size_t epoch, const ParamVector& theta) {
              if (100.0 * model.accuracy(theta, forget) >= target_acc_df) {
                r.epochs = epoch;
                return true;
              }
              return false;
            });
  return r;
}

double rte(double unlearn_seconds, double retrain_seconds) {
  if (!(retrain_seconds > 0.0)) throw InvalidArgument("retrain time must be > 0");
  return unlearn_seconds / retrain_seconds;
}

double avg_gap(const MetricsReport& r, const MetricsReport& ref) {
  if (!r.mia_computed || !ref.mia_computed) {
    throw InvalidArgument("Avg. Gap needs MIA on both reports");
  }
  return (std::abs(r.acc_dt - ref.acc_dt) + std::abs(r.acc_df - ref.acc_df) +
          std::abs(r.acc_dr - ref.acc_dr) + std::abs(r.mia - ref.mia)) /
         4.0;
}

double round_to(double value, int decimals) {
  const double scale = std::pow(10.0, decimals);
  return std::round(value * scale) / scale;
}

nlohmann::json to_json(const MetricsReport& r) {
  nlohmann::json j;
  j["acc_df"] = r.acc_df;
  j["acc_dr"] = r.acc_dr;
  j["acc_dt"] = r.acc_dt;
  if (r.mia_computed) {
    j["mia"] = r.mia;
    j["mia_thresholded"] = r.mia_thresholded;
    j["mia_degenerate"] = r.mia_degenerate;
  }
  if (r.avg_gap) j["avg_gap"] = *r.avg_gap;
  if (r.relearn) {
    j["relearn"] = {{"cap", r.relearn->cap},
                    {"exceeded_cap", !r.relearn->epochs.has_value()},
                    {"display", r.relearn->describe()}};
    if (r.relearn->epochs) {
      j["relearn"]["epochs"] = *r.relearn->epochs;
    } else {
      j["relearn"]["epochs"] = nullptr;
    }
  }
  return j;
}

MetricsReport metrics_from_json(const nlohmann::json& j) {
  auto need = [&](const char* key) -> double {
    if (!j.contains(key) || !j[key].is_number()) {
      throw ConfigError(std::string("metrics field '") + key + "' is missing");
    }
    return j[key].get<double>();
  };
  MetricsReport r;
  r.acc_df = need("acc_df");
  r.acc_dr = need("acc_dr");
  r.acc_dt = need("acc_dt");
  if (j.contains("mia")) {
    r.mia = need("mia");
  } else {
    r.mia_computed = false;
  }
  r.mia_thresholded = j.value("mia_thresholded", 0.0);
  r.mia_degenerate = j.value("mia_degenerate", false);
  if (j.contains("avg_gap") && j["avg_gap"].is_number()) {
    r.avg_gap = j["avg_gap"].get<double>();
  }
  if (j.contains("relearn") && j["relearn"].is_object()) {
    RelearnResult rl;
    rl.cap = j["relearn"].value("cap", std::size_t{0});
    if (j["relearn"].contains("epochs") && j["relearn"]["epochs"].is_number()) {
      rl.epochs = j["relearn"]["epochs"].get<std::size_t>();
    }
    r.relearn = rl;
  }
  return r;
}

namespace {

int method_rank(const std::string& m) {
  static const char* order[] = {"retrain", "finetune", "gradient_ascent", "scissorhands"};
  for (int i = 0; i < 4; ++i) {
    if (m == order[i]) return i;
  }
  return 4;
}

std::string fixed2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

}  // namespace

std::string format_table(std::vector<std::pair<std::string, MetricsReport>> rows,
                         bool csv) {
  std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
    const int ra = method_rank(a.first), rb = method_rank(b.first);
    if (ra != rb) return ra < rb;
    return ra == 4 && a.first < b.first;
  });
  const std::vector<std::string> header = {"Method", "Acc_Df", "Acc_Dt", "Acc_Dr",
                                           "MIA", "Avg. Gap"};
  std::vector<std::vector<std::string>> cells;
  for (const auto& [name, r] : rows) {
    cells.push_back({name, fixed2(r.acc_df), fixed2(r.acc_dt), fixed2(r.acc_dr),
                     fixed2(r.mia), r.avg_gap ? fixed2(*r.avg_gap) : "-"});
  }
  std::ostringstream out;
  if (csv) {
    for (std::size_t c = 0; c < header.size(); ++c) out << (c ? "," : "") << header[c];
    out << '\n';
    for (const auto& row : cells) {
      for (std::size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << row[c];
      out << '\n';
    }
    return out.str();
  }
  std::vector<std::size_t> width(header.size());
  for (std::size_t c = 0; c < header.size(); ++c) width[c] = header[c].size();
  for (const auto& row : cells) {
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  }
  auto emit = [&](const std::vector<std::string>& row) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out << "  ";
      const std::size_t pad = width[c] - row[c].size();
      if (c == 0) {
        out << row[c] << std::string(pad, ' ');
      } else {
        out << std::string(pad, ' ') << row[c];
      }
    }
    out << '\n';
  };
  emit(header);
  std::size_t total = 0;
  for (auto w : width) total += w;
  out << std::string(total + 2 * (width.size() - 1), '-') << '\n';
  for (const auto& row : cells) emit(row);
  return out.str();
}

}  // namespace unlearn
