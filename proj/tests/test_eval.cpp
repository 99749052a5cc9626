#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include "unlearn/config.hpp"
#include "unlearn/error.hpp"
#include "unlearn/eval.hpp"
#include "unlearn/pipeline.hpp"
#include "unlearn/rng.hpp"
#include "unlearn/train.hpp"

using namespace unlearn;

namespace {

// (Acc_Df, Acc_Dt, Acc_Dr, MIA)
MetricsReport report(double df, double dt, double dr, double mia) {
  MetricsReport r;
  r.acc_df = df;
  r.acc_dt = dt;
  r.acc_dr = dr;
  r.mia = mia;
  return r;
}

struct Fitted {
  TrainTest tt;
  SplitSpec split;
  ModelSpec spec{{2, 32, 5}, Activation::relu, 101};
  ParamVector theta;
};

const Fitted& fitted() {
  static const Fitted f = [] {
    Fitted k;
    k.tt = gen_blobs_with_test({5, 100, 2, 0.6, 2}, 100);
    k.split = make_sample_split(k.tt.train, 0.1, 3);
    Mlp m(k.spec);
    k.theta = sgd_train(m, m.init_params(), k.tt.train, iota_indices(k.tt.train.size()),
                        {100, 0.2, 8, 1}).theta;
    return k;
  }();
  return f;
}

}  // namespace

TEST(AvgGap, PublishedRows) {
  const auto c10 = avg_gap(report(95.40, 92.92, 98.93, 9.56), report(94.81, 94.26, 100.0, 13.05));
  EXPECT_NEAR(c10, 1.6225, 1e-12);
  EXPECT_EQ(round_to(c10, 2), 1.62);
  const auto c100 =
      avg_gap(report(68.76, 73.17, 99.24, 42.42), report(75.13, 74.69, 99.98, 50.22));
  EXPECT_NEAR(c100, 4.1075, 1e-12);
  EXPECT_EQ(round_to(c100, 2), 4.11);
}

TEST(AvgGap, SymmetricAndZeroIffEqual) {
  Rng rng(1);
  for (int t = 0; t < 100; ++t) {
    const auto a = report(rng.uniform(0, 100), rng.uniform(0, 100), rng.uniform(0, 100),
                          rng.uniform(0, 100));
    const auto b = report(rng.uniform(0, 100), rng.uniform(0, 100), rng.uniform(0, 100),
                          rng.uniform(0, 100));
    EXPECT_EQ(avg_gap(a, b), avg_gap(b, a));
    EXPECT_EQ(avg_gap(a, a), 0.0);
    EXPECT_GT(avg_gap(a, b), 0.0);
  }
  auto a = report(1, 2, 3, 4);
  auto b = a;
  b.mia = 4.5;
  EXPECT_EQ(avg_gap(a, b), 0.125);
}

TEST(AvgGap, RequiresMia) {
  auto a = report(1, 2, 3, 4);
  a.mia_computed = false;
  EXPECT_THROW(avg_gap(a, report(1, 2, 3, 4)), InvalidArgument);
}

TEST(SplitAccuracies, ConstantPredictorOnBalancedData) {
  const auto tt = gen_blobs_with_test({2, 20, 2, 0.3, 1}, 20);
  const auto split = make_sample_split(tt.train, 0.5, 1);
  ModelSpec spec{{2, 2}, Activation::relu, 0};
  Mlp m(spec);
  ParamVector zero{std::vector<double>(spec.param_count(), 0.0)};
  // sample_wise halves need not be balanced; use class 0 + class 1 halves.
  const auto cs = make_class_split(tt.train, {0});
  const auto a = split_accuracies(m, zero, tt.train, cs, tt.test);
  EXPECT_EQ(a.acc_df, 100.0);
  EXPECT_EQ(a.acc_dr, 0.0);
  EXPECT_EQ(a.acc_dt, 50.0);
  const auto b = split_accuracies(m, zero, tt.train, split, tt.test);
  EXPECT_EQ(b.acc_dt, 50.0);
  EXPECT_NEAR(b.acc_df + b.acc_dr, 100.0, 1e-12);  // 20 rows each side
}

TEST(SplitAccuracies, PerfectModelScoresHundred) {
  const auto tt = gen_blobs_with_test({3, 30, 2, 0.01, 4}, 10);
  const auto split = make_sample_split(tt.train, 0.2, 1);
  ModelSpec spec{{2, 16, 3}, Activation::relu, 2};
  Mlp m(spec);
  const auto theta = sgd_train(m, m.init_params(), tt.train, iota_indices(tt.train.size()),
                               {200, 0.1, 8, 1}).theta;
  const auto a = split_accuracies(m, theta, tt.train, split, tt.test);
  EXPECT_EQ(a.acc_df, 100.0);
  EXPECT_EQ(a.acc_dr, 100.0);
}

TEST(Mia, UninformativeAttackerGivesFifty) {
  LogisticAttacker flat;  // weight 0, bias 0 -> P = 0.5 everywhere
  const std::vector<double> f{0.1, 3.0, 70.0, 1e9};
  const auto r = mia_from_attacker(flat, f);
  EXPECT_EQ(r.mean_prob, 50.0);
  EXPECT_EQ(r.thresholded, 0.0);
}

TEST(Mia, DegenerateFeaturesFlagged) {
  const std::vector<double> same(10, 0.7), f{0.1, 0.2};
  const auto r = mia_from_losses(same, same, f);
  EXPECT_TRUE(r.degenerate);
  EXPECT_EQ(r.mean_prob, 50.0);
}

TEST(Mia, InfiniteForgetLossSaturates) {
  Rng rng(3);
  std::vector<double> members, nonmembers;
  for (int i = 0; i < 200; ++i) {
    members.push_back(0.05 * rng.uniform());
    nonmembers.push_back(1.0 + 2.0 * rng.uniform());
  }
  const std::vector<double> f(20, std::numeric_limits<double>::infinity());
  const auto r = mia_from_losses(members, nonmembers, f);
  EXPECT_FALSE(r.degenerate);
  EXPECT_GT(r.mean_prob, 99.99);
  EXPECT_LE(r.mean_prob, 100.0);
  EXPECT_EQ(r.thresholded, 100.0);

  const std::vector<double> zero(20, 0.0);
  EXPECT_LT(mia_from_losses(members, nonmembers, zero).mean_prob, 1.0);
}

TEST(Mia, AttackerSeparatesByLoss) {
  const std::vector<double> members{0.1, 0.2, 0.3, 0.25, 0.6}, nonmembers{0.4, 0.9, 1.5, 2.0, 1.1};
  const auto fit = fit_attacker(members, nonmembers);
  EXPECT_LT(fit.attacker.weight, 0.0);
  EXPECT_GT(fit.attacker.prob_member(0.05), fit.attacker.prob_member(3.0));
  EXPECT_THROW(fit_attacker({}, nonmembers), InvalidArgument);
}

TEST(Mia, RangeAndShuffleInvariance) {
  const auto& k = fitted();
  Mlp m(k.spec);
  const auto members = member_sample(k.tt.train, k.split, 100, 1);
  const auto non = k.tt.test.to_batch();
  const auto forget = k.tt.train.gather(k.split.forget_indices);
  const auto base = mia_score(m, k.theta, members, non, forget);
  EXPECT_GE(base.mean_prob, 0.0);
  EXPECT_LE(base.mean_prob, 100.0);
  for (std::uint64_t s = 0; s < 5; ++s) {
    auto idx = k.split.forget_indices;
    Rng rng(s);
    rng.shuffle(std::span<std::size_t>(idx));
    const auto shuffled = mia_score(m, k.theta, members, non, k.tt.train.gather(idx));
    EXPECT_EQ(shuffled.mean_prob, base.mean_prob);
    EXPECT_EQ(shuffled.thresholded, base.thresholded);
  }
}

TEST(Mia, MembersDrawnFromRetainOnly) {
  const auto& k = fitted();
  const auto members = member_sample(k.tt.train, k.split, 10000, 1);
  EXPECT_EQ(members.size(), k.split.retain_indices().size());
  const auto few = member_sample(k.tt.train, k.split, 30, 2);
  EXPECT_EQ(few.size(), 30u);
  EXPECT_EQ(few.inputs, member_sample(k.tt.train, k.split, 30, 2).inputs);
}

TEST(Relearn, AlreadyAboveTargetIsZero) {
  const auto& k = fitted();
  Mlp m(k.spec);
  const auto r = relearn_time(m, k.theta, k.tt.train, k.split, 0.0, 0.1, 5, 32, 1);
  ASSERT_TRUE(r.epochs.has_value());
  EXPECT_EQ(*r.epochs, 0u);
  EXPECT_EQ(r.describe(), "0");
}

TEST(Relearn, FrozenRateExceedsCap) {
  const auto& k = fitted();
  Mlp m(k.spec);
  const auto r = relearn_time(m, m.init_params(), k.tt.train, k.split, 100.0, 0.0, 5, 32, 1);
  EXPECT_FALSE(r.epochs.has_value());
  EXPECT_EQ(r.cap, 5u);
  EXPECT_EQ(r.describe(), "> 5");
}

TEST(Relearn, MonotoneInTarget) {
  const auto& k = fitted();
  Mlp m(k.spec);
  const auto start = m.init_params();
  std::size_t prev = 0;
  bool prev_capped = false;
  for (double target : {10.0, 30.0, 50.0, 60.0, 70.0, 80.0, 95.0}) {
    const auto r = relearn_time(m, start, k.tt.train, k.split, target, 0.05, 30, 32, 4);
    const std::size_t e = r.epochs.value_or(31);
    EXPECT_FALSE(prev_capped && r.epochs.has_value());
    EXPECT_GE(e, prev) << "target " << target;
    prev = e;
    prev_capped = !r.epochs.has_value();
  }
}

TEST(Relearn, ValidatesArguments) {
  const auto& k = fitted();
  Mlp m(k.spec);
  EXPECT_THROW(relearn_time(m, k.theta, k.tt.train, k.split, 50, 0.1, 0, 32, 1), InvalidArgument);
}

// Desk benchmark, 8 seeds. Measured regression, not a guarantee: seed 4
// alone relearns faster after scrubbing (3 vs 7 epochs), so compare means.
TEST(Relearn, ScrubbedTakesLongerThanFinetuneOnDesk) {
  double scrub_total = 0, ft_total = 0;
  for (std::uint64_t s = 1; s <= 8; ++s) {
    const nlohmann::json j = {
        {"dataset", {{"kind", "blobs"}, {"classes", 5}, {"per_class", 200}, {"dim", 2},
                     {"spread", 0.6}, {"seed", s}, {"test_per_class", 200}}},
        {"model", {{"layer_sizes", {2, 32, 5}}, {"activation", "relu"}, {"seed", s + 100}}},
        {"train", {{"epochs", 600}, {"learning_rate", 0.2}, {"batch_size", 8}, {"seed", s}}},
        {"split", {{"mode", "sample_wise"}, {"fraction", 0.1}, {"seed", s + 7}}},
        {"unlearn", {{"k", 95}, {"lambda", 0.05}, {"learning_rate", 0.1}, {"epochs", 10},
                     {"batch_size", 8}, {"seed", s}}},
        {"eval", {{"mia", false}, {"relearn_cap", 50}, {"seed", 3}}}};
    auto cfg = parse_config(j, ".");
    const auto data = load_experiment_data(cfg);
    const Mlp m(cfg.model);
    const auto original =
        sgd_train(m, m.init_params(), data.train, iota_indices(data.train.size()), cfg.train).theta;
    const double target = 100.0 * m.accuracy(original, data.train.gather(data.split.forget_indices));
    for (const char* method : {"scissorhands", "finetune"}) {
      cfg.unlearn.method = method;
      const auto out = run_method(cfg, data, original);
      const auto r = compute_metrics(cfg, data, out.theta, target, nullptr);
      ASSERT_TRUE(r.relearn && r.relearn->epochs) << method << " seed " << s;
      (cfg.unlearn.method == "finetune" ? ft_total : scrub_total) += double(*r.relearn->epochs);
    }
  }
  EXPECT_GE(scrub_total / 8, ft_total / 8);
}

TEST(Rte, Ratio) {
  EXPECT_EQ(rte(3.5, 3.5), 1.0);
  EXPECT_EQ(rte(1.0, 4.0), 0.25);
  EXPECT_THROW(rte(1.0, 0.0), InvalidArgument);
}

TEST(Json, MetricsRoundTrip) {
  auto r = report(12.5, 50, 99.25, 33.0);
  r.mia_thresholded = 20;
  r.avg_gap = 1.25;
  r.relearn = RelearnResult{std::nullopt, 7};
  const auto back = metrics_from_json(to_json(r));
  EXPECT_EQ(back.acc_df, 12.5);
  EXPECT_EQ(back.mia, 33.0);
  EXPECT_EQ(back.avg_gap, 1.25);
  ASSERT_TRUE(back.relearn.has_value());
  EXPECT_FALSE(back.relearn->epochs.has_value());
  EXPECT_EQ(to_json(r)["relearn"]["display"], "> 7");

  auto no_ref = report(1, 2, 3, 4);
  EXPECT_FALSE(to_json(no_ref).contains("avg_gap"));
  EXPECT_THROW(metrics_from_json(nlohmann::json{{"acc_df", 1}}), ConfigError);
}

TEST(Table, DeterministicMethodOrder) {
  std::vector<std::pair<std::string, MetricsReport>> rows{
      {"scissorhands", report(95.4, 92.92, 98.93, 9.56)},
      {"zeta", report(1, 1, 1, 1)},
      {"gradient_ascent", report(1, 1, 1, 1)},
      {"alpha", report(1, 1, 1, 1)},
      {"retrain", report(94.81, 94.26, 100, 13.05)},
      {"finetune", report(1, 1, 1, 1)},
  };
  rows[0].second.avg_gap = 1.6225;
  const auto text = format_table(rows, false);
  std::vector<std::string> order;
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  EXPECT_NE(line.find("Avg. Gap"), std::string::npos);
  std::getline(in, line);  // rule
  while (std::getline(in, line)) order.push_back(line.substr(0, line.find(' ')));
  EXPECT_EQ(order, (std::vector<std::string>{"retrain", "finetune", "gradient_ascent",
                                             "scissorhands", "alpha", "zeta"}));
  std::reverse(rows.begin(), rows.end());
  EXPECT_EQ(format_table(rows, false), text);

  const auto csv = format_table({rows.back()}, true);
  EXPECT_EQ(csv, "Method,Acc_Df,Acc_Dt,Acc_Dr,MIA,Avg. Gap\nscissorhands,95.40,92.92,98.93,9.56,1.62\n");
}
