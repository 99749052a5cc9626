#include "unlearn/pipeline.hpp"

#include <chrono>
#include <fstream>
#include <sstream>

#include "unlearn/baselines.hpp"
#include "unlearn/checkpoint.hpp"
#include "unlearn/error.hpp"
#include "unlearn/rng.hpp"

namespace unlearn {

using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Stream tags for derive_seed.
enum SeedTag : std::uint64_t { kTrimSubset = 1, kTrimInit = 2, kRepair = 3, kMia = 4, kRelearn = 5 };

void write_json(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << j.dump(2) << '\n';
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create '" + dir.string() + "': " + ec.message());
}

json model_json(const ModelSpec& spec) {
  return {{"layer_sizes", spec.layer_sizes},
          {"activation", std::string(to_string(spec.activation))},
          {"seed", spec.seed},
          {"param_count", spec.param_count()}};
}

json split_json(const SplitSpec& s) {
  json j = {{"mode", std::string(to_string(s.mode))},
            {"seed", s.seed},
            {"total", s.total},
            {"forget_indices", s.forget_indices}};
  if (s.mode == SplitMode::sample_wise) {
    j["fraction"] = s.fraction;
  } else {
    j["classes"] = s.classes;
  }
  return j;
}

json trace_json(const std::vector<RepairStep>& trace) {
  json arr = json::array();
  for (const auto& s : trace) {
    arr.push_back({{"step", s.step},
                   {"epoch", s.epoch},
                   {"L", s.objective},
                   {"loss_retain", s.loss_retain},
                   {"loss_forget", s.loss_forget},
                   {"dot_go_gf", s.dot_o_f},
                   {"v", s.v},
                   {"projected", s.projected},
                   {"dot_gf_g", s.dot_f_g}});
  }
  return arr;
}

Checkpoint load_matching_checkpoint(const ExperimentConfig& cfg,
                                    const std::filesystem::path& path) {
  auto ckpt = load_checkpoint(path);
  if (!(ckpt.spec == cfg.model)) {
    throw ConfigError("checkpoint '" + path.string() +
                      "' does not match the config's model block");
  }
  return ckpt;
}

}  // namespace

RepairConfig repair_config(const UnlearnConfig& u) {
  RepairConfig r;
  r.lambda = u.lambda;
  r.learning_rate = u.learning_rate;
  r.epochs = u.epochs;
  r.batch_size = u.batch_size;
  r.seed = derive_seed(u.seed, kRepair);
  r.projection = u.projection;
  return r;
}

TrainConfig baseline_train_config(const UnlearnConfig& u) {
  return {u.epochs, u.learning_rate, u.batch_size, u.seed};
}

ScrubResult scissorhands(const Mlp& model, const ParamVector& original,
                         const Dataset& data, const SplitSpec& split,
                         const UnlearnConfig& cfg) {
  ScrubResult r;
  if (split.forget_indices.empty()) throw InvalidArgument("forget set is empty");
  r.trim_subset = subsample_forget(split, cfg.trim_ratio, derive_seed(cfg.seed, kTrimSubset));
  const Batch scoring = data.gather(r.trim_subset);
  r.saliency = cfg.saliency == SaliencyChoice::exact
                   ? sensitivity_exact(model, original, scoring)
                   : sensitivity_approx(model, original, scoring);
  r.plan = rank_topk(r.saliency, cfg.k, model.layout(), cfg.rank);
  r.plan.strategy = cfg.init;
  r.plan.seed = derive_seed(cfg.seed, kTrimInit);
  r.trimmed = apply_trim(original, r.plan, model.spec());
  const auto retain = split.retain_indices();
  r.repair = repair_loop(model, r.trimmed, data, retain, split.forget_indices,
                         repair_config(cfg));
  r.theta = r.repair.theta;
  return r;
}

ExperimentData load_experiment_data(const ExperimentConfig& cfg) {
  ExperimentData d;
  try {
    switch (cfg.dataset.kind) {
      case DatasetKind::blobs: {
        auto tt = gen_blobs_with_test(cfg.dataset.blobs, cfg.dataset.test_per_class);
        d.train = std::move(tt.train);
        d.test = std::move(tt.test);
        break;
      }
      case DatasetKind::idx:
        d.train = load_idx(cfg.dataset.train_images, cfg.dataset.train_labels);
        d.test = load_idx(cfg.dataset.test_images, cfg.dataset.test_labels);
        break;
      case DatasetKind::csv:
        d.train = load_csv(cfg.dataset.train_csv);
        d.test = load_csv(cfg.dataset.test_csv);
        break;
    }
    // Files carry no class count; the model's output width is authoritative.
    d.train.class_count = cfg.model.class_count();
    d.test.class_count = cfg.model.class_count();
    d.train.validate();
    d.test.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("config.dataset: ") + e.what());
  }
  if (d.train.cols != cfg.model.input_dim() || d.test.cols != cfg.model.input_dim()) {
    throw ConfigError("config.model.layer_sizes: input width " +
                      std::to_string(cfg.model.input_dim()) + " does not match " +
                      std::to_string(d.train.cols) + " dataset features");
  }
  try {
    if (cfg.split.mode == SplitMode::sample_wise) {
      d.split = make_sample_split(d.train, cfg.split.fraction, cfg.split.seed);
    } else {
      d.split = make_class_split(d.train, cfg.split.classes);
      d.split.seed = cfg.split.seed;
    }
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("config.split: ") + e.what());
  }
  if (d.split.forget_indices.empty()) {
    throw ConfigError("config.split: the forget set is empty");
  }
  if (d.split.forget_indices.size() == d.split.total) {
    throw ConfigError("config.split: the retain set is empty");
  }
  return d;
}

MethodOutcome run_method(const ExperimentConfig& cfg, const ExperimentData& data,
                         const ParamVector& original) {
  const Mlp model(cfg.model);
  MethodOutcome out;
  out.method = cfg.unlearn.method;
  const auto start = Clock::now();
  const auto& m = cfg.unlearn.method;
  if (m == "scissorhands") {
    out.scrub = scissorhands(model, original, data.train, data.split, cfg.unlearn);
    out.theta = out.scrub->theta;
  } else if (m == "retrain") {
    out.theta = retrain(cfg.model, data.train, data.split, cfg.train);
    out.input_ignored = true;
  } else if (m == "finetune") {
    out.theta = finetune(model, original, data.train, data.split,
                         baseline_train_config(cfg.unlearn));
  } else if (m == "gradient_ascent") {
    auto ga = gradient_ascent(model, original, data.train, data.split,
                              baseline_train_config(cfg.unlearn));
    out.theta = std::move(ga.theta);
    out.diverged = ga.diverged;
  } else {
    throw ConfigError("unknown method '" + m + "'");
  }
  out.seconds = seconds_since(start);
  return out;
}

MetricsReport compute_metrics(const ExperimentConfig& cfg, const ExperimentData& data,
                              const ParamVector& theta,
                              std::optional<double> relearn_target,
                              const MetricsReport* reference) {
  const Mlp model(cfg.model);
  MetricsReport r;
  const auto acc = split_accuracies(model, theta, data.train, data.split, data.test);
  r.acc_df = acc.acc_df;
  r.acc_dr = acc.acc_dr;
  r.acc_dt = acc.acc_dt;
  r.mia_computed = cfg.eval.mia;
  if (cfg.eval.mia) {
    const Batch members = member_sample(data.train, data.split, data.test.size(),
                                        derive_seed(cfg.eval.seed, kMia));
    const auto mia = mia_score(model, theta, members, data.test.to_batch(),
                               data.train.gather(data.split.forget_indices));
    r.mia = mia.mean_prob;
    r.mia_thresholded = mia.thresholded;
    r.mia_degenerate = mia.degenerate;
  }
  if (cfg.eval.relearn_cap > 0 && relearn_target) {
    r.relearn = relearn_time(model, theta, data.train, data.split, *relearn_target,
                             cfg.eval.relearn_learning_rate.value_or(cfg.train.learning_rate),
                             cfg.eval.relearn_cap, cfg.train.batch_size,
                             derive_seed(cfg.eval.seed, kRelearn));
  }
  if (reference) {
    try {
      r.avg_gap = avg_gap(r, *reference);
    } catch (const InvalidArgument& e) {
      throw ConfigError(std::string("Avg. Gap: ") + e.what());
    }
  }
  return r;
}

MetricsReport load_reference_metrics(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open reference report '" + path.string() + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("reference report '" + path.string() + "': " + e.what());
  }
  if (!j.contains("metrics")) {
    throw ConfigError("reference report '" + path.string() + "' has no metrics block");
  }
  return metrics_from_json(j["metrics"]);
}

json without_timing(json report) {
  report.erase("timing");
  return report;
}

json cmd_train(const ExperimentConfig& cfg, const std::filesystem::path& out_dir) {
  const auto data = load_experiment_data(cfg);
  const Mlp model(cfg.model);
  const auto start = Clock::now();
  const auto rows = iota_indices(data.train.size());
  auto trained = sgd_train(model, model.init_params(), data.train, rows, cfg.train);
  const double seconds = seconds_since(start);

  ensure_dir(out_dir);
  const auto bytes = encode_checkpoint({cfg.model, trained.theta});
  write_file_bytes(out_dir / "model.ckpt", bytes);

  const Batch train_batch = data.train.to_batch();
  json report = {
      {"kind", "train"},
      {"config_hash", cfg.hash},
      {"model", model_json(cfg.model)},
      {"checkpoint", {{"file", "model.ckpt"}, {"hash", hash_hex(bytes)}}},
      {"train", {{"epochs", cfg.train.epochs},
                 {"learning_rate", cfg.train.learning_rate},
                 {"batch_size", cfg.train.batch_size},
                 {"seed", cfg.train.seed},
                 {"steps", trained.steps}}},
      {"final_train_loss", model.loss(trained.theta, train_batch)},
      {"final_train_accuracy", 100.0 * model.accuracy(trained.theta, train_batch)},
      {"final_test_accuracy", 100.0 * model.accuracy(trained.theta, data.test.to_batch())},
      {"split", split_json(data.split)},
      {"timing", {{"train_seconds", seconds}}}};
  write_json(out_dir / "train_report.json", report);
  return report;
}

json cmd_unlearn(const ExperimentConfig& cfg, const std::filesystem::path& checkpoint,
                 const std::filesystem::path& out_dir) {
  const auto input_bytes = read_file_bytes(checkpoint);
  const auto original = load_matching_checkpoint(cfg, checkpoint);
  const auto data = load_experiment_data(cfg);
  const Mlp model(cfg.model);

  std::optional<MetricsReport> reference;
  std::optional<json> reference_report;
  if (cfg.eval.reference) {
    reference = load_reference_metrics(*cfg.eval.reference);
    std::ifstream in(*cfg.eval.reference);
    reference_report = json::parse(in);
  } else if (cfg.eval.require_avg_gap) {
    throw ConfigError("config.eval.avg_gap is set but config.eval.reference is missing");
  }

  const auto outcome = run_method(cfg, data, original.params);
  const double original_acc_df =
      100.0 * model.accuracy(original.params, data.train.gather(data.split.forget_indices));
  const auto metrics = compute_metrics(cfg, data, outcome.theta, original_acc_df,
                                       reference ? &*reference : nullptr);

  ensure_dir(out_dir);
  const auto bytes = encode_checkpoint({cfg.model, outcome.theta});
  write_file_bytes(out_dir / "scrubbed.ckpt", bytes);

  const auto& u = cfg.unlearn;
  json report = {
      {"kind", "unlearn"},
      {"method", outcome.method},
      {"config_hash", cfg.hash},
      {"input_checkpoint", {{"hash", hash_hex(input_bytes)}}},
      {"output_checkpoint", {{"file", "scrubbed.ckpt"}, {"hash", hash_hex(bytes)}}},
      {"split", split_json(data.split)},
      {"flags", {{"input_checkpoint_ignored", outcome.input_ignored},
                 {"projection", u.projection},
                 {"diverged", outcome.diverged}}},
      {"original_acc_df", original_acc_df},
      {"metrics", to_json(metrics)}};

  if (outcome.scrub) {
    const auto& s = *outcome.scrub;
    report["trim_plan"] = {
        {"k", s.plan.k},
        {"strategy", std::string(to_string(s.plan.strategy))},
        {"seed", s.plan.seed},
        {"trim_ratio", u.trim_ratio},
        {"trim_subset", s.trim_subset},
        {"saliency", u.saliency == SaliencyChoice::exact ? "exact" : "approx"},
        {"batch_fingerprint", s.saliency.batch_fingerprint},
        {"signed_ranking", u.rank.signed_scores},
        {"per_layer", u.rank.per_layer},
        {"exclude_biases", u.rank.exclude_biases},
        {"selected", s.plan.selected}};
    report["repair"] = {{"lambda", u.lambda},
                        {"learning_rate", u.learning_rate},
                        {"epochs", u.epochs},
                        {"batch_size", u.batch_size},
                        {"seed", repair_config(u).seed},
                        {"steps", s.repair.trace.size()},
                        {"halfspace_checked", u.projection},
                        {"halfspace_ok", u.projection ? json(halfspace_holds(s.repair.trace))
                                                      : json(nullptr)},
                        {"trace", trace_json(s.repair.trace)}};
  } else {
    const auto t = outcome.method == "retrain" ? cfg.train : baseline_train_config(u);
    report["baseline"] = {{"epochs", t.epochs},
                          {"learning_rate", t.learning_rate},
                          {"batch_size", t.batch_size},
                          {"seed", t.seed}};
  }

  json timing = {{"unlearn_seconds", outcome.seconds}};
  if (reference_report && reference_report->value("method", "") == "retrain" &&
      reference_report->contains("timing") &&
      (*reference_report)["timing"].contains("unlearn_seconds")) {
    const double t_r = (*reference_report)["timing"]["unlearn_seconds"].get<double>();
    if (t_r > 0.0) timing["rte"] = rte(outcome.seconds, t_r);
  }
  report["timing"] = timing;
  write_json(out_dir / "unlearn_report.json", report);
  return report;
}

json cmd_eval(const ExperimentConfig& cfg, const std::filesystem::path& checkpoint,
              const std::optional<std::filesystem::path>& reference_path) {
  const auto start = Clock::now();
  const auto bytes = read_file_bytes(checkpoint);
  const auto ckpt = load_matching_checkpoint(cfg, checkpoint);
  const auto data = load_experiment_data(cfg);

  std::optional<MetricsReport> reference;
  const auto ref_path = reference_path ? reference_path : cfg.eval.reference;
  if (ref_path) {
    reference = load_reference_metrics(*ref_path);
  } else if (cfg.eval.require_avg_gap) {
    throw ConfigError("Avg. Gap requested (config.eval.avg_gap) but no reference given");
  }
  const auto metrics = compute_metrics(cfg, data, ckpt.params, cfg.eval.relearn_target,
                                       reference ? &*reference : nullptr);
  json report = {{"kind", "eval"},
                 {"config_hash", cfg.hash},
                 {"checkpoint", {{"hash", hash_hex(bytes)}}},
                 {"metrics", to_json(metrics)}};
  report["timing"] = {{"eval_seconds", seconds_since(start)}};
  return report;
}

namespace {

void apply_axis(UnlearnConfig& u, const std::string& axis, const std::string& value) {
  auto number = [&] {
    try {
      std::size_t used = 0;
      const double v = std::stod(value, &used);
      if (used != value.size()) throw std::invalid_argument(value);
      return v;
    } catch (const std::logic_error&) {
      throw ConfigError("axis '" + axis + "': '" + value + "' is not a number");
    }
  };
  if (axis == "k") {
    u.k = number();
    if (!(u.k >= 0.0 && u.k < 100.0)) throw ConfigError("axis k: values must lie in [0, 100)");
  } else if (axis == "lambda") {
    u.lambda = number();
    if (!(u.lambda >= 0.0)) throw ConfigError("axis lambda: values must be >= 0");
  } else if (axis == "p") {
    u.trim_ratio = number();
    if (!(u.trim_ratio > 0.0 && u.trim_ratio <= 1.0)) {
      throw ConfigError("axis p: values must lie in (0, 1]");
    }
  } else if (axis == "init") {
    try {
      u.init = parse_init_strategy(value);
    } catch (const InvalidArgument& e) {
      throw ConfigError(std::string("axis init: ") + e.what());
    }
  } else if (axis == "projection") {
    if (value == "on" || value == "true") {
      u.projection = true;
    } else if (value == "off" || value == "false") {
      u.projection = false;
    } else {
      throw ConfigError("axis projection: values must be on or off");
    }
  } else {
    throw ConfigError("unknown ablation axis '" + axis +
                      "' (expected k, lambda, p, init or projection)");
  }
}

std::string csv_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

SweepResult cmd_ablate(const ExperimentConfig& cfg, const std::string& axis,
                       const std::vector<std::string>& values,
                       const std::optional<std::filesystem::path>& checkpoint) {
  if (std::find(kAblationAxes.begin(), kAblationAxes.end(), axis) == kAblationAxes.end()) {
    throw ConfigError("unknown ablation axis '" + axis +
                      "' (expected k, lambda, p, init or projection)");
  }
  if (values.empty()) throw ConfigError("ablation needs at least one value");
  // Validate every value before any training happens.
  for (const auto& v : values) {
    UnlearnConfig probe = cfg.unlearn;
    apply_axis(probe, axis, v);
  }

  const auto data = load_experiment_data(cfg);
  const Mlp model(cfg.model);
  ParamVector original;
  if (checkpoint) {
    original = load_matching_checkpoint(cfg, *checkpoint).params;
  } else {
    original = sgd_train(model, model.init_params(), data.train,
                         iota_indices(data.train.size()), cfg.train)
                   .theta;
  }
  const double original_acc_df =
      100.0 * model.accuracy(original, data.train.gather(data.split.forget_indices));

  ExperimentConfig no_relearn = cfg;
  no_relearn.eval.relearn_cap = 0;
  const auto retrain_start = Clock::now();
  const auto retrained = retrain(cfg.model, data.train, data.split, cfg.train);
  const double retrain_seconds = seconds_since(retrain_start);
  const auto reference = compute_metrics(no_relearn, data, retrained, std::nullopt, nullptr);

  SweepResult out;
  std::ostringstream csv;
  csv << "axis,value,projection,acc_df,acc_dt,acc_dr,mia,avg_gap,halfspace_ok\n";
  json runs = json::array();
  json timing_runs = json::array();
  for (const auto& v : values) {
    ExperimentConfig run_cfg = cfg;
    run_cfg.unlearn.method = "scissorhands";
    apply_axis(run_cfg.unlearn, axis, v);
    const auto start = Clock::now();
    const auto scrub = scissorhands(model, original, data.train, data.split, run_cfg.unlearn);
    const double seconds = seconds_since(start);
    const auto metrics = compute_metrics(run_cfg, data, scrub.theta, original_acc_df,
                                         reference.mia_computed ? &reference : nullptr);
    const bool checked = run_cfg.unlearn.projection;
    const bool ok = checked && halfspace_holds(scrub.repair.trace);
    csv << axis << ',' << v << ',' << (checked ? "on" : "off") << ','
        << csv_number(metrics.acc_df) << ',' << csv_number(metrics.acc_dt) << ','
        << csv_number(metrics.acc_dr) << ','
        << (metrics.mia_computed ? csv_number(metrics.mia) : "") << ','
        << (metrics.avg_gap ? csv_number(*metrics.avg_gap) : "") << ','
        << (checked ? (ok ? "true" : "false") : "") << '\n';
    runs.push_back({{"value", v},
                    {"projection", checked},
                    {"halfspace_checked", checked},
                    {"halfspace_ok", checked ? json(ok) : json(nullptr)},
                    {"steps", scrub.repair.trace.size()},
                    {"metrics", to_json(metrics)}});
    timing_runs.push_back({{"value", v}, {"seconds", seconds},
                           {"rte", rte(seconds, retrain_seconds)}});
  }
  out.csv = csv.str();
  out.report = {{"kind", "ablate"},
                {"config_hash", cfg.hash},
                {"axis", axis},
                {"values", values},
                {"original_acc_df", original_acc_df},
                {"reference", to_json(reference)},
                {"runs", runs},
                {"timing", {{"retrain_seconds", retrain_seconds}, {"runs", timing_runs}}}};
  return out;
}

}  // namespace unlearn
