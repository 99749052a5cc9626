#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "unlearn/config.hpp"
#include "unlearn/data.hpp"
#include "unlearn/eval.hpp"
#include "unlearn/repair.hpp"
#include "unlearn/sensitivity.hpp"
#include "unlearn/trim.hpp"

namespace unlearn {

// Trim then repair.
struct ScrubResult {
  ParamVector theta;
  ParamVector trimmed;
  std::vector<std::size_t> trim_subset;  // forget rows used for scoring
  SaliencyVector saliency;
  TrimPlan plan;
  RepairResult repair;
};

ScrubResult scissorhands(const Mlp& model, const ParamVector& original,
                         const Dataset& data, const SplitSpec& split,
                         const UnlearnConfig& cfg);

RepairConfig repair_config(const UnlearnConfig& cfg);
TrainConfig baseline_train_config(const UnlearnConfig& cfg);

struct ExperimentData {
  Dataset train;
  Dataset test;
  SplitSpec split;
};

// Materializes the configured dataset and split. Dataset/model
// incompatibilities surface as ConfigError.
ExperimentData load_experiment_data(const ExperimentConfig& cfg);

struct MethodOutcome {
  std::string method;
  ParamVector theta;
  std::optional<ScrubResult> scrub;  // scissorhands only
  bool input_ignored = false;        // retrain starts from a fresh init
  bool diverged = false;             // gradient ascent stopped early
  double seconds = 0.0;
};

MethodOutcome run_method(const ExperimentConfig& cfg, const ExperimentData& data,
                         const ParamVector& original);

// Accuracies and MIA, plus relearn time when cap > 0 and a target is known,
// plus Avg. Gap when a reference is given.
MetricsReport compute_metrics(const ExperimentConfig& cfg, const ExperimentData& data,
                              const ParamVector& theta,
                              std::optional<double> relearn_target,
                              const MetricsReport* reference);

// Command bodies. Each writes its artifacts under out_dir (created if
// needed) and returns the report it wrote. Reports keep every
// wall-clock value inside a top-level "timing" object.
nlohmann::json cmd_train(const ExperimentConfig& cfg, const std::filesystem::path& out_dir);
nlohmann::json cmd_unlearn(const ExperimentConfig& cfg,
                           const std::filesystem::path& checkpoint,
                           const std::filesystem::path& out_dir);
nlohmann::json cmd_eval(const ExperimentConfig& cfg, const std::filesystem::path& checkpoint,
                        const std::optional<std::filesystem::path>& reference);

struct SweepResult {
  std::string csv;
  nlohmann::json report;
};

inline const std::vector<std::string> kAblationAxes = {"k", "lambda", "p", "init",
                                                       "projection"};

// One scissorhands run per value on top of an original model (trained from
// the config unless a checkpoint is given), each compared to one retrain.
SweepResult cmd_ablate(const ExperimentConfig& cfg, const std::string& axis,
                       const std::vector<std::string>& values,
                       const std::optional<std::filesystem::path>& checkpoint);

// Loads a report file and extracts its "metrics" block.
MetricsReport load_reference_metrics(const std::filesystem::path& path);

// The report with its "timing" block removed.
nlohmann::json without_timing(nlohmann::json report);

}  // namespace unlearn
