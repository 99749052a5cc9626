#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "unlearn/data.hpp"
#include "unlearn/nn.hpp"
#include "unlearn/train.hpp"
#include "unlearn/trim.hpp"

namespace unlearn {

enum class DatasetKind { blobs, idx, csv };

struct DatasetConfig {
  DatasetKind kind = DatasetKind::blobs;
  BlobsSpec blobs;
  std::size_t test_per_class = 50;
  std::filesystem::path train_images, train_labels, test_images, test_labels;
  std::filesystem::path train_csv, test_csv;
};

struct SplitConfig {
  SplitMode mode = SplitMode::sample_wise;
  double fraction = 0.1;
  std::vector<std::uint32_t> classes;
  std::uint64_t seed = 0;
};

enum class SaliencyChoice { approx, exact };

struct UnlearnConfig {
  std::string method = "scissorhands";
  double k = 95.0;
  double lambda = 0.05;
  double learning_rate = 0.05;
  std::size_t epochs = 10;
  std::size_t batch_size = 32;
  double trim_ratio = 1.0;  // p: share of D_f used for scoring
  InitStrategy init = InitStrategy::uniform;
  bool projection = true;
  RankOptions rank;
  SaliencyChoice saliency = SaliencyChoice::approx;
  std::uint64_t seed = 0;
};

struct EvalConfig {
  bool mia = true;
  std::size_t relearn_cap = 0;  // 0 disables the relearn metric
  std::optional<double> relearn_learning_rate;
  std::optional<double> relearn_target;
  std::optional<std::filesystem::path> reference;
  bool require_avg_gap = false;
  std::uint64_t seed = 0;
};

struct ExperimentConfig {
  DatasetConfig dataset;
  ModelSpec model;
  TrainConfig train;
  SplitConfig split;
  UnlearnConfig unlearn;
  EvalConfig eval;

  nlohmann::json raw;
  std::string hash;  // FNV-1a of the canonical (sorted-key) dump of raw
};

inline const std::vector<std::string> kMethods = {"scissorhands", "retrain",
                                                  "finetune", "gradient_ascent"};

// Relative paths resolve against base_dir. Throws ConfigError naming the
// dotted key at fault; referenced input files must exist.
ExperimentConfig parse_config(const nlohmann::json& j,
                              const std::filesystem::path& base_dir);
// Adds the parser's line/column to JSON syntax errors.
ExperimentConfig load_config(const std::filesystem::path& path);

}  // namespace unlearn
