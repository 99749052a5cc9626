// scrub: train, unlearn, evaluate and ablate desk-scale classifiers.
//
// Exit codes: 0 success, 2 config error, 3 numeric divergence, 4 I/O error.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "unlearn/checkpoint.hpp"
#include "unlearn/error.hpp"
#include "unlearn/eval.hpp"
#include "unlearn/pipeline.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

enum ExitCode { kOk = 0, kConfig = 2, kDivergence = 3, kIo = 4 };

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw unlearn::IoError("cannot write '" + path.string() + "'");
  out << text;
}

int run_table(const std::vector<std::string>& paths, bool csv) {
  std::vector<std::pair<std::string, unlearn::MetricsReport>> rows;
  for (const auto& p : paths) {
    std::ifstream in(p);
    if (!in) throw unlearn::IoError("cannot open report '" + p + "'");
    json j;
    try {
      j = json::parse(in);
    } catch (const json::parse_error& e) {
      throw unlearn::ConfigError("report '" + p + "': " + e.what());
    }
    if (!j.contains("metrics")) throw unlearn::ConfigError("report '" + p + "' has no metrics");
    rows.emplace_back(j.value("method", fs::path(p).stem().string()),
                      unlearn::metrics_from_json(j["metrics"]));
  }
  std::cout << unlearn::format_table(std::move(rows), csv);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Forget-set scrubbing toolkit for small MLP classifiers"};
  app.require_subcommand(1);

  std::string config;
  std::string out_dir;
  std::string checkpoint;
  std::string reference;
  std::string axis;
  std::string values;
  std::vector<std::string> reports;
  bool csv = false;

  auto* train = app.add_subcommand("train", "Train the original model on the full training set");
  train->add_option("--config", config, "Experiment config (JSON)")->required();
  train->add_option("--out", out_dir, "Output directory")->required();

  auto* unlearn = app.add_subcommand("unlearn", "Scrub the forget set with the configured method");
  unlearn->add_option("--config", config, "Experiment config (JSON)")->required();
  unlearn->add_option("--checkpoint", checkpoint, "Original model checkpoint")->required();
  unlearn->add_option("--out", out_dir, "Output directory")->required();

  auto* eval = app.add_subcommand("eval", "Compute the metric suite for a checkpoint");
  eval->add_option("--config", config, "Experiment config (JSON)")->required();
  eval->add_option("--checkpoint", checkpoint, "Checkpoint to evaluate")->required();
  eval->add_option("--reference", reference, "Reference report for Avg. Gap");
  eval->add_option("--out", out_dir, "Write the report to this file instead of stdout");

  auto* ablate = app.add_subcommand("ablate", "Sweep one hyperparameter of the scrub pipeline");
  ablate->add_option("--config", config, "Experiment config (JSON)")->required();
  ablate->add_option("--axis", axis, "k, lambda, p, init or projection")->required();
  ablate->add_option("--values", values, "Comma-separated values")->required();
  ablate->add_option("--checkpoint", checkpoint, "Original model (trained from config if absent)");
  ablate->add_option("--out", out_dir, "Directory for sweep.csv and sweep.json");

  auto* table = app.add_subcommand("table", "Comparison table over unlearn/eval reports");
  table->add_option("reports", reports, "Report files")->required();
  table->add_flag("--csv", csv, "Emit CSV instead of aligned text");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    if (table->parsed()) return run_table(reports, csv);

    const auto cfg = unlearn::load_config(config);
    if (train->parsed()) {
      const auto report = unlearn::cmd_train(cfg, out_dir);
      std::cout << "trained: train accuracy " << report["final_train_accuracy"].get<double>()
                << "%, checkpoint " << (fs::path(out_dir) / "model.ckpt").string() << '\n';
    } else if (unlearn->parsed()) {
      const auto report = unlearn::cmd_unlearn(cfg, checkpoint, out_dir);
      std::cout << report["metrics"].dump(2) << '\n';
    } else if (eval->parsed()) {
      std::optional<fs::path> ref;
      if (!reference.empty()) ref = reference;
      const auto report = unlearn::cmd_eval(cfg, checkpoint, ref);
      if (out_dir.empty()) {
        std::cout << report.dump(2) << '\n';
      } else {
        write_text(out_dir, report.dump(2) + "\n");
      }
    } else if (ablate->parsed()) {
      std::optional<fs::path> ckpt;
      if (!checkpoint.empty()) ckpt = checkpoint;
      const auto sweep = unlearn::cmd_ablate(cfg, axis, split_csv(values), ckpt);
      if (out_dir.empty()) {
        std::cout << sweep.csv;
      } else {
        fs::create_directories(out_dir);
        write_text(fs::path(out_dir) / "sweep.csv", sweep.csv);
        write_text(fs::path(out_dir) / "sweep.json", sweep.report.dump(2) + "\n");
        std::cout << sweep.csv;
      }
    }
    return kOk;
  } catch (const unlearn::DivergenceError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kDivergence;
  } catch (const unlearn::IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kIo;
  } catch (const unlearn::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfig;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kIo;
  }
}
