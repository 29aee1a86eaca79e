#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "remask/config.hpp"
#include "remask/dataset.hpp"
#include "remask/metrics.hpp"
#include "remask/model.hpp"

namespace remask::experiment {

// Resolution order: --out flag, REMASK_ARTIFACT_ROOT, ./artifacts.
std::filesystem::path artifact_root(const std::string& cli_out);

// Every artifact name carries the config hash.
struct RunPaths {
  std::filesystem::path root;
  std::string hash;
  std::filesystem::path dataset;
  std::filesystem::path dataset_stats;
  std::filesystem::path checkpoint_base;
  std::filesystem::path curve_base;
  std::filesystem::path checkpoint_ft;
  std::filesystem::path curve_ft;
  std::filesystem::path scores;
  std::filesystem::path report;
  std::filesystem::path trajectory;      // columnar data, doubles as plot twin
  std::filesystem::path trajectory_svg;
  std::filesystem::path acc_plot;
  std::filesystem::path acc_data;
  std::filesystem::path auc_plot;
  std::filesystem::path auc_data;
};

RunPaths run_paths(const std::filesystem::path& root, const config::ExperimentConfig& cfg);

Dataset build_dataset(const config::DatasetSection& ds);
std::string dataset_stats_text(const Dataset& d, const std::string& kind);

// Load-or-compute stages; each persists whatever it had to compute.
Dataset ensure_dataset(const RunPaths& p, const config::ExperimentConfig& cfg);
model::ModelState ensure_base_checkpoint(const RunPaths& p, const config::ExperimentConfig& cfg,
                                         const Dataset& d);
model::ModelState ensure_finetuned_checkpoint(const RunPaths& p,
                                              const config::ExperimentConfig& cfg,
                                              const Dataset& d,
                                              const model::ModelState& base);

// Per-graph, per-iteration edge scores in dataset edge order.
std::string serialize_scores(const Dataset& d, const std::vector<int>& indices,
                             const model::ModelState& s, int k, UpdateMode mode);

struct RunResult {
  metrics::MetricsReport report;
  RunPaths paths;
};

// generate -> train -> [finetune] -> reflect sweep -> evaluate. Existing
// artifacts are reused, so reruns with the same config are cheap. Any stage
// failure surfaces as a StageError naming the stage.
RunResult run_experiment(const config::ExperimentConfig& cfg,
                         const std::filesystem::path& root);

}  // namespace remask::experiment
