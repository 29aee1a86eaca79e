#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "remask/dataset.hpp"
#include "remask/graph.hpp"
#include "remask/model.hpp"
#include "remask/reflection.hpp"

namespace remask::metrics {

// Fraction of positions where predictions[i] == labels[i].
double accuracy(const std::vector<int>& predictions, const std::vector<int>& labels);

// ROC-AUC of scores against binary truth, Mann-Whitney form with mid-rank tie
// handling: P(s+ > s-) + 0.5 P(s+ == s-). Throws NumericError when truth is
// single-class.
double edge_auc(const std::vector<double>& scores, const std::vector<std::uint8_t>& truth);

struct IterationRow {
  int t = 0;
  double acc = 0.0;
  double auc = 0.0;        // on the accumulated mask Z^(t)
  double auc_fresh = 0.0;  // on the fresh scores p~^(t); 0.5 at t = 0
};

struct SplitEval {
  std::vector<IterationRow> iterations;  // t = 0..k
  std::vector<double> per_class_acc;     // at t = k, indexed by class
  std::vector<int> final_predictions;    // at t = k, aligned with the index list
};

// Runs the reflection loop over a split and scores every iteration. AUC pools
// one undirected copy of every edge across the split; with per_graph_auc the
// AUC is computed per graph and averaged instead.
SplitEval evaluate_reflection(const Dataset& d, const std::vector<int>& indices,
                              const model::ModelState& s, int k, UpdateMode mode,
                              bool per_graph_auc = false);

struct MetricsReport {
  std::string config_hash;
  std::uint64_t seed = 0;
  std::string dataset_kind;
  double bias = 0.0;
  int k = 0;
  std::string mode;
  bool finetuned = false;
  std::vector<IterationRow> iterations;
  std::vector<double> per_class_acc;
  std::vector<reflection::TrajectoryRow> trajectory;
  double wall_time_sec = 0.0;
};

std::string to_json(const MetricsReport& r);
MetricsReport report_from_json(const std::string& text, const std::string& origin);

// Markdown summary tables (accuracy and edge AUC, percent, mean +/- population
// std over seeds) comparing the base classifier (t = 1), the best reflection
// iteration, and the fine-tuned best iteration, one column per bias level.
std::string emit_tables(const std::vector<MetricsReport>& reports);

}  // namespace remask::metrics
