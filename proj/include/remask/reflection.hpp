#pragma once

#include <functional>
#include <vector>

#include "remask/dataset.hpp"
#include "remask/graph.hpp"
#include "remask/model.hpp"

namespace remask::reflection {

// Edge scorer seen by the loop; tests substitute constant scorers to probe
// fixed-point behavior.
using Scorer = std::function<model::EdgeProbabilities(const MaskedGraph&)>;

struct ScoredSequence {
  MaskSequence seq;                             // Z^(0..k)
  std::vector<model::EdgeProbabilities> fresh;  // instantaneous p~^(1..k)
};

// Z^(0)=1; for t=1..k: p~ = scorer(G (.) Z^(t-1)); accumulate multiplies,
// replace overwrites. Deterministic, never mutates g.
ScoredSequence reflect_with_scorer(const GraphInstance& g, int k, UpdateMode mode,
                                   const Scorer& scorer);

struct ReflectResult {
  MaskSequence seq;
  std::vector<model::EdgeProbabilities> fresh;
  nn::Vec logits;      // predict(G (.) Z^(k))
  int prediction = 0;  // argmax, lowest index on ties
};

ReflectResult reflect(const GraphInstance& g, const model::ModelState& s, int k,
                      UpdateMode mode);

std::vector<ReflectResult> reflect_batch(const Dataset& d, const std::vector<int>& indices,
                                         const model::ModelState& s, int k,
                                         UpdateMode mode);
std::vector<ReflectResult> reflect_batch_serial(const Dataset& d,
                                                const std::vector<int>& indices,
                                                const model::ModelState& s, int k,
                                                UpdateMode mode);

struct TrajectoryRow {
  int t = 0;
  double pos_mean = 0.0;  // mean accumulated score over ground-truth edges
  double neg_mean = 0.0;  // same over non-motif edges
};

struct TrajectoryTable {
  std::vector<TrajectoryRow> aggregate;               // pooled over the split, t=0..k
  std::vector<int> graph_indices;
  std::vector<std::vector<TrajectoryRow>> per_graph;  // [graph][t]
};

// Accumulate-mode score trajectories of true vs spurious edges, per graph
// and pooled, over one undirected copy of each edge.
TrajectoryTable track_scores(const Dataset& d, const std::vector<int>& indices,
                             const model::ModelState& s, int k);

}  // namespace remask::reflection
