#include "remask/reflection.hpp"

#include <string>

#include "remask/errors.hpp"

namespace remask::reflection {

ScoredSequence reflect_with_scorer(const GraphInstance& g, int k, UpdateMode mode,
                                   const Scorer& scorer) {
  if (k < 1) throw ParamError("reflection depth k must be >= 1");
  const int ne = g.num_edges();
  ScoredSequence out;
  out.seq.mode = mode;
  EdgeMask z = EdgeMask::ones(ne);
  out.seq.masks.push_back(z);
  for (int t = 1; t <= k; ++t) {
    model::EdgeProbabilities p = scorer(apply_mask(g, z));
    if (p.size() != ne)
      throw DimensionError("scorer returned " + std::to_string(p.size()) +
                           " probabilities for " + std::to_string(ne) + " edges");
    if (mode == UpdateMode::accumulate) {
      for (int e = 0; e < ne; ++e) z.scores[e] *= p.p[e];
    } else {
      z.scores = p.p;
    }
    out.seq.masks.push_back(z);
    out.fresh.push_back(std::move(p));
  }
  return out;
}

ReflectResult reflect(const GraphInstance& g, const model::ModelState& s, int k,
                      UpdateMode mode) {
  ScoredSequence scored = reflect_with_scorer(
      g, k, mode, [&s](const MaskedGraph& mg) { return model::score_edges(mg, s); });
  ReflectResult out;
  out.seq = std::move(scored.seq);
  out.fresh = std::move(scored.fresh);
  out.logits = model::predict(apply_mask(g, out.seq.masks.back()), s);
  out.prediction = 0;
  for (int c = 1; c < out.logits.size(); ++c)
    if (out.logits(c) > out.logits(out.prediction)) out.prediction = c;
  return out;
}

std::vector<ReflectResult> reflect_batch(const Dataset& d, const std::vector<int>& indices,
                                         const model::ModelState& s, int k,
                                         UpdateMode mode) {
  std::vector<ReflectResult> out(indices.size());
  const int n = static_cast<int>(indices.size());
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i)
    out[i] = reflect(d.graphs[indices[i]], s, k, mode);
  return out;
}

std::vector<ReflectResult> reflect_batch_serial(const Dataset& d,
                                                const std::vector<int>& indices,
                                                const model::ModelState& s, int k,
                                                UpdateMode mode) {
  std::vector<ReflectResult> out(indices.size());
  for (size_t i = 0; i < indices.size(); ++i)
    out[i] = reflect(d.graphs[indices[i]], s, k, mode);
  return out;
}

TrajectoryTable track_scores(const Dataset& d, const std::vector<int>& indices,
                             const model::ModelState& s, int k) {
  TrajectoryTable table;
  table.graph_indices = indices;
  table.per_graph.assign(indices.size(), {});
  const int n = static_cast<int>(indices.size());
  // (sum, count) per iteration per graph, reduced serially afterwards.
  std::vector<std::array<double, 2>> pos(static_cast<size_t>(n) * (k + 1));
  std::vector<std::array<double, 2>> neg(static_cast<size_t>(n) * (k + 1));
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) {
    const GraphInstance& g = d.graphs[indices[i]];
    const EdgeIndex idx = EdgeIndex::build(g);
    const ReflectResult r = reflect(g, s, k, UpdateMode::accumulate);
    for (int t = 0; t <= k; ++t) {
      std::array<double, 2> p{0.0, 0.0}, q{0.0, 0.0};
      for (int j = 0; j < idx.num_undirected(); ++j) {
        const int a = idx.dir_of[j][0];
        const double score = r.seq.masks[t].scores[a];
        if (g.edge_truth[a]) {
          p[0] += score;
          p[1] += 1.0;
        } else {
          q[0] += score;
          q[1] += 1.0;
        }
      }
      pos[static_cast<size_t>(i) * (k + 1) + t] = p;
      neg[static_cast<size_t>(i) * (k + 1) + t] = q;
    }
  }
  table.aggregate.assign(static_cast<size_t>(k) + 1, {});
  for (int t = 0; t <= k; ++t) {
    double ps = 0.0, pc = 0.0, ns = 0.0, nc = 0.0;
    for (int i = 0; i < n; ++i) {
      const auto& p = pos[static_cast<size_t>(i) * (k + 1) + t];
      const auto& q = neg[static_cast<size_t>(i) * (k + 1) + t];
      ps += p[0];
      pc += p[1];
      ns += q[0];
      nc += q[1];
    }
    table.aggregate[t] = {t, pc > 0.0 ? ps / pc : 0.0, nc > 0.0 ? ns / nc : 0.0};
  }
  for (int i = 0; i < n; ++i) {
    auto& rows = table.per_graph[i];
    rows.assign(static_cast<size_t>(k) + 1, {});
    for (int t = 0; t <= k; ++t) {
      const auto& p = pos[static_cast<size_t>(i) * (k + 1) + t];
      const auto& q = neg[static_cast<size_t>(i) * (k + 1) + t];
      rows[t] = {t, p[1] > 0.0 ? p[0] / p[1] : 0.0, q[1] > 0.0 ? q[0] / q[1] : 0.0};
    }
  }
  return table;
}

}  // namespace remask::reflection
