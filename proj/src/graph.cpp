#include "remask/graph.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "remask/errors.hpp"

namespace remask {

ValidationReport validate_graph(const GraphInstance& g) {
  ValidationReport report;
  auto fail = [&report](const std::string& msg) { report.violations.push_back(msg); };

  if (g.num_nodes < 0) fail("num_nodes is negative");
  if (g.edge_truth.size() != g.edges.size())
    fail("edge_truth length " + std::to_string(g.edge_truth.size()) +
         " does not match edge count " + std::to_string(g.edges.size()));
  if (g.feat_dim > 0 &&
      g.node_features.size() != static_cast<size_t>(g.num_nodes) * static_cast<size_t>(g.feat_dim))
    fail("node_features size does not equal num_nodes * feat_dim");

  std::map<std::pair<int, int>, int> seen;  // directed pair -> first position
  for (size_t i = 0; i < g.edges.size(); ++i) {
    const auto [u, v] = g.edges[i];
    std::ostringstream where;
    where << "edge " << i << " (" << u << "," << v << ")";
    if (u < 0 || u >= g.num_nodes || v < 0 || v >= g.num_nodes) {
      fail(where.str() + ": node index out of range [0," + std::to_string(g.num_nodes) + ")");
      continue;
    }
    if (u == v) {
      fail(where.str() + ": self-loop");
      continue;
    }
    if (!seen.emplace(std::make_pair(u, v), static_cast<int>(i)).second)
      fail(where.str() + ": repeated directed pair");
  }
  for (const auto& [pair, pos] : seen) {
    auto it = seen.find({pair.second, pair.first});
    if (it == seen.end()) {
      fail("edge (" + std::to_string(pair.first) + "," + std::to_string(pair.second) +
           "): missing duplicate (" + std::to_string(pair.second) + "," +
           std::to_string(pair.first) + ")");
    } else if (pos < it->second && pos < static_cast<int>(g.edge_truth.size()) &&
               it->second < static_cast<int>(g.edge_truth.size()) &&
               g.edge_truth[static_cast<size_t>(pos)] !=
                   g.edge_truth[static_cast<size_t>(it->second)]) {
      fail("edge (" + std::to_string(pair.first) + "," + std::to_string(pair.second) +
           "): edge_truth differs from its duplicate");
    }
  }
  return report;
}

EdgeIndex EdgeIndex::build(const GraphInstance& g) {
  EdgeIndex idx;
  const int m = g.num_edges();
  idx.dual.assign(static_cast<size_t>(m), -1);
  idx.und_of.assign(static_cast<size_t>(m), -1);

  std::map<std::pair<int, int>, int> pos;
  for (int i = 0; i < m; ++i) {
    if (!pos.emplace(g.edges[static_cast<size_t>(i)], i).second)
      throw DataError("EdgeIndex: repeated directed pair at position " + std::to_string(i));
  }
  for (int i = 0; i < m; ++i) {
    const auto [u, v] = g.edges[static_cast<size_t>(i)];
    if (u == v) throw DataError("EdgeIndex: self-loop at position " + std::to_string(i));
    auto it = pos.find({v, u});
    if (it == pos.end())
      throw DataError("EdgeIndex: edge (" + std::to_string(u) + "," + std::to_string(v) +
                      ") has no reverse duplicate");
    idx.dual[static_cast<size_t>(i)] = it->second;
  }
  for (int i = 0; i < m; ++i) {
    if (idx.und_of[static_cast<size_t>(i)] >= 0) continue;
    const int j = idx.dual[static_cast<size_t>(i)];
    const int slot = static_cast<int>(idx.dir_of.size());
    idx.und_of[static_cast<size_t>(i)] = slot;
    idx.und_of[static_cast<size_t>(j)] = slot;
    idx.dir_of.push_back({std::min(i, j), std::max(i, j)});
  }
  return idx;
}

void symmetrize(EdgeMask& z, const EdgeIndex& idx) {
  if (z.size() != idx.num_directed())
    throw DimensionError("symmetrize: mask length " + std::to_string(z.size()) +
                         " does not match " + std::to_string(idx.num_directed()) +
                         " directed edges");
  for (const auto& [a, b] : idx.dir_of) {
    const double mean = 0.5 * (z.scores[static_cast<size_t>(a)] + z.scores[static_cast<size_t>(b)]);
    z.scores[static_cast<size_t>(a)] = mean;
    z.scores[static_cast<size_t>(b)] = mean;
  }
}

void clamp01(EdgeMask& z) {
  for (double& s : z.scores) s = std::clamp(s, 0.0, 1.0);
}

std::string check_mask(const EdgeMask& z, const EdgeIndex& idx) {
  constexpr double kTol = 1e-7;
  if (z.size() != idx.num_directed())
    return "mask length " + std::to_string(z.size()) + " does not match " +
           std::to_string(idx.num_directed()) + " directed edges";
  for (int i = 0; i < z.size(); ++i) {
    const double s = z.scores[static_cast<size_t>(i)];
    if (!(s >= -kTol && s <= 1.0 + kTol))
      return "score " + std::to_string(s) + " at position " + std::to_string(i) +
             " outside [0,1]";
    if (std::abs(s - z.scores[static_cast<size_t>(idx.dual[static_cast<size_t>(i)])]) > kTol)
      return "duplicate scores differ at position " + std::to_string(i);
  }
  return {};
}

UpdateMode parse_update_mode(const std::string& s) {
  if (s == "accumulate") return UpdateMode::accumulate;
  if (s == "replace") return UpdateMode::replace;
  throw ConfigError("unknown update mode '" + s + "' (expected accumulate|replace)");
}

std::string to_string(UpdateMode m) {
  return m == UpdateMode::accumulate ? "accumulate" : "replace";
}

std::string check_mask_sequence(const MaskSequence& seq, const EdgeIndex& idx) {
  constexpr double kTol = 1e-7;
  if (seq.masks.empty()) return "empty mask sequence";
  for (size_t t = 0; t < seq.masks.size(); ++t) {
    if (auto err = check_mask(seq.masks[t], idx); !err.empty())
      return "mask " + std::to_string(t) + ": " + err;
  }
  for (double s : seq.masks.front().scores)
    if (s != 1.0) return "Z^(0) is not all-ones";
  if (seq.mode == UpdateMode::accumulate) {
    for (size_t t = 1; t < seq.masks.size(); ++t)
      for (size_t e = 0; e < seq.masks[t].scores.size(); ++e)
        if (seq.masks[t].scores[e] > seq.masks[t - 1].scores[e] + kTol)
          return "mask " + std::to_string(t) + " exceeds mask " + std::to_string(t - 1) +
                 " at edge " + std::to_string(e);
  }
  return {};
}

MaskedGraph apply_mask(const GraphInstance& g, const EdgeMask& z) {
  if (z.size() != g.num_edges())
    throw DimensionError("apply_mask: mask length " + std::to_string(z.size()) +
                         " does not match " + std::to_string(g.num_edges()) + " directed edges");
  return MaskedGraph{&g, z.scores.data()};
}

}  // namespace remask
