#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace remask {

// Provenance recorded by the synthetic generators. base_type is -1 when the
// generator has no base-type concept (BA-2Motifs).
struct GraphMeta {
  int base_type = -1;
  int motif_type = -1;
  double bias = 0.0;
  std::uint64_t seed = 0;

  bool operator==(const GraphMeta&) const = default;
};

// One attributed graph. Undirected edges are stored as both directed
// duplicates; every per-edge quantity is indexed by directed edge position.
struct GraphInstance {
  int num_nodes = 0;
  std::vector<std::pair<int, int>> edges;  // directed (src, dst) pairs
  std::vector<double> node_features;       // row-major num_nodes x feat_dim
  int feat_dim = 0;
  int label = 0;
  std::vector<std::uint8_t> edge_truth;    // 1 iff the directed edge is in the motif
  std::optional<GraphMeta> meta;

  int num_edges() const { return static_cast<int>(edges.size()); }

  bool operator==(const GraphInstance&) const = default;
};

// Structured list of invariant violations. Violations are data, not
// exceptions: an empty report means the graph is well formed.
struct ValidationReport {
  std::vector<std::string> violations;

  bool ok() const { return violations.empty(); }
};

// Checks every GraphInstance invariant: node indices in range, no self-loops,
// no repeated directed pairs, every directed edge paired with its reverse
// duplicate, and edge_truth equal on duplicates.
ValidationReport validate_graph(const GraphInstance& g);

// Directed/undirected bookkeeping for one graph. dual[i] is the position of
// edge i's reversed duplicate; und_of[i] the undirected slot of edge i;
// dir_of[j] the two directed positions of undirected edge j (smaller first).
struct EdgeIndex {
  std::vector<int> dual;
  std::vector<int> und_of;
  std::vector<std::array<int, 2>> dir_of;

  int num_directed() const { return static_cast<int>(dual.size()); }
  int num_undirected() const { return static_cast<int>(dir_of.size()); }

  // Throws DataError when the duplicate-pairing invariants do not hold.
  static EdgeIndex build(const GraphInstance& g);
};

// Per-directed-edge score vector with entries in [0, 1], equal on duplicates.
struct EdgeMask {
  std::vector<double> scores;

  int size() const { return static_cast<int>(scores.size()); }
  static EdgeMask ones(int num_directed) {
    return EdgeMask{std::vector<double>(static_cast<size_t>(num_directed), 1.0)};
  }

  bool operator==(const EdgeMask&) const = default;
};

// Averages each duplicate pair and writes the shared value back to both
// positions. Idempotent.
void symmetrize(EdgeMask& z, const EdgeIndex& idx);

// Clamps all entries into [0, 1].
void clamp01(EdgeMask& z);

// Validates length, [0,1] range (tolerance 1e-7) and duplicate symmetry.
// Returns an empty string when valid, else a description of the violation.
std::string check_mask(const EdgeMask& z, const EdgeIndex& idx);

enum class UpdateMode { accumulate, replace };

UpdateMode parse_update_mode(const std::string& s);
std::string to_string(UpdateMode m);

// Masks Z^(0), Z^(1), ..., Z^(k) produced by the reflection loop. Z^(0) is
// all-ones; in accumulate mode the sequence is elementwise non-increasing.
struct MaskSequence {
  std::vector<EdgeMask> masks;
  UpdateMode mode = UpdateMode::accumulate;

  int depth() const { return static_cast<int>(masks.size()) - 1; }  // k
};

// Validates the MaskSequence invariants against its graph's EdgeIndex.
// Returns an empty string when valid.
std::string check_mask_sequence(const MaskSequence& seq, const EdgeIndex& idx);

// Non-owning view pairing a graph with per-directed-edge weights. Encoders
// consume the weights multiplicatively during neighbor aggregation; the
// underlying graph is never modified.
struct MaskedGraph {
  const GraphInstance* graph = nullptr;
  const double* weights = nullptr;  // length graph->num_edges()

  double weight(int e) const { return weights[e]; }
};

// Throws DimensionError when z does not match g's directed edge count.
// The view borrows z's buffer, so a temporary mask is rejected outright.
MaskedGraph apply_mask(const GraphInstance& g, const EdgeMask& z);
MaskedGraph apply_mask(const GraphInstance& g, EdgeMask&& z) = delete;

}  // namespace remask
