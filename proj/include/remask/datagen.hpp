#pragma once

#include <array>
#include <cstdint>

#include "remask/dataset.hpp"
#include "remask/graph.hpp"
#include "remask/rng.hpp"

namespace remask::datagen {

// Motif ids double as class labels on Spurious-Motif.
inline constexpr int kMotifCycle = 0;
inline constexpr int kMotifHouse = 1;
inline constexpr int kMotifCrane = 2;

inline constexpr int kBaseTree = 0;
inline constexpr int kBaseLadder = 1;
inline constexpr int kBaseWheel = 2;
inline constexpr int kBaseBarabasi = -1;

struct SpmotifConfig {
  int num_train = 0;
  int num_valid = 0;
  int num_test = 0;
  double bias = 0.5;               // P(S=C) on train/valid
  double test_bias = 1.0 / 3.0;    // test split is unbiased
  std::uint64_t seed = 0;
  int feat_dim = 4;
  bool random_features = false;    // ones by default; features carry no signal
  // Base sizes are drawn per graph from these inclusive ranges. Bigger bases
  // drown the motif in more spurious structure and make the task harder.
  int tree_depth_min = 3;
  int tree_depth_max = 4;
  int ladder_rungs_min = 4;
  int ladder_rungs_max = 8;
  int wheel_rim_min = 6;
  int wheel_rim_max = 12;
};

struct Ba2Config {
  int num_train = 0;
  int num_valid = 0;
  int num_test = 0;
  int ba_nodes = 20;
  int ba_attach = 1;
  std::uint64_t seed = 0;
  int feat_dim = 4;
  bool random_features = false;
};

// Canonical motifs with all-true edge truth; no features attached yet.
GraphInstance make_motif(int motif_type);

// Deterministic bases with all-false edge truth. size_param is the tree
// depth, the ladder rung count, or the wheel rim length.
GraphInstance make_base(int base_type, int size_param);

// Preferential-attachment base; `attach` edges per incoming node.
GraphInstance make_ba_base(int nodes, int attach, Rng& rng);

// Glue a motif in front of a base with one bridge edge and fill features.
// Draw order: bridge motif endpoint, bridge base endpoint, then features.
GraphInstance assemble(const GraphInstance& motif, const GraphInstance& base,
                       int feat_dim, bool random_features, Rng& rng);

// Single graph builders, addressable by dataset index for parallel fill.
GraphInstance spmotif_graph(const SpmotifConfig& cfg, int index, double bias_eff);
GraphInstance ba2motifs_graph(const Ba2Config& cfg, int index);

Dataset generate_spmotif(const SpmotifConfig& cfg);
Dataset generate_spmotif_serial(const SpmotifConfig& cfg);
Dataset generate_ba2motifs(const Ba2Config& cfg);
Dataset generate_ba2motifs_serial(const Ba2Config& cfg);

// counts[C][S] over one split; needs per-graph meta.
std::array<std::array<long, 3>, 3> spmotif_contingency(const Dataset& d, Split split);

}  // namespace remask::datagen
