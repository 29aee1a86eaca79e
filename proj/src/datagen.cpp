#include "remask/datagen.hpp"

#include <string>

#include "remask/errors.hpp"
#include "remask/hash.hpp"

namespace remask::datagen {

namespace {

void add_und(GraphInstance& g, int u, int v, bool truth) {
  g.edges.emplace_back(u, v);
  g.edges.emplace_back(v, u);
  g.edge_truth.push_back(truth ? 1 : 0);
  g.edge_truth.push_back(truth ? 1 : 0);
}

std::uint64_t graph_key(std::uint64_t seed, int index) {
  return Rng::key({seed, fnv1a64("graph"), static_cast<std::uint64_t>(index)});
}

void check_counts(int num_train, int num_valid, int num_test) {
  if (num_train < 0 || num_valid < 0 || num_test < 0)
    throw ParamError("split sizes must be non-negative");
  if (num_train + num_valid + num_test == 0)
    throw ParamError("dataset must contain at least one graph");
}

Split split_of(int index, int num_train, int num_valid) {
  if (index < num_train) return Split::train;
  if (index < num_train + num_valid) return Split::valid;
  return Split::test;
}

}  // namespace

GraphInstance make_motif(int motif_type) {
  GraphInstance g;
  switch (motif_type) {
    case kMotifCycle:
      g.num_nodes = 5;
      for (int i = 0; i < 5; ++i) add_und(g, i, (i + 1) % 5, true);
      break;
    case kMotifHouse:
      g.num_nodes = 5;
      add_und(g, 0, 1, true);
      add_und(g, 1, 2, true);
      add_und(g, 2, 3, true);
      add_und(g, 3, 0, true);
      add_und(g, 0, 4, true);
      add_und(g, 1, 4, true);
      break;
    case kMotifCrane:
      g.num_nodes = 8;
      add_und(g, 0, 1, true);
      add_und(g, 1, 2, true);
      add_und(g, 2, 3, true);
      add_und(g, 3, 0, true);
      add_und(g, 3, 4, true);  // neck
      add_und(g, 4, 5, true);  // head
      add_und(g, 1, 6, true);  // legs
      add_und(g, 2, 7, true);
      break;
    default:
      throw ParamError("unknown motif type " + std::to_string(motif_type));
  }
  return g;
}

GraphInstance make_base(int base_type, int size_param) {
  GraphInstance g;
  switch (base_type) {
    case kBaseTree: {
      if (size_param < 1) throw ParamError("tree depth must be >= 1");
      g.num_nodes = (1 << (size_param + 1)) - 1;
      for (int i = 0; 2 * i + 2 < g.num_nodes; ++i) {
        add_und(g, i, 2 * i + 1, false);
        add_und(g, i, 2 * i + 2, false);
      }
      break;
    }
    case kBaseLadder: {
      const int r = size_param;
      if (r < 2) throw ParamError("ladder needs at least 2 rungs");
      g.num_nodes = 2 * r;
      for (int i = 0; i + 1 < r; ++i) add_und(g, i, i + 1, false);
      for (int i = 0; i + 1 < r; ++i) add_und(g, r + i, r + i + 1, false);
      for (int i = 0; i < r; ++i) add_und(g, i, r + i, false);
      break;
    }
    case kBaseWheel: {
      const int n = size_param;
      if (n < 3) throw ParamError("wheel rim must have at least 3 nodes");
      g.num_nodes = n + 1;  // hub is node 0
      for (int i = 1; i < n; ++i) add_und(g, i, i + 1, false);
      add_und(g, n, 1, false);
      for (int i = 1; i <= n; ++i) add_und(g, 0, i, false);
      break;
    }
    default:
      throw ParamError("unknown base type " + std::to_string(base_type));
  }
  return g;
}

GraphInstance make_ba_base(int nodes, int attach, Rng& rng) {
  if (attach < 1) throw ParamError("attachment count must be >= 1");
  if (nodes < attach + 1) throw ParamError("BA base needs more nodes than attachments");
  GraphInstance g;
  g.num_nodes = nodes;
  // Seed clique on the first attach+1 nodes, then preferential attachment.
  std::vector<int> endpoints;
  for (int u = 0; u <= attach; ++u)
    for (int v = u + 1; v <= attach; ++v) {
      add_und(g, u, v, false);
      endpoints.push_back(u);
      endpoints.push_back(v);
    }
  std::vector<int> picked;
  for (int v = attach + 1; v < nodes; ++v) {
    picked.clear();
    while (static_cast<int>(picked.size()) < attach) {
      const int u = endpoints[rng.next_below(endpoints.size())];
      bool fresh = true;
      for (int p : picked) fresh = fresh && (p != u);
      if (fresh) picked.push_back(u);
    }
    for (int u : picked) {
      add_und(g, v, u, false);
      endpoints.push_back(v);
      endpoints.push_back(u);
    }
  }
  return g;
}

GraphInstance assemble(const GraphInstance& motif, const GraphInstance& base,
                       int feat_dim, bool random_features, Rng& rng) {
  if (feat_dim < 1) throw ParamError("feature dim must be >= 1");
  GraphInstance g;
  g.num_nodes = motif.num_nodes + base.num_nodes;
  g.feat_dim = feat_dim;
  g.edges = motif.edges;
  g.edge_truth = motif.edge_truth;
  for (const auto& [u, v] : base.edges)
    g.edges.emplace_back(u + motif.num_nodes, v + motif.num_nodes);
  g.edge_truth.insert(g.edge_truth.end(), base.edge_truth.begin(), base.edge_truth.end());
  const int a = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(motif.num_nodes)));
  const int b = motif.num_nodes +
                static_cast<int>(rng.next_below(static_cast<std::uint64_t>(base.num_nodes)));
  add_und(g, a, b, false);
  g.node_features.resize(static_cast<size_t>(g.num_nodes) * static_cast<size_t>(feat_dim));
  for (double& x : g.node_features) x = random_features ? rng.next_double() : 1.0;
  return g;
}

GraphInstance spmotif_graph(const SpmotifConfig& cfg, int index, double bias_eff) {
  if (!(bias_eff > 0.0) || bias_eff > 1.0) throw ParamError("bias must lie in (0, 1]");
  const std::uint64_t key = graph_key(cfg.seed, index);
  Rng rng(key);
  const int motif_type = index % 3;
  const double u = rng.next_double();
  int base_type;
  if (u < bias_eff)
    base_type = motif_type;
  else if (u < bias_eff + (1.0 - bias_eff) / 2.0)
    base_type = (motif_type + 1) % 3;
  else
    base_type = (motif_type + 2) % 3;
  int size_param = 0;
  switch (base_type) {
    case kBaseTree: size_param = rng.next_int(cfg.tree_depth_min, cfg.tree_depth_max); break;
    case kBaseLadder: size_param = rng.next_int(cfg.ladder_rungs_min, cfg.ladder_rungs_max); break;
    case kBaseWheel: size_param = rng.next_int(cfg.wheel_rim_min, cfg.wheel_rim_max); break;
  }
  const GraphInstance motif = make_motif(motif_type);
  const GraphInstance base = make_base(base_type, size_param);
  GraphInstance g = assemble(motif, base, cfg.feat_dim, cfg.random_features, rng);
  g.label = motif_type;
  g.meta = GraphMeta{base_type, motif_type, bias_eff, key};
  return g;
}

GraphInstance ba2motifs_graph(const Ba2Config& cfg, int index) {
  const std::uint64_t key = graph_key(cfg.seed, index);
  Rng rng(key);
  const int label = index % 2;  // house -> 0, cycle -> 1
  const int motif_type = (label == 0) ? kMotifHouse : kMotifCycle;
  const GraphInstance motif = make_motif(motif_type);
  const GraphInstance base = make_ba_base(cfg.ba_nodes, cfg.ba_attach, rng);
  GraphInstance g = assemble(motif, base, cfg.feat_dim, cfg.random_features, rng);
  g.label = label;
  g.meta = GraphMeta{kBaseBarabasi, motif_type, 0.5, key};
  return g;
}

namespace {

void check_range(int lo, int hi, int floor, const char* what) {
  if (lo < floor)
    throw ParamError(std::string(what) + " must be >= " + std::to_string(floor));
  if (hi < lo) throw ParamError(std::string(what) + " range is empty");
}

Dataset spmotif_shell(const SpmotifConfig& cfg) {
  check_counts(cfg.num_train, cfg.num_valid, cfg.num_test);
  if (!(cfg.bias > 0.0) || cfg.bias > 1.0) throw ParamError("bias must lie in (0, 1]");
  check_range(cfg.tree_depth_min, cfg.tree_depth_max, 1, "tree depth");
  check_range(cfg.ladder_rungs_min, cfg.ladder_rungs_max, 2, "ladder rungs");
  check_range(cfg.wheel_rim_min, cfg.wheel_rim_max, 3, "wheel rim");
  Dataset d;
  d.feat_dim = cfg.feat_dim;
  d.num_classes = 3;
  const int total = cfg.num_train + cfg.num_valid + cfg.num_test;
  d.graphs.resize(static_cast<size_t>(total));
  d.split.resize(static_cast<size_t>(total));
  for (int i = 0; i < total; ++i) d.split[i] = split_of(i, cfg.num_train, cfg.num_valid);
  return d;
}

Dataset ba2_shell(const Ba2Config& cfg) {
  check_counts(cfg.num_train, cfg.num_valid, cfg.num_test);
  Dataset d;
  d.feat_dim = cfg.feat_dim;
  d.num_classes = 2;
  const int total = cfg.num_train + cfg.num_valid + cfg.num_test;
  d.graphs.resize(static_cast<size_t>(total));
  d.split.resize(static_cast<size_t>(total));
  for (int i = 0; i < total; ++i) d.split[i] = split_of(i, cfg.num_train, cfg.num_valid);
  return d;
}

double spmotif_bias_for(const SpmotifConfig& cfg, Split s) {
  return s == Split::test ? cfg.test_bias : cfg.bias;
}

}  // namespace

Dataset generate_spmotif(const SpmotifConfig& cfg) {
  Dataset d = spmotif_shell(cfg);
  const int total = static_cast<int>(d.graphs.size());
#pragma omp parallel for schedule(static)
  for (int i = 0; i < total; ++i)
    d.graphs[i] = spmotif_graph(cfg, i, spmotif_bias_for(cfg, d.split[i]));
  return d;
}

Dataset generate_spmotif_serial(const SpmotifConfig& cfg) {
  Dataset d = spmotif_shell(cfg);
  for (int i = 0; i < static_cast<int>(d.graphs.size()); ++i)
    d.graphs[i] = spmotif_graph(cfg, i, spmotif_bias_for(cfg, d.split[i]));
  return d;
}

Dataset generate_ba2motifs(const Ba2Config& cfg) {
  Dataset d = ba2_shell(cfg);
  const int total = static_cast<int>(d.graphs.size());
#pragma omp parallel for schedule(static)
  for (int i = 0; i < total; ++i) d.graphs[i] = ba2motifs_graph(cfg, i);
  return d;
}

Dataset generate_ba2motifs_serial(const Ba2Config& cfg) {
  Dataset d = ba2_shell(cfg);
  for (int i = 0; i < static_cast<int>(d.graphs.size()); ++i)
    d.graphs[i] = ba2motifs_graph(cfg, i);
  return d;
}

std::array<std::array<long, 3>, 3> spmotif_contingency(const Dataset& d, Split split) {
  std::array<std::array<long, 3>, 3> counts{};
  for (size_t i = 0; i < d.graphs.size(); ++i) {
    if (d.split[i] != split) continue;
    const auto& meta = d.graphs[i].meta;
    if (!meta) throw DataError("graph " + std::to_string(i) + " carries no generator meta");
    if (meta->motif_type < 0 || meta->motif_type > 2 || meta->base_type < 0 ||
        meta->base_type > 2)
      throw DataError("graph " + std::to_string(i) + " meta is not from the three-class generator");
    ++counts[meta->motif_type][meta->base_type];
  }
  return counts;
}

}  // namespace remask::datagen
