#include <string>
#include <vector>

#include "doctest.h"
#include "remask/dataset.hpp"
#include "remask/errors.hpp"
#include "remask/graph.hpp"
#include "remask/rng.hpp"
#include "oracles.hpp"

using namespace remask;

namespace {

GraphInstance cycle5() {
  GraphInstance g;
  g.num_nodes = 5;
  g.feat_dim = 2;
  g.label = 0;
  for (int i = 0; i < 5; ++i) {
    const int j = (i + 1) % 5;
    g.edges.emplace_back(i, j);
    g.edges.emplace_back(j, i);
    g.edge_truth.push_back(1);
    g.edge_truth.push_back(1);
  }
  g.node_features.assign(10, 1.0);
  return g;
}

}  // namespace

TEST_CASE("validate_graph accepts a well-formed cycle") {
  CHECK(validate_graph(cycle5()).ok());
}

TEST_CASE("validate_graph names a missing duplicate") {
  GraphInstance g = cycle5();
  g.edges.emplace_back(0, 2);
  g.edge_truth.push_back(0);
  const ValidationReport rep = validate_graph(g);
  CHECK_FALSE(rep.ok());
  bool named = false;
  for (const std::string& v : rep.violations)
    if (v.find("duplicate") != std::string::npos || v.find("reverse") != std::string::npos)
      named = true;
  CHECK(named);
}

TEST_CASE("validate_graph names an out-of-range index") {
  GraphInstance g = cycle5();
  g.edges.emplace_back(0, 7);
  g.edges.emplace_back(7, 0);
  g.edge_truth.push_back(0);
  g.edge_truth.push_back(0);
  const ValidationReport rep = validate_graph(g);
  CHECK_FALSE(rep.ok());
  bool named = false;
  for (const std::string& v : rep.violations)
    if (v.find("range") != std::string::npos || v.find("index") != std::string::npos)
      named = true;
  CHECK(named);
}

TEST_CASE("validate_graph rejects self-loops and asymmetric truth") {
  GraphInstance g = cycle5();
  g.edges.emplace_back(3, 3);
  g.edge_truth.push_back(0);
  CHECK_FALSE(validate_graph(g).ok());

  GraphInstance h = cycle5();
  h.edge_truth[1] = 0;
  CHECK_FALSE(validate_graph(h).ok());
}

TEST_CASE("EdgeIndex pairs duplicates consistently") {
  const GraphInstance g = cycle5();
  const EdgeIndex idx = EdgeIndex::build(g);
  CHECK(idx.num_directed() == 10);
  CHECK(idx.num_undirected() == 5);
  for (int e = 0; e < idx.num_directed(); ++e) {
    CHECK(idx.dual[idx.dual[e]] == e);
    CHECK(idx.und_of[idx.dual[e]] == idx.und_of[e]);
    CHECK(g.edges[idx.dual[e]].first == g.edges[e].second);
    CHECK(g.edges[idx.dual[e]].second == g.edges[e].first);
  }
  for (int j = 0; j < idx.num_undirected(); ++j) {
    CHECK(idx.dir_of[j][0] < idx.dir_of[j][1]);
    CHECK(idx.und_of[idx.dir_of[j][0]] == j);
    CHECK(idx.und_of[idx.dir_of[j][1]] == j);
  }
}

TEST_CASE("EdgeIndex rejects an unpaired edge") {
  GraphInstance g = cycle5();
  g.edges.emplace_back(0, 2);
  g.edge_truth.push_back(0);
  CHECK_THROWS_AS(EdgeIndex::build(g), DataError);
}

TEST_CASE("symmetrize averages duplicates and is idempotent") {
  const GraphInstance g = cycle5();
  const EdgeIndex idx = EdgeIndex::build(g);
  EdgeMask z = EdgeMask::ones(g.num_edges());
  Rng rng(42);
  for (double& v : z.scores) v = rng.next_double();
  CHECK(check_mask(z, idx) != "");
  symmetrize(z, idx);
  CHECK(check_mask(z, idx) == "");
  EdgeMask twice = z;
  symmetrize(twice, idx);
  CHECK(twice == z);
}

TEST_CASE("check_mask flags range and length violations") {
  const GraphInstance g = cycle5();
  const EdgeIndex idx = EdgeIndex::build(g);
  EdgeMask z = EdgeMask::ones(g.num_edges());
  CHECK(check_mask(z, idx) == "");
  z.scores[0] = 1.5;
  z.scores[1] = 1.5;
  CHECK(check_mask(z, idx) != "");
  clamp01(z);
  CHECK(check_mask(z, idx) == "");
  EdgeMask short_mask = EdgeMask::ones(3);
  CHECK(check_mask(short_mask, idx) != "");
}

TEST_CASE("apply_mask is a view and rejects length mismatch") {
  const GraphInstance g = cycle5();
  const EdgeMask z = EdgeMask::ones(g.num_edges());
  const MaskedGraph mg = apply_mask(g, z);
  CHECK(mg.graph == &g);
  CHECK(mg.weight(3) == 1.0);
  const EdgeMask bad = EdgeMask::ones(4);
  CHECK_THROWS_AS(apply_mask(g, bad), DimensionError);
}

TEST_CASE("update mode parses and round-trips") {
  CHECK(parse_update_mode("accumulate") == UpdateMode::accumulate);
  CHECK(parse_update_mode("replace") == UpdateMode::replace);
  CHECK(to_string(UpdateMode::replace) == "replace");
  CHECK_THROWS_AS(parse_update_mode("bogus"), ConfigError);
}

TEST_CASE("check_mask_sequence enforces the accumulate invariants") {
  const GraphInstance g = cycle5();
  const EdgeIndex idx = EdgeIndex::build(g);
  MaskSequence seq;
  seq.mode = UpdateMode::accumulate;
  seq.masks.push_back(EdgeMask::ones(g.num_edges()));
  EdgeMask z1 = EdgeMask::ones(g.num_edges());
  for (double& v : z1.scores) v = 0.6;
  EdgeMask z2 = z1;
  for (double& v : z2.scores) v = 0.36;
  seq.masks.push_back(z1);
  seq.masks.push_back(z2);
  CHECK(check_mask_sequence(seq, idx) == "");
  std::swap(seq.masks[1], seq.masks[2]);
  CHECK(check_mask_sequence(seq, idx) != "");
  std::swap(seq.masks[1], seq.masks[2]);
  seq.masks[0].scores[2] = 0.9;
  CHECK(check_mask_sequence(seq, idx) != "");
}

TEST_CASE("dataset round-trips exactly") {
  Dataset d;
  d.feat_dim = 2;
  d.num_classes = 3;
  GraphInstance g = cycle5();
  g.meta = GraphMeta{1, 2, 0.9, 18446744073709551615ull};
  d.graphs.push_back(g);
  d.graphs.push_back(cycle5());
  d.graphs[1].label = 2;
  d.graphs[1].node_features[3] = -0.12345678901234567;
  d.split = {Split::train, Split::test};
  const std::string text = serialize_dataset(d);
  const Dataset back = parse_dataset(text, "mem");
  CHECK(back == d);
}

TEST_CASE("empty dataset round-trips") {
  Dataset d;
  d.feat_dim = 4;
  d.num_classes = 2;
  const Dataset back = parse_dataset(serialize_dataset(d), "mem");
  CHECK(back == d);
}

TEST_CASE("dataset parse errors name the record") {
  Dataset d;
  d.feat_dim = 2;
  d.num_classes = 3;
  d.graphs.push_back(cycle5());
  d.split = {Split::valid};
  std::string text = serialize_dataset(d);

  SUBCASE("schema version mismatch") {
    text.replace(text.find("v1"), 2, "v9");
    try {
      parse_dataset(text, "mem");
      CHECK(false);
    } catch (const DataError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("schema version") != std::string::npos);
    }
  }
  SUBCASE("truncated record") {
    const std::size_t cut = text.find(" truth=");
    text.resize(cut);
    text += "\n";
    try {
      parse_dataset(text, "mem");
      CHECK(false);
    } catch (const DataError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("record 1") != std::string::npos);
    }
  }
}

TEST_CASE("split tags parse") {
  CHECK(parse_split("train") == Split::train);
  CHECK(parse_split("valid") == Split::valid);
  CHECK(parse_split("test") == Split::test);
  CHECK_THROWS_AS(parse_split("holdout"), DataError);
  CHECK(to_string(Split::valid) == "valid");
}
