#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"
#include "remask/errors.hpp"
#include "remask/graph.hpp"
#include "remask/model.hpp"
#include "remask/nn.hpp"
#include "remask/rng.hpp"

using namespace remask;
using model::HyperParams;
using model::ModelState;
using model::Tower;

namespace {

HyperParams small_hp() {
  HyperParams hp;
  hp.feat_dim = 4;
  hp.num_classes = 3;
  hp.hidden = 16;
  hp.layers = 2;
  return hp;
}

// Fills every tensor (heads included) so the scorer and classifier do
// something nontrivial.
ModelState dense_state(const HyperParams& hp, std::uint64_t seed) {
  ModelState s = ModelState::init(hp, seed);
  Rng rng(Rng::key({seed, 4242}));
  for (double& v : s.params.flat()) v = rng.next_uniform(-0.5, 0.5);
  return s;
}

}  // namespace

TEST_CASE("hyperparameter validation") {
  HyperParams hp = small_hp();
  CHECK_NOTHROW(hp.validate());
  hp.feat_dim = 0;
  CHECK_THROWS_AS(hp.validate(), ParamError);
  hp = small_hp();
  hp.tau = 0.0;
  CHECK_THROWS_AS(hp.validate(), ParamError);
  hp = small_hp();
  hp.r = 1.0;
  CHECK_THROWS_AS(hp.validate(), ParamError);
  hp = small_hp();
  hp.beta = -0.1;
  CHECK_THROWS_AS(hp.validate(), ParamError);
  hp = small_hp();
  hp.num_classes = 1;
  CHECK_THROWS_AS(hp.validate(), ParamError);
}

TEST_CASE("fresh init emits p=0.5 and uniform logits") {
  GraphInstance g = oracles::toy_graph(8, 4, 3);
  ModelState s = ModelState::init(small_hp(), 5);
  EdgeMask ones = EdgeMask::ones(g.num_edges());
  MaskedGraph mg = apply_mask(g, ones);

  model::EdgeProbabilities p = model::score_edges(mg, s);
  REQUIRE(p.size() == g.num_edges());
  for (double v : p.p) CHECK(v == 0.5);

  nn::Vec logits = model::predict(mg, s);
  REQUIRE(logits.size() == 3);
  CHECK(logits.maxCoeff() - logits.minCoeff() == doctest::Approx(0.0).epsilon(1e-15));
  nn::Vec probs = nn::softmax(logits);
  for (int c = 0; c < 3; ++c) CHECK(probs[c] == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("one aggregation step matches hand evaluation") {
  // Two nodes, features 1 and 2, one undirected edge with weight 0.5.
  GraphInstance g;
  g.num_nodes = 2;
  g.feat_dim = 1;
  g.label = 0;
  g.node_features = {1.0, 2.0};
  g.edges = {{0, 1}, {1, 0}};
  g.edge_truth = {1, 1};

  HyperParams hp;
  hp.feat_dim = 1;
  hp.num_classes = 2;
  hp.hidden = 1;
  hp.layers = 1;
  hp.activation = nn::Activation::identity;
  ModelState s = ModelState::shell(hp);
  s.params.view(s.enc_d[0].w1)(0, 0) = 1.0;
  s.params.view(s.enc_d[0].w2)(0, 0) = 1.0;

  EdgeMask half{{0.5, 0.5}};
  nn::Mat h = model::encode_nodes(apply_mask(g, half), s, Tower::downstream);
  REQUIRE(h.rows() == 1);
  REQUIRE(h.cols() == 2);
  CHECK(h(0, 0) == doctest::Approx(2.0).epsilon(1e-12));   // 1 + 0.5*2
  CHECK(h(0, 1) == doctest::Approx(2.5).epsilon(1e-12));   // 2 + 0.5*1
}

TEST_CASE("score_edges is symmetric, clamped and deterministic") {
  GraphInstance g = oracles::toy_graph(10, 4, 7);
  ModelState s = dense_state(small_hp(), 11);
  EdgeMask ones = EdgeMask::ones(g.num_edges());
  MaskedGraph mg = apply_mask(g, ones);
  EdgeIndex idx = EdgeIndex::build(g);

  model::EdgeProbabilities a = model::score_edges(mg, s);
  model::EdgeProbabilities b = model::score_edges(mg, s);
  CHECK(a.p == b.p);
  bool nontrivial = false;
  for (int e = 0; e < a.size(); ++e) {
    CHECK(a.p[e] > 0.0);
    CHECK(a.p[e] < 1.0);
    CHECK(a.p[e] == a.p[idx.dual[e]]);
    if (std::abs(a.p[e] - 0.5) > 1e-3) nontrivial = true;
  }
  CHECK(nontrivial);

  // Saturate the head: the clamp keeps p strictly inside (0,1).
  s.params.view(s.edge.b2)(0, 0) = 1e4;
  model::EdgeProbabilities hi = model::score_edges(mg, s);
  for (double v : hi.p) {
    CHECK(v <= 1.0 - model::kProbClamp);
    CHECK(v >= 0.5);
  }
}

TEST_CASE("sample_gates shares noise across duplicates") {
  GraphInstance g = oracles::toy_graph(10, 4, 7);
  ModelState s = dense_state(small_hp(), 11);
  EdgeMask ones = EdgeMask::ones(g.num_edges());
  MaskedGraph mg = apply_mask(g, ones);
  EdgeIndex idx = EdgeIndex::build(g);
  model::EdgeProbabilities p = model::score_edges(mg, s);

  Rng rng(Rng::key({1, 2}));
  EdgeMask z = model::sample_gates(p, 1.0, idx, rng);
  REQUIRE(z.size() == g.num_edges());
  for (int e = 0; e < z.size(); ++e) {
    CHECK(z.scores[e] > 0.0);
    CHECK(z.scores[e] < 1.0);
    CHECK(z.scores[e] == z.scores[idx.dual[e]]);
  }
  CHECK_THROWS_AS(model::sample_gates(p, 0.0, idx, rng), ParamError);
}

TEST_CASE("sample_gates concentrates around p at low temperature") {
  // Single undirected edge scored 0.99.
  GraphInstance g;
  g.num_nodes = 2;
  g.feat_dim = 1;
  g.node_features = {0.0, 0.0};
  g.edges = {{0, 1}, {1, 0}};
  g.edge_truth = {1, 1};
  EdgeIndex idx = EdgeIndex::build(g);

  model::EdgeProbabilities p;
  p.p = {0.99, 0.99};
  Rng rng(Rng::key({77}));
  double sum = 0.0;
  const int draws = 10000;
  for (int i = 0; i < draws; ++i) sum += model::sample_gates(p, 0.1, idx, rng).scores[0];
  CHECK(std::abs(sum / draws - 0.99) < 0.02);

  p.p = {0.5, 0.5};
  sum = 0.0;
  for (int i = 0; i < draws; ++i) sum += model::sample_gates(p, 1.0, idx, rng).scores[0];
  CHECK(std::abs(sum / draws - 0.5) < 0.02);
}

TEST_CASE("predict is permutation invariant and score_edges equivariant") {
  const int n = 10;
  GraphInstance g = oracles::toy_graph(n, 4, 11);
  ModelState s = dense_state(small_hp(), 7);

  std::vector<int> perm(n);
  for (int v = 0; v < n; ++v) perm[v] = (3 * v + 1) % n;
  GraphInstance h;
  h.num_nodes = n;
  h.feat_dim = g.feat_dim;
  h.label = g.label;
  h.node_features.resize(g.node_features.size());
  for (int v = 0; v < n; ++v)
    for (int j = 0; j < g.feat_dim; ++j)
      h.node_features[static_cast<size_t>(perm[v]) * g.feat_dim + j] =
          g.node_features[static_cast<size_t>(v) * g.feat_dim + j];
  for (const auto& [a, b] : g.edges) h.edges.emplace_back(perm[a], perm[b]);
  h.edge_truth = g.edge_truth;
  REQUIRE(validate_graph(h).ok());

  EdgeMask ones_g = EdgeMask::ones(g.num_edges());
  EdgeMask ones_h = EdgeMask::ones(h.num_edges());
  MaskedGraph mg = apply_mask(g, ones_g);
  MaskedGraph mh = apply_mask(h, ones_h);

  nn::Vec lg = model::predict(mg, s);
  nn::Vec lh = model::predict(mh, s);
  for (int c = 0; c < lg.size(); ++c) CHECK(lg[c] == doctest::Approx(lh[c]).epsilon(1e-5));

  model::EdgeProbabilities pg = model::score_edges(mg, s);
  model::EdgeProbabilities ph = model::score_edges(mh, s);
  for (int e = 0; e < pg.size(); ++e)
    CHECK(pg.p[e] == doctest::Approx(ph.p[e]).epsilon(1e-5));
}

TEST_CASE("zero-weighted edges behave as removed edges") {
  GraphInstance g = oracles::toy_graph(8, 4, 3);  // ring + chord, chord appended last
  GraphInstance ring = g;
  ring.edges.resize(ring.edges.size() - 2);
  ring.edge_truth.resize(ring.edge_truth.size() - 2);
  REQUIRE(validate_graph(ring).ok());

  ModelState s = dense_state(small_hp(), 13);
  EdgeMask mask = EdgeMask::ones(g.num_edges());
  mask.scores[g.num_edges() - 1] = 0.0;
  mask.scores[g.num_edges() - 2] = 0.0;

  EdgeMask ring_ones = EdgeMask::ones(ring.num_edges());
  nn::Vec masked = model::predict(apply_mask(g, mask), s);
  nn::Vec dropped = model::predict(apply_mask(ring, ring_ones), s);
  for (int c = 0; c < masked.size(); ++c)
    CHECK(masked[c] == doctest::Approx(dropped[c]).epsilon(1e-12));

  // All-zero mask: only node features matter, so rewiring changes nothing.
  GraphInstance rewired = g;
  rewired.edges.clear();
  rewired.edge_truth.clear();
  const auto add = [&](int a, int b) {
    rewired.edges.emplace_back(a, b);
    rewired.edges.emplace_back(b, a);
    rewired.edge_truth.push_back(0);
    rewired.edge_truth.push_back(0);
  };
  for (int i = 0; i < 4; ++i) add(i, i + 4);
  EdgeMask zero_g{std::vector<double>(static_cast<size_t>(g.num_edges()), 0.0)};
  EdgeMask zero_r{std::vector<double>(static_cast<size_t>(rewired.num_edges()), 0.0)};
  nn::Vec za = model::predict(apply_mask(g, zero_g), s);
  nn::Vec zb = model::predict(apply_mask(rewired, zero_r), s);
  for (int c = 0; c < za.size(); ++c) CHECK(za[c] == doctest::Approx(zb[c]).epsilon(1e-12));
}

TEST_CASE("feature dimension mismatch is rejected") {
  GraphInstance g = oracles::toy_graph(6, 3, 1);
  ModelState s = ModelState::init(small_hp(), 1);  // expects feat_dim=4
  EdgeMask ones = EdgeMask::ones(g.num_edges());
  MaskedGraph mg = apply_mask(g, ones);
  CHECK_THROWS_AS(model::predict(mg, s), DimensionError);
  CHECK_THROWS_AS(model::score_edges(mg, s), DimensionError);
}

TEST_CASE("analytic gradients match finite differences") {
  HyperParams hp;
  hp.feat_dim = 3;
  hp.num_classes = 3;
  hp.hidden = 6;
  hp.layers = 2;
  hp.activation = nn::Activation::tanh;
  GraphInstance g = oracles::toy_graph(10, 3, 21);
  ModelState s = dense_state(hp, 9);
  EdgeIndex idx = EdgeIndex::build(g);

  EdgeMask mask{std::vector<double>(g.num_edges(), 0.0)};
  Rng mrng(Rng::key({33}));
  for (int e = 0; e < idx.num_undirected(); ++e) {
    const double w = mrng.next_uniform(0.1, 0.9);
    mask.scores[static_cast<size_t>(idx.dir_of[e][0])] = w;
    mask.scores[static_cast<size_t>(idx.dir_of[e][1])] = w;
  }

  SUBCASE("classifier cross entropy") {
    std::vector<double> grad(s.params.size(), 0.0);
    {
      model::PredictCache cache;
      MaskedGraph mg = apply_mask(g, mask);
      nn::Vec logits = model::predict(mg, s, cache);
      nn::Vec dlogits;
      nn::cross_entropy(logits, g.label, &dlogits);
      model::predict_backward(mg, s, cache, dlogits, grad, nullptr);
    }
    const double err = oracles::grad_rel_err(s, grad, [&] {
      return nn::cross_entropy(model::predict(apply_mask(g, mask), s), g.label, nullptr);
    });
    CHECK(err <= 1e-3);
  }

  SUBCASE("weighted edge scores") {
    std::vector<double> coef(static_cast<size_t>(g.num_edges()));
    Rng crng(Rng::key({44}));
    for (double& c : coef) c = crng.next_uniform(-1.0, 1.0);

    std::vector<double> grad(s.params.size(), 0.0);
    {
      model::EdgeScoreCache cache;
      MaskedGraph mg = apply_mask(g, mask);
      model::score_edges(mg, s, idx, cache);
      model::score_edges_backward(mg, s, idx, cache, coef, grad, nullptr);
    }
    const double err = oracles::grad_rel_err(s, grad, [&] {
      model::EdgeProbabilities p = model::score_edges(apply_mask(g, mask), s);
      double loss = 0.0;
      for (int e = 0; e < p.size(); ++e) loss += coef[static_cast<size_t>(e)] * p.p[e];
      return loss;
    });
    CHECK(err <= 1e-3);
  }
}

TEST_CASE("checkpoint round-trip preserves every parameter") {
  ModelState s = dense_state(small_hp(), 29);
  const std::string text = model::serialize_checkpoint(s);
  ModelState back = model::parse_checkpoint(text, "mem");
  CHECK(back.hyper == s.hyper);
  REQUIRE(back.params.size() == s.params.size());
  CHECK(back.params.flat() == s.params.flat());

  const std::string path =
      (std::filesystem::temp_directory_path() / "remask_ckpt_test.txt").string();
  model::save_checkpoint(s, path);
  ModelState loaded = model::load_checkpoint(path);
  CHECK(loaded.params.flat() == s.params.flat());
  std::remove(path.c_str());
}

TEST_CASE("checkpoint parser fails loudly on damage") {
  ModelState s = ModelState::init(small_hp(), 3);
  const std::string text = model::serialize_checkpoint(s);

  CHECK_THROWS_AS(model::parse_checkpoint("hello\n", "mem"), DataError);
  CHECK_THROWS_AS(model::parse_checkpoint("remask-checkpoint v9\n", "mem"), DataError);

  std::string wrong_shape = text;
  const std::string needle = "tensor f.enc0.w1 16 4";
  REQUIRE(wrong_shape.find(needle) != std::string::npos);
  wrong_shape.replace(wrong_shape.find(needle), needle.size(), "tensor f.enc0.w1 16 5");
  try {
    model::parse_checkpoint(wrong_shape, "mem");
    FAIL("shape mismatch accepted");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("has shape") != std::string::npos);
  }

  std::string renamed = text;
  renamed.replace(renamed.find("tensor f.enc0.w1"), 16, "tensor f.enc9.w1");
  CHECK_THROWS_AS(model::parse_checkpoint(renamed, "mem"), DataError);

  std::string truncated = text.substr(0, text.rfind("end"));
  CHECK_THROWS_AS(model::parse_checkpoint(truncated, "mem"), DataError);
}
