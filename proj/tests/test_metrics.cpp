#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"
#include "remask/dataset.hpp"
#include "remask/errors.hpp"
#include "remask/metrics.hpp"
#include "remask/model.hpp"
#include "remask/reflection.hpp"

using namespace remask;
using model::HyperParams;
using model::ModelState;

namespace {

HyperParams tiny_hp() {
  HyperParams hp;
  hp.feat_dim = 4;
  hp.num_classes = 3;
  hp.hidden = 8;
  hp.layers = 2;
  return hp;
}

ModelState dense_state(std::uint64_t seed) {
  ModelState s = ModelState::init(tiny_hp(), seed);
  Rng rng(Rng::key({seed, 4242}));
  for (double& v : s.params.flat()) v = rng.next_uniform(-0.5, 0.5);
  return s;
}

Dataset toy_dataset(int n_graphs, std::uint64_t seed) {
  Dataset d;
  d.feat_dim = 4;
  d.num_classes = 3;
  for (int i = 0; i < n_graphs; ++i) {
    GraphInstance g = oracles::toy_graph(6 + i % 5, 4, seed + i);
    g.label = i % 3;
    d.graphs.push_back(std::move(g));
    d.split.push_back(Split::test);
  }
  return d;
}

metrics::MetricsReport sample_report(std::uint64_t seed, double bias, double acc1,
                                     double auc1, double acc2, double auc2,
                                     bool finetuned) {
  metrics::MetricsReport r;
  r.config_hash = "feedc0de";
  r.seed = seed;
  r.dataset_kind = "spmotif";
  r.bias = bias;
  r.k = 2;
  r.mode = "accumulate";
  r.finetuned = finetuned;
  r.iterations = {{0, 0.3, 0.5, 0.5}, {1, acc1, auc1, auc1}, {2, acc2, auc2, auc2}};
  r.per_class_acc = {0.4, 0.5, 0.6};
  r.trajectory = {{0, 1.0, 1.0}, {1, 0.8, 0.4}, {2, 0.7, 0.2}};
  r.wall_time_sec = 1.5;
  return r;
}

}  // namespace

TEST_CASE("accuracy counts exact matches") {
  CHECK(metrics::accuracy({0, 1, 2}, {0, 1, 2}) == 1.0);
  CHECK(metrics::accuracy({0, 1, 0}, {0, 1, 2}) == doctest::Approx(2.0 / 3.0));
  CHECK(metrics::accuracy({1, 2, 0}, {0, 1, 2}) == 0.0);
  CHECK_THROWS_AS(metrics::accuracy({}, {}), ParamError);
  CHECK_THROWS_AS(metrics::accuracy({0, 1}, {0}), DimensionError);
}

TEST_CASE("edge_auc hand values") {
  CHECK(metrics::edge_auc({0.9, 0.8, 0.2}, {1, 1, 0}) == 1.0);
  CHECK(metrics::edge_auc({0.6, 0.7, 0.4}, {1, 0, 0}) == 0.5);
  CHECK(metrics::edge_auc({0.5, 0.5}, {1, 0}) == 0.5);
  CHECK(metrics::edge_auc({0.2, 0.9}, {1, 0}) == 0.0);
  CHECK_THROWS_AS(metrics::edge_auc({0.2, 0.9}, {1, 1}), NumericError);
  CHECK_THROWS_AS(metrics::edge_auc({}, {}), ParamError);
  CHECK_THROWS_AS(metrics::edge_auc({0.2}, {1, 0}), DimensionError);
}

TEST_CASE("edge_auc matches pair enumeration and survives monotone transforms") {
  Rng rng(Rng::key({2718}));
  for (int rep = 0; rep < 500; ++rep) {
    const int n = 2 + static_cast<int>(rng.next_below(199));
    std::vector<double> s(static_cast<size_t>(n));
    std::vector<std::uint8_t> y(static_cast<size_t>(n));
    int pos = 0;
    for (int i = 0; i < n; ++i) {
      // Quantized scores so ties actually occur.
      s[static_cast<size_t>(i)] = rng.next_below(16) / 15.0;
      y[static_cast<size_t>(i)] = rng.next_below(2) ? 1 : 0;
      pos += y[static_cast<size_t>(i)];
    }
    if (pos == 0) y[0] = 1;
    if (pos == n) y[0] = 0;

    const double got = metrics::edge_auc(s, y);
    CHECK(got == doctest::Approx(oracles::auc_pairs(s, y)).epsilon(1e-9));

    std::vector<double> warped(s);
    for (double& v : warped) v = std::exp(3.0 * v) - 2.0;
    CHECK(metrics::edge_auc(warped, y) == doctest::Approx(got).epsilon(1e-12));
  }
}

TEST_CASE("evaluate_reflection scores every iteration") {
  Dataset d = toy_dataset(14, 900);
  ModelState s = dense_state(19);
  std::vector<int> idx(d.size());
  std::iota(idx.begin(), idx.end(), 0);
  const int k = 3;

  metrics::SplitEval ev = metrics::evaluate_reflection(d, idx, s, k, UpdateMode::accumulate);
  REQUIRE(ev.iterations.size() == static_cast<size_t>(k) + 1);
  REQUIRE(ev.final_predictions.size() == idx.size());
  REQUIRE(ev.per_class_acc.size() == 3);

  // t=0: all-ones masks mean all-tied scores, AUC 0.5 by the tie convention.
  CHECK(ev.iterations[0].t == 0);
  CHECK(ev.iterations[0].auc == 0.5);
  CHECK(ev.iterations[0].auc_fresh == 0.5);

  // Recompute every row from reflect() directly.
  std::vector<reflection::ReflectResult> refs;
  for (int i : idx)
    refs.push_back(reflection::reflect(d.graphs[static_cast<size_t>(i)], s, k,
                                       UpdateMode::accumulate));
  for (int t = 0; t <= k; ++t) {
    std::vector<int> preds, labels;
    std::vector<double> scores, fresh;
    std::vector<std::uint8_t> truth;
    for (size_t i = 0; i < refs.size(); ++i) {
      const GraphInstance& g = d.graphs[static_cast<size_t>(idx[i])];
      const EdgeIndex eix = EdgeIndex::build(g);
      nn::Vec logits =
          model::predict(apply_mask(g, refs[i].seq.masks[static_cast<size_t>(t)]), s);
      int am = 0;
      for (int c = 1; c < logits.size(); ++c)
        if (logits[c] > logits[am]) am = c;
      preds.push_back(am);
      labels.push_back(g.label);
      for (int u = 0; u < eix.num_undirected(); ++u) {
        const int e = eix.dir_of[static_cast<size_t>(u)][0];
        scores.push_back(refs[i].seq.masks[static_cast<size_t>(t)].scores[static_cast<size_t>(e)]);
        if (t > 0)
          fresh.push_back(refs[i].fresh[static_cast<size_t>(t) - 1].p[static_cast<size_t>(e)]);
        truth.push_back(g.edge_truth[static_cast<size_t>(e)] ? 1 : 0);
      }
    }
    const metrics::IterationRow& row = ev.iterations[static_cast<size_t>(t)];
    CHECK(row.t == t);
    CHECK(row.acc == doctest::Approx(metrics::accuracy(preds, labels)).epsilon(1e-12));
    CHECK(row.auc == doctest::Approx(oracles::auc_pairs(scores, truth)).epsilon(1e-9));
    if (t > 0)
      CHECK(row.auc_fresh == doctest::Approx(oracles::auc_pairs(fresh, truth)).epsilon(1e-9));
    if (t == k) {
      CHECK(ev.final_predictions == preds);
      for (int c = 0; c < 3; ++c) {
        int tot = 0, hit = 0;
        for (size_t i = 0; i < preds.size(); ++i)
          if (labels[i] == c) {
            ++tot;
            hit += preds[i] == c;
          }
        CHECK(ev.per_class_acc[static_cast<size_t>(c)] ==
              doctest::Approx(tot ? static_cast<double>(hit) / tot : 0.0).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("per-graph AUC averages graph-level values") {
  Dataset d = toy_dataset(8, 950);
  ModelState s = dense_state(23);
  std::vector<int> idx(d.size());
  std::iota(idx.begin(), idx.end(), 0);
  const int k = 2;

  metrics::SplitEval ev =
      metrics::evaluate_reflection(d, idx, s, k, UpdateMode::accumulate, true);
  for (int t = 1; t <= k; ++t) {
    double mean = 0.0;
    for (int i : idx) {
      const GraphInstance& g = d.graphs[static_cast<size_t>(i)];
      const EdgeIndex eix = EdgeIndex::build(g);
      reflection::ReflectResult r = reflection::reflect(g, s, k, UpdateMode::accumulate);
      std::vector<double> scores;
      std::vector<std::uint8_t> truth;
      for (int u = 0; u < eix.num_undirected(); ++u) {
        const int e = eix.dir_of[static_cast<size_t>(u)][0];
        scores.push_back(r.seq.masks[static_cast<size_t>(t)].scores[static_cast<size_t>(e)]);
        truth.push_back(g.edge_truth[static_cast<size_t>(e)] ? 1 : 0);
      }
      mean += oracles::auc_pairs(scores, truth);
    }
    mean /= idx.size();
    CHECK(ev.iterations[static_cast<size_t>(t)].auc == doctest::Approx(mean).epsilon(1e-9));
  }
}

TEST_CASE("report JSON round-trips") {
  metrics::MetricsReport r = sample_report(7, 0.9, 0.61, 0.77, 0.64, 0.81, true);
  const std::string text = metrics::to_json(r);
  metrics::MetricsReport back = metrics::report_from_json(text, "mem");
  CHECK(back.config_hash == r.config_hash);
  CHECK(back.seed == r.seed);
  CHECK(back.dataset_kind == r.dataset_kind);
  CHECK(back.bias == r.bias);
  CHECK(back.k == r.k);
  CHECK(back.mode == r.mode);
  CHECK(back.finetuned == r.finetuned);
  REQUIRE(back.iterations.size() == r.iterations.size());
  for (size_t i = 0; i < r.iterations.size(); ++i) {
    CHECK(back.iterations[i].t == r.iterations[i].t);
    CHECK(back.iterations[i].acc == r.iterations[i].acc);
    CHECK(back.iterations[i].auc == r.iterations[i].auc);
    CHECK(back.iterations[i].auc_fresh == r.iterations[i].auc_fresh);
  }
  CHECK(back.per_class_acc == r.per_class_acc);
  REQUIRE(back.trajectory.size() == r.trajectory.size());
  for (size_t i = 0; i < r.trajectory.size(); ++i) {
    CHECK(back.trajectory[i].t == r.trajectory[i].t);
    CHECK(back.trajectory[i].pos_mean == r.trajectory[i].pos_mean);
    CHECK(back.trajectory[i].neg_mean == r.trajectory[i].neg_mean);
  }
  CHECK(back.wall_time_sec == r.wall_time_sec);

  CHECK_THROWS_AS(metrics::report_from_json("{ nope", "mem"), DataError);
  CHECK_THROWS_AS(metrics::report_from_json("{\"seed\": 3}", "mem"), DataError);
}

TEST_CASE("emit_tables aggregates mean and deviation across seeds") {
  SUBCASE("empty input") {
    CHECK_THROWS_AS(metrics::emit_tables({}), ParamError);
  }

  SUBCASE("single run reports zero deviation") {
    const std::string out = metrics::emit_tables({sample_report(1, 0.5, 0.50, 0.70, 0.55, 0.75, false)});
    CHECK(out.find("## spmotif accuracy (%)") != std::string::npos);
    CHECK(out.find("## spmotif edge AUC (%)") != std::string::npos);
    CHECK(out.find("b=0.5") != std::string::npos);
    CHECK(out.find("| base | 50.0 +/- 0.0 |") != std::string::npos);
    CHECK(out.find("| SR | 55.0 +/- 0.0 |") != std::string::npos);
    CHECK(out.find("FT-SR") == std::string::npos);  // no fine-tuned runs given
  }

  SUBCASE("four seeds match a direct recomputation") {
    std::vector<metrics::MetricsReport> reports;
    const double acc1[] = {0.50, 0.60, 0.70, 0.80};
    for (int i = 0; i < 4; ++i)
      reports.push_back(sample_report(static_cast<std::uint64_t>(i), 0.9, acc1[i],
                                      0.70 + 0.01 * i, acc1[i] + 0.05, 0.80, false));
    const std::string out = metrics::emit_tables(reports);
    // base accuracy: mean 65.0, population std sqrt(125) = 11.18.
    CHECK(out.find("| base | 65.0 +/- 11.2 |") != std::string::npos);
    // SR takes the best-AUC iteration (t=2 here), accuracy mean 70.0.
    CHECK(out.find("| SR | 70.0 +/- 11.2 |") != std::string::npos);
    // AUC table: base mean 71.5, best mean 80.
    CHECK(out.find("| base | 71.5 +/- 1.1 |") != std::string::npos);
    CHECK(out.find("| SR | 80.0 +/- 0.0 |") != std::string::npos);
  }

  SUBCASE("fine-tuned runs fill their own row") {
    std::vector<metrics::MetricsReport> reports = {
        sample_report(1, 0.5, 0.50, 0.70, 0.55, 0.75, false),
        sample_report(1, 0.5, 0.58, 0.72, 0.62, 0.78, true)};
    const std::string out = metrics::emit_tables(reports);
    CHECK(out.find("| FT-SR | 62.0 +/- 0.0 |") != std::string::npos);
  }

  SUBCASE("mixed dataset kinds are rejected") {
    metrics::MetricsReport a = sample_report(1, 0.5, 0.5, 0.7, 0.55, 0.75, false);
    metrics::MetricsReport b = a;
    b.dataset_kind = "ba2motifs";
    CHECK_THROWS_AS(metrics::emit_tables({a, b}), DataError);
  }

  SUBCASE("reports without a t=1 row are rejected") {
    metrics::MetricsReport a = sample_report(1, 0.5, 0.5, 0.7, 0.55, 0.75, false);
    a.iterations.erase(a.iterations.begin() + 1);
    a.iterations.erase(a.iterations.begin() + 1);
    CHECK_THROWS_AS(metrics::emit_tables({a}), DataError);
  }
}

TEST_CASE("random predictions on balanced classes sit near one third") {
  const int n = 3000;
  Rng rng(Rng::key({31337}));
  std::vector<int> labels(static_cast<size_t>(n)), preds(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    labels[static_cast<size_t>(i)] = i % 3;
    preds[static_cast<size_t>(i)] = static_cast<int>(rng.next_below(3));
  }
  CHECK(std::abs(metrics::accuracy(preds, labels) - 1.0 / 3.0) < 0.03);
}
