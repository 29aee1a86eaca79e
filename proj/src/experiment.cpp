#include "remask/experiment.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>

#include "remask/datagen.hpp"
#include "remask/errors.hpp"
#include "remask/io.hpp"
#include "remask/plot.hpp"
#include "remask/reflection.hpp"
#include "remask/training.hpp"

namespace remask::experiment {

namespace fs = std::filesystem;

namespace {

template <typename Fn>
auto stage(const char* name, Fn&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    throw StageError(std::string(name) + ": " + e.what());
  }
}

std::string fmt(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

fs::path artifact_root(const std::string& cli_out) {
  if (!cli_out.empty()) return cli_out;
  if (const char* env = std::getenv("REMASK_ARTIFACT_ROOT"); env && *env) return env;
  return "artifacts";
}

RunPaths run_paths(const fs::path& root, const config::ExperimentConfig& cfg) {
  RunPaths p;
  p.root = root;
  p.hash = cfg.hash();
  const std::string h = p.hash;
  p.dataset = root / ("dataset_" + cfg.dataset.kind + "_" + h + ".txt");
  p.dataset_stats = root / ("dataset_" + cfg.dataset.kind + "_" + h + ".stats.txt");
  p.checkpoint_base = root / ("checkpoint_base_" + h + ".txt");
  p.curve_base = root / ("curve_base_" + h + ".txt");
  p.checkpoint_ft = root / ("checkpoint_ft_" + h + ".txt");
  p.curve_ft = root / ("curve_ft_" + h + ".txt");
  p.scores = root / ("scores_" + h + ".txt");
  p.report = root / ("report_" + h + ".json");
  p.trajectory = root / ("trajectory_" + h + ".txt");
  p.trajectory_svg = root / ("trajectory_" + h + ".svg");
  p.acc_plot = root / ("acc_vs_iter_" + h + ".svg");
  p.acc_data = root / ("acc_vs_iter_" + h + ".txt");
  p.auc_plot = root / ("auc_vs_iter_" + h + ".svg");
  p.auc_data = root / ("auc_vs_iter_" + h + ".txt");
  return p;
}

Dataset build_dataset(const config::DatasetSection& ds) {
  const config::SplitCounts c = config::split_counts(ds.n);
  if (ds.kind == "spmotif") {
    datagen::SpmotifConfig gc;
    gc.num_train = c.train;
    gc.num_valid = c.valid;
    gc.num_test = c.test;
    gc.bias = ds.bias;
    gc.seed = ds.seed;
    gc.feat_dim = ds.feat_dim;
    gc.random_features = ds.random_features;
    gc.tree_depth_min = ds.tree_depth_min;
    gc.tree_depth_max = ds.tree_depth_max;
    gc.ladder_rungs_min = ds.ladder_rungs_min;
    gc.ladder_rungs_max = ds.ladder_rungs_max;
    gc.wheel_rim_min = ds.wheel_rim_min;
    gc.wheel_rim_max = ds.wheel_rim_max;
    return datagen::generate_spmotif(gc);
  }
  if (ds.kind == "ba2motifs") {
    datagen::Ba2Config gc;
    gc.num_train = c.train;
    gc.num_valid = c.valid;
    gc.num_test = c.test;
    gc.ba_nodes = ds.ba_nodes;
    gc.ba_attach = ds.ba_attach;
    gc.seed = ds.seed;
    gc.feat_dim = ds.feat_dim;
    gc.random_features = ds.random_features;
    return datagen::generate_ba2motifs(gc);
  }
  throw ConfigError("unknown dataset kind '" + ds.kind + "'");
}

std::string dataset_stats_text(const Dataset& d, const std::string& kind) {
  std::string s = "remask-dataset-stats v1\n";
  s += "kind = " + kind + "\n";
  s += "graphs = " + std::to_string(d.size()) + "\n";
  for (const Split sp : {Split::train, Split::valid, Split::test})
    s += to_string(sp) + " = " + std::to_string(d.indices_of(sp).size()) + "\n";
  std::vector<long> per_class(static_cast<std::size_t>(d.num_classes), 0);
  for (const GraphInstance& g : d.graphs) ++per_class[g.label];
  for (int c = 0; c < d.num_classes; ++c)
    s += "class " + std::to_string(c) + " = " + std::to_string(per_class[c]) + "\n";
  if (kind == "spmotif") {
    for (const Split sp : {Split::train, Split::test}) {
      const auto table = datagen::spmotif_contingency(d, sp);
      s += to_string(sp) + " base counts by class:\n";
      for (int c = 0; c < 3; ++c) {
        s += "C=" + std::to_string(c) + ":";
        for (int b = 0; b < 3; ++b) s += " " + std::to_string(table[c][b]);
        s += "\n";
      }
    }
  }
  return s;
}

Dataset ensure_dataset(const RunPaths& p, const config::ExperimentConfig& cfg) {
  if (fs::exists(p.dataset)) return read_dataset(p.dataset.string());
  const Dataset d = build_dataset(cfg.dataset);
  io::write_file_atomic(p.dataset, serialize_dataset(d));
  io::write_file_atomic(p.dataset_stats, dataset_stats_text(d, cfg.dataset.kind));
  return d;
}

namespace {

std::string curve_text(const std::vector<training::EpochLog>& curve) {
  std::vector<plot::Series> series(4);
  series[0].label = "train_loss";
  series[1].label = "train_acc";
  series[2].label = "valid_loss";
  series[3].label = "valid_acc";
  for (const training::EpochLog& row : curve) {
    for (plot::Series& s : series) s.x.push_back(row.epoch);
    series[0].y.push_back(row.train_loss);
    series[1].y.push_back(row.train_acc);
    series[2].y.push_back(row.valid_loss);
    series[3].y.push_back(row.valid_acc);
  }
  return plot::columns_text(series);
}

}  // namespace

model::ModelState ensure_base_checkpoint(const RunPaths& p, const config::ExperimentConfig& cfg,
                                         const Dataset& d) {
  if (fs::exists(p.checkpoint_base)) return model::load_checkpoint(p.checkpoint_base.string());
  const training::TrainResult r = training::train_base(d, cfg.hyper(), cfg.train_config());
  io::write_file_atomic(p.checkpoint_base, model::serialize_checkpoint(r.state));
  if (!r.curve.empty()) io::write_file_atomic(p.curve_base, curve_text(r.curve));
  return r.state;
}

model::ModelState ensure_finetuned_checkpoint(const RunPaths& p,
                                              const config::ExperimentConfig& cfg,
                                              const Dataset& d,
                                              const model::ModelState& base) {
  if (fs::exists(p.checkpoint_ft)) return model::load_checkpoint(p.checkpoint_ft.string());
  const training::TrainResult r = training::finetune(d, base, cfg.finetune_config());
  io::write_file_atomic(p.checkpoint_ft, model::serialize_checkpoint(r.state));
  if (!r.curve.empty()) io::write_file_atomic(p.curve_ft, curve_text(r.curve));
  return r.state;
}

std::string serialize_scores(const Dataset& d, const std::vector<int>& indices,
                             const model::ModelState& s, int k, UpdateMode mode) {
  const std::vector<reflection::ReflectResult> results =
      reflection::reflect_batch(d, indices, s, k, mode);
  std::string out = "remask-scores v1 k=" + std::to_string(k) + " mode=" + to_string(mode) + "\n";
  for (std::size_t i = 0; i < indices.size(); ++i) {
    for (int t = 0; t <= k; ++t) {
      out += "s " + std::to_string(indices[i]) + " " + std::to_string(t);
      for (const double v : results[i].seq.masks[t].scores) out += " " + fmt(v);
      out += "\n";
    }
  }
  return out;
}

RunResult run_experiment(const config::ExperimentConfig& cfg, const fs::path& root) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const RunPaths p = run_paths(root, cfg);
  io::mkdirs(root);
  const Dataset d = stage("generate", [&] { return ensure_dataset(p, cfg); });
  const model::ModelState base =
      stage("train", [&] { return ensure_base_checkpoint(p, cfg, d); });
  model::ModelState final_state = base;
  if (cfg.train.finetune)
    final_state =
        stage("finetune", [&] { return ensure_finetuned_checkpoint(p, cfg, d, base); });
  const std::vector<int> eval_idx = d.indices_of(parse_split(cfg.eval.split));
  const UpdateMode mode = parse_update_mode(cfg.reflect.mode);
  stage("reflect", [&] {
    if (!fs::exists(p.scores))
      io::write_file_atomic(
          p.scores, serialize_scores(d, eval_idx, final_state, cfg.reflect.k, mode));
    return 0;
  });
  RunResult out;
  out.paths = p;
  stage("evaluate", [&] {
    const metrics::SplitEval ev = metrics::evaluate_reflection(
        d, eval_idx, final_state, cfg.reflect.k, mode, cfg.eval.per_graph_auc);
    const reflection::TrajectoryTable traj =
        reflection::track_scores(d, eval_idx, final_state, cfg.reflect.k);
    metrics::MetricsReport& r = out.report;
    r.config_hash = p.hash;
    r.seed = cfg.train.seed;
    r.dataset_kind = cfg.dataset.kind;
    r.bias = cfg.dataset.bias;
    r.k = cfg.reflect.k;
    r.mode = cfg.reflect.mode;
    r.finetuned = cfg.train.finetune;
    r.iterations = ev.iterations;
    r.per_class_acc = ev.per_class_acc;
    r.trajectory = traj.aggregate;
    r.wall_time_sec =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    plot::Series acc{"acc", {}, {}}, auc{"auc", {}, {}}, auc_fresh{"auc_fresh", {}, {}};
    for (const metrics::IterationRow& row : r.iterations) {
      acc.x.push_back(row.t);
      acc.y.push_back(row.acc);
      auc.x.push_back(row.t);
      auc.y.push_back(row.auc);
      auc_fresh.x.push_back(row.t);
      auc_fresh.y.push_back(row.auc_fresh);
    }
    plot::Series pos{"pos_mean", {}, {}}, neg{"neg_mean", {}, {}};
    for (const reflection::TrajectoryRow& row : r.trajectory) {
      pos.x.push_back(row.t);
      pos.y.push_back(row.pos_mean);
      neg.x.push_back(row.t);
      neg.y.push_back(row.neg_mean);
    }
    const auto put = [](const fs::path& path, const std::string& text) {
      if (!fs::exists(path)) io::write_file_atomic(path, text);
    };
    put(p.report, metrics::to_json(r));
    put(p.trajectory, plot::columns_text({pos, neg}));
    put(p.trajectory_svg,
        plot::line_chart_svg("edge score trajectory", "iteration t", "mean score", {pos, neg}));
    put(p.acc_data, plot::columns_text({acc}));
    put(p.acc_plot, plot::line_chart_svg("accuracy vs iteration", "iteration t", "accuracy", {acc}));
    put(p.auc_data, plot::columns_text({auc, auc_fresh}));
    put(p.auc_plot,
        plot::line_chart_svg("edge AUC vs iteration", "iteration t", "AUC", {auc, auc_fresh}));
    return 0;
  });
  return out;
}

}  // namespace remask::experiment
