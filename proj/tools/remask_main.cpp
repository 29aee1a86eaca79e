#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "remask/config.hpp"
#include "remask/errors.hpp"
#include "remask/experiment.hpp"
#include "remask/io.hpp"
#include "remask/metrics.hpp"
#include "remask/model.hpp"
#include "remask/reflection.hpp"

namespace fs = std::filesystem;
using namespace remask;

namespace {

void print_report(const metrics::MetricsReport& r, const experiment::RunPaths& p) {
  std::printf("config %s  kind=%s  bias=%g  k=%d  mode=%s%s\n", r.config_hash.c_str(),
              r.dataset_kind.c_str(), r.bias, r.k, r.mode.c_str(),
              r.finetuned ? "  finetuned" : "");
  std::printf("%4s  %8s  %8s  %10s\n", "t", "acc", "auc", "auc_fresh");
  for (const metrics::IterationRow& row : r.iterations)
    std::printf("%4d  %8.4f  %8.4f  %10.4f\n", row.t, row.acc, row.auc, row.auc_fresh);
  std::printf("report: %s\n", p.report.string().c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"self-reflective edge masking for graph classification"};
  app.require_subcommand(1);

  auto* gen = app.add_subcommand("generate", "synthesize a benchmark dataset");
  std::string g_kind = "spmotif", g_out;
  double g_bias = 0.5;
  int g_n = 1000, g_feat_dim = 4, g_ba_nodes = 20, g_ba_attach = 1;
  std::uint64_t g_seed = 0;
  bool g_random_features = false;
  gen->add_option("--kind", g_kind, "spmotif or ba2motifs");
  gen->add_option("--b", g_bias, "train/valid base-motif correlation");
  gen->add_option("--n", g_n, "total graphs (80/10/10 split)")->required();
  gen->add_option("--seed", g_seed, "generator seed");
  gen->add_option("--out", g_out, "dataset file to write")->required();
  gen->add_option("--feat-dim", g_feat_dim, "node feature width");
  gen->add_flag("--random-features", g_random_features, "uniform features instead of ones");
  gen->add_option("--ba-nodes", g_ba_nodes, "BA base size (ba2motifs)");
  gen->add_option("--ba-attach", g_ba_attach, "BA attachment count (ba2motifs)");

  auto* train = app.add_subcommand("train", "generate data and train the base model");
  std::string t_config, t_out;
  train->add_option("--config", t_config, "experiment config file")->required();
  train->add_option("--out", t_out, "artifact root (else REMASK_ARTIFACT_ROOT)");

  auto* ft = app.add_subcommand("finetune", "fine-tune through the reflection loop");
  std::string f_config, f_from, f_out;
  ft->add_option("--config", f_config, "experiment config file")->required();
  ft->add_option("--from", f_from, "base checkpoint (default: the config's)");
  ft->add_option("--out", f_out, "artifact root");

  auto* refl = app.add_subcommand("reflect", "run the reflection loop, dump edge scores");
  std::string r_checkpoint, r_data, r_mode = "accumulate", r_split = "test", r_out;
  int r_k = 8;
  refl->add_option("--checkpoint", r_checkpoint, "model checkpoint")->required();
  refl->add_option("--data", r_data, "dataset file")->required();
  refl->add_option("--k", r_k, "reflection depth");
  refl->add_option("--mode", r_mode, "accumulate or replace");
  refl->add_option("--split", r_split, "train, valid, or test");
  refl->add_option("--out", r_out, "scores file to write")->required();

  auto* eval = app.add_subcommand("evaluate", "run the full pipeline and report metrics");
  std::string e_config, e_out;
  eval->add_option("--config", e_config, "experiment config file")->required();
  eval->add_option("--out", e_out, "artifact root");

  auto* rep = app.add_subcommand("report", "aggregate run reports into comparison tables");
  std::string p_out;
  std::vector<std::string> p_reports;
  rep->add_option("--out", p_out, "table file (default: stdout)");
  rep->add_option("reports", p_reports, "report JSON files")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (gen->parsed()) {
      config::ExperimentConfig cfg;
      cfg.dataset.kind = g_kind;
      cfg.dataset.n = g_n;
      cfg.dataset.bias = g_bias;
      cfg.dataset.seed = g_seed;
      cfg.dataset.feat_dim = g_feat_dim;
      cfg.dataset.random_features = g_random_features;
      cfg.dataset.ba_nodes = g_ba_nodes;
      cfg.dataset.ba_attach = g_ba_attach;
      cfg.validate();
      const Dataset d = experiment::build_dataset(cfg.dataset);
      io::write_file_atomic(g_out, serialize_dataset(d));
      io::write_file_atomic(g_out + ".stats.txt", experiment::dataset_stats_text(d, g_kind));
      std::printf("wrote %s (%zu graphs)\n", g_out.c_str(), d.size());
    } else if (train->parsed()) {
      const config::ExperimentConfig cfg = config::load_config(t_config);
      const fs::path root = experiment::artifact_root(t_out);
      const experiment::RunPaths p = experiment::run_paths(root, cfg);
      io::mkdirs(root);
      const Dataset d = experiment::ensure_dataset(p, cfg);
      experiment::ensure_base_checkpoint(p, cfg, d);
      std::printf("checkpoint: %s\n", p.checkpoint_base.string().c_str());
    } else if (ft->parsed()) {
      const config::ExperimentConfig cfg = config::load_config(f_config);
      const fs::path root = experiment::artifact_root(f_out);
      const experiment::RunPaths p = experiment::run_paths(root, cfg);
      io::mkdirs(root);
      const Dataset d = experiment::ensure_dataset(p, cfg);
      const model::ModelState base = f_from.empty()
                                         ? experiment::ensure_base_checkpoint(p, cfg, d)
                                         : model::load_checkpoint(f_from);
      experiment::ensure_finetuned_checkpoint(p, cfg, d, base);
      std::printf("checkpoint: %s\n", p.checkpoint_ft.string().c_str());
    } else if (refl->parsed()) {
      const model::ModelState s = model::load_checkpoint(r_checkpoint);
      const Dataset d = read_dataset(r_data);
      const UpdateMode mode = parse_update_mode(r_mode);
      const std::vector<int> idx = d.indices_of(parse_split(r_split));
      if (r_k < 1) throw ConfigError("--k must be >= 1");
      io::write_file_atomic(r_out, experiment::serialize_scores(d, idx, s, r_k, mode));
      std::printf("wrote %s (%zu graphs, k=%d)\n", r_out.c_str(), idx.size(), r_k);
    } else if (eval->parsed()) {
      const config::ExperimentConfig cfg = config::load_config(e_config);
      const fs::path root = experiment::artifact_root(e_out);
      const experiment::RunResult res = experiment::run_experiment(cfg, root);
      print_report(res.report, res.paths);
    } else if (rep->parsed()) {
      std::vector<metrics::MetricsReport> reports;
      for (const std::string& path : p_reports)
        reports.push_back(metrics::report_from_json(io::read_text_file(path), path));
      const std::string tables = metrics::emit_tables(reports);
      if (p_out.empty()) {
        std::fputs(tables.c_str(), stdout);
      } else {
        io::write_file_atomic(p_out, tables);
        std::printf("wrote %s\n", p_out.c_str());
      }
    }
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
