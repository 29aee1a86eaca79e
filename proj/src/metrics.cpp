#include "remask/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <exception>
#include <map>
#include <numeric>

#include "json.hpp"
#include "remask/errors.hpp"

namespace remask::metrics {

namespace {

int argmax(const nn::Vec& v) {
  int best = 0;
  for (int i = 1; i < v.size(); ++i)
    if (v(i) > v(best)) best = i;
  return best;
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double pstd_of(const std::vector<double>& v, double mean) {
  double s = 0.0;
  for (double x : v) s += (x - mean) * (x - mean);
  return std::sqrt(s / static_cast<double>(v.size()));
}

std::string pct_cell(const std::vector<double>& v) {
  if (v.empty()) return "-";
  const double m = mean_of(v) * 100.0;
  const double sd = pstd_of(v, mean_of(v)) * 100.0;
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.1f +/- %.1f", m, sd);
  return buf;
}

std::string bias_label(double b) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "b=%.3g", b);
  return buf;
}

}  // namespace

double accuracy(const std::vector<int>& predictions, const std::vector<int>& labels) {
  if (predictions.empty()) throw ParamError("empty prediction vector");
  if (predictions.size() != labels.size())
    throw DimensionError("predictions and labels differ in length");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i)
    if (predictions[i] == labels[i]) ++correct;
  return static_cast<double>(correct) / static_cast<double>(predictions.size());
}

double edge_auc(const std::vector<double>& scores, const std::vector<std::uint8_t>& truth) {
  if (scores.empty()) throw ParamError("empty score vector");
  if (scores.size() != truth.size())
    throw DimensionError("scores and truth differ in length");
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  std::vector<double> rank(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double mid = 0.5 * static_cast<double>(i + j - 1) + 1.0;
    for (std::size_t t = i; t < j; ++t) rank[order[t]] = mid;
    i = j;
  }
  double rank_pos = 0.0;
  std::size_t npos = 0;
  for (std::size_t e = 0; e < n; ++e)
    if (truth[e]) {
      rank_pos += rank[e];
      ++npos;
    }
  const std::size_t nneg = n - npos;
  if (npos == 0 || nneg == 0) throw NumericError("edge truth has a single class");
  return (rank_pos - 0.5 * static_cast<double>(npos) * static_cast<double>(npos + 1)) /
         (static_cast<double>(npos) * static_cast<double>(nneg));
}

namespace {

struct GraphEval {
  std::vector<int> preds;                  // k+1
  std::vector<std::vector<double>> z;      // (k+1) x nu
  std::vector<std::vector<double>> fresh;  // k x nu
  std::vector<std::uint8_t> truth;         // nu
};

double auc_over(const std::vector<GraphEval>& per, int t, bool fresh, bool per_graph) {
  if (per_graph) {
    std::vector<double> vals;
    vals.reserve(per.size());
    for (const GraphEval& ge : per)
      vals.push_back(edge_auc(fresh ? ge.fresh[t - 1] : ge.z[t], ge.truth));
    return mean_of(vals);
  }
  std::vector<double> scores;
  std::vector<std::uint8_t> truth;
  for (const GraphEval& ge : per) {
    const std::vector<double>& src = fresh ? ge.fresh[t - 1] : ge.z[t];
    scores.insert(scores.end(), src.begin(), src.end());
    truth.insert(truth.end(), ge.truth.begin(), ge.truth.end());
  }
  return edge_auc(scores, truth);
}

}  // namespace

SplitEval evaluate_reflection(const Dataset& d, const std::vector<int>& indices,
                              const model::ModelState& s, int k, UpdateMode mode,
                              bool per_graph_auc) {
  if (k < 1) throw ParamError("reflection depth k must be >= 1");
  if (indices.empty()) throw ParamError("empty split");
  const int n = static_cast<int>(indices.size());
  std::vector<GraphEval> per(static_cast<size_t>(n));
  std::vector<std::exception_ptr> errors(static_cast<size_t>(n));
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) {
    try {
      const GraphInstance& g = d.graphs[indices[i]];
      const EdgeIndex idx = EdgeIndex::build(g);
      const reflection::ReflectResult r = reflection::reflect(g, s, k, mode);
      GraphEval& ge = per[i];
      const int nu = idx.num_undirected();
      ge.truth.resize(static_cast<size_t>(nu));
      for (int j = 0; j < nu; ++j) ge.truth[j] = g.edge_truth[idx.dir_of[j][0]];
      ge.preds.resize(static_cast<size_t>(k) + 1);
      ge.z.assign(static_cast<size_t>(k) + 1, std::vector<double>(static_cast<size_t>(nu)));
      ge.fresh.assign(static_cast<size_t>(k), std::vector<double>(static_cast<size_t>(nu)));
      for (int t = 0; t <= k; ++t) {
        for (int j = 0; j < nu; ++j)
          ge.z[t][j] = r.seq.masks[t].scores[idx.dir_of[j][0]];
        ge.preds[t] = argmax(model::predict(apply_mask(g, r.seq.masks[t]), s));
      }
      for (int t = 0; t < k; ++t)
        for (int j = 0; j < nu; ++j)
          ge.fresh[t][j] = r.fresh[t].p[idx.dir_of[j][0]];
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (const auto& err : errors)
    if (err) std::rethrow_exception(err);

  std::vector<int> labels(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) labels[i] = d.graphs[indices[i]].label;
  SplitEval out;
  std::vector<int> preds(static_cast<size_t>(n));
  for (int t = 0; t <= k; ++t) {
    for (int i = 0; i < n; ++i) preds[i] = per[i].preds[t];
    IterationRow row;
    row.t = t;
    row.acc = accuracy(preds, labels);
    row.auc = auc_over(per, t, false, per_graph_auc);
    row.auc_fresh = t == 0 ? 0.5 : auc_over(per, t, true, per_graph_auc);
    out.iterations.push_back(row);
  }
  out.final_predictions = preds;
  out.per_class_acc.assign(static_cast<size_t>(d.num_classes), 0.0);
  std::vector<int> class_total(static_cast<size_t>(d.num_classes), 0);
  for (int i = 0; i < n; ++i) {
    ++class_total[labels[i]];
    if (preds[i] == labels[i]) out.per_class_acc[labels[i]] += 1.0;
  }
  for (int c = 0; c < d.num_classes; ++c)
    if (class_total[c] > 0) out.per_class_acc[c] /= class_total[c];
  return out;
}

std::string to_json(const MetricsReport& r) {
  nlohmann::ordered_json j;
  j["config_hash"] = r.config_hash;
  j["seed"] = r.seed;
  j["dataset_kind"] = r.dataset_kind;
  j["bias"] = r.bias;
  j["k"] = r.k;
  j["mode"] = r.mode;
  j["finetuned"] = r.finetuned;
  j["iterations"] = nlohmann::ordered_json::array();
  for (const IterationRow& row : r.iterations) {
    nlohmann::ordered_json it;
    it["t"] = row.t;
    it["acc"] = row.acc;
    it["auc"] = row.auc;
    it["auc_fresh"] = row.auc_fresh;
    j["iterations"].push_back(it);
  }
  j["per_class_acc"] = r.per_class_acc;
  j["trajectory"] = nlohmann::ordered_json::array();
  for (const reflection::TrajectoryRow& row : r.trajectory) {
    nlohmann::ordered_json it;
    it["t"] = row.t;
    it["pos_mean"] = row.pos_mean;
    it["neg_mean"] = row.neg_mean;
    j["trajectory"].push_back(it);
  }
  j["wall_time_sec"] = r.wall_time_sec;
  return j.dump(2) + "\n";
}

MetricsReport report_from_json(const std::string& text, const std::string& origin) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(origin + ": " + e.what());
  }
  MetricsReport r;
  try {
    r.config_hash = j.at("config_hash").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.dataset_kind = j.at("dataset_kind").get<std::string>();
    r.bias = j.at("bias").get<double>();
    r.k = j.at("k").get<int>();
    r.mode = j.at("mode").get<std::string>();
    r.finetuned = j.at("finetuned").get<bool>();
    for (const auto& it : j.at("iterations")) {
      IterationRow row;
      row.t = it.at("t").get<int>();
      row.acc = it.at("acc").get<double>();
      row.auc = it.at("auc").get<double>();
      row.auc_fresh = it.at("auc_fresh").get<double>();
      r.iterations.push_back(row);
    }
    r.per_class_acc = j.at("per_class_acc").get<std::vector<double>>();
    for (const auto& it : j.at("trajectory")) {
      reflection::TrajectoryRow row;
      row.t = it.at("t").get<int>();
      row.pos_mean = it.at("pos_mean").get<double>();
      row.neg_mean = it.at("neg_mean").get<double>();
      r.trajectory.push_back(row);
    }
    r.wall_time_sec = j.value("wall_time_sec", 0.0);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(origin + ": " + e.what());
  }
  return r;
}

std::string emit_tables(const std::vector<MetricsReport>& reports) {
  if (reports.empty()) throw ParamError("no reports given");
  const std::string kind = reports.front().dataset_kind;
  struct Cell {
    std::vector<double> acc, auc;
  };
  std::map<double, std::array<Cell, 3>> by_bias;  // 0 base, 1 SR, 2 FT-SR
  bool any_ft = false;
  for (const MetricsReport& r : reports) {
    if (r.dataset_kind != kind)
      throw DataError("reports mix dataset kinds '" + kind + "' and '" + r.dataset_kind + "'");
    const IterationRow* base = nullptr;
    const IterationRow* best = nullptr;
    for (const IterationRow& row : r.iterations) {
      if (row.t == 1) base = &row;
      if (row.t >= 1 && (!best || row.auc > best->auc)) best = &row;
    }
    if (!base || !best) throw DataError("report lacks iteration t=1");
    auto& cells = by_bias[r.bias];
    if (r.finetuned) {
      any_ft = true;
      cells[2].acc.push_back(best->acc);
      cells[2].auc.push_back(best->auc);
    } else {
      cells[0].acc.push_back(base->acc);
      cells[0].auc.push_back(base->auc);
      cells[1].acc.push_back(best->acc);
      cells[1].auc.push_back(best->auc);
    }
  }
  const std::array<std::string, 3> names = {"base", "SR", "FT-SR"};
  const int nmethods = any_ft ? 3 : 2;
  std::string out;
  const auto table = [&](const std::string& title, bool use_auc) {
    out += "## " + title + "\n\n| method |";
    for (const auto& [b, cells] : by_bias) out += " " + bias_label(b) + " |";
    out += "\n| --- |";
    for (std::size_t i = 0; i < by_bias.size(); ++i) out += " --- |";
    out += "\n";
    for (int m = 0; m < nmethods; ++m) {
      out += "| " + names[m] + " |";
      for (const auto& [b, cells] : by_bias)
        out += " " + pct_cell(use_auc ? cells[m].auc : cells[m].acc) + " |";
      out += "\n";
    }
    out += "\n";
  };
  table(kind + " accuracy (%)", false);
  table(kind + " edge AUC (%)", true);
  return out;
}

}  // namespace remask::metrics
