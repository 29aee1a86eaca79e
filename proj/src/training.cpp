#include "remask/training.hpp"

#include <algorithm>
#include <cmath>
#include <exception>

#include "remask/errors.hpp"
#include "remask/hash.hpp"
#include "remask/reflection.hpp"

namespace remask::training {

namespace {

constexpr int kChunk = 8;

double sign(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

double kl_term(double p, double r) {
  return p * std::log(p / r) + (1.0 - p) * std::log((1.0 - p) / (1.0 - r));
}

double kl_term_grad(double p, double r) {
  return std::log(p / r) - std::log((1.0 - p) / (1.0 - r));
}

void check_prior(double r) {
  if (!(r > 0.0) || !(r < 1.0)) throw ParamError("gate prior r must lie in (0, 1)");
}

void fisher_yates(std::vector<int>& v, Rng& rng) {
  for (size_t i = v.size(); i > 1; --i)
    std::swap(v[i - 1], v[rng.next_below(i)]);
}

int argmax(const nn::Vec& v) {
  int best = 0;
  for (int i = 1; i < v.size(); ++i)
    if (v(i) > v(best)) best = i;
  return best;
}

// Runs per_graph over fixed-size chunks. Chunk-local accumulators are merged
// in chunk order, so the result is identical for any thread count.
template <typename Fn>
BatchStats run_chunked(const std::vector<int>& indices, std::vector<double>* grad,
                       Fn&& per_graph) {
  const int nb = static_cast<int>(indices.size());
  if (nb == 0) throw ParamError("empty batch");
  if (grad) std::fill(grad->begin(), grad->end(), 0.0);
  const int nchunks = (nb + kChunk - 1) / kChunk;
  std::vector<BatchStats> cstats(nchunks);
  std::vector<std::vector<double>> cgrads;
  if (grad) cgrads.assign(nchunks, std::vector<double>(grad->size(), 0.0));
  std::vector<std::exception_ptr> errors(nchunks);
#pragma omp parallel for schedule(static)
  for (int c = 0; c < nchunks; ++c) {
    const int lo = c * kChunk;
    const int hi = std::min(nb, lo + kChunk);
    for (int i = lo; i < hi && !errors[c]; ++i) {
      const int gi = indices[i];
      try {
        LossParts parts;
        const double loss = per_graph(gi, grad ? &cgrads[c] : nullptr, parts);
        cstats[c].loss += loss;
        cstats[c].ce += parts.ce;
        cstats[c].kl += parts.kl;
        cstats[c].con += parts.con;
        cstats[c].correct += parts.correct ? 1 : 0;
        cstats[c].count += 1;
      } catch (const NumericError& e) {
        errors[c] = std::make_exception_ptr(
            NumericError("graph " + std::to_string(gi) + ": " + e.what()));
      } catch (...) {
        errors[c] = std::current_exception();
      }
    }
  }
  for (int c = 0; c < nchunks; ++c)
    if (errors[c]) std::rethrow_exception(errors[c]);
  BatchStats total;
  for (const BatchStats& cs : cstats) {
    total.loss += cs.loss;
    total.ce += cs.ce;
    total.kl += cs.kl;
    total.con += cs.con;
    total.correct += cs.correct;
    total.count += cs.count;
  }
  if (grad) {
    for (const auto& cg : cgrads)
      for (size_t i = 0; i < grad->size(); ++i) (*grad)[i] += cg[i];
    const double inv = 1.0 / nb;
    for (double& x : *grad) x *= inv;
  }
  total.loss /= nb;
  total.ce /= nb;
  total.kl /= nb;
  total.con /= nb;
  return total;
}

// Reverse sweep of the accumulate unroll. gZ[t] holds d(loss)/dZ^(t) per
// directed edge on entry for direct consumers; gP_direct, when present, adds
// per-iteration d(loss)/dp~^(t) terms (raw-mode KL).
void unroll_backward(const GraphInstance& g, const model::ModelState& s,
                     const EdgeIndex& idx,
                     const std::vector<model::EdgeScoreCache>& sc,
                     const std::vector<model::EdgeProbabilities>& ps,
                     const std::vector<EdgeMask>& zs,
                     std::vector<std::vector<double>>& gZ,
                     const std::vector<std::vector<double>>* gP_direct,
                     std::vector<double>& grad) {
  const int ne = g.num_edges();
  const int k = static_cast<int>(sc.size());
  std::vector<double> gp(static_cast<size_t>(ne));
  for (int t = k; t >= 1; --t) {
    for (int e = 0; e < ne; ++e) gp[e] = gZ[t][e] * zs[t - 1].scores[e];
    if (gP_direct)
      for (int e = 0; e < ne; ++e) gp[e] += (*gP_direct)[t - 1][e];
    for (int e = 0; e < ne; ++e) gZ[t - 1][e] += gZ[t][e] * ps[t - 1].p[e];
    model::score_edges_backward(apply_mask(g, zs[t - 1]), s, idx, sc[t - 1], gp, grad,
                                gZ[t - 1].data());
  }
}

}  // namespace

FinetuneMode parse_finetune_mode(const std::string& s) {
  if (s == "consistency") return FinetuneMode::consistency;
  if (s == "raw") return FinetuneMode::raw;
  throw ConfigError("unknown fine-tune mode '" + s + "'");
}

std::string to_string(FinetuneMode m) {
  return m == FinetuneMode::consistency ? "consistency" : "raw";
}

void TrainConfig::validate(bool finetune) const {
  if (epochs < 0) throw ParamError("epochs must be >= 0");
  if (batch < 1) throw ParamError("batch size must be >= 1");
  if (!(lr > 0.0)) throw ParamError("learning rate must be positive");
  if (beta < 0.0) throw ParamError("bottleneck weight beta must be >= 0");
  check_prior(r);
  if (finetune) {
    if (k < 1) throw ParamError("unroll depth k must be >= 1");
    if (mode == FinetuneMode::consistency && k < 2)
      throw ParamError("consistency mode needs unroll depth k >= 2");
  }
}

nn::AdamConfig TrainConfig::adam() const {
  return nn::AdamConfig{lr, adam_beta1, adam_beta2, adam_eps, clip_norm};
}

double kl_bernoulli(const model::EdgeProbabilities& p, double r, const EdgeIndex& idx) {
  check_prior(r);
  if (p.size() != idx.num_directed())
    throw DimensionError("probability vector does not match edge count");
  const int nu = idx.num_undirected();
  if (nu == 0) return 0.0;
  double sum = 0.0;
  for (int j = 0; j < nu; ++j) sum += kl_term(p.p[idx.dir_of[j][0]], r);
  return sum / nu;
}

double consistency_loss(const std::vector<std::vector<double>>& masks) {
  const int k = static_cast<int>(masks.size());
  if (k < 2) throw ParamError("consistency loss needs at least two masks");
  for (const auto& m : masks)
    if (m.size() != masks[0].size())
      throw DimensionError("consistency masks differ in length");
  double sum = 0.0;
  for (int t = 0; t < k; ++t)
    for (int u = t + 1; u < k; ++u)
      for (size_t j = 0; j < masks[t].size(); ++j)
        sum += std::abs(masks[t][j] - masks[u][j]);
  return 2.0 / (static_cast<double>(k) * (k - 1)) * sum;
}

double consistency_loss(const MaskSequence& seq, const EdgeIndex& idx) {
  const int k = seq.depth();
  if (k < 2) throw ParamError("consistency loss needs reflection depth k >= 2");
  std::vector<std::vector<double>> und(static_cast<size_t>(k));
  for (int t = 1; t <= k; ++t) {
    if (seq.masks[t].size() != idx.num_directed())
      throw DimensionError("mask length does not match edge count");
    und[t - 1].resize(static_cast<size_t>(idx.num_undirected()));
    for (int j = 0; j < idx.num_undirected(); ++j)
      und[t - 1][j] = seq.masks[t].scores[idx.dir_of[j][0]];
  }
  return consistency_loss(und);
}

double gsat_loss_single(const GraphInstance& g, const model::ModelState& s,
                        const TrainConfig& cfg, Rng& gate_rng,
                        std::vector<double>* grad, LossParts* parts) {
  check_prior(cfg.r);
  const int ne = g.num_edges();
  const EdgeIndex idx = EdgeIndex::build(g);
  const EdgeMask ones = EdgeMask::ones(ne);
  const MaskedGraph mg_raw = apply_mask(g, ones);
  model::EdgeScoreCache sc;
  const model::EdgeProbabilities p = model::score_edges(mg_raw, s, idx, sc);
  const EdgeMask z = model::sample_gates(p, s.hyper.tau, idx, gate_rng);
  const MaskedGraph mg_z = apply_mask(g, z);
  model::PredictCache pc;
  const nn::Vec logits = model::predict(mg_z, s, pc);
  nn::Vec glogits;
  const double ce = nn::cross_entropy(logits, g.label, grad ? &glogits : nullptr);
  const double kl = kl_bernoulli(p, cfg.r, idx);
  const double loss = ce + cfg.beta * kl;
  if (!std::isfinite(loss)) throw NumericError("non-finite loss");
  if (parts) {
    parts->ce = ce;
    parts->kl = kl;
    parts->con = 0.0;
    parts->correct = argmax(logits) == g.label;
  }
  if (grad) {
    std::vector<double> gz(static_cast<size_t>(ne), 0.0);
    model::predict_backward(mg_z, s, pc, glogits, *grad, gz.data());
    std::vector<double> gp(static_cast<size_t>(ne), 0.0);
    const int nu = idx.num_undirected();
    for (int j = 0; j < nu; ++j) {
      const auto [a, b] = idx.dir_of[j];
      const double ze = z.scores[a];
      const double pe = p.p[a];
      const double dzdp = ze * (1.0 - ze) / (s.hyper.tau * pe * (1.0 - pe));
      double gp_und = (gz[a] + gz[b]) * dzdp;
      gp_und += cfg.beta * kl_term_grad(pe, cfg.r) / nu;
      gp[a] = gp[b] = 0.5 * gp_und;
    }
    model::score_edges_backward(mg_raw, s, idx, sc, gp, *grad, nullptr);
  }
  return loss;
}

double finetune_loss_single(const GraphInstance& g, const model::ModelState& s,
                            const TrainConfig& cfg, std::vector<double>* grad,
                            LossParts* parts) {
  if (cfg.k < 1) throw ParamError("unroll depth k must be >= 1");
  if (cfg.mode == FinetuneMode::consistency && cfg.k < 2)
    throw ParamError("consistency mode needs unroll depth k >= 2");
  const int ne = g.num_edges();
  const int k = cfg.k;
  const EdgeIndex idx = EdgeIndex::build(g);
  std::vector<EdgeMask> zs(static_cast<size_t>(k) + 1);
  zs[0] = EdgeMask::ones(ne);
  std::vector<model::EdgeProbabilities> ps(static_cast<size_t>(k));
  std::vector<model::EdgeScoreCache> sc(static_cast<size_t>(k));
  for (int t = 1; t <= k; ++t) {
    ps[t - 1] = model::score_edges(apply_mask(g, zs[t - 1]), s, idx, sc[t - 1]);
    zs[t].scores.resize(static_cast<size_t>(ne));
    for (int e = 0; e < ne; ++e) zs[t].scores[e] = ps[t - 1].p[e] * zs[t - 1].scores[e];
  }
  double loss = 0.0;
  LossParts local;
  if (cfg.mode == FinetuneMode::consistency) {
    model::PredictCache pc;
    const nn::Vec logits = model::predict(apply_mask(g, zs[k]), s, pc);
    nn::Vec glogits;
    local.ce = nn::cross_entropy(logits, g.label, grad ? &glogits : nullptr);
    local.con = consistency_loss(MaskSequence{zs, UpdateMode::accumulate}, idx);
    local.correct = argmax(logits) == g.label;
    loss = local.con + local.ce;
    if (!std::isfinite(loss)) throw NumericError("non-finite loss");
    if (grad) {
      std::vector<std::vector<double>> gZ(static_cast<size_t>(k) + 1,
                                          std::vector<double>(static_cast<size_t>(ne), 0.0));
      model::predict_backward(apply_mask(g, zs[k]), s, pc, glogits, *grad, gZ[k].data());
      const double coeff = 2.0 / (static_cast<double>(k) * (k - 1));
      for (int t = 1; t <= k; ++t)
        for (int u = t + 1; u <= k; ++u)
          for (int j = 0; j < idx.num_undirected(); ++j) {
            const auto [a, b] = idx.dir_of[j];
            const double sg = sign(zs[t].scores[a] - zs[u].scores[a]);
            if (sg == 0.0) continue;
            gZ[t][a] += 0.5 * coeff * sg;
            gZ[t][b] += 0.5 * coeff * sg;
            gZ[u][a] -= 0.5 * coeff * sg;
            gZ[u][b] -= 0.5 * coeff * sg;
          }
      unroll_backward(g, s, idx, sc, ps, zs, gZ, nullptr, *grad);
    }
  } else {
    check_prior(cfg.r);
    const double inv_k = 1.0 / k;
    std::vector<model::PredictCache> pcs(static_cast<size_t>(k));
    std::vector<nn::Vec> glogits(static_cast<size_t>(k));
    for (int t = 1; t <= k; ++t) {
      const nn::Vec logits = model::predict(apply_mask(g, zs[t]), s, pcs[t - 1]);
      nn::Vec gl;
      local.ce += inv_k * nn::cross_entropy(logits, g.label, grad ? &gl : nullptr);
      local.kl += inv_k * kl_bernoulli(ps[t - 1], cfg.r, idx);
      if (grad) glogits[t - 1] = inv_k * gl;
      if (t == k) local.correct = argmax(logits) == g.label;
    }
    loss = local.ce + cfg.beta * local.kl;
    if (!std::isfinite(loss)) throw NumericError("non-finite loss");
    if (grad) {
      std::vector<std::vector<double>> gZ(static_cast<size_t>(k) + 1,
                                          std::vector<double>(static_cast<size_t>(ne), 0.0));
      std::vector<std::vector<double>> gpd(static_cast<size_t>(k),
                                           std::vector<double>(static_cast<size_t>(ne), 0.0));
      const int nu = idx.num_undirected();
      for (int t = 1; t <= k; ++t) {
        model::predict_backward(apply_mask(g, zs[t]), s, pcs[t - 1], glogits[t - 1], *grad,
                                gZ[t].data());
        for (int j = 0; j < nu; ++j) {
          const auto [a, b] = idx.dir_of[j];
          const double gd =
              cfg.beta * inv_k * kl_term_grad(ps[t - 1].p[a], cfg.r) / nu;
          gpd[t - 1][a] = gpd[t - 1][b] = 0.5 * gd;
        }
      }
      unroll_backward(g, s, idx, sc, ps, zs, gZ, &gpd, *grad);
    }
  }
  if (parts) *parts = local;
  return loss;
}

BatchStats gsat_batch(const Dataset& d, const std::vector<int>& indices,
                      const model::ModelState& s, const TrainConfig& cfg,
                      std::uint64_t noise_key, std::vector<double>* grad) {
  return run_chunked(indices, grad,
                     [&](int gi, std::vector<double>* gbuf, LossParts& parts) {
                       Rng rng(Rng::key({noise_key, static_cast<std::uint64_t>(gi)}));
                       return gsat_loss_single(d.graphs[gi], s, cfg, rng, gbuf, &parts);
                     });
}

BatchStats gsat_batch_serial(const Dataset& d, const std::vector<int>& indices,
                             const model::ModelState& s, const TrainConfig& cfg,
                             std::uint64_t noise_key, std::vector<double>* grad) {
  const int nb = static_cast<int>(indices.size());
  if (nb == 0) throw ParamError("empty batch");
  if (grad) std::fill(grad->begin(), grad->end(), 0.0);
  BatchStats total;
  for (int gi : indices) {
    Rng rng(Rng::key({noise_key, static_cast<std::uint64_t>(gi)}));
    LossParts parts;
    double loss;
    try {
      loss = gsat_loss_single(d.graphs[gi], s, cfg, rng, grad, &parts);
    } catch (const NumericError& e) {
      throw NumericError("graph " + std::to_string(gi) + ": " + e.what());
    }
    total.loss += loss;
    total.ce += parts.ce;
    total.kl += parts.kl;
    total.correct += parts.correct ? 1 : 0;
    total.count += 1;
  }
  if (grad)
    for (double& x : *grad) x /= nb;
  total.loss /= nb;
  total.ce /= nb;
  total.kl /= nb;
  return total;
}

BatchStats finetune_batch(const Dataset& d, const std::vector<int>& indices,
                          const model::ModelState& s, const TrainConfig& cfg,
                          std::vector<double>* grad) {
  return run_chunked(indices, grad,
                     [&](int gi, std::vector<double>* gbuf, LossParts& parts) {
                       return finetune_loss_single(d.graphs[gi], s, cfg, gbuf, &parts);
                     });
}

BatchStats finetune_batch_serial(const Dataset& d, const std::vector<int>& indices,
                                 const model::ModelState& s, const TrainConfig& cfg,
                                 std::vector<double>* grad) {
  const int nb = static_cast<int>(indices.size());
  if (nb == 0) throw ParamError("empty batch");
  if (grad) std::fill(grad->begin(), grad->end(), 0.0);
  BatchStats total;
  for (int gi : indices) {
    LossParts parts;
    double loss;
    try {
      loss = finetune_loss_single(d.graphs[gi], s, cfg, grad, &parts);
    } catch (const NumericError& e) {
      throw NumericError("graph " + std::to_string(gi) + ": " + e.what());
    }
    total.loss += loss;
    total.ce += parts.ce;
    total.kl += parts.kl;
    total.con += parts.con;
    total.correct += parts.correct ? 1 : 0;
    total.count += 1;
  }
  if (grad)
    for (double& x : *grad) x /= nb;
  total.loss /= nb;
  total.ce /= nb;
  total.kl /= nb;
  total.con /= nb;
  return total;
}

BatchStats evaluate_split(const Dataset& d, const std::vector<int>& indices,
                          const model::ModelState& s, const TrainConfig& cfg) {
  check_prior(cfg.r);
  return run_chunked(indices, nullptr, [&](int gi, std::vector<double>*, LossParts& parts) {
    const GraphInstance& g = d.graphs[gi];
    const EdgeIndex idx = EdgeIndex::build(g);
    const EdgeMask ones = EdgeMask::ones(g.num_edges());
    model::EdgeScoreCache sc;
    const model::EdgeProbabilities p = model::score_edges(apply_mask(g, ones), s, idx, sc);
    const EdgeMask zp{p.p};
    const nn::Vec logits = model::predict(apply_mask(g, zp), s);
    parts.ce = nn::cross_entropy(logits, g.label, nullptr);
    parts.kl = kl_bernoulli(p, cfg.r, idx);
    parts.correct = argmax(logits) == g.label;
    const double loss = parts.ce + cfg.beta * parts.kl;
    if (!std::isfinite(loss)) throw NumericError("non-finite loss");
    return loss;
  });
}

TrainResult train_base(const Dataset& d, const model::HyperParams& hp,
                       const TrainConfig& cfg) {
  cfg.validate(false);
  const std::vector<int> train_idx = d.indices_of(Split::train);
  if (train_idx.empty()) throw ParamError("dataset has an empty train split");
  const std::vector<int> valid_idx = d.indices_of(Split::valid);
  TrainResult out{model::ModelState::init(hp, cfg.seed), {}, -1};
  if (cfg.epochs == 0) return out;
  model::ModelState s = out.state;
  nn::Adam adam(s.params.size(), cfg.adam());
  std::vector<double> grad(s.params.size(), 0.0);
  double best_acc = -1.0;
  double best_loss = 0.0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::vector<int> order = train_idx;
    Rng shuffle_rng(Rng::key({cfg.seed, fnv1a64("shuffle"), static_cast<std::uint64_t>(epoch)}));
    fisher_yates(order, shuffle_rng);
    const std::uint64_t gate_key =
        Rng::key({cfg.seed, fnv1a64("gate"), static_cast<std::uint64_t>(epoch)});
    double loss_sum = 0.0;
    int correct_sum = 0;
    for (size_t off = 0; off < order.size(); off += static_cast<size_t>(cfg.batch)) {
      const size_t end = std::min(order.size(), off + static_cast<size_t>(cfg.batch));
      const std::vector<int> batch(order.begin() + off, order.begin() + end);
      const BatchStats stats = gsat_batch(d, batch, s, cfg, gate_key, &grad);
      adam.step(s.params.flat(), grad);
      loss_sum += stats.loss * stats.count;
      correct_sum += stats.correct;
    }
    EpochLog log;
    log.epoch = epoch;
    log.train_loss = loss_sum / static_cast<double>(train_idx.size());
    log.train_acc = static_cast<double>(correct_sum) / static_cast<double>(train_idx.size());
    if (!valid_idx.empty()) {
      const BatchStats ev = evaluate_split(d, valid_idx, s, cfg);
      log.valid_loss = ev.loss;
      log.valid_acc = ev.acc();
      if (ev.acc() > best_acc || (ev.acc() == best_acc && ev.loss < best_loss)) {
        best_acc = ev.acc();
        best_loss = ev.loss;
        out.state = s;
        out.best_epoch = epoch;
      }
    }
    out.curve.push_back(log);
  }
  if (valid_idx.empty()) {
    out.state = s;
    out.best_epoch = cfg.epochs - 1;
  }
  return out;
}

TrainResult finetune(const Dataset& d, const model::ModelState& start,
                     const TrainConfig& cfg) {
  cfg.validate(true);
  const std::vector<int> train_idx = d.indices_of(Split::train);
  if (train_idx.empty()) throw ParamError("dataset has an empty train split");
  const std::vector<int> valid_idx = d.indices_of(Split::valid);
  TrainResult out{start, {}, -1};
  model::ModelState s = start;
  nn::Adam adam(s.params.size(), cfg.adam());
  std::vector<double> grad(s.params.size(), 0.0);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::vector<int> order = train_idx;
    Rng shuffle_rng(Rng::key({cfg.seed, fnv1a64("shuffle"), static_cast<std::uint64_t>(epoch)}));
    fisher_yates(order, shuffle_rng);
    double loss_sum = 0.0;
    int correct_sum = 0;
    for (size_t off = 0; off < order.size(); off += static_cast<size_t>(cfg.batch)) {
      const size_t end = std::min(order.size(), off + static_cast<size_t>(cfg.batch));
      const std::vector<int> batch(order.begin() + off, order.begin() + end);
      const BatchStats stats = finetune_batch(d, batch, s, cfg, &grad);
      adam.step(s.params.flat(), grad);
      loss_sum += stats.loss * stats.count;
      correct_sum += stats.correct;
    }
    EpochLog log;
    log.epoch = epoch;
    log.train_loss = loss_sum / static_cast<double>(train_idx.size());
    log.train_acc = static_cast<double>(correct_sum) / static_cast<double>(train_idx.size());
    if (!valid_idx.empty()) {
      const BatchStats ev = finetune_batch(d, valid_idx, s, cfg, nullptr);
      log.valid_loss = ev.loss;
      log.valid_acc = ev.acc();
    }
    out.curve.push_back(log);
  }
  out.state = std::move(s);
  out.best_epoch = cfg.epochs - 1;
  return out;
}

double mean_consistency(const Dataset& d, const std::vector<int>& indices,
                        const model::ModelState& s, int k) {
  if (k < 2) throw ParamError("consistency needs reflection depth k >= 2");
  if (indices.empty()) throw ParamError("empty split");
  const int n = static_cast<int>(indices.size());
  std::vector<double> vals(static_cast<size_t>(n), 0.0);
  std::vector<std::exception_ptr> errors(static_cast<size_t>(n));
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) {
    try {
      const GraphInstance& g = d.graphs[indices[i]];
      const reflection::ReflectResult r = reflection::reflect(g, s, k, UpdateMode::accumulate);
      vals[i] = consistency_loss(r.seq, EdgeIndex::build(g));
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (const auto& err : errors)
    if (err) std::rethrow_exception(err);
  double sum = 0.0;
  for (double v : vals) sum += v;
  return sum / n;
}

}  // namespace remask::training
