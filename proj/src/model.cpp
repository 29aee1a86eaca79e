#include "remask/model.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "remask/errors.hpp"
#include "remask/hash.hpp"

namespace remask::model {

namespace {

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double clamp_prob(double p) {
  if (p < kProbClamp) return kProbClamp;
  if (p > 1.0 - kProbClamp) return 1.0 - kProbClamp;
  return p;
}

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

const std::vector<LayerIds>& encoder_of(const ModelState& s, Tower tower) {
  return tower == Tower::upstream ? s.enc_f : s.enc_d;
}

void check_masked(const MaskedGraph& mg) {
  if (!mg.graph || !mg.weights) throw DimensionError("masked graph view is incomplete");
  if (mg.graph->num_nodes <= 0) throw DimensionError("graph has no nodes");
}

}  // namespace

void HyperParams::validate() const {
  if (feat_dim < 1) throw ParamError("feat_dim must be >= 1");
  if (num_classes < 2) throw ParamError("num_classes must be >= 2");
  if (hidden < 1) throw ParamError("hidden width must be >= 1");
  if (layers < 1) throw ParamError("layer count must be >= 1");
  if (!(tau > 0.0)) throw ParamError("gate temperature tau must be positive");
  if (!(r > 0.0) || !(r < 1.0)) throw ParamError("gate prior r must lie in (0, 1)");
  if (beta < 0.0) throw ParamError("bottleneck weight beta must be non-negative");
}

ModelState ModelState::shell(const HyperParams& hp) {
  hp.validate();
  ModelState s;
  s.hyper = hp;
  const int h = hp.hidden;
  auto add_encoder = [&](const char* prefix) {
    std::vector<LayerIds> ids;
    for (int l = 0; l < hp.layers; ++l) {
      const int in = (l == 0) ? hp.feat_dim : h;
      const std::string base = std::string(prefix) + ".enc" + std::to_string(l);
      LayerIds lid;
      lid.w1 = s.params.add(base + ".w1", h, in);
      lid.b1 = s.params.add(base + ".b1", h, 1);
      lid.w2 = s.params.add(base + ".w2", h, h);
      lid.b2 = s.params.add(base + ".b2", h, 1);
      lid.eps = s.params.add(base + ".eps", 1, 1);
      ids.push_back(lid);
    }
    return ids;
  };
  s.enc_f = add_encoder("f");
  s.enc_d = add_encoder("d");
  s.edge.w1 = s.params.add("f.edge.w1", h, 2 * h);
  s.edge.b1 = s.params.add("f.edge.b1", h, 1);
  s.edge.w2 = s.params.add("f.edge.w2", 1, h);
  s.edge.b2 = s.params.add("f.edge.b2", 1, 1);
  s.clf.w1 = s.params.add("d.clf.w1", h, h);
  s.clf.b1 = s.params.add("d.clf.b1", h, 1);
  s.clf.w2 = s.params.add("d.clf.w2", hp.num_classes, h);
  s.clf.b2 = s.params.add("d.clf.b2", hp.num_classes, 1);
  return s;
}

ModelState ModelState::init(const HyperParams& hp, std::uint64_t seed) {
  ModelState s = shell(hp);
  auto fill = [&](int id) {
    Rng rng(Rng::key({seed, fnv1a64("init"), static_cast<std::uint64_t>(id)}));
    nn::xavier_uniform(s.params.view(id), rng);
  };
  for (const auto& ids : {s.enc_f, s.enc_d})
    for (const LayerIds& l : ids) {
      fill(l.w1);
      fill(l.w2);
    }
  fill(s.edge.w1);
  fill(s.clf.w1);
  // f.edge.w2/b2 and d.clf.w2/b2 stay zero: the fresh scorer emits p=0.5 and
  // the fresh classifier uniform logits.
  return s;
}

nn::Mat encode_nodes(const MaskedGraph& mg, const ModelState& s, Tower tower,
                     EncoderCache& cache) {
  check_masked(mg);
  const GraphInstance& g = *mg.graph;
  if (g.feat_dim != s.hyper.feat_dim)
    throw DimensionError("graph feature dim " + std::to_string(g.feat_dim) +
                         " does not match encoder input width " +
                         std::to_string(s.hyper.feat_dim));
  const int n = g.num_nodes;
  const auto& layers = encoder_of(s, tower);
  cache.x.clear();
  cache.agg.clear();
  cache.pre1.clear();
  cache.hid.clear();
  cache.x.push_back(nn::CMapMat(g.node_features.data(), g.feat_dim, n));
  for (const LayerIds& lid : layers) {
    const nn::Mat& x = cache.x.back();
    const double eps = s.params.view(lid.eps)(0, 0);
    nn::Mat agg = (1.0 + eps) * x;
    for (int e = 0; e < g.num_edges(); ++e)
      agg.col(g.edges[e].second) += mg.weight(e) * x.col(g.edges[e].first);
    nn::Mat pre1 = (s.params.view(lid.w1) * agg).colwise() + s.params.view(lid.b1).col(0);
    nn::Mat hid = pre1;
    nn::apply_activation(s.hyper.activation, hid);
    nn::Mat out = (s.params.view(lid.w2) * hid).colwise() + s.params.view(lid.b2).col(0);
    cache.agg.push_back(std::move(agg));
    cache.pre1.push_back(std::move(pre1));
    cache.hid.push_back(std::move(hid));
    cache.x.push_back(std::move(out));
  }
  return cache.x.back();
}

nn::Mat encode_nodes(const MaskedGraph& mg, const ModelState& s, Tower tower) {
  EncoderCache cache;
  return encode_nodes(mg, s, tower, cache);
}

void encoder_backward(const MaskedGraph& mg, const ModelState& s, Tower tower,
                      const EncoderCache& cache, const nn::Mat& g_out,
                      std::vector<double>& grad_buf, double* grad_z) {
  check_masked(mg);
  const GraphInstance& g = *mg.graph;
  const auto& layers = encoder_of(s, tower);
  if (cache.x.size() != layers.size() + 1)
    throw DimensionError("encoder cache does not match layer count");
  nn::Mat grad = g_out;
  for (int l = static_cast<int>(layers.size()) - 1; l >= 0; --l) {
    const LayerIds& lid = layers[l];
    const nn::Mat& x = cache.x[static_cast<size_t>(l)];
    const double eps = s.params.view(lid.eps)(0, 0);
    s.params.view_in(grad_buf, lid.w2) += grad * cache.hid[l].transpose();
    s.params.view_in(grad_buf, lid.b2).col(0) += grad.rowwise().sum();
    nn::Mat ghid = s.params.view(lid.w2).transpose() * grad;
    nn::Mat gpre = ghid.cwiseProduct(nn::activation_grad(s.hyper.activation, cache.pre1[l]));
    s.params.view_in(grad_buf, lid.w1) += gpre * cache.agg[l].transpose();
    s.params.view_in(grad_buf, lid.b1).col(0) += gpre.rowwise().sum();
    nn::Mat gagg = s.params.view(lid.w1).transpose() * gpre;
    s.params.view_in(grad_buf, lid.eps)(0, 0) += gagg.cwiseProduct(x).sum();
    nn::Mat gx = (1.0 + eps) * gagg;
    for (int e = 0; e < g.num_edges(); ++e) {
      const auto [u, v] = g.edges[e];
      if (grad_z) grad_z[e] += gagg.col(v).dot(x.col(u));
      gx.col(u) += mg.weight(e) * gagg.col(v);
    }
    grad = std::move(gx);
  }
}

EdgeProbabilities score_edges(const MaskedGraph& mg, const ModelState& s,
                              const EdgeIndex& idx, EdgeScoreCache& cache) {
  check_masked(mg);
  const GraphInstance& g = *mg.graph;
  const int h = s.hyper.hidden;
  const int ne = g.num_edges();
  const nn::Mat hnodes = encode_nodes(mg, s, Tower::upstream, cache.enc);
  const auto w1 = s.params.view(s.edge.w1);
  cache.pa = w1.block(0, 0, h, h) * hnodes;
  cache.pb = w1.block(0, h, h, h) * hnodes;
  cache.pre.resize(h, ne);
  const auto b1 = s.params.view(s.edge.b1);
  for (int e = 0; e < ne; ++e)
    cache.pre.col(e) = cache.pa.col(g.edges[e].first) + cache.pb.col(g.edges[e].second) +
                       b1.col(0);
  cache.hid = cache.pre;
  nn::apply_activation(s.hyper.activation, cache.hid);
  const auto w2 = s.params.view(s.edge.w2);
  const double b2 = s.params.view(s.edge.b2)(0, 0);
  cache.q.assign(static_cast<size_t>(ne), 0.0);
  for (int e = 0; e < ne; ++e)
    cache.q[e] = sigmoid((w2 * cache.hid.col(e))(0, 0) + b2);
  EdgeProbabilities out;
  out.p.assign(static_cast<size_t>(ne), 0.0);
  cache.mean_q.assign(static_cast<size_t>(idx.num_undirected()), 0.0);
  for (int j = 0; j < idx.num_undirected(); ++j) {
    const auto [a, b] = idx.dir_of[j];
    const double m = 0.5 * (cache.q[a] + cache.q[b]);
    cache.mean_q[j] = m;
    out.p[a] = out.p[b] = clamp_prob(m);
  }
  return out;
}

EdgeProbabilities score_edges(const MaskedGraph& mg, const ModelState& s) {
  check_masked(mg);
  const EdgeIndex idx = EdgeIndex::build(*mg.graph);
  EdgeScoreCache cache;
  return score_edges(mg, s, idx, cache);
}

void score_edges_backward(const MaskedGraph& mg, const ModelState& s,
                          const EdgeIndex& idx, const EdgeScoreCache& cache,
                          const std::vector<double>& g_p,
                          std::vector<double>& grad_buf, double* grad_z) {
  check_masked(mg);
  const GraphInstance& g = *mg.graph;
  const int h = s.hyper.hidden;
  const int ne = g.num_edges();
  if (static_cast<int>(g_p.size()) != ne)
    throw DimensionError("probability gradient length does not match edge count");
  Eigen::RowVectorXd gs = Eigen::RowVectorXd::Zero(ne);
  for (int j = 0; j < idx.num_undirected(); ++j) {
    const auto [a, b] = idx.dir_of[j];
    const double m = cache.mean_q[j];
    const double inside = (m > kProbClamp && m < 1.0 - kProbClamp) ? 1.0 : 0.0;
    const double gq = 0.5 * (g_p[a] + g_p[b]) * inside;
    gs(a) = gq * cache.q[a] * (1.0 - cache.q[a]);
    gs(b) = gq * cache.q[b] * (1.0 - cache.q[b]);
  }
  const auto w2 = s.params.view(s.edge.w2);
  s.params.view_in(grad_buf, s.edge.w2) += gs * cache.hid.transpose();
  s.params.view_in(grad_buf, s.edge.b2)(0, 0) += gs.sum();
  nn::Mat ghid = w2.transpose() * gs;
  nn::Mat gpre = ghid.cwiseProduct(nn::activation_grad(s.hyper.activation, cache.pre));
  s.params.view_in(grad_buf, s.edge.b1).col(0) += gpre.rowwise().sum();
  const int n = g.num_nodes;
  nn::Mat gpa = nn::Mat::Zero(h, n);
  nn::Mat gpb = nn::Mat::Zero(h, n);
  for (int e = 0; e < ne; ++e) {
    gpa.col(g.edges[e].first) += gpre.col(e);
    gpb.col(g.edges[e].second) += gpre.col(e);
  }
  const nn::Mat& hnodes = cache.enc.x.back();
  auto gw1 = s.params.view_in(grad_buf, s.edge.w1);
  gw1.block(0, 0, h, h) += gpa * hnodes.transpose();
  gw1.block(0, h, h, h) += gpb * hnodes.transpose();
  const auto w1 = s.params.view(s.edge.w1);
  nn::Mat gh = w1.block(0, 0, h, h).transpose() * gpa +
               w1.block(0, h, h, h).transpose() * gpb;
  encoder_backward(mg, s, Tower::upstream, cache.enc, gh, grad_buf, grad_z);
}

EdgeMask sample_gates(const EdgeProbabilities& p, double tau, const EdgeIndex& idx,
                      Rng& rng) {
  if (!(tau > 0.0)) throw ParamError("gate temperature tau must be positive");
  if (p.size() != idx.num_directed())
    throw DimensionError("probability vector does not match edge count");
  EdgeMask z = EdgeMask::ones(p.size());
  for (int j = 0; j < idx.num_undirected(); ++j) {
    const auto [a, b] = idx.dir_of[j];
    const double u = rng.next_open();
    const double pe = clamp_prob(p.p[a]);
    const double logit = std::log(pe) - std::log(1.0 - pe) + std::log(u) - std::log(1.0 - u);
    z.scores[a] = z.scores[b] = sigmoid(logit / tau);
  }
  return z;
}

nn::Vec predict(const MaskedGraph& mg, const ModelState& s, PredictCache& cache) {
  const nn::Mat hnodes = encode_nodes(mg, s, Tower::downstream, cache.enc);
  cache.pool = hnodes.rowwise().mean();
  cache.pre = s.params.view(s.clf.w1) * cache.pool + s.params.view(s.clf.b1).col(0);
  nn::Mat hid = cache.pre;
  nn::apply_activation(s.hyper.activation, hid);
  cache.hid = hid.col(0);
  return s.params.view(s.clf.w2) * cache.hid + s.params.view(s.clf.b2).col(0);
}

nn::Vec predict(const MaskedGraph& mg, const ModelState& s) {
  PredictCache cache;
  return predict(mg, s, cache);
}

void predict_backward(const MaskedGraph& mg, const ModelState& s,
                      const PredictCache& cache, const nn::Vec& g_logits,
                      std::vector<double>& grad_buf, double* grad_z) {
  check_masked(mg);
  if (g_logits.size() != s.hyper.num_classes)
    throw DimensionError("logit gradient length does not match class count");
  s.params.view_in(grad_buf, s.clf.w2) += g_logits * cache.hid.transpose();
  s.params.view_in(grad_buf, s.clf.b2).col(0) += g_logits;
  nn::Vec ghid = s.params.view(s.clf.w2).transpose() * g_logits;
  nn::Mat pre = cache.pre;
  nn::Vec gpre = ghid.cwiseProduct(nn::activation_grad(s.hyper.activation, pre).col(0));
  s.params.view_in(grad_buf, s.clf.w1) += gpre * cache.pool.transpose();
  s.params.view_in(grad_buf, s.clf.b1).col(0) += gpre;
  nn::Vec gpool = s.params.view(s.clf.w1).transpose() * gpre;
  const int n = mg.graph->num_nodes;
  nn::Mat gh = (gpool / static_cast<double>(n)) * Eigen::RowVectorXd::Ones(n);
  encoder_backward(mg, s, Tower::downstream, cache.enc, gh, grad_buf, grad_z);
}

std::string serialize_checkpoint(const ModelState& s) {
  std::ostringstream out;
  out << "remask-checkpoint v1\n";
  out << "hyper feat_dim=" << s.hyper.feat_dim << " classes=" << s.hyper.num_classes
      << " hidden=" << s.hyper.hidden << " layers=" << s.hyper.layers
      << " activation=" << nn::to_string(s.hyper.activation)
      << " tau=" << fmt_double(s.hyper.tau) << " r=" << fmt_double(s.hyper.r)
      << " beta=" << fmt_double(s.hyper.beta) << "\n";
  for (int id = 0; id < s.params.num_tensors(); ++id) {
    const nn::TensorSpec& spec = s.params.spec(id);
    out << "tensor " << spec.name << ' ' << spec.rows << ' ' << spec.cols << "\n";
    const double* data = s.params.flat().data() + spec.offset;
    for (std::size_t i = 0; i < spec.count(); ++i) {
      if (i) out << ' ';
      out << fmt_double(data[i]);
    }
    out << "\n";
  }
  out << "end\n";
  return out.str();
}

ModelState parse_checkpoint(const std::string& text, const std::string& origin) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "remask-checkpoint v1") {
    if (line.rfind("remask-checkpoint", 0) == 0)
      throw DataError(origin + ": unsupported checkpoint version '" + line + "'");
    throw DataError(origin + ": not a checkpoint file");
  }
  if (!std::getline(in, line) || line.rfind("hyper ", 0) != 0)
    throw DataError(origin + ": missing hyperparameter record");
  HyperParams hp;
  {
    std::istringstream hs(line.substr(6));
    std::string tok;
    while (hs >> tok) {
      const size_t eq = tok.find('=');
      if (eq == std::string::npos)
        throw DataError(origin + ": malformed hyper field '" + tok + "'");
      const std::string key = tok.substr(0, eq);
      const std::string val = tok.substr(eq + 1);
      try {
        if (key == "feat_dim") hp.feat_dim = std::stoi(val);
        else if (key == "classes") hp.num_classes = std::stoi(val);
        else if (key == "hidden") hp.hidden = std::stoi(val);
        else if (key == "layers") hp.layers = std::stoi(val);
        else if (key == "activation") hp.activation = nn::parse_activation(val);
        else if (key == "tau") hp.tau = std::stod(val);
        else if (key == "r") hp.r = std::stod(val);
        else if (key == "beta") hp.beta = std::stod(val);
        else throw DataError(origin + ": unknown hyper field '" + key + "'");
      } catch (const DataError&) {
        throw;
      } catch (const std::exception&) {
        throw DataError(origin + ": bad hyper value '" + tok + "'");
      }
    }
  }
  ModelState s = ModelState::shell(hp);
  std::vector<bool> filled(static_cast<size_t>(s.params.num_tensors()), false);
  bool saw_end = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line == "end") {
      saw_end = true;
      break;
    }
    std::istringstream ls(line);
    std::string tag, name;
    int rows = 0, cols = 0;
    if (!(ls >> tag >> name >> rows >> cols) || tag != "tensor")
      throw DataError(origin + ": malformed tensor record '" + line + "'");
    int id = -1;
    try {
      id = s.params.id_of(name);
    } catch (const ParamError&) {
      throw DataError(origin + ": unexpected tensor '" + name + "'");
    }
    const nn::TensorSpec& spec = s.params.spec(id);
    if (rows != spec.rows || cols != spec.cols)
      throw DataError(origin + ": tensor '" + name + "' has shape " + std::to_string(rows) +
                      "x" + std::to_string(cols) + ", expected " + std::to_string(spec.rows) +
                      "x" + std::to_string(spec.cols));
    if (filled[static_cast<size_t>(id)])
      throw DataError(origin + ": duplicate tensor '" + name + "'");
    if (!std::getline(in, line))
      throw DataError(origin + ": missing values for tensor '" + name + "'");
    std::istringstream vs(line);
    double* data = s.params.flat().data() + spec.offset;
    for (std::size_t i = 0; i < spec.count(); ++i)
      if (!(vs >> data[i]))
        throw DataError(origin + ": tensor '" + name + "' has fewer than " +
                        std::to_string(spec.count()) + " values");
    double extra;
    if (vs >> extra)
      throw DataError(origin + ": tensor '" + name + "' has more than " +
                      std::to_string(spec.count()) + " values");
    filled[static_cast<size_t>(id)] = true;
  }
  if (!saw_end) throw DataError(origin + ": truncated checkpoint (missing end marker)");
  for (int id = 0; id < s.params.num_tensors(); ++id)
    if (!filled[static_cast<size_t>(id)])
      throw DataError(origin + ": tensor '" + s.params.spec(id).name + "' is missing");
  return s;
}

void save_checkpoint(const ModelState& s, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open '" + path + "' for writing");
  f << serialize_checkpoint(s);
  if (!f) throw DataError("write to '" + path + "' failed");
}

ModelState load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open checkpoint '" + path + "'");
  std::ostringstream buf;
  buf << f.rdbuf();
  return parse_checkpoint(buf.str(), path);
}

}  // namespace remask::model
