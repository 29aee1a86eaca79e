#include "remask/nn.hpp"

#include <cmath>

#include "remask/errors.hpp"

namespace remask::nn {

Activation parse_activation(const std::string& s) {
  if (s == "identity") return Activation::identity;
  if (s == "relu") return Activation::relu;
  if (s == "tanh") return Activation::tanh;
  throw ConfigError("unknown activation '" + s + "'");
}

std::string to_string(Activation a) {
  switch (a) {
    case Activation::identity: return "identity";
    case Activation::relu: return "relu";
    case Activation::tanh: return "tanh";
  }
  return "?";
}

void apply_activation(Activation a, Mat& x) {
  switch (a) {
    case Activation::identity: return;
    case Activation::relu:
      x = x.array().max(0.0).matrix();
      return;
    case Activation::tanh:
      x = x.array().tanh().matrix();
      return;
  }
}

Mat activation_grad(Activation a, const Mat& pre) {
  switch (a) {
    case Activation::identity: return Mat::Ones(pre.rows(), pre.cols());
    case Activation::relu:
      return (pre.array() > 0.0).cast<double>().matrix();
    case Activation::tanh:
      return (1.0 - pre.array().tanh().square()).matrix();
  }
  return Mat();
}

int ParamStore::add(const std::string& name, int rows, int cols) {
  if (rows <= 0 || cols <= 0)
    throw ParamError("tensor '" + name + "' has non-positive shape");
  if (has(name)) throw ParamError("duplicate tensor name '" + name + "'");
  TensorSpec spec{name, rows, cols, data_.size()};
  data_.resize(data_.size() + spec.count(), 0.0);
  specs_.push_back(std::move(spec));
  return static_cast<int>(specs_.size()) - 1;
}

int ParamStore::id_of(const std::string& name) const {
  for (size_t i = 0; i < specs_.size(); ++i)
    if (specs_[i].name == name) return static_cast<int>(i);
  throw ParamError("no tensor named '" + name + "'");
}

bool ParamStore::has(const std::string& name) const {
  for (const auto& s : specs_)
    if (s.name == name) return true;
  return false;
}

const TensorSpec& ParamStore::spec(int id) const {
  if (id < 0 || id >= num_tensors()) throw ParamError("tensor id out of range");
  return specs_[static_cast<size_t>(id)];
}

MapMat ParamStore::view(int id) {
  const TensorSpec& s = spec(id);
  return MapMat(data_.data() + s.offset, s.rows, s.cols);
}

CMapMat ParamStore::view(int id) const {
  const TensorSpec& s = spec(id);
  return CMapMat(data_.data() + s.offset, s.rows, s.cols);
}

MapMat ParamStore::view_in(std::vector<double>& buf, int id) const {
  if (buf.size() != data_.size())
    throw DimensionError("buffer size does not match parameter count");
  const TensorSpec& s = spec(id);
  return MapMat(buf.data() + s.offset, s.rows, s.cols);
}

CMapMat ParamStore::view_in(const std::vector<double>& buf, int id) const {
  if (buf.size() != data_.size())
    throw DimensionError("buffer size does not match parameter count");
  const TensorSpec& s = spec(id);
  return CMapMat(buf.data() + s.offset, s.rows, s.cols);
}

void xavier_uniform(MapMat w, Rng& rng) {
  const double a = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
  double* p = w.data();
  for (Eigen::Index i = 0; i < w.size(); ++i) p[i] = rng.next_uniform(-a, a);
}

double global_norm(const std::vector<double>& g) {
  double s = 0.0;
  for (double x : g) s += x * x;
  return std::sqrt(s);
}

void clip_global_norm(std::vector<double>& g, double max_norm) {
  if (max_norm <= 0.0) return;
  const double norm = global_norm(g);
  if (norm <= max_norm) return;
  const double scale = max_norm / norm;
  for (double& x : g) x *= scale;
}

Adam::Adam(std::size_t num_params, AdamConfig cfg)
    : cfg_(cfg), m_(num_params, 0.0), v_(num_params, 0.0) {
  if (cfg_.lr <= 0.0) throw ParamError("learning rate must be positive");
  if (cfg_.beta1 < 0.0 || cfg_.beta1 >= 1.0 || cfg_.beta2 < 0.0 || cfg_.beta2 >= 1.0)
    throw ParamError("Adam betas must lie in [0, 1)");
}

void Adam::step(std::vector<double>& params, std::vector<double>& grads) {
  if (params.size() != m_.size() || grads.size() != m_.size())
    throw DimensionError("Adam buffers do not match parameter count");
  clip_global_norm(grads, cfg_.clip_norm);
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, t_);
  const double bc2 = 1.0 - std::pow(cfg_.beta2, t_);
  for (size_t i = 0; i < params.size(); ++i) {
    m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * grads[i];
    v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * grads[i] * grads[i];
    const double mhat = m_[i] / bc1;
    const double vhat = v_[i] / bc2;
    params[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
  }
}

Vec softmax(const Vec& logits) {
  const double m = logits.maxCoeff();
  Vec e = (logits.array() - m).exp();
  return e / e.sum();
}

double cross_entropy(const Vec& logits, int label, Vec* dlogits) {
  if (label < 0 || label >= logits.size())
    throw DimensionError("label out of range for logit vector");
  const double m = logits.maxCoeff();
  const double lse = m + std::log((logits.array() - m).exp().sum());
  if (dlogits) {
    *dlogits = (logits.array() - lse).exp();
    (*dlogits)(label) -= 1.0;
  }
  return lse - logits(label);
}

}  // namespace remask::nn
