#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "remask/rng.hpp"

namespace remask::nn {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using MapMat = Eigen::Map<Eigen::MatrixXd>;
using CMapMat = Eigen::Map<const Eigen::MatrixXd>;

enum class Activation { identity, relu, tanh };

Activation parse_activation(const std::string& s);
std::string to_string(Activation a);

void apply_activation(Activation a, Mat& x);
// Elementwise derivative evaluated at the pre-activation values.
Mat activation_grad(Activation a, const Mat& pre);

struct TensorSpec {
  std::string name;
  int rows = 0;
  int cols = 0;
  std::size_t offset = 0;

  std::size_t count() const {
    return static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols);
  }
};

// Named tensors backed by one flat buffer, so the optimizer, gradient and
// moment buffers all share a single layout. Views are column-major maps.
class ParamStore {
 public:
  int add(const std::string& name, int rows, int cols);
  int id_of(const std::string& name) const;
  bool has(const std::string& name) const;

  int num_tensors() const { return static_cast<int>(specs_.size()); }
  const TensorSpec& spec(int id) const;
  std::size_t size() const { return data_.size(); }

  std::vector<double>& flat() { return data_; }
  const std::vector<double>& flat() const { return data_; }

  MapMat view(int id);
  CMapMat view(int id) const;

  // Same-layout view into an external buffer of identical size.
  MapMat view_in(std::vector<double>& buf, int id) const;
  CMapMat view_in(const std::vector<double>& buf, int id) const;

 private:
  std::vector<TensorSpec> specs_;
  std::vector<double> data_;
};

// U(-a, a) with a = sqrt(6 / (fan_in + fan_out)); rows are outputs. Entries
// are drawn in storage order.
void xavier_uniform(MapMat w, Rng& rng);

double global_norm(const std::vector<double>& g);
// Rescales g in place when its global norm exceeds max_norm.
void clip_global_norm(std::vector<double>& g, double max_norm);

struct AdamConfig {
  double lr = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double clip_norm = 5.0;  // applied to the global gradient norm; <= 0 disables
};

class Adam {
 public:
  Adam(std::size_t num_params, AdamConfig cfg);

  // Clips grads in place, then applies one bias-corrected update.
  void step(std::vector<double>& params, std::vector<double>& grads);
  int steps_taken() const { return t_; }
  const AdamConfig& config() const { return cfg_; }

 private:
  AdamConfig cfg_;
  std::vector<double> m_;
  std::vector<double> v_;
  int t_ = 0;
};

Vec softmax(const Vec& logits);

// Stable cross entropy for one sample; writes d(loss)/d(logits) when
// dlogits is non-null.
double cross_entropy(const Vec& logits, int label, Vec* dlogits);

}  // namespace remask::nn
