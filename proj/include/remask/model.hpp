#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "remask/graph.hpp"
#include "remask/nn.hpp"
#include "remask/rng.hpp"

namespace remask::model {

// Probabilities are clamped into [kProbClamp, 1-kProbClamp] before any
// logarithm touches them.
inline constexpr double kProbClamp = 1e-6;

struct HyperParams {
  int feat_dim = 4;
  int num_classes = 3;
  int hidden = 64;
  int layers = 2;
  nn::Activation activation = nn::Activation::tanh;
  double tau = 1.0;   // gate temperature
  double r = 0.7;     // gate prior
  double beta = 1.0;  // bottleneck weight

  void validate() const;

  bool operator==(const HyperParams&) const = default;
};

struct LayerIds {
  int w1 = -1, b1 = -1, w2 = -1, b2 = -1, eps = -1;
};

struct HeadIds {
  int w1 = -1, b1 = -1, w2 = -1, b2 = -1;
};

// Parameters of both towers. The upstream scorer F owns enc_f + edge head;
// the downstream classifier D owns enc_d + classifier head.
struct ModelState {
  HyperParams hyper;
  nn::ParamStore params;
  std::vector<LayerIds> enc_f;
  std::vector<LayerIds> enc_d;
  HeadIds edge;  // w1: h x 2h over concat(h_src, h_dst); w2: 1 x h
  HeadIds clf;   // w1: h x h; w2: C x h

  // Registers all tensors with zeroed values.
  static ModelState shell(const HyperParams& hp);
  // Xavier weights keyed by (seed, tensor); final head layers start at zero
  // so the initial scorer emits p=0.5 and the classifier uniform logits.
  static ModelState init(const HyperParams& hp, std::uint64_t seed);
};

struct EdgeProbabilities {
  std::vector<double> p;  // per directed edge, symmetric over duplicates

  int size() const { return static_cast<int>(p.size()); }
};

enum class Tower { upstream, downstream };

struct EncoderCache {
  std::vector<nn::Mat> x;     // layer inputs; x[layers] is the output
  std::vector<nn::Mat> agg;   // weighted-sum aggregation per layer
  std::vector<nn::Mat> pre1;  // first linear pre-activation per layer
  std::vector<nn::Mat> hid;   // activated hidden per layer
};

// L rounds of h_v <- MLP((1+eps)*h_v + sum_u z_uv * h_u); returns h x n.
nn::Mat encode_nodes(const MaskedGraph& mg, const ModelState& s, Tower tower);
nn::Mat encode_nodes(const MaskedGraph& mg, const ModelState& s, Tower tower,
                     EncoderCache& cache);

// Accumulates d(loss)/d(params) into grad_buf (same layout as s.params) and,
// when grad_z is non-null, d(loss)/d(edge weight) per directed edge.
void encoder_backward(const MaskedGraph& mg, const ModelState& s, Tower tower,
                      const EncoderCache& cache, const nn::Mat& g_out,
                      std::vector<double>& grad_buf, double* grad_z);

struct EdgeScoreCache {
  EncoderCache enc;
  nn::Mat pa, pb;              // per-node projections of the two w1 blocks
  nn::Mat pre, hid;            // edge head, h x directed-edge-count
  std::vector<double> q;       // sigmoid output per directed edge
  std::vector<double> mean_q;  // duplicate average per undirected slot, pre-clamp
};

// The upstream network F: p_e = sigmoid(head(concat(h_src, h_dst))),
// duplicates averaged, clamped into (0,1).
EdgeProbabilities score_edges(const MaskedGraph& mg, const ModelState& s);
EdgeProbabilities score_edges(const MaskedGraph& mg, const ModelState& s,
                              const EdgeIndex& idx, EdgeScoreCache& cache);

// g_p is d(loss)/dp per directed edge position.
void score_edges_backward(const MaskedGraph& mg, const ModelState& s,
                          const EdgeIndex& idx, const EdgeScoreCache& cache,
                          const std::vector<double>& g_p,
                          std::vector<double>& grad_buf, double* grad_z);

// Concrete relaxation: z = sigmoid((logit p + logit u) / tau), one u per
// undirected edge shared across duplicates.
EdgeMask sample_gates(const EdgeProbabilities& p, double tau, const EdgeIndex& idx,
                      Rng& rng);

struct PredictCache {
  EncoderCache enc;
  nn::Vec pool, pre, hid;
};

// The downstream network D: mean-pool then classifier head; returns C logits.
nn::Vec predict(const MaskedGraph& mg, const ModelState& s);
nn::Vec predict(const MaskedGraph& mg, const ModelState& s, PredictCache& cache);

void predict_backward(const MaskedGraph& mg, const ModelState& s,
                      const PredictCache& cache, const nn::Vec& g_logits,
                      std::vector<double>& grad_buf, double* grad_z);

std::string serialize_checkpoint(const ModelState& s);
ModelState parse_checkpoint(const std::string& text, const std::string& origin);
void save_checkpoint(const ModelState& s, const std::string& path);
ModelState load_checkpoint(const std::string& path);

}  // namespace remask::model
