#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "remask/dataset.hpp"
#include "remask/graph.hpp"
#include "remask/model.hpp"
#include "remask/rng.hpp"

namespace remask::training {

enum class FinetuneMode { consistency, raw };

FinetuneMode parse_finetune_mode(const std::string& s);
std::string to_string(FinetuneMode m);

struct TrainConfig {
  int epochs = 100;
  int batch = 128;
  double lr = 5e-4;
  double beta = 1.0;  // bottleneck weight
  double r = 0.7;     // gate prior
  std::uint64_t seed = 0;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  double clip_norm = 5.0;
  int k = 2;  // unroll depth, fine-tune only
  FinetuneMode mode = FinetuneMode::consistency;

  void validate(bool finetune) const;
  nn::AdamConfig adam() const;
};

// Mean over undirected edges of p log(p/r) + (1-p) log((1-p)/(1-r)).
double kl_bernoulli(const model::EdgeProbabilities& p, double r, const EdgeIndex& idx);

// Average pairwise l1 distance between masks Z^(1..k), one value per
// undirected edge; k >= 2.
double consistency_loss(const std::vector<std::vector<double>>& masks);
// Same over a reflection MaskSequence (Z^(0) excluded).
double consistency_loss(const MaskSequence& seq, const EdgeIndex& idx);

struct LossParts {
  double ce = 0.0;
  double kl = 0.0;
  double con = 0.0;
  bool correct = false;
};

// One graph's GSAT objective: p = F(G), z ~ gates(p), loss =
// CE(D(G (.) z), Y) + beta*KL(p, r). Adds gradients into *grad when non-null.
double gsat_loss_single(const GraphInstance& g, const model::ModelState& s,
                        const TrainConfig& cfg, Rng& gate_rng,
                        std::vector<double>* grad, LossParts* parts = nullptr);

// One graph's fine-tune objective over the deterministic unrolled reflection
// loop (accumulate mode, depth cfg.k). consistency mode: L_con + CE at Z^(k);
// raw mode: mean over t of CE(D(G (.) Z^(t)), Y) + beta*KL(p~^(t), r).
double finetune_loss_single(const GraphInstance& g, const model::ModelState& s,
                            const TrainConfig& cfg, std::vector<double>* grad,
                            LossParts* parts = nullptr);

struct BatchStats {
  double loss = 0.0;
  double ce = 0.0;
  double kl = 0.0;
  double con = 0.0;
  int correct = 0;
  int count = 0;

  double acc() const { return count > 0 ? static_cast<double>(correct) / count : 0.0; }
};

// Batch mean of gsat_loss_single; gate noise for dataset graph i is keyed by
// (noise_key, i) so results do not depend on batch order or thread count.
// Parallel version reduces fixed-size chunks in deterministic order.
BatchStats gsat_batch(const Dataset& d, const std::vector<int>& indices,
                      const model::ModelState& s, const TrainConfig& cfg,
                      std::uint64_t noise_key, std::vector<double>* grad);
BatchStats gsat_batch_serial(const Dataset& d, const std::vector<int>& indices,
                             const model::ModelState& s, const TrainConfig& cfg,
                             std::uint64_t noise_key, std::vector<double>* grad);

BatchStats finetune_batch(const Dataset& d, const std::vector<int>& indices,
                          const model::ModelState& s, const TrainConfig& cfg,
                          std::vector<double>* grad);
BatchStats finetune_batch_serial(const Dataset& d, const std::vector<int>& indices,
                                 const model::ModelState& s, const TrainConfig& cfg,
                                 std::vector<double>* grad);

// Deterministic inference-mode (z = p, no sampling) loss and accuracy.
BatchStats evaluate_split(const Dataset& d, const std::vector<int>& indices,
                          const model::ModelState& s, const TrainConfig& cfg);

struct EpochLog {
  int epoch = 0;
  double train_loss = 0.0;
  double train_acc = 0.0;
  double valid_loss = 0.0;
  double valid_acc = 0.0;
};

struct TrainResult {
  model::ModelState state;
  std::vector<EpochLog> curve;
  int best_epoch = -1;
};

// Adam over shuffled mini-batches of gsat_loss; retains the checkpoint with
// the best validation accuracy (ties: lower loss, then earlier epoch).
TrainResult train_base(const Dataset& d, const model::HyperParams& hp,
                       const TrainConfig& cfg);

// Fine-tunes a trained checkpoint with finetune_loss; returns the
// final-epoch parameters.
TrainResult finetune(const Dataset& d, const model::ModelState& start,
                     const TrainConfig& cfg);

// Mean consistency_loss of accumulate-mode reflection at depth k over a split.
double mean_consistency(const Dataset& d, const std::vector<int>& indices,
                        const model::ModelState& s, int k);

}  // namespace remask::training
