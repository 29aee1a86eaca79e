#pragma once

#include <cstdint>
#include <string>

#include "remask/model.hpp"
#include "remask/training.hpp"

namespace remask::config {

struct DatasetSection {
  std::string kind = "spmotif";
  int n = 1000;
  double bias = 0.5;
  std::uint64_t seed = 0;
  int feat_dim = 4;
  bool random_features = false;
  int tree_depth_min = 3;
  int tree_depth_max = 4;
  int ladder_rungs_min = 4;
  int ladder_rungs_max = 8;
  int wheel_rim_min = 6;
  int wheel_rim_max = 12;
  int ba_nodes = 20;
  int ba_attach = 1;
};

struct ModelSection {
  int hidden = 64;
  int layers = 2;
  std::string activation = "tanh";
  double tau = 1.0;
};

struct TrainSection {
  int epochs = 100;
  int batch = 128;
  double lr = 5e-4;
  double beta = 1.0;
  double r = 0.7;
  std::uint64_t seed = 0;
  bool finetune = false;
  int ft_k = 2;
  double ft_lr = 1e-4;
  int ft_epochs = 10;
  int ft_batch = 512;
  std::string ft_mode = "consistency";
};

struct ReflectSection {
  int k = 8;
  std::string mode = "accumulate";
};

struct EvalSection {
  std::string split = "test";
  bool per_graph_auc = false;
};

struct SplitCounts {
  int train = 0;
  int valid = 0;
  int test = 0;
};

// 80/10/10 split of n graphs; the remainder goes to test.
SplitCounts split_counts(int n);

int num_classes_for(const std::string& kind);

struct ExperimentConfig {
  DatasetSection dataset;
  ModelSection model;
  TrainSection train;
  ReflectSection reflect;
  EvalSection eval;

  void validate() const;
  // Stable text form with every key in a fixed order; equal configs hash equal.
  std::string canonical() const;
  std::string hash() const;

  model::HyperParams hyper() const;
  training::TrainConfig train_config() const;
  training::TrainConfig finetune_config() const;
};

// INI-style text: [section] headers, key = value lines, # or ; comments.
// Unknown sections, unknown keys, duplicates, and malformed values all raise
// ConfigError naming the origin and line.
ExperimentConfig parse_config(const std::string& text, const std::string& origin);
ExperimentConfig load_config(const std::string& path);

}  // namespace remask::config
