#include "remask/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "remask/dataset.hpp"
#include "remask/errors.hpp"
#include "remask/hash.hpp"
#include "remask/nn.hpp"

namespace remask::config {

namespace {

std::string trim(const std::string& s) {
  const std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

SplitCounts split_counts(int n) {
  if (n < 1) throw ConfigError("dataset size must be >= 1");
  SplitCounts c;
  c.train = n * 8 / 10;
  c.valid = n / 10;
  c.test = n - c.train - c.valid;
  return c;
}

int num_classes_for(const std::string& kind) {
  if (kind == "spmotif") return 3;
  if (kind == "ba2motifs") return 2;
  throw ConfigError("unknown dataset kind '" + kind + "'");
}

void ExperimentConfig::validate() const {
  num_classes_for(dataset.kind);
  if (dataset.n < 1) throw ConfigError("dataset.n must be >= 1");
  if (!(dataset.bias > 0.0) || dataset.bias > 1.0)
    throw ConfigError("dataset.bias must lie in (0, 1]");
  if (dataset.feat_dim < 1) throw ConfigError("dataset.feat_dim must be >= 1");
  if (dataset.tree_depth_min < 1) throw ConfigError("dataset.tree_depth_min must be >= 1");
  if (dataset.tree_depth_max < dataset.tree_depth_min)
    throw ConfigError("dataset.tree_depth range is empty");
  if (dataset.ladder_rungs_min < 2) throw ConfigError("dataset.ladder_rungs_min must be >= 2");
  if (dataset.ladder_rungs_max < dataset.ladder_rungs_min)
    throw ConfigError("dataset.ladder_rungs range is empty");
  if (dataset.wheel_rim_min < 3) throw ConfigError("dataset.wheel_rim_min must be >= 3");
  if (dataset.wheel_rim_max < dataset.wheel_rim_min)
    throw ConfigError("dataset.wheel_rim range is empty");
  if (dataset.ba_nodes < 2) throw ConfigError("dataset.ba_nodes must be >= 2");
  if (dataset.ba_attach < 1 || dataset.ba_attach >= dataset.ba_nodes)
    throw ConfigError("dataset.ba_attach must lie in [1, ba_nodes)");
  if (reflect.k < 1) throw ConfigError("reflect.k must be >= 1");
  try {
    hyper().validate();
    train_config().validate(false);
    if (train.finetune) finetune_config().validate(true);
    parse_update_mode(reflect.mode);
    parse_split(eval.split);
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
}

std::string ExperimentConfig::canonical() const {
  std::string s;
  s += "[dataset]\n";
  s += "kind = " + dataset.kind + "\n";
  s += "n = " + std::to_string(dataset.n) + "\n";
  s += "bias = " + fmt_double(dataset.bias) + "\n";
  s += "seed = " + std::to_string(dataset.seed) + "\n";
  s += "feat_dim = " + std::to_string(dataset.feat_dim) + "\n";
  s += std::string("random_features = ") + (dataset.random_features ? "true" : "false") + "\n";
  s += "tree_depth_min = " + std::to_string(dataset.tree_depth_min) + "\n";
  s += "tree_depth_max = " + std::to_string(dataset.tree_depth_max) + "\n";
  s += "ladder_rungs_min = " + std::to_string(dataset.ladder_rungs_min) + "\n";
  s += "ladder_rungs_max = " + std::to_string(dataset.ladder_rungs_max) + "\n";
  s += "wheel_rim_min = " + std::to_string(dataset.wheel_rim_min) + "\n";
  s += "wheel_rim_max = " + std::to_string(dataset.wheel_rim_max) + "\n";
  s += "ba_nodes = " + std::to_string(dataset.ba_nodes) + "\n";
  s += "ba_attach = " + std::to_string(dataset.ba_attach) + "\n";
  s += "[model]\n";
  s += "hidden = " + std::to_string(model.hidden) + "\n";
  s += "layers = " + std::to_string(model.layers) + "\n";
  s += "activation = " + model.activation + "\n";
  s += "tau = " + fmt_double(model.tau) + "\n";
  s += "[train]\n";
  s += "epochs = " + std::to_string(train.epochs) + "\n";
  s += "batch = " + std::to_string(train.batch) + "\n";
  s += "lr = " + fmt_double(train.lr) + "\n";
  s += "beta = " + fmt_double(train.beta) + "\n";
  s += "r = " + fmt_double(train.r) + "\n";
  s += "seed = " + std::to_string(train.seed) + "\n";
  s += std::string("finetune = ") + (train.finetune ? "true" : "false") + "\n";
  s += "ft_k = " + std::to_string(train.ft_k) + "\n";
  s += "ft_lr = " + fmt_double(train.ft_lr) + "\n";
  s += "ft_epochs = " + std::to_string(train.ft_epochs) + "\n";
  s += "ft_batch = " + std::to_string(train.ft_batch) + "\n";
  s += "ft_mode = " + train.ft_mode + "\n";
  s += "[reflect]\n";
  s += "k = " + std::to_string(reflect.k) + "\n";
  s += "mode = " + reflect.mode + "\n";
  s += "[eval]\n";
  s += "split = " + eval.split + "\n";
  s += std::string("per_graph_auc = ") + (eval.per_graph_auc ? "true" : "false") + "\n";
  return s;
}

std::string ExperimentConfig::hash() const { return hex64(fnv1a64(canonical())); }

model::HyperParams ExperimentConfig::hyper() const {
  model::HyperParams hp;
  hp.feat_dim = dataset.feat_dim;
  hp.num_classes = num_classes_for(dataset.kind);
  hp.hidden = model.hidden;
  hp.layers = model.layers;
  hp.activation = nn::parse_activation(model.activation);
  hp.tau = model.tau;
  hp.r = train.r;
  hp.beta = train.beta;
  return hp;
}

training::TrainConfig ExperimentConfig::train_config() const {
  training::TrainConfig c;
  c.epochs = train.epochs;
  c.batch = train.batch;
  c.lr = train.lr;
  c.beta = train.beta;
  c.r = train.r;
  c.seed = train.seed;
  return c;
}

training::TrainConfig ExperimentConfig::finetune_config() const {
  training::TrainConfig c;
  c.epochs = train.ft_epochs;
  c.batch = train.ft_batch;
  c.lr = train.ft_lr;
  c.beta = train.beta;
  c.r = train.r;
  c.seed = train.seed;
  c.k = train.ft_k;
  c.mode = training::parse_finetune_mode(train.ft_mode);
  return c;
}

ExperimentConfig parse_config(const std::string& text, const std::string& origin) {
  ExperimentConfig cfg;
  int line_no = 0;
  const auto err = [&](const std::string& what) -> void {
    throw ConfigError(origin + ":" + std::to_string(line_no) + ": " + what);
  };
  const auto to_int = [&](const std::string& v) -> int {
    int out = 0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || p != v.data() + v.size()) err("not an integer: '" + v + "'");
    return out;
  };
  const auto to_u64 = [&](const std::string& v) -> std::uint64_t {
    std::uint64_t out = 0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || p != v.data() + v.size())
      err("not a non-negative integer: '" + v + "'");
    return out;
  };
  const auto to_dbl = [&](const std::string& v) -> double {
    try {
      std::size_t pos = 0;
      const double out = std::stod(v, &pos);
      if (pos != v.size()) err("not a number: '" + v + "'");
      return out;
    } catch (const std::logic_error&) {
      err("not a number: '" + v + "'");
    }
    return 0.0;
  };
  const auto to_bool = [&](const std::string& v) -> bool {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    err("not a boolean: '" + v + "'");
    return false;
  };

  std::map<std::string, std::function<void(const std::string&)>> keys;
  keys["dataset.kind"] = [&](const std::string& v) { cfg.dataset.kind = v; };
  keys["dataset.n"] = [&](const std::string& v) { cfg.dataset.n = to_int(v); };
  keys["dataset.bias"] = [&](const std::string& v) { cfg.dataset.bias = to_dbl(v); };
  keys["dataset.seed"] = [&](const std::string& v) { cfg.dataset.seed = to_u64(v); };
  keys["dataset.feat_dim"] = [&](const std::string& v) { cfg.dataset.feat_dim = to_int(v); };
  keys["dataset.random_features"] = [&](const std::string& v) {
    cfg.dataset.random_features = to_bool(v);
  };
  keys["dataset.tree_depth_min"] = [&](const std::string& v) {
    cfg.dataset.tree_depth_min = to_int(v);
  };
  keys["dataset.tree_depth_max"] = [&](const std::string& v) {
    cfg.dataset.tree_depth_max = to_int(v);
  };
  keys["dataset.ladder_rungs_min"] = [&](const std::string& v) {
    cfg.dataset.ladder_rungs_min = to_int(v);
  };
  keys["dataset.ladder_rungs_max"] = [&](const std::string& v) {
    cfg.dataset.ladder_rungs_max = to_int(v);
  };
  keys["dataset.wheel_rim_min"] = [&](const std::string& v) {
    cfg.dataset.wheel_rim_min = to_int(v);
  };
  keys["dataset.wheel_rim_max"] = [&](const std::string& v) {
    cfg.dataset.wheel_rim_max = to_int(v);
  };
  keys["dataset.ba_nodes"] = [&](const std::string& v) { cfg.dataset.ba_nodes = to_int(v); };
  keys["dataset.ba_attach"] = [&](const std::string& v) { cfg.dataset.ba_attach = to_int(v); };
  keys["model.hidden"] = [&](const std::string& v) { cfg.model.hidden = to_int(v); };
  keys["model.layers"] = [&](const std::string& v) { cfg.model.layers = to_int(v); };
  keys["model.activation"] = [&](const std::string& v) { cfg.model.activation = v; };
  keys["model.tau"] = [&](const std::string& v) { cfg.model.tau = to_dbl(v); };
  keys["train.epochs"] = [&](const std::string& v) { cfg.train.epochs = to_int(v); };
  keys["train.batch"] = [&](const std::string& v) { cfg.train.batch = to_int(v); };
  keys["train.lr"] = [&](const std::string& v) { cfg.train.lr = to_dbl(v); };
  keys["train.beta"] = [&](const std::string& v) { cfg.train.beta = to_dbl(v); };
  keys["train.r"] = [&](const std::string& v) { cfg.train.r = to_dbl(v); };
  keys["train.seed"] = [&](const std::string& v) { cfg.train.seed = to_u64(v); };
  keys["train.finetune"] = [&](const std::string& v) { cfg.train.finetune = to_bool(v); };
  keys["train.ft_k"] = [&](const std::string& v) { cfg.train.ft_k = to_int(v); };
  keys["train.ft_lr"] = [&](const std::string& v) { cfg.train.ft_lr = to_dbl(v); };
  keys["train.ft_epochs"] = [&](const std::string& v) { cfg.train.ft_epochs = to_int(v); };
  keys["train.ft_batch"] = [&](const std::string& v) { cfg.train.ft_batch = to_int(v); };
  keys["train.ft_mode"] = [&](const std::string& v) { cfg.train.ft_mode = v; };
  keys["reflect.k"] = [&](const std::string& v) { cfg.reflect.k = to_int(v); };
  keys["reflect.mode"] = [&](const std::string& v) { cfg.reflect.mode = v; };
  keys["eval.split"] = [&](const std::string& v) { cfg.eval.split = v; };
  keys["eval.per_graph_auc"] = [&](const std::string& v) {
    cfg.eval.per_graph_auc = to_bool(v);
  };

  const std::set<std::string> sections = {"dataset", "model", "train", "reflect", "eval"};
  std::set<std::string> seen;
  std::string section;
  std::istringstream in(text);
  std::string raw;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string s = trim(raw);
    if (s.empty() || s[0] == '#' || s[0] == ';') continue;
    if (s.front() == '[') {
      if (s.back() != ']') err("malformed section header");
      section = trim(s.substr(1, s.size() - 2));
      if (!sections.count(section)) err("unknown section '" + section + "'");
      continue;
    }
    const std::size_t eq = s.find('=');
    if (eq == std::string::npos) err("expected key = value");
    const std::string key = trim(s.substr(0, eq));
    const std::string value = trim(s.substr(eq + 1));
    if (section.empty()) err("key outside a section");
    if (key.empty()) err("empty key");
    const std::string full = section + "." + key;
    const auto it = keys.find(full);
    if (it == keys.end()) err("unknown key '" + full + "'");
    if (!seen.insert(full).second) err("duplicate key '" + full + "'");
    it->second(value);
  }
  try {
    cfg.validate();
  } catch (const Error& e) {
    throw ConfigError(origin + ": " + e.what());
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path);
}

}  // namespace remask::config
