#include "remask/dataset.hpp"

#include <charconv>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "remask/errors.hpp"

namespace remask {

namespace {

constexpr const char* kMagic = "remask-dataset";
constexpr int kSchemaVersion = 1;

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

[[noreturn]] void record_error(const std::string& origin, int record, int line,
                               const std::string& what) {
  throw DataError(origin + ": record " + std::to_string(record) + " (line " +
                  std::to_string(line) + "): " + what);
}

// Splits on a single delimiter; empty input yields no tokens.
std::vector<std::string> split_on(const std::string& s, char delim) {
  std::vector<std::string> out;
  if (s.empty()) return out;
  size_t start = 0;
  while (true) {
    const size_t pos = s.find(delim, start);
    out.push_back(s.substr(start, pos == std::string::npos ? pos : pos - start));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

long parse_long(const std::string& s, const char* what) {
  long v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw DataError(std::string("bad ") + what + " '" + s + "'");
  return v;
}

std::uint64_t parse_u64(const std::string& s, const char* what) {
  std::uint64_t v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw DataError(std::string("bad ") + what + " '" + s + "'");
  return v;
}

double parse_double(const std::string& s, const char* what) {
  try {
    size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw DataError(std::string("bad ") + what + " '" + s + "'");
  }
}

}  // namespace

Split parse_split(const std::string& s) {
  if (s == "train") return Split::train;
  if (s == "valid") return Split::valid;
  if (s == "test") return Split::test;
  throw DataError("unknown split tag '" + s + "'");
}

std::string to_string(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::valid: return "valid";
    case Split::test: return "test";
  }
  return "?";
}

std::vector<int> Dataset::indices_of(Split s) const {
  std::vector<int> out;
  for (size_t i = 0; i < split.size(); ++i)
    if (split[i] == s) out.push_back(static_cast<int>(i));
  return out;
}

std::string serialize_dataset(const Dataset& d) {
  if (d.graphs.size() != d.split.size())
    throw DataError("dataset split tags do not cover all graphs");
  std::ostringstream out;
  out << kMagic << " v" << d.schema_version << " dim=" << d.feat_dim
      << " classes=" << d.num_classes << "\n";
  for (size_t i = 0; i < d.graphs.size(); ++i) {
    const GraphInstance& g = d.graphs[i];
    out << "g nodes=" << g.num_nodes << " label=" << g.label
        << " split=" << to_string(d.split[i]) << " meta=";
    if (g.meta) {
      out << g.meta->base_type << ',' << g.meta->motif_type << ','
          << fmt_double(g.meta->bias) << ',' << g.meta->seed;
    } else {
      out << '-';
    }
    out << " edges=";
    for (size_t e = 0; e < g.edges.size(); ++e) {
      if (e) out << ',';
      out << g.edges[e].first << ':' << g.edges[e].second;
    }
    out << " truth=";
    for (std::uint8_t t : g.edge_truth) out << (t ? '1' : '0');
    out << " feats=";
    for (int n = 0; n < g.num_nodes; ++n) {
      if (n) out << ';';
      for (int f = 0; f < g.feat_dim; ++f) {
        if (f) out << ',';
        out << fmt_double(g.node_features[static_cast<size_t>(n) * static_cast<size_t>(g.feat_dim) +
                                          static_cast<size_t>(f)]);
      }
    }
    out << "\n";
  }
  return out.str();
}

void write_dataset(const Dataset& d, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open '" + path + "' for writing");
  f << serialize_dataset(d);
  if (!f) throw DataError("write to '" + path + "' failed");
}

Dataset parse_dataset(const std::string& text, const std::string& origin) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw DataError(origin + ": empty file");

  Dataset d;
  {
    std::istringstream hdr(line);
    std::string magic, ver, dim, classes;
    if (!(hdr >> magic >> ver >> dim >> classes) || magic != kMagic)
      throw DataError(origin + ": not a dataset file (bad header)");
    if (ver.size() < 2 || ver[0] != 'v')
      throw DataError(origin + ": malformed version field '" + ver + "'");
    const long v = parse_long(ver.substr(1), "schema version");
    if (v != kSchemaVersion)
      throw DataError(origin + ": dataset schema version " + std::to_string(v) +
                      " unsupported (expected " + std::to_string(kSchemaVersion) + ")");
    d.schema_version = static_cast<int>(v);
    if (dim.rfind("dim=", 0) != 0 || classes.rfind("classes=", 0) != 0)
      throw DataError(origin + ": malformed header fields");
    d.feat_dim = static_cast<int>(parse_long(dim.substr(4), "feature dim"));
    d.num_classes = static_cast<int>(parse_long(classes.substr(8), "class count"));
  }

  int record = 0;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    ++record;
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag != "g") record_error(origin, record, line_no, "expected 'g' record, got '" + tag + "'");

    GraphInstance g;
    g.feat_dim = d.feat_dim;
    Split split = Split::train;
    bool saw_nodes = false, saw_label = false, saw_split = false, saw_meta = false,
         saw_edges = false, saw_truth = false, saw_feats = false;
    std::string tok;
    try {
      while (ls >> tok) {
        const size_t eq = tok.find('=');
        if (eq == std::string::npos) throw DataError("stray token '" + tok + "'");
        const std::string key = tok.substr(0, eq);
        const std::string val = tok.substr(eq + 1);
        if (key == "nodes") {
          g.num_nodes = static_cast<int>(parse_long(val, "node count"));
          saw_nodes = true;
        } else if (key == "label") {
          g.label = static_cast<int>(parse_long(val, "label"));
          saw_label = true;
        } else if (key == "split") {
          split = parse_split(val);
          saw_split = true;
        } else if (key == "meta") {
          saw_meta = true;
          if (val != "-") {
            const auto parts = split_on(val, ',');
            if (parts.size() != 4) throw DataError("meta needs 4 fields, got '" + val + "'");
            GraphMeta m;
            m.base_type = static_cast<int>(parse_long(parts[0], "meta base type"));
            m.motif_type = static_cast<int>(parse_long(parts[1], "meta motif type"));
            m.bias = parse_double(parts[2], "meta bias");
            m.seed = parse_u64(parts[3], "meta seed");
            g.meta = m;
          }
        } else if (key == "edges") {
          for (const auto& pair : split_on(val, ',')) {
            const size_t colon = pair.find(':');
            if (colon == std::string::npos) throw DataError("bad edge '" + pair + "'");
            g.edges.emplace_back(
                static_cast<int>(parse_long(pair.substr(0, colon), "edge source")),
                static_cast<int>(parse_long(pair.substr(colon + 1), "edge target")));
          }
          saw_edges = true;
        } else if (key == "truth") {
          for (char c : val) {
            if (c != '0' && c != '1') throw DataError("bad truth bit '" + std::string(1, c) + "'");
            g.edge_truth.push_back(c == '1' ? 1 : 0);
          }
          saw_truth = true;
        } else if (key == "feats") {
          for (const auto& node : split_on(val, ';'))
            for (const auto& f : split_on(node, ','))
              g.node_features.push_back(parse_double(f, "feature value"));
          saw_feats = true;
        } else {
          throw DataError("unknown field '" + key + "'");
        }
      }
      if (!saw_nodes || !saw_label || !saw_split || !saw_meta || !saw_edges || !saw_truth ||
          !saw_feats)
        throw DataError("truncated record (missing fields)");
      if (g.edge_truth.size() != g.edges.size())
        throw DataError("truth length " + std::to_string(g.edge_truth.size()) +
                        " does not match edge count " + std::to_string(g.edges.size()));
      if (g.node_features.size() !=
          static_cast<size_t>(g.num_nodes) * static_cast<size_t>(g.feat_dim))
        throw DataError("feature count does not equal nodes*dim");
      if (g.label < 0 || g.label >= d.num_classes) throw DataError("label out of range");
    } catch (const DataError& e) {
      record_error(origin, record, line_no, e.what());
    }
    d.graphs.push_back(std::move(g));
    d.split.push_back(split);
  }
  return d;
}

Dataset read_dataset(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open dataset '" + path + "'");
  std::ostringstream buf;
  buf << f.rdbuf();
  return parse_dataset(buf.str(), path);
}

}  // namespace remask
