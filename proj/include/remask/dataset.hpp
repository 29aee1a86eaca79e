#pragma once

#include <string>
#include <vector>

#include "remask/graph.hpp"

namespace remask {

enum class Split { train, valid, test };

Split parse_split(const std::string& s);
std::string to_string(Split s);

// A collection of graphs with a train/valid/test partition. The feature
// dimension and class count are global.
struct Dataset {
  int schema_version = 1;
  int feat_dim = 0;
  int num_classes = 0;
  std::vector<GraphInstance> graphs;
  std::vector<Split> split;  // parallel to graphs

  size_t size() const { return graphs.size(); }
  std::vector<int> indices_of(Split s) const;

  bool operator==(const Dataset&) const = default;
};

// Line-delimited text format: one header record, then one self-describing
// record per graph. read(write(d)) is the identity on every field,
// including edge ordering and metadata.
void write_dataset(const Dataset& d, const std::string& path);
Dataset read_dataset(const std::string& path);

// In-memory form of the same records, used by write_dataset and by the
// determinism checks.
std::string serialize_dataset(const Dataset& d);
Dataset parse_dataset(const std::string& text, const std::string& origin);

}  // namespace remask
