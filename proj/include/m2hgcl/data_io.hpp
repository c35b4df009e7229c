#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "m2hgcl/hin.hpp"
#include "m2hgcl/metapath.hpp"

namespace m2hgcl {

/// Malformed or inconsistent input; the message names the file and line.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct NodeTypeEntry {
  std::string name;
  std::size_t count = 0;
  std::string feature_file;
  std::size_t feature_dim = 0;
};

struct RelationEntry {
  std::string name;
  std::string src;
  std::string dst;
  std::string edge_file;
};

/// On-disk dataset description. File paths are relative to the manifest.
struct DatasetManifest {
  std::string name;
  std::vector<NodeTypeEntry> node_types;
  std::vector<RelationEntry> relations;
  std::string target_type;
  std::string labels_file;
  std::vector<std::vector<std::string>> metapaths;
  std::size_t num_classes = 0;

  static DatasetManifest from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

struct Dataset {
  std::string name;
  HeteroGraph graph;
  std::vector<int> labels;  // one per target node
  std::vector<MetaPath> metapaths;
  std::size_t num_classes = 0;
  std::vector<std::filesystem::path> input_files;  // manifest first, then referenced files
};

/// Text (".txt": "rows cols" header, then rows) or binary (".bin": two
/// little-endian uint32 then float32 row-major) matrix.
Matrix read_matrix(const std::filesystem::path& path);
void write_matrix(const std::filesystem::path& path, const Matrix& m);

std::vector<Edge> read_edges(const std::filesystem::path& path);
void write_edges(const std::filesystem::path& path, const BoolCsr& adjacency);

std::vector<int> read_labels(const std::filesystem::path& path, std::size_t count);
void write_labels(const std::filesystem::path& path, const std::vector<int>& labels);

Dataset load_dataset(const std::filesystem::path& manifest_path);

/// Writes manifest.json plus binary features, TSV edges and labels into `dir`.
std::filesystem::path save_dataset(const std::filesystem::path& dir, const Dataset& dataset);

/// Embeddings use the float32 binary matrix format.
void save_embeddings(const std::filesystem::path& path, const Matrix& z);
Matrix load_embeddings(const std::filesystem::path& path);

struct SyntheticSpec {
  std::size_t n_target = 300;
  std::size_t classes = 3;
  std::vector<std::size_t> aux_sizes = {300, 150};
  double p_in = 0.05;
  double p_out = 0.002;
  double feature_noise = 0.3;
  std::size_t feature_dim = 32;
  std::uint64_t seed = 0;

  void validate() const;
  static SyntheticSpec from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

/// Planted-partition HIN: target nodes get balanced random classes; every
/// auxiliary type splits into class-aligned blocks; target-aux edges appear
/// with p_in inside a class block and p_out across. Features are the one-hot
/// class centroid plus Gaussian noise. Each auxiliary type contributes one
/// two-hop meta-path through it.
Dataset generate_synthetic(const SyntheticSpec& spec);

/// Fraction of meta-path subgraph edges joining same-class targets.
double within_class_fraction(const BoolCsr& adjacency, const std::vector<int>& labels);

}  // namespace m2hgcl
