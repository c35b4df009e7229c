#include "m2hgcl/data_io.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

namespace m2hgcl {

namespace fs = std::filesystem;

namespace {

std::string where(const fs::path& path, std::size_t line) { return path.string() + ":" + std::to_string(line); }

std::ifstream open_in(const fs::path& path, std::ios::openmode mode = std::ios::in) {
  std::ifstream in(path, mode);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  return in;
}

std::ofstream open_out(const fs::path& path, std::ios::openmode mode = std::ios::out) {
  std::ofstream out(path, mode | std::ios::trunc);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  return out;
}

// Splits on spaces/tabs, skipping empties.
std::vector<std::string_view> fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

template <typename T>
T parse_number(std::string_view token, const fs::path& path, std::size_t line) {
  T value{};
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc{} || ptr != token.data() + token.size()) {
    throw DataError(where(path, line) + ": cannot parse '" + std::string(token) + "' as a number");
  }
  return value;
}

static_assert(std::endian::native == std::endian::little, "binary matrix I/O assumes a little-endian host");

template <typename T>
void put_le(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get_le(std::istream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  return value;
}

Matrix read_text_matrix(const fs::path& path) {
  auto in = open_in(path);
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw DataError(where(path, 1) + ": missing 'rows cols' header");
  ++line_no;
  auto header = fields(line);
  if (header.size() != 2) throw DataError(where(path, 1) + ": header must be 'rows cols'");
  const auto rows = parse_number<std::size_t>(header[0], path, 1);
  const auto cols = parse_number<std::size_t>(header[1], path, 1);
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  std::size_t r = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto tokens = fields(line);
    if (tokens.empty()) continue;
    if (r >= rows) throw DataError(where(path, line_no) + ": more rows than the header's " + std::to_string(rows));
    if (tokens.size() != cols) {
      throw DataError(where(path, line_no) + ": expected " + std::to_string(cols) + " values, found " +
                      std::to_string(tokens.size()));
    }
    for (std::size_t c = 0; c < cols; ++c) {
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = parse_number<double>(tokens[c], path, line_no);
    }
    ++r;
  }
  if (r != rows) {
    throw DataError(path.string() + ": header declares " + std::to_string(rows) + " rows, found " + std::to_string(r));
  }
  return m;
}

Matrix read_binary_matrix(const fs::path& path) {
  auto in = open_in(path, std::ios::binary);
  const auto rows = get_le<std::uint32_t>(in);
  const auto cols = get_le<std::uint32_t>(in);
  if (!in) throw DataError(path.string() + ": truncated 8-byte shape header");
  const auto expected = 8 + 4 * static_cast<std::uintmax_t>(rows) * cols;
  const auto actual = fs::file_size(path);
  if (actual != expected) {
    throw DataError(path.string() + ": header declares " + std::to_string(rows) + "x" + std::to_string(cols) +
                    " (" + std::to_string(expected) + " bytes) but file has " + std::to_string(actual) + " bytes");
  }
  Matrix m(rows, cols);
  std::vector<std::uint32_t> raw(static_cast<std::size_t>(rows) * cols);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size() * 4));
  for (std::size_t i = 0; i < raw.size(); ++i) {
    m.data()[i] = static_cast<double>(std::bit_cast<float>(raw[i]));
  }
  return m;
}

void check_extension(const fs::path& path) {
  const auto ext = path.extension();
  if (ext != ".txt" && ext != ".bin") {
    throw DataError(path.string() + ": unsupported matrix extension (expected .txt or .bin)");
  }
}

}  // namespace

Matrix read_matrix(const fs::path& path) {
  check_extension(path);
  return path.extension() == ".bin" ? read_binary_matrix(path) : read_text_matrix(path);
}

void write_matrix(const fs::path& path, const Matrix& m) {
  check_extension(path);
  if (path.extension() == ".txt") {
    auto out = open_out(path);
    out << m.rows() << " " << m.cols() << "\n";
    out.precision(17);
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) out << (c ? " " : "") << m(r, c);
      out << "\n";
    }
    return;
  }
  auto out = open_out(path, std::ios::binary);
  put_le(out, static_cast<std::uint32_t>(m.rows()));
  put_le(out, static_cast<std::uint32_t>(m.cols()));
  for (Eigen::Index i = 0; i < m.size(); ++i) put_le(out, std::bit_cast<std::uint32_t>(static_cast<float>(m.data()[i])));
  if (!out) throw DataError("failed writing '" + path.string() + "'");
}

std::vector<Edge> read_edges(const fs::path& path) {
  auto in = open_in(path);
  std::vector<Edge> edges;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto tokens = fields(line);
    if (tokens.empty()) continue;
    if (tokens.size() != 2) throw DataError(where(path, line_no) + ": expected 'src<TAB>dst'");
    edges.push_back({parse_number<std::uint32_t>(tokens[0], path, line_no),
                     parse_number<std::uint32_t>(tokens[1], path, line_no), 1.0});
  }
  return edges;
}

void write_edges(const fs::path& path, const BoolCsr& adjacency) {
  auto out = open_out(path);
  for (std::size_t r = 0; r < adjacency.rows(); ++r) {
    for (auto c : adjacency.row(r)) out << r << '\t' << c << '\n';
  }
}

std::vector<int> read_labels(const fs::path& path, std::size_t count) {
  auto in = open_in(path);
  std::vector<int> labels(count, -1);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto tokens = fields(line);
    if (tokens.empty()) continue;
    if (tokens.size() != 2) throw DataError(where(path, line_no) + ": expected 'node_index<TAB>class_id'");
    const auto node = parse_number<std::size_t>(tokens[0], path, line_no);
    const auto cls = parse_number<int>(tokens[1], path, line_no);
    if (node >= count) {
      throw DataError(where(path, line_no) + ": node index " + std::to_string(node) + " out of range (" +
                      std::to_string(count) + " target nodes)");
    }
    if (cls < 0) throw DataError(where(path, line_no) + ": negative class id");
    if (labels[node] != -1) throw DataError(where(path, line_no) + ": node " + std::to_string(node) + " labeled twice");
    labels[node] = cls;
  }
  return labels;
}

void write_labels(const fs::path& path, const std::vector<int>& labels) {
  auto out = open_out(path);
  for (std::size_t i = 0; i < labels.size(); ++i) out << i << '\t' << labels[i] << '\n';
}

DatasetManifest DatasetManifest::from_json(const nlohmann::json& j) {
  DatasetManifest m;
  m.name = j.at("name").get<std::string>();
  for (const auto& t : j.at("node_types")) {
    m.node_types.push_back({t.at("name").get<std::string>(), t.at("count").get<std::size_t>(),
                            t.at("feature_file").get<std::string>(), t.at("feature_dim").get<std::size_t>()});
  }
  for (const auto& r : j.at("relations")) {
    m.relations.push_back({r.at("name").get<std::string>(), r.at("src").get<std::string>(),
                           r.at("dst").get<std::string>(), r.at("edge_file").get<std::string>()});
  }
  m.target_type = j.at("target_type").get<std::string>();
  m.labels_file = j.at("labels_file").get<std::string>();
  m.metapaths = j.at("metapaths").get<std::vector<std::vector<std::string>>>();
  m.num_classes = j.at("num_classes").get<std::size_t>();
  return m;
}

nlohmann::json DatasetManifest::to_json() const {
  nlohmann::json j;
  j["name"] = name;
  j["node_types"] = nlohmann::json::array();
  for (const auto& t : node_types) {
    j["node_types"].push_back(
        {{"name", t.name}, {"count", t.count}, {"feature_file", t.feature_file}, {"feature_dim", t.feature_dim}});
  }
  j["relations"] = nlohmann::json::array();
  for (const auto& r : relations) {
    j["relations"].push_back({{"name", r.name}, {"src", r.src}, {"dst", r.dst}, {"edge_file", r.edge_file}});
  }
  j["target_type"] = target_type;
  j["labels_file"] = labels_file;
  j["metapaths"] = metapaths;
  j["num_classes"] = num_classes;
  return j;
}

Dataset load_dataset(const fs::path& manifest_path) {
  DatasetManifest manifest;
  try {
    auto in = open_in(manifest_path);
    manifest = DatasetManifest::from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(manifest_path.string() + ": invalid manifest: " + e.what());
  }
  const fs::path base = manifest_path.parent_path();
  Dataset ds;
  ds.name = manifest.name;
  ds.num_classes = manifest.num_classes;
  ds.input_files.push_back(manifest_path);

  std::vector<NodeType> types;
  for (const auto& t : manifest.node_types) {
    const auto file = base / t.feature_file;
    ds.input_files.push_back(file);
    Matrix features = read_matrix(file);
    if (static_cast<std::size_t>(features.rows()) != t.count) {
      throw DataError(file.string() + ": " + std::to_string(features.rows()) + " feature rows, manifest declares " +
                      std::to_string(t.count) + " '" + t.name + "' nodes");
    }
    if (static_cast<std::size_t>(features.cols()) != t.feature_dim) {
      throw DataError(file.string() + ": feature dim " + std::to_string(features.cols()) +
                      ", manifest declares " + std::to_string(t.feature_dim));
    }
    types.push_back({t.name, t.count, std::move(features)});
  }
  auto type_index = [&](const std::string& name) -> NodeTypeId {
    for (std::size_t k = 0; k < types.size(); ++k) {
      if (types[k].name == name) return static_cast<NodeTypeId>(k);
    }
    throw DataError(manifest_path.string() + ": unknown node type '" + name + "'");
  };

  std::vector<RelationSpec> relations;
  for (const auto& r : manifest.relations) {
    const auto file = base / r.edge_file;
    ds.input_files.push_back(file);
    RelationSpec spec{r.name, type_index(r.src), type_index(r.dst), read_edges(file)};
    const auto rows = types[spec.src_type].count;
    const auto cols = types[spec.dst_type].count;
    for (std::size_t k = 0; k < spec.edges.size(); ++k) {
      const auto& e = spec.edges[k];
      if (e.src >= rows || e.dst >= cols) {
        throw DataError(file.string() + ": edge " + std::to_string(e.src) + "\t" + std::to_string(e.dst) +
                        " out of range (" + r.src + ": " + std::to_string(rows) + ", " + r.dst + ": " +
                        std::to_string(cols) + ")");
      }
    }
    relations.push_back(std::move(spec));
  }
  ds.graph = HeteroGraph(std::move(types), std::move(relations), type_index(manifest.target_type));
  try {
    require_valid(ds.graph);
  } catch (const std::invalid_argument& e) {
    throw DataError(manifest_path.string() + ": " + e.what());
  }

  const auto labels_file = base / manifest.labels_file;
  ds.input_files.push_back(labels_file);
  ds.labels = read_labels(labels_file, ds.graph.target_count());
  for (std::size_t i = 0; i < ds.labels.size(); ++i) {
    if (ds.labels[i] < 0) throw DataError(labels_file.string() + ": target node " + std::to_string(i) + " has no label");
    if (static_cast<std::size_t>(ds.labels[i]) >= manifest.num_classes) {
      throw DataError(labels_file.string() + ": class " + std::to_string(ds.labels[i]) + " of node " +
                      std::to_string(i) + " exceeds num_classes " + std::to_string(manifest.num_classes));
    }
  }
  for (const auto& seq : manifest.metapaths) {
    try {
      ds.metapaths.push_back(parse_metapath(ds.graph, seq));
    } catch (const std::exception& e) {
      throw DataError(manifest_path.string() + ": meta-path: " + e.what());
    }
  }
  return ds;
}

fs::path save_dataset(const fs::path& dir, const Dataset& dataset) {
  fs::create_directories(dir);
  const auto& g = dataset.graph;
  DatasetManifest m;
  m.name = dataset.name;
  for (const auto& t : g.node_types()) {
    const std::string file = t.name + "_features.bin";
    write_matrix(dir / file, t.features);
    m.node_types.push_back({t.name, t.count, file, static_cast<std::size_t>(t.features.cols())});
  }
  for (std::size_t r = 0; r < g.num_relations(); ++r) {
    const auto& rel = g.relation(static_cast<RelationId>(r));
    const std::string file = rel.name + "_edges.tsv";
    write_edges(dir / file, g.adjacency(static_cast<RelationId>(r)));
    m.relations.push_back({rel.name, g.node_type(rel.src_type).name, g.node_type(rel.dst_type).name, file});
  }
  m.target_type = g.node_type(g.target_type()).name;
  m.labels_file = "labels.tsv";
  write_labels(dir / m.labels_file, dataset.labels);
  for (const auto& path : dataset.metapaths) {
    std::vector<std::string> seq;
    for (const auto& s : path.steps) seq.push_back((s.reversed ? "~" : "") + g.relation(s.relation).name);
    m.metapaths.push_back(std::move(seq));
  }
  m.num_classes = dataset.num_classes;
  const auto manifest_path = dir / "manifest.json";
  auto out = open_out(manifest_path);
  out << m.to_json().dump(2) << "\n";
  return manifest_path;
}

void save_embeddings(const fs::path& path, const Matrix& z) {
  if (path.extension() != ".bin") throw DataError(path.string() + ": embeddings use the .bin format");
  write_matrix(path, z);
}

Matrix load_embeddings(const fs::path& path) {
  if (path.extension() != ".bin") throw DataError(path.string() + ": embeddings use the .bin format");
  return read_binary_matrix(path);
}

void SyntheticSpec::validate() const {
  if (classes < 2) throw std::invalid_argument("synthetic: need at least 2 classes");
  if (!(p_in >= p_out && p_out >= 0.0 && p_in <= 1.0)) {
    throw std::invalid_argument("synthetic: need 1 >= p_in >= p_out >= 0");
  }
  if (n_target < classes) throw std::invalid_argument("synthetic: fewer target nodes than classes");
  if (aux_sizes.empty()) throw std::invalid_argument("synthetic: need at least one auxiliary type");
  for (auto s : aux_sizes) {
    if (s < classes) throw std::invalid_argument("synthetic: auxiliary type smaller than class count");
  }
  if (feature_dim < classes) throw std::invalid_argument("synthetic: feature_dim must be >= classes");
  if (feature_noise < 0.0) throw std::invalid_argument("synthetic: negative feature noise");
}

SyntheticSpec SyntheticSpec::from_json(const nlohmann::json& j) {
  SyntheticSpec s;
  s.n_target = j.value("n_target", s.n_target);
  s.classes = j.value("classes", s.classes);
  s.aux_sizes = j.value("aux_sizes", s.aux_sizes);
  s.p_in = j.value("p_in", s.p_in);
  s.p_out = j.value("p_out", s.p_out);
  s.feature_noise = j.value("feature_noise", s.feature_noise);
  s.feature_dim = j.value("feature_dim", s.feature_dim);
  s.seed = j.value("seed", s.seed);
  return s;
}

nlohmann::json SyntheticSpec::to_json() const {
  return {{"n_target", n_target}, {"classes", classes},       {"aux_sizes", aux_sizes},
          {"p_in", p_in},         {"p_out", p_out},           {"feature_noise", feature_noise},
          {"feature_dim", feature_dim}, {"seed", seed}};
}

Dataset generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, 1.0);

  std::vector<int> labels(spec.n_target);
  for (std::size_t i = 0; i < spec.n_target; ++i) labels[i] = static_cast<int>(i % spec.classes);
  std::shuffle(labels.begin(), labels.end(), rng);

  const auto dim = static_cast<Eigen::Index>(spec.feature_dim);
  auto make_features = [&](const std::vector<int>& classes) {
    Matrix x(static_cast<Eigen::Index>(classes.size()), dim);
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
      for (Eigen::Index c = 0; c < dim; ++c) x(r, c) = spec.feature_noise * noise(rng);
      x(r, classes[static_cast<std::size_t>(r)]) += 1.0;
    }
    return x;
  };

  std::vector<NodeType> types;
  types.push_back({"target", spec.n_target, make_features(labels)});
  std::vector<RelationSpec> relations;
  for (std::size_t a = 0; a < spec.aux_sizes.size(); ++a) {
    const auto size = spec.aux_sizes[a];
    std::vector<int> block(size);
    for (std::size_t k = 0; k < size; ++k) block[k] = static_cast<int>(k * spec.classes / size);
    const std::string name(1, static_cast<char>('a' + a));
    types.push_back({name, size, make_features(block)});

    RelationSpec rel{"t" + name, 0, static_cast<NodeTypeId>(a + 1), {}};
    for (std::size_t t = 0; t < spec.n_target; ++t) {
      for (std::size_t k = 0; k < size; ++k) {
        const double p = labels[t] == block[k] ? spec.p_in : spec.p_out;
        if (coin(rng) < p) rel.edges.push_back({static_cast<std::uint32_t>(t), static_cast<std::uint32_t>(k), 1.0});
      }
    }
    relations.push_back(std::move(rel));
  }

  Dataset ds;
  ds.name = "synthetic";
  ds.num_classes = spec.classes;
  ds.labels = labels;
  ds.graph = HeteroGraph(std::move(types), std::move(relations), 0);
  for (std::size_t a = 0; a < spec.aux_sizes.size(); ++a) {
    const auto& rel = ds.graph.relation(static_cast<RelationId>(a)).name;
    ds.metapaths.push_back(parse_metapath(ds.graph, {rel, "~" + rel}));
  }
  return ds;
}

double within_class_fraction(const BoolCsr& adjacency, const std::vector<int>& labels) {
  std::size_t same = 0;
  for (std::size_t i = 0; i < adjacency.rows(); ++i) {
    for (auto j : adjacency.row(i)) same += labels[i] == labels[j];
  }
  return adjacency.nnz() == 0 ? 0.0 : static_cast<double>(same) / static_cast<double>(adjacency.nnz());
}

}  // namespace m2hgcl
