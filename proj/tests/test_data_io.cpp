#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "helpers.hpp"
#include "m2hgcl/data_io.hpp"

using namespace m2hgcl;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() / ("m2hgcl_io_" + tag + "_" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

void write_text(const fs::path& p, const std::string& s) { std::ofstream(p) << s; }

// Writes a dataset with the given node types (name, count) where every
// non-target type links to the target through one random relation.
fs::path write_shaped_dataset(const fs::path& dir, const std::vector<std::pair<std::string, std::size_t>>& types,
                              std::size_t classes) {
  std::mt19937_64 rng(1);
  std::vector<NodeType> nodes;
  for (const auto& [name, count] : types) nodes.push_back({name, count, test::random_features(count, 2, rng)});
  std::vector<RelationSpec> rels;
  std::vector<std::vector<std::string>> paths;
  const std::size_t n = types[0].second;
  for (std::size_t t = 1; t < types.size(); ++t) {
    RelationSpec r{types[0].first.substr(0, 1) + types[t].first.substr(0, 1), 0, static_cast<NodeTypeId>(t), {}};
    std::uniform_int_distribution<std::uint32_t> pick(0, static_cast<std::uint32_t>(types[t].second - 1));
    for (std::uint32_t i = 0; i < n; ++i) r.edges.push_back({i, pick(rng), 1.0});
    paths.push_back({r.name, "~" + r.name});
    rels.push_back(std::move(r));
  }
  Dataset ds;
  ds.name = "shaped";
  ds.graph = HeteroGraph(std::move(nodes), std::move(rels), 0);
  ds.num_classes = classes;
  for (std::size_t i = 0; i < n; ++i) ds.labels.push_back(static_cast<int>(i % classes));
  for (const auto& p : paths) ds.metapaths.push_back(parse_metapath(ds.graph, p));
  return save_dataset(dir, ds);
}

}  // namespace

TEST_CASE("text and binary matrices round-trip") {
  TempDir dir("matrix");
  std::mt19937_64 rng(2);
  Matrix m = test::random_features(7, 3, rng);
  write_matrix(dir.path / "m.txt", m);
  CHECK(read_matrix(dir.path / "m.txt").isApprox(m, 1e-15));
  write_matrix(dir.path / "m.bin", m);
  Matrix back = read_matrix(dir.path / "m.bin");
  CHECK(back == m.cast<float>().cast<double>());
  CHECK_THROWS_AS(write_matrix(dir.path / "m.csv", m), DataError);
}

TEST_CASE("embeddings round-trip bit-exactly") {
  TempDir dir("emb");
  std::mt19937_64 rng(3);
  Matrix z = test::random_features(4019, 256, rng).cast<float>().cast<double>();
  save_embeddings(dir.path / "z.bin", z);
  Matrix back = load_embeddings(dir.path / "z.bin");
  CHECK(back == z);
  save_embeddings(dir.path / "z2.bin", back);
  std::ifstream a(dir.path / "z.bin", std::ios::binary), b(dir.path / "z2.bin", std::ios::binary);
  std::string sa((std::istreambuf_iterator<char>(a)), {}), sb((std::istreambuf_iterator<char>(b)), {});
  CHECK(sa == sb);
  CHECK(sa.size() == 8 + 4 * 4019 * 256);
  CHECK_THROWS_AS(save_embeddings(dir.path / "z.txt", z), DataError);
}

TEST_CASE("matrix header mismatches are errors") {
  TempDir dir("bad");
  write_text(dir.path / "short.txt", "3 2\n1 2\n3 4\n");
  CHECK_THROWS_AS(read_matrix(dir.path / "short.txt"), DataError);
  write_text(dir.path / "wide.txt", "1 2\n1 2 3\n");
  CHECK_THROWS_AS(read_matrix(dir.path / "wide.txt"), DataError);
  write_text(dir.path / "nan.txt", "1 2\n1 x\n");
  CHECK_THROWS_AS(read_matrix(dir.path / "nan.txt"), DataError);
  Matrix m = Matrix::Ones(3, 2);
  save_embeddings(dir.path / "z.bin", m);
  fs::resize_file(dir.path / "z.bin", 8 + 4 * 5);
  CHECK_THROWS_AS(load_embeddings(dir.path / "z.bin"), DataError);
  CHECK_THROWS_AS(read_matrix(dir.path / "missing.txt"), DataError);
}

TEST_CASE("error messages name the file and line") {
  TempDir dir("line");
  write_text(dir.path / "edges.tsv", "0\t1\n2\tq\n");
  try {
    read_edges(dir.path / "edges.tsv");
    FAIL("expected an error");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("edges.tsv:2") != std::string::npos);
  }
}

TEST_CASE("labels") {
  TempDir dir("labels");
  write_labels(dir.path / "l.tsv", {2, 0, 1});
  CHECK(read_labels(dir.path / "l.tsv", 3) == std::vector<int>{2, 0, 1});
  CHECK(read_labels(dir.path / "l.tsv", 4) == std::vector<int>{2, 0, 1, -1});
  CHECK_THROWS_AS(read_labels(dir.path / "l.tsv", 2), DataError);
  write_text(dir.path / "twice.tsv", "0\t1\n0\t2\n");
  CHECK_THROWS_AS(read_labels(dir.path / "twice.tsv", 2), DataError);
}

TEST_CASE("citation-shaped manifest loads with its counts and meta-paths") {
  TempDir dir("acm");
  auto manifest = write_shaped_dataset(dir.path, {{"paper", 4019}, {"author", 7167}, {"subject", 60}}, 3);
  auto ds = load_dataset(manifest);
  CHECK(ds.graph.node_type(0).count == 4019);
  CHECK(ds.graph.node_type(1).count == 7167);
  CHECK(ds.graph.node_type(2).count == 60);
  REQUIRE(ds.metapaths.size() == 2);
  CHECK(ds.metapaths[0].name == "PAP");
  CHECK(ds.metapaths[1].name == "PSP");
  CHECK(ds.num_classes == 3);
  CHECK(ds.input_files.size() == 1 + 3 + 2 + 1);
  CHECK(validate(ds.graph).empty());
}

TEST_CASE("movie-shaped manifest yields three meta-paths") {
  TempDir dir("movie");
  auto manifest = write_shaped_dataset(dir.path, {{"movie", 50}, {"actor", 80}, {"director", 20}, {"writer", 30}}, 3);
  auto ds = load_dataset(manifest);
  REQUIRE(ds.metapaths.size() == 3);
  CHECK(ds.metapaths[0].name == "MAM");
  CHECK(ds.metapaths[1].name == "MDM");
  CHECK(ds.metapaths[2].name == "MWM");
}

TEST_CASE("out-of-range edge in a manifest is a load error") {
  TempDir dir("oob");
  auto manifest = write_shaped_dataset(dir.path, {{"paper", 40}, {"author", 30}, {"subject", 60}}, 3);
  auto j = nlohmann::json::parse(std::ifstream(manifest));
  const std::string edge_file = j["relations"][1]["edge_file"];
  std::ofstream(dir.path / edge_file, std::ios::app) << "0\t9999\n";
  CHECK_THROWS_AS(load_dataset(manifest), DataError);
  CHECK_THROWS_AS(load_dataset(dir.path / "nope.json"), DataError);
}

TEST_CASE("manifest with unlabeled targets or bad class ids is rejected") {
  TempDir dir("lab");
  auto manifest = write_shaped_dataset(dir.path, {{"paper", 10}, {"author", 5}, {"subject", 3}}, 3);
  auto j = nlohmann::json::parse(std::ifstream(manifest));
  const fs::path labels = dir.path / j["labels_file"].get<std::string>();
  write_labels(labels, {0, 1, 2, 0, 1, 2, 0, 1, 2, 5});
  CHECK_THROWS_AS(load_dataset(manifest), DataError);
  write_labels(labels, {0, 1, 2});
  CHECK_THROWS_AS(load_dataset(manifest), DataError);
}

TEST_CASE("manifest json round-trip") {
  DatasetManifest m;
  m.name = "x";
  m.node_types = {{"paper", 3, "p.txt", 2}};
  m.relations = {{"pa", "paper", "author", "pa.tsv"}};
  m.target_type = "paper";
  m.labels_file = "labels.tsv";
  m.metapaths = {{"pa", "~pa"}};
  m.num_classes = 2;
  auto back = DatasetManifest::from_json(m.to_json());
  CHECK(back.to_json() == m.to_json());
}

TEST_CASE("synthetic generator") {
  SyntheticSpec spec;
  spec.n_target = 90;
  spec.aux_sizes = {60, 30};
  spec.seed = 4;
  auto a = generate_synthetic(spec);
  auto b = generate_synthetic(spec);
  CHECK(validate(a.graph).empty());
  CHECK(a.labels == b.labels);
  CHECK(a.graph.adjacency(0) == b.graph.adjacency(0));
  CHECK(a.graph.node_type(0).features == b.graph.node_type(0).features);
  CHECK(a.metapaths.size() == 2);
  std::vector<int> counts(3, 0);
  for (int l : a.labels) ++counts[l];
  CHECK(counts == std::vector<int>{30, 30, 30});
  spec.p_in = 0.01;
  spec.p_out = 0.02;
  CHECK_THROWS_AS(generate_synthetic(spec), std::invalid_argument);
  spec = SyntheticSpec{};
  CHECK(SyntheticSpec::from_json(spec.to_json()).to_json() == spec.to_json());
}

TEST_CASE("certain in-class edges, no cross-class edges and no noise give class cliques") {
  SyntheticSpec spec;
  spec.n_target = 60;
  spec.aux_sizes = {30, 30};
  spec.p_in = 1.0;
  spec.p_out = 0.0;
  spec.feature_noise = 0.0;
  spec.feature_dim = 3;
  auto ds = generate_synthetic(spec);
  for (const auto& p : ds.metapaths) {
    auto adj = metapath_adjacency(ds.graph, p).adjacency;
    CHECK(within_class_fraction(adj, ds.labels) == 1.0);
    // every connected pair is same-class and each class is internally complete
    for (std::uint32_t i = 0; i < 60; ++i) {
      for (std::uint32_t j = 0; j < 60; ++j) {
        if (i != j && ds.labels[i] == ds.labels[j]) CHECK(adj.contains(i, j));
      }
    }
  }
  for (std::uint32_t i = 0; i < 60; ++i) {
    CHECK(ds.graph.node_type(0).features(i, ds.labels[i]) == 1.0);
    CHECK(ds.graph.node_type(0).features.row(i).sum() == 1.0);
  }
}

TEST_CASE("equal edge probabilities carry no class signal in the adjacency") {
  SyntheticSpec spec;
  spec.p_in = 0.02;
  spec.p_out = 0.02;
  double total = 0.0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    spec.seed = seed;
    auto ds = generate_synthetic(spec);
    total += within_class_fraction(metapath_adjacency(ds.graph, ds.metapaths[0]).adjacency, ds.labels);
  }
  CHECK(std::abs(total / 5.0 - 1.0 / 3.0) < 0.03);
}

TEST_CASE("a larger probability gap never lowers the within-class edge fraction") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    double previous = 0.0;
    for (double gap : {0.0, 0.01, 0.03, 0.06}) {
      SyntheticSpec spec;
      spec.p_out = 0.004;
      spec.p_in = spec.p_out + gap;
      spec.seed = seed;
      auto ds = generate_synthetic(spec);
      const double f = within_class_fraction(metapath_adjacency(ds.graph, ds.metapaths[0]).adjacency, ds.labels);
      CHECK(f >= previous);
      previous = f;
    }
  }
}

TEST_CASE("saved datasets load back identically") {
  TempDir dir("save");
  SyntheticSpec spec;
  spec.n_target = 30;
  spec.aux_sizes = {12, 9};
  auto ds = generate_synthetic(spec);
  auto back = load_dataset(save_dataset(dir.path, ds));
  CHECK(back.labels == ds.labels);
  CHECK(back.graph.adjacency(1) == ds.graph.adjacency(1));
  CHECK(back.metapaths[1].name == ds.metapaths[1].name);
  CHECK(back.graph.node_type(0).features == ds.graph.node_type(0).features.cast<float>().cast<double>());
}
