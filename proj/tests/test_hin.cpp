#include <doctest.h>

#include <algorithm>
#include <limits>

#include "helpers.hpp"
#include "m2hgcl/sparse.hpp"

using namespace m2hgcl;

TEST_CASE("bool csr construction collapses duplicates and sorts rows") {
  auto m = BoolCsr::from_pairs(3, 4, {{2, 1}, {0, 3}, {0, 1}, {0, 3}});
  CHECK(m.nnz() == 3);
  CHECK(std::vector<std::uint32_t>(m.row(0).begin(), m.row(0).end()) == std::vector<std::uint32_t>{1, 3});
  CHECK(m.row(1).empty());
  CHECK(m.contains(2, 1));
  CHECK_FALSE(m.contains(2, 2));
  CHECK_THROWS_AS(BoolCsr::from_pairs(2, 2, {{2, 0}}), std::out_of_range);
}

TEST_CASE("bool product matches dense boolean multiplication") {
  std::mt19937_64 rng(3);
  std::bernoulli_distribution coin(0.3);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<std::pair<std::uint32_t, std::uint32_t>> pa, pb;
    for (std::uint32_t i = 0; i < 6; ++i)
      for (std::uint32_t j = 0; j < 5; ++j) {
        if (coin(rng)) pa.push_back({i, j});
      }
    for (std::uint32_t i = 0; i < 5; ++i)
      for (std::uint32_t j = 0; j < 7; ++j) {
        if (coin(rng)) pb.push_back({i, j});
      }
    auto a = BoolCsr::from_pairs(6, 5, pa);
    auto b = BoolCsr::from_pairs(5, 7, pb);
    auto c = bool_product(a, b);
    for (std::uint32_t i = 0; i < 6; ++i)
      for (std::uint32_t j = 0; j < 7; ++j) {
        bool expect = false;
        for (std::uint32_t k = 0; k < 5; ++k) expect = expect || (a.contains(i, k) && b.contains(k, j));
        CHECK(c.contains(i, j) == expect);
      }
  }
}

TEST_CASE("transpose, diagonal edits and union") {
  auto m = BoolCsr::from_pairs(3, 3, {{0, 1}, {1, 1}, {2, 0}});
  auto t = m.transpose();
  CHECK(t.contains(1, 0));
  CHECK(t.contains(0, 2));
  CHECK(t.transpose() == m);
  CHECK_FALSE(m.without_diagonal().contains(1, 1));
  auto d = m.with_diagonal();
  CHECK((d.contains(0, 0) && d.contains(1, 1) && d.contains(2, 2)));
  CHECK(m.union_with(t).is_symmetric());
  CHECK_FALSE(m.is_symmetric());
  CHECK(BoolCsr::identity(4).nnz() == 4);
}

TEST_CASE("toy movie graph is valid") {
  auto g = test::toy_freebase();
  CHECK(validate(g).empty());
  CHECK_NOTHROW(require_valid(g));
  CHECK(g.target_count() == 3);
  CHECK(g.relation_id("MD") == 1);
  CHECK(g.node_type_id("writer") == 3);
  CHECK_THROWS(g.relation_id("XY"));
}

TEST_CASE("a single node type with one relation is too small") {
  std::vector<NodeType> types{{"paper", 3, Matrix::Zero(3, 2)}};
  std::vector<RelationSpec> rels{test::relation("cites", 0, 0, {{0, 1}})};
  HeteroGraph g(types, rels, 0);
  auto issues = validate(g);
  REQUIRE(issues.size() == 1);
  CHECK(issues[0].find("heterogeneity") != std::string::npos);
  CHECK_THROWS_AS(require_valid(g), std::invalid_argument);
}

TEST_CASE("out-of-range edge index is reported and excluded") {
  std::vector<NodeType> types{{"m", 3, Matrix::Zero(3, 2)}, {"a", 2, Matrix::Zero(2, 2)}};
  std::vector<RelationSpec> rels{test::relation("ma", 0, 1, {{5, 0}, {1, 1}})};
  HeteroGraph g(types, rels, 0);
  auto issues = validate(g);
  REQUIRE(issues.size() == 1);
  CHECK(issues[0].find("out of range") != std::string::npos);
  CHECK(g.adjacency(0).nnz() == 1);
}

TEST_CASE("each single-fault mutation is rejected") {
  auto base = test::toy_freebase();
  SUBCASE("non-binary weight") {
    auto rels = base.relations();
    rels[0].edges[0].weight = 2.0;
    CHECK_FALSE(validate(HeteroGraph(base.node_types(), rels, 0)).empty());
  }
  SUBCASE("NaN feature") {
    auto types = base.node_types();
    types[1].features(0, 0) = std::numeric_limits<double>::quiet_NaN();
    CHECK_FALSE(validate(HeteroGraph(types, base.relations(), 0)).empty());
  }
  SUBCASE("feature row count") {
    auto types = base.node_types();
    types[2].features = Matrix::Zero(4, 4);
    CHECK_FALSE(validate(HeteroGraph(types, base.relations(), 0)).empty());
  }
  SUBCASE("bad target type") { CHECK_FALSE(validate(HeteroGraph(base.node_types(), base.relations(), 9)).empty()); }
  SUBCASE("endpoint type") {
    auto rels = base.relations();
    rels[2].dst_type = 11;
    CHECK_FALSE(validate(HeteroGraph(base.node_types(), rels, 0)).empty());
  }
}

TEST_CASE("neighbors lookup") {
  auto g = test::toy_freebase();
  auto md = g.neighbors(g.relation_id("MD"), 2);
  CHECK(std::vector<std::uint32_t>(md.begin(), md.end()) == std::vector<std::uint32_t>{0});
  auto mw = g.neighbors(g.relation_id("MW"), 0);
  CHECK(mw.empty());
  CHECK_THROWS_AS(g.neighbors(0, 3), std::out_of_range);
  CHECK_THROWS_AS(g.neighbors(7, 0), std::out_of_range);
}

TEST_CASE("neighbors are sorted, unique, stable and complete") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 10; ++trial) {
    auto hin = test::random_hin(rng, 10, 2, 10, 0.4);
    for (RelationId r = 0; r < 2; ++r) {
      for (std::size_t v = 0; v < 10; ++v) {
        auto a = hin.graph.neighbors(r, v);
        std::vector<std::uint32_t> got(a.begin(), a.end());
        CHECK(std::is_sorted(got.begin(), got.end()));
        CHECK(std::adjacent_find(got.begin(), got.end()) == got.end());
        auto b = hin.graph.neighbors(r, v);
        CHECK(got == std::vector<std::uint32_t>(b.begin(), b.end()));
        std::set<std::uint32_t> expect;
        for (const auto& e : hin.graph.relation(r).edges) {
          if (e.src == v) expect.insert(e.dst);
        }
        CHECK(got == std::vector<std::uint32_t>(expect.begin(), expect.end()));
      }
    }
  }
  // a node linked to every peer sees the full list
  std::vector<std::pair<std::uint32_t, std::uint32_t>> star;
  for (std::uint32_t j = 0; j < 10; ++j) star.push_back({0, j});
  HeteroGraph g({{"t", 10, Matrix::Zero(10, 1)}, {"x", 10, Matrix::Zero(10, 1)}},
                {test::relation("tx", 0, 1, star), test::relation("tt", 0, 0, {})}, 0);
  CHECK(g.neighbors(0, 0).size() == 10);
}
