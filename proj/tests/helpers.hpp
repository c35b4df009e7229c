#pragma once

#include <cmath>
#include <functional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "m2hgcl/autodiff.hpp"
#include "m2hgcl/hin.hpp"
#include "m2hgcl/metapath.hpp"

namespace m2hgcl::test {

inline RelationSpec relation(std::string name, NodeTypeId src, NodeTypeId dst,
                             const std::vector<std::pair<std::uint32_t, std::uint32_t>>& pairs) {
  RelationSpec r{std::move(name), src, dst, {}};
  for (auto [s, d] : pairs) r.edges.push_back({s, d, 1.0});
  return r;
}

inline Matrix random_features(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = normal(rng);
  return m;
}

// Movies M1..M3, actors A1..A3, director D1, writer W1. Types: 0 movie,
// 1 actor, 2 director, 3 writer. Relations: 0 MA, 1 MD, 2 MW.
inline HeteroGraph toy_freebase() {
  std::mt19937_64 rng(7);
  std::vector<NodeType> types{{"movie", 3, random_features(3, 4, rng)},
                              {"actor", 3, random_features(3, 4, rng)},
                              {"director", 1, random_features(1, 4, rng)},
                              {"writer", 1, random_features(1, 4, rng)}};
  std::vector<RelationSpec> rels{relation("MA", 0, 1, {{0, 0}, {0, 1}, {1, 1}, {2, 0}, {2, 2}}),
                                 relation("MD", 0, 2, {{0, 0}, {1, 0}, {2, 0}}),
                                 relation("MW", 0, 3, {{1, 0}, {2, 0}})};
  return HeteroGraph(std::move(types), std::move(rels), 0);
}

struct RandomHin {
  HeteroGraph graph;
  std::vector<MetaPath> metapaths;  // T-X-T for every auxiliary type X
};

// Target type 0 plus `aux` auxiliary types, each joined to the target by one
// relation with Bernoulli(p) edges.
inline RandomHin random_hin(std::mt19937_64& rng, std::size_t targets, std::size_t aux, std::size_t aux_size,
                            double p, std::size_t feat_dim = 3) {
  std::vector<NodeType> types{{"target", targets, random_features(targets, feat_dim, rng)}};
  std::vector<RelationSpec> rels;
  std::bernoulli_distribution edge(p);
  for (std::size_t a = 0; a < aux; ++a) {
    types.push_back({"aux" + std::to_string(a), aux_size, random_features(aux_size, feat_dim, rng)});
    RelationSpec r{"r" + std::to_string(a), 0, static_cast<NodeTypeId>(a + 1), {}};
    for (std::uint32_t i = 0; i < targets; ++i) {
      for (std::uint32_t j = 0; j < aux_size; ++j) {
        if (edge(rng)) r.edges.push_back({i, j, 1.0});
      }
    }
    rels.push_back(std::move(r));
  }
  RandomHin out{HeteroGraph(std::move(types), std::move(rels), 0), {}};
  for (std::size_t a = 0; a < aux; ++a) {
    const std::string rel = "r" + std::to_string(a);
    out.metapaths.push_back(parse_metapath(out.graph, {rel, "~" + rel}));
  }
  return out;
}

// Exhaustive enumeration of meta-path instances by depth-first walks over the
// raw edge lists (no matrix algebra).
inline std::set<std::pair<std::uint32_t, std::uint32_t>> enumerate_paths(const HeteroGraph& g,
                                                                       const std::vector<MetaPathStep>& steps) {
  std::set<std::pair<std::uint32_t, std::uint32_t>> out;
  const std::size_t n = g.target_count();
  std::function<void(std::uint32_t, std::size_t, std::uint32_t)> walk = [&](std::uint32_t start, std::size_t k,
                                                                           std::uint32_t node) {
    if (k == steps.size()) {
      if (node != start) out.insert({start, node});
      return;
    }
    for (const auto& e : g.relation(steps[k].relation).edges) {
      const auto from = steps[k].reversed ? e.dst : e.src;
      const auto to = steps[k].reversed ? e.src : e.dst;
      if (from == node) walk(start, k + 1, to);
    }
  };
  for (std::uint32_t i = 0; i < n; ++i) walk(i, 0, i);
  return out;
}

inline std::set<std::pair<std::uint32_t, std::uint32_t>> as_set(const BoolCsr& m) {
  std::set<std::pair<std::uint32_t, std::uint32_t>> out;
  for (std::uint32_t r = 0; r < m.rows(); ++r) {
    for (auto c : m.row(r)) out.insert({r, c});
  }
  return out;
}

// Largest relative error between the analytic gradient of `param` and central
// differences of `loss`, max(|a - f|) / max(1, max|f|) style per entry.
inline double gradient_error(ad::Tensor& param, const std::function<double()>& loss, const Matrix& analytic,
                             double h = 1e-5) {
  double worst = 0.0;
  Matrix& v = param.mutable_value();
  for (Eigen::Index k = 0; k < v.size(); ++k) {
    const double saved = v.data()[k];
    v.data()[k] = saved + h;
    const double up = loss();
    v.data()[k] = saved - h;
    const double down = loss();
    v.data()[k] = saved;
    const double numeric = (up - down) / (2.0 * h);
    const double a = analytic.data()[k];
    const double err = std::abs(a - numeric) / std::max({1e-3, std::abs(a), std::abs(numeric)});
    worst = std::max(worst, err);
  }
  return worst;
}

}  // namespace m2hgcl::test
