#include "m2hgcl/hin.hpp"

#include <cmath>
#include <stdexcept>

namespace m2hgcl {

HeteroGraph::HeteroGraph(std::vector<NodeType> node_types, std::vector<RelationSpec> relations,
                         NodeTypeId target_type)
    : node_types_(std::move(node_types)),
      relations_(std::move(relations)),
      target_type_(target_type) {
  adjacency_.reserve(relations_.size());
  transposed_.reserve(relations_.size());
  for (const auto& rel : relations_) {
    const std::size_t rows = rel.src_type < node_types_.size() ? node_types_[rel.src_type].count : 0;
    const std::size_t cols = rel.dst_type < node_types_.size() ? node_types_[rel.dst_type].count : 0;
    std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs;
    pairs.reserve(rel.edges.size());
    for (const auto& e : rel.edges) {
      if (e.src < rows && e.dst < cols) pairs.emplace_back(e.src, e.dst);
    }
    adjacency_.push_back(BoolCsr::from_pairs(rows, cols, std::move(pairs)));
    transposed_.push_back(adjacency_.back().transpose());
  }
}

RelationId HeteroGraph::relation_id(const std::string& name) const {
  for (std::size_t r = 0; r < relations_.size(); ++r) {
    if (relations_[r].name == name) return static_cast<RelationId>(r);
  }
  throw std::invalid_argument("unknown relation '" + name + "'");
}

NodeTypeId HeteroGraph::node_type_id(const std::string& name) const {
  for (std::size_t t = 0; t < node_types_.size(); ++t) {
    if (node_types_[t].name == name) return static_cast<NodeTypeId>(t);
  }
  throw std::invalid_argument("unknown node type '" + name + "'");
}

std::span<const std::uint32_t> HeteroGraph::neighbors(RelationId relation, std::size_t node) const {
  if (relation >= relations_.size()) {
    throw std::out_of_range("neighbors: unknown relation id " + std::to_string(relation));
  }
  const auto& adj = adjacency_[relation];
  if (node >= adj.rows()) {
    throw std::out_of_range("neighbors: node " + std::to_string(node) + " out of range for relation '" +
                            relations_[relation].name + "'");
  }
  return adj.row(node);
}

std::vector<std::string> validate(const HeteroGraph& graph) {
  std::vector<std::string> issues;
  const std::size_t n_types = graph.num_node_types();
  if (n_types + graph.num_relations() <= 2) {
    issues.push_back("heterogeneity: |node types| + |relations| = " +
                     std::to_string(n_types + graph.num_relations()) + ", must exceed 2");
  }
  if (graph.target_type() >= n_types) {
    issues.push_back("target type id " + std::to_string(graph.target_type()) + " is not a node type");
  }
  for (std::size_t t = 0; t < n_types; ++t) {
    const auto& nt = graph.node_type(static_cast<NodeTypeId>(t));
    if (static_cast<std::size_t>(nt.features.rows()) != nt.count) {
      issues.push_back("node type '" + nt.name + "': feature rows " + std::to_string(nt.features.rows()) +
                       " != count " + std::to_string(nt.count));
    }
    if (!nt.features.allFinite()) {
      issues.push_back("node type '" + nt.name + "': features contain non-finite values");
    }
  }
  for (const auto& rel : graph.relations()) {
    if (rel.src_type >= n_types || rel.dst_type >= n_types) {
      issues.push_back("relation '" + rel.name + "': endpoint type out of range");
      continue;
    }
    const std::size_t rows = graph.node_type(rel.src_type).count;
    const std::size_t cols = graph.node_type(rel.dst_type).count;
    std::size_t bad_index = 0;
    std::size_t bad_weight = 0;
    for (const auto& e : rel.edges) {
      if (e.src >= rows || e.dst >= cols) ++bad_index;
      if (e.weight != 1.0) ++bad_weight;
    }
    if (bad_index > 0) {
      issues.push_back("relation '" + rel.name + "': " + std::to_string(bad_index) +
                       " edge(s) with endpoint index out of range");
    }
    if (bad_weight > 0) {
      issues.push_back("relation '" + rel.name + "': " + std::to_string(bad_weight) +
                       " edge(s) with non-binary weight");
    }
  }
  return issues;
}

void require_valid(const HeteroGraph& graph) {
  auto issues = validate(graph);
  if (issues.empty()) return;
  std::string msg = "invalid heterogeneous graph:";
  for (const auto& i : issues) msg += "\n  - " + i;
  throw std::invalid_argument(msg);
}

}  // namespace m2hgcl
