#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "m2hgcl/matrix.hpp"
#include "m2hgcl/sparse.hpp"

namespace m2hgcl {

using NodeTypeId = std::uint32_t;
using RelationId = std::uint32_t;

struct NodeType {
  std::string name;
  std::size_t count = 0;
  Matrix features;  // [count x feature_dim]
};

struct Edge {
  std::uint32_t src = 0;
  std::uint32_t dst = 0;
  double weight = 1.0;
};

/// A directed typed relation as it was supplied. Weights must be 1; repeated
/// (src, dst) pairs collapse.
struct RelationSpec {
  std::string name;
  NodeTypeId src_type = 0;
  NodeTypeId dst_type = 0;
  std::vector<Edge> edges;
};

/// Heterogeneous information network. Node ids are 0-based and per type.
/// Immutable after construction. Construction never throws on invariant
/// violations; call validate() to find them. Invalid edges are excluded from
/// the adjacency index.
class HeteroGraph {
 public:
  HeteroGraph() = default;
  HeteroGraph(std::vector<NodeType> node_types, std::vector<RelationSpec> relations,
              NodeTypeId target_type);

  std::size_t num_node_types() const { return node_types_.size(); }
  std::size_t num_relations() const { return relations_.size(); }
  NodeTypeId target_type() const { return target_type_; }
  std::size_t target_count() const { return node_types_.at(target_type_).count; }

  const NodeType& node_type(NodeTypeId t) const { return node_types_.at(t); }
  const std::vector<NodeType>& node_types() const { return node_types_; }
  const RelationSpec& relation(RelationId r) const { return relations_.at(r); }
  const std::vector<RelationSpec>& relations() const { return relations_; }

  /// Binary adjacency [src_count x dst_count] and its transpose.
  const BoolCsr& adjacency(RelationId r) const { return adjacency_.at(r); }
  const BoolCsr& adjacency_transpose(RelationId r) const { return transposed_.at(r); }

  RelationId relation_id(const std::string& name) const;
  NodeTypeId node_type_id(const std::string& name) const;

  /// Sorted, duplicate-free destination indices of `node` along `relation`.
  std::span<const std::uint32_t> neighbors(RelationId relation, std::size_t node) const;

 private:
  std::vector<NodeType> node_types_;
  std::vector<RelationSpec> relations_;
  std::vector<BoolCsr> adjacency_;
  std::vector<BoolCsr> transposed_;
  NodeTypeId target_type_ = 0;
};

/// Returns one message per violated invariant; empty means valid.
std::vector<std::string> validate(const HeteroGraph& graph);

/// Throws std::invalid_argument listing every violation if the graph is invalid.
void require_valid(const HeteroGraph& graph);

}  // namespace m2hgcl
