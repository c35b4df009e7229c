#pragma once

#include <string>
#include <vector>

#include "m2hgcl/hin.hpp"
#include "m2hgcl/sparse.hpp"

namespace m2hgcl {

struct MetaPathStep {
  RelationId relation = 0;
  bool reversed = false;  // traverse dst -> src

  friend bool operator==(const MetaPathStep&, const MetaPathStep&) = default;
};

/// A typed relation sequence over a graph, e.g. movie-actor-movie ("MAM").
struct MetaPath {
  std::string name;
  std::vector<MetaPathStep> steps;
  std::vector<NodeTypeId> node_types;  // steps.size() + 1 entries

  std::size_t hops() const { return steps.size(); }
};

enum class Scale { Initial, Expanded };

/// Homogeneous target-node graph induced by a meta-path.
struct MetaPathSubgraph {
  MetaPath path;
  BoolCsr adjacency;  // [n_target x n_target], zero diagonal
  Scale scale = Scale::Initial;
};

/// Type-checks the step sequence against the graph and derives node types.
/// The path must start and end at the graph's target type.
MetaPath make_metapath(const HeteroGraph& graph, std::string name, std::vector<MetaPathStep> steps);

/// Builds from relation names; a leading '~' traverses a relation backwards.
/// If `name` is empty a label is formed from node-type initials.
MetaPath parse_metapath(const HeteroGraph& graph, const std::vector<std::string>& relation_names,
                        std::string name = {});

/// Boolean matrix of one step in its traversal orientation.
const BoolCsr& step_matrix(const HeteroGraph& graph, const MetaPathStep& step);

/// Initial-scale subgraph: (i, j) set iff some meta-path instance joins i != j.
MetaPathSubgraph metapath_adjacency(const HeteroGraph& graph, const MetaPath& path);

/// 4-hop self-composition of a 2-hop path (MAM -> MAMAM).
MetaPath expand_metapath(const MetaPath& path);

/// Expanded-scale subgraph: ((X + I)(X + I)) with the diagonal removed, where
/// X is the initial adjacency. Equivalent to enumerating 4-hop instances.
MetaPathSubgraph expanded_adjacency(const HeteroGraph& graph, const MetaPath& path);
MetaPathSubgraph expanded_adjacency(const MetaPathSubgraph& initial);

/// One-hop neighbors of a target node along the first relation of the path.
std::vector<std::uint32_t> direct_neighbors(const HeteroGraph& graph, const MetaPath& path,
                                            std::size_t target_node);

/// Target nodes joined to `target_node` by the meta-path.
std::vector<std::uint32_t> metapath_neighbors(const MetaPathSubgraph& subgraph, std::size_t target_node);
std::vector<std::uint32_t> metapath_neighbors(const HeteroGraph& graph, const MetaPath& path,
                                              std::size_t target_node);

}  // namespace m2hgcl
