#include "m2hgcl/metapath.hpp"

#include <cctype>
#include <stdexcept>

namespace m2hgcl {

namespace {

NodeTypeId step_src(const HeteroGraph& g, const MetaPathStep& s) {
  const auto& r = g.relation(s.relation);
  return s.reversed ? r.dst_type : r.src_type;
}

NodeTypeId step_dst(const HeteroGraph& g, const MetaPathStep& s) {
  const auto& r = g.relation(s.relation);
  return s.reversed ? r.src_type : r.dst_type;
}

void check_target(const HeteroGraph& graph, std::size_t node) {
  if (node >= graph.target_count()) {
    throw std::out_of_range("target node " + std::to_string(node) + " out of range (" +
                            std::to_string(graph.target_count()) + " target nodes)");
  }
}

}  // namespace

MetaPath make_metapath(const HeteroGraph& graph, std::string name, std::vector<MetaPathStep> steps) {
  if (steps.empty()) throw std::invalid_argument("meta-path '" + name + "' has no steps");
  MetaPath path{std::move(name), std::move(steps), {}};
  for (const auto& s : path.steps) {
    if (s.relation >= graph.num_relations()) {
      throw std::invalid_argument("meta-path '" + path.name + "': unknown relation id " +
                                  std::to_string(s.relation));
    }
  }
  path.node_types.push_back(step_src(graph, path.steps.front()));
  for (std::size_t k = 0; k < path.steps.size(); ++k) {
    const auto src = step_src(graph, path.steps[k]);
    if (src != path.node_types.back()) {
      throw std::invalid_argument("meta-path '" + path.name + "': step " + std::to_string(k) +
                                  " starts at type '" + graph.node_type(src).name + "' but previous step ends at '" +
                                  graph.node_type(path.node_types.back()).name + "'");
    }
    path.node_types.push_back(step_dst(graph, path.steps[k]));
  }
  if (path.node_types.front() != graph.target_type() || path.node_types.back() != graph.target_type()) {
    throw std::invalid_argument("meta-path '" + path.name + "' must start and end at the target type '" +
                                graph.node_type(graph.target_type()).name + "'");
  }
  return path;
}

MetaPath parse_metapath(const HeteroGraph& graph, const std::vector<std::string>& relation_names,
                        std::string name) {
  std::vector<MetaPathStep> steps;
  for (const auto& raw : relation_names) {
    const bool reversed = !raw.empty() && raw.front() == '~';
    steps.push_back({graph.relation_id(reversed ? raw.substr(1) : raw), reversed});
  }
  if (name.empty()) {
    std::vector<NodeTypeId> types;
    for (const auto& s : steps) types.push_back(step_src(graph, s));
    if (!steps.empty()) types.push_back(step_dst(graph, steps.back()));
    for (auto t : types) {
      const auto& tn = graph.node_type(t).name;
      name += tn.empty() ? '?' : static_cast<char>(std::toupper(static_cast<unsigned char>(tn.front())));
    }
  }
  return make_metapath(graph, std::move(name), std::move(steps));
}

const BoolCsr& step_matrix(const HeteroGraph& graph, const MetaPathStep& step) {
  return step.reversed ? graph.adjacency_transpose(step.relation) : graph.adjacency(step.relation);
}

MetaPathSubgraph metapath_adjacency(const HeteroGraph& graph, const MetaPath& path) {
  // Re-derive to type-check a path that may have been built by hand.
  auto checked = make_metapath(graph, path.name, path.steps);
  BoolCsr acc = step_matrix(graph, checked.steps.front());
  for (std::size_t k = 1; k < checked.steps.size(); ++k) {
    acc = bool_product(acc, step_matrix(graph, checked.steps[k]));
  }
  return {std::move(checked), acc.without_diagonal(), Scale::Initial};
}

MetaPath expand_metapath(const MetaPath& path) {
  if (path.hops() != 2) {
    throw std::invalid_argument("expand_metapath: '" + path.name + "' has " + std::to_string(path.hops()) +
                                " hops; only 2-hop initial meta-paths expand");
  }
  MetaPath out;
  out.steps = path.steps;
  out.steps.insert(out.steps.end(), path.steps.begin(), path.steps.end());
  out.node_types = path.node_types;
  out.node_types.insert(out.node_types.end(), path.node_types.begin() + 1, path.node_types.end());
  out.name = path.name.size() == 3 ? path.name + path.name.substr(1) : path.name + "x2";
  return out;
}

MetaPathSubgraph expanded_adjacency(const MetaPathSubgraph& initial) {
  if (initial.scale != Scale::Initial) {
    throw std::invalid_argument("expanded_adjacency: input subgraph is already expanded");
  }
  auto path = expand_metapath(initial.path);
  // A 4-hop instance may pass back through its anchor at the midpoint, so the
  // identity joins the initial relation before composing.
  const BoolCsr reach = initial.adjacency.with_diagonal();
  return {std::move(path), bool_product(reach, reach).without_diagonal(), Scale::Expanded};
}

MetaPathSubgraph expanded_adjacency(const HeteroGraph& graph, const MetaPath& path) {
  return expanded_adjacency(metapath_adjacency(graph, path));
}

std::vector<std::uint32_t> direct_neighbors(const HeteroGraph& graph, const MetaPath& path,
                                            std::size_t target_node) {
  check_target(graph, target_node);
  auto row = step_matrix(graph, path.steps.at(0)).row(target_node);
  return {row.begin(), row.end()};
}

std::vector<std::uint32_t> metapath_neighbors(const MetaPathSubgraph& subgraph, std::size_t target_node) {
  if (target_node >= subgraph.adjacency.rows()) {
    throw std::out_of_range("target node " + std::to_string(target_node) + " out of range");
  }
  auto row = subgraph.adjacency.row(target_node);
  return {row.begin(), row.end()};
}

std::vector<std::uint32_t> metapath_neighbors(const HeteroGraph& graph, const MetaPath& path,
                                              std::size_t target_node) {
  check_target(graph, target_node);
  return metapath_neighbors(metapath_adjacency(graph, path), target_node);
}

}  // namespace m2hgcl
