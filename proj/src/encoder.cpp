#include "m2hgcl/encoder.hpp"

#include <cmath>
#include <stdexcept>

namespace m2hgcl {

SparseMatrix gcn_operator(const BoolCsr& adjacency) {
  const BoolCsr with_loops = adjacency.with_diagonal();
  const auto n = static_cast<Eigen::Index>(with_loops.rows());
  Eigen::VectorXd inv_sqrt_degree(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    inv_sqrt_degree(i) = 1.0 / std::sqrt(static_cast<double>(with_loops.row(i).size()));
  }
  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(with_loops.nnz());
  for (Eigen::Index i = 0; i < n; ++i) {
    for (auto j : with_loops.row(i)) {
      entries.emplace_back(i, j, inv_sqrt_degree(i) * inv_sqrt_degree(j));
    }
  }
  SparseMatrix op(n, n);
  op.setFromTriplets(entries.begin(), entries.end());
  return op;
}

ViewStructure prepare_view(const HeteroGraph& graph, const MetaPath& path, bool with_expanded) {
  ViewStructure view;
  view.initial = metapath_adjacency(graph, path);
  view.initial_operator = gcn_operator(view.initial.adjacency);
  if (with_expanded) {
    view.expanded = expanded_adjacency(view.initial);
    view.expanded_operator = gcn_operator(view.expanded.adjacency);
  }
  view.direct = step_matrix(graph, view.initial.path.steps.front());
  view.neighbor_type = view.initial.path.node_types.at(1);
  view.direct_edge_rows.reserve(view.direct.nnz());
  for (std::size_t r = 0; r < view.direct.rows(); ++r) {
    view.direct_edge_rows.insert(view.direct_edge_rows.end(), view.direct.row(r).size(),
                                 static_cast<std::uint32_t>(r));
  }
  return view;
}

ModelParams ModelParams::init(const HeteroGraph& graph, std::size_t num_metapaths, const EncoderConfig& config,
                              std::mt19937_64& rng) {
  const auto d = static_cast<Eigen::Index>(config.hidden_dim);
  const auto da = static_cast<Eigen::Index>(config.attention_dim);
  const auto w = static_cast<Eigen::Index>(config.view_width());
  auto glorot = [&rng](Eigen::Index r, Eigen::Index c) { return ad::Tensor::parameter(ad::glorot_uniform(r, c, rng)); };
  auto zeros = [](Eigen::Index r, Eigen::Index c) { return ad::Tensor::parameter(Matrix::Zero(r, c)); };

  ModelParams p;
  for (const auto& nt : graph.node_types()) {
    p.type_weight.push_back(glorot(nt.features.cols(), d));
    p.type_bias.push_back(zeros(1, d));
  }
  for (std::size_t m = 0; m < num_metapaths; ++m) {
    if (config.use_direct) p.direct_attention.push_back(glorot(2 * d, 1));
    p.gcn_initial.push_back(glorot(d, d));
    if (config.use_expanded) p.gcn_expanded.push_back(glorot(d, d));
  }
  if (config.use_expanded) {
    p.scale_weight = glorot(d, da);
    p.scale_bias = zeros(1, da);
    p.scale_vector = glorot(da, 1);
  }
  p.semantic_weight = glorot(w, da);
  p.semantic_bias = zeros(1, da);
  p.semantic_vector = glorot(da, 1);
  p.discriminator = glorot(w, w);
  return p;
}

std::vector<NamedTensor> ModelParams::registry() const {
  std::vector<NamedTensor> out;
  auto add_list = [&out](const std::string& stem, const std::vector<ad::Tensor>& list) {
    for (std::size_t k = 0; k < list.size(); ++k) out.push_back({stem + "." + std::to_string(k), list[k]});
  };
  auto add_one = [&out](const std::string& name, const ad::Tensor& t) {
    if (t.defined()) out.push_back({name, t});
  };
  add_list("type_weight", type_weight);
  add_list("type_bias", type_bias);
  add_list("direct_attention", direct_attention);
  add_list("gcn_initial", gcn_initial);
  add_list("gcn_expanded", gcn_expanded);
  add_one("scale_weight", scale_weight);
  add_one("scale_bias", scale_bias);
  add_one("scale_vector", scale_vector);
  add_one("semantic_weight", semantic_weight);
  add_one("semantic_bias", semantic_bias);
  add_one("semantic_vector", semantic_vector);
  add_one("discriminator", discriminator);
  return out;
}

std::vector<ad::Tensor> ModelParams::tensors() const {
  std::vector<ad::Tensor> out;
  for (auto& [name, t] : registry()) out.push_back(t);
  return out;
}

ModelParams ModelParams::clone() const {
  auto copy = [](const ad::Tensor& t) { return t.defined() ? ad::Tensor::parameter(t.value()) : ad::Tensor{}; };
  auto copy_list = [&copy](const std::vector<ad::Tensor>& list) {
    std::vector<ad::Tensor> out;
    for (const auto& t : list) out.push_back(copy(t));
    return out;
  };
  ModelParams p;
  p.type_weight = copy_list(type_weight);
  p.type_bias = copy_list(type_bias);
  p.direct_attention = copy_list(direct_attention);
  p.gcn_initial = copy_list(gcn_initial);
  p.gcn_expanded = copy_list(gcn_expanded);
  p.scale_weight = copy(scale_weight);
  p.scale_bias = copy(scale_bias);
  p.scale_vector = copy(scale_vector);
  p.semantic_weight = copy(semantic_weight);
  p.semantic_bias = copy(semantic_bias);
  p.semantic_vector = copy(semantic_vector);
  p.discriminator = copy(discriminator);
  return p;
}

std::vector<ad::Tensor> transform_features(const std::vector<ad::Tensor>& features, const ModelParams& params) {
  if (features.size() != params.type_weight.size()) {
    throw std::invalid_argument("transform_features: " + std::to_string(features.size()) + " feature matrices for " +
                                std::to_string(params.type_weight.size()) + " node types");
  }
  std::vector<ad::Tensor> out;
  out.reserve(features.size());
  for (std::size_t t = 0; t < features.size(); ++t) {
    if (features[t].cols() != params.type_weight[t].rows()) {
      throw std::invalid_argument("transform_features: node type " + std::to_string(t) + " has feature dim " +
                                  std::to_string(features[t].cols()) + ", weight expects " +
                                  std::to_string(params.type_weight[t].rows()));
    }
    out.push_back(ad::elu(ad::add_row(ad::matmul(features[t], params.type_weight[t]), params.type_bias[t])));
  }
  return out;
}

ad::Tensor aggregate_direct(const ViewStructure& view, const ad::Tensor& h_target, const ad::Tensor& h_neighbor,
                            const ad::Tensor& attention, double leaky_slope, ad::Tensor* zeta) {
  const auto d = h_target.cols();
  if (attention.rows() != 2 * d || attention.cols() != 1) {
    throw std::invalid_argument("aggregate_direct: attention vector must be [2d x 1]");
  }
  // gamma . [h_i || h_j] splits into a target part and a neighbor part.
  auto target_score = ad::matmul(h_target, ad::slice_rows(attention, 0, d));
  auto neighbor_score = ad::matmul(h_neighbor, ad::slice_rows(attention, d, 2 * d));
  auto logits = ad::leaky_relu(ad::add(ad::gather_rows(target_score, view.direct_edge_rows),
                                       ad::gather_rows(neighbor_score, view.direct.col_idx())),
                               leaky_slope);
  auto weights = ad::csr_row_softmax(view.direct, logits);
  if (zeta) *zeta = weights;
  return ad::elu(ad::csr_weighted_sum(view.direct, weights, h_neighbor));
}

ad::Tensor gcn_encode(const SparseMatrix& op, const ad::Tensor& h, const ad::Tensor& weight) {
  return ad::elu(ad::spmm(op, ad::matmul(h, weight)));
}

ad::Tensor attention_score(const ad::Tensor& h, const ad::Tensor& weight, const ad::Tensor& bias,
                           const ad::Tensor& vector) {
  return ad::mean_rows(ad::tanh(ad::matmul(ad::add_row(ad::matmul(h, weight), bias), vector)));
}

ScaleFusion fuse_scales(const ad::Tensor& h_initial, const ad::Tensor& h_expanded, const ModelParams& params) {
  auto eta_i = attention_score(h_initial, params.scale_weight, params.scale_bias, params.scale_vector);
  auto eta_e = attention_score(h_expanded, params.scale_weight, params.scale_bias, params.scale_vector);
  auto omega = ad::row_softmax(ad::concat_cols({eta_i, eta_e}));
  auto aggregated = ad::add(ad::scale_by(h_initial, ad::slice_cols(omega, 0, 1)),
                            ad::scale_by(h_expanded, ad::slice_cols(omega, 1, 2)));
  return {aggregated, omega};
}

SemanticFusion fuse_semantic(const std::vector<ViewEmbedding>& views, const ModelParams& params) {
  if (views.empty()) throw std::invalid_argument("fuse_semantic: no views");
  std::vector<ad::Tensor> scores;
  for (const auto& v : views) {
    scores.push_back(
        attention_score(v.embedding, params.semantic_weight, params.semantic_bias, params.semantic_vector));
  }
  auto beta = ad::row_softmax(ad::concat_cols(scores));
  ad::Tensor z;
  for (std::size_t m = 0; m < views.size(); ++m) {
    const auto col = static_cast<Eigen::Index>(m);
    auto term = ad::scale_by(views[m].embedding, ad::slice_cols(beta, col, col + 1));
    z = z.defined() ? ad::add(z, term) : term;
  }
  return {z, beta};
}

Encoder::Encoder(const HeteroGraph& graph, std::vector<MetaPath> metapaths, EncoderConfig config)
    : graph_(&graph), metapaths_(std::move(metapaths)), config_(config) {
  if (metapaths_.empty()) throw std::invalid_argument("Encoder: at least one meta-path is required");
  views_.reserve(metapaths_.size());
  for (const auto& path : metapaths_) views_.push_back(prepare_view(graph, path, config_.use_expanded));
  for (const auto& nt : graph.node_types()) features_.push_back(ad::Tensor::constant(nt.features));
}

ModelParams Encoder::init_params(std::mt19937_64& rng) const {
  return ModelParams::init(*graph_, views_.size(), config_, rng);
}

ViewEmbedding Encoder::build_view(std::size_t m, const std::vector<ad::Tensor>& transformed,
                                  const ModelParams& params) const {
  const auto& view = views_.at(m);
  const auto& h_target = transformed.at(graph_->target_type());
  ViewEmbedding out;
  out.name = view.initial.path.name;

  auto h_initial = gcn_encode(view.initial_operator, h_target, params.gcn_initial.at(m));
  if (config_.use_expanded) {
    auto h_expanded = gcn_encode(view.expanded_operator, h_target, params.gcn_expanded.at(m));
    auto fused = fuse_scales(h_initial, h_expanded, params);
    out.aggregated = fused.aggregated;
    out.scale_weights = fused.weights;
  } else {
    out.aggregated = h_initial;
    Matrix w(1, 2);
    w << 1.0, 0.0;
    out.scale_weights = ad::Tensor::constant(std::move(w));
  }

  if (config_.use_direct) {
    out.direct = aggregate_direct(view, h_target, transformed.at(view.neighbor_type), params.direct_attention.at(m),
                                  config_.leaky_slope, &out.direct_attention);
    out.embedding = ad::concat_cols({out.direct, out.aggregated});
  } else {
    out.embedding = out.aggregated;
  }
  return out;
}

std::vector<ViewEmbedding> Encoder::forward_with(const std::vector<ad::Tensor>& features,
                                                 const ModelParams& params) const {
  auto transformed = transform_features(features, params);
  std::vector<ViewEmbedding> out;
  out.reserve(views_.size());
  for (std::size_t m = 0; m < views_.size(); ++m) out.push_back(build_view(m, transformed, params));
  return out;
}

std::vector<ViewEmbedding> Encoder::forward(const ModelParams& params) const { return forward_with(features_, params); }

std::vector<ViewEmbedding> Encoder::forward_corrupted(const ModelParams& params,
                                                      const std::vector<std::uint32_t>& target_permutation) const {
  const auto target = graph_->target_type();
  const Matrix& x = features_[target].value();
  if (static_cast<Eigen::Index>(target_permutation.size()) != x.rows()) {
    throw std::invalid_argument("forward_corrupted: permutation size differs from target count");
  }
  Matrix shuffled(x.rows(), x.cols());
  for (std::size_t i = 0; i < target_permutation.size(); ++i) {
    shuffled.row(static_cast<Eigen::Index>(i)) = x.row(target_permutation[i]);
  }
  auto features = features_;
  features[target] = ad::Tensor::constant(std::move(shuffled));
  return forward_with(features, params);
}

SemanticFusion Encoder::embed(const ModelParams& params) const { return fuse_semantic(forward(params), params); }

}  // namespace m2hgcl
