#pragma once

#include <random>
#include <string>
#include <vector>

#include "m2hgcl/autodiff.hpp"
#include "m2hgcl/hin.hpp"
#include "m2hgcl/metapath.hpp"

namespace m2hgcl {

struct EncoderConfig {
  std::size_t hidden_dim = 64;
  std::size_t attention_dim = 128;
  double leaky_slope = 0.2;
  bool use_direct = true;    // false: view embedding is h^AGG only
  bool use_expanded = true;  // false: h^AGG is the initial-scale GCN output

  std::size_t view_width() const { return use_direct ? 2 * hidden_dim : hidden_dim; }
};

/// Graph structure consumed by one meta-path view, computed once.
struct ViewStructure {
  MetaPathSubgraph initial;
  MetaPathSubgraph expanded;
  SparseMatrix initial_operator;   // renormalized D^-1/2 (X + I) D^-1/2
  SparseMatrix expanded_operator;
  BoolCsr direct;                  // [n_target x n_neighbor] first-step relation
  std::vector<std::uint32_t> direct_edge_rows;  // target index of each nnz of `direct`
  NodeTypeId neighbor_type = 0;
};

/// Renormalization-trick GCN operator of a binary adjacency.
SparseMatrix gcn_operator(const BoolCsr& adjacency);

ViewStructure prepare_view(const HeteroGraph& graph, const MetaPath& path, bool with_expanded = true);

struct NamedTensor {
  std::string name;
  ad::Tensor tensor;
};

/// Every learnable tensor of the model. Tensors disabled by the encoder
/// configuration are left undefined and absent from the registry.
struct ModelParams {
  std::vector<ad::Tensor> type_weight;       // per node type [feat_dim x d]
  std::vector<ad::Tensor> type_bias;         // per node type [1 x d]
  std::vector<ad::Tensor> direct_attention;  // per meta-path [2d x 1]
  std::vector<ad::Tensor> gcn_initial;       // per meta-path [d x d]
  std::vector<ad::Tensor> gcn_expanded;      // per meta-path [d x d]
  ad::Tensor scale_weight;                   // [d x d_a], shared across meta-paths
  ad::Tensor scale_bias;                     // [1 x d_a]
  ad::Tensor scale_vector;                   // [d_a x 1]
  ad::Tensor semantic_weight;                // [w x d_a]
  ad::Tensor semantic_bias;                  // [1 x d_a]
  ad::Tensor semantic_vector;                // [d_a x 1]
  ad::Tensor discriminator;                  // [w x w]

  /// Glorot-uniform weights and attention vectors, zero biases.
  static ModelParams init(const HeteroGraph& graph, std::size_t num_metapaths, const EncoderConfig& config,
                          std::mt19937_64& rng);

  std::vector<NamedTensor> registry() const;
  std::vector<ad::Tensor> tensors() const;
  /// Deep copy of the values into fresh leaf tensors.
  ModelParams clone() const;
};

struct ViewEmbedding {
  std::string name;
  ad::Tensor embedding;         // H^{P_m}: [n_target x w]
  ad::Tensor direct;            // h^OH: [n_target x d] (undefined without direct aggregation)
  ad::Tensor aggregated;        // h^AGG: [n_target x d]
  ad::Tensor scale_weights;     // [1 x 2] (omega_I, omega_E)
  ad::Tensor direct_attention;  // zeta per edge of ViewStructure::direct, [nnz x 1]
};

struct ScaleFusion {
  ad::Tensor aggregated;  // [n x d]
  ad::Tensor weights;     // [1 x 2]
};

struct SemanticFusion {
  ad::Tensor embedding;  // Z: [n x w]
  ad::Tensor weights;    // beta: [1 x M]
};

/// h_i = ELU(x_i W + b) for every node of every type.
std::vector<ad::Tensor> transform_features(const std::vector<ad::Tensor>& features, const ModelParams& params);

/// Attention over the one-hop neighbors along the view's first relation
/// followed by ELU. Targets without neighbors get a zero row.
ad::Tensor aggregate_direct(const ViewStructure& view, const ad::Tensor& h_target, const ad::Tensor& h_neighbor,
                            const ad::Tensor& attention, double leaky_slope, ad::Tensor* zeta = nullptr);

/// ELU(A H W) for a renormalized operator A.
ad::Tensor gcn_encode(const SparseMatrix& op, const ad::Tensor& h, const ad::Tensor& weight);

/// Mean over nodes of tanh(gamma . (h W + b)), a [1 x 1] importance score.
ad::Tensor attention_score(const ad::Tensor& h, const ad::Tensor& weight, const ad::Tensor& bias,
                           const ad::Tensor& vector);

ScaleFusion fuse_scales(const ad::Tensor& h_initial, const ad::Tensor& h_expanded, const ModelParams& params);

SemanticFusion fuse_semantic(const std::vector<ViewEmbedding>& views, const ModelParams& params);

/// Forward pass over a fixed graph and meta-path set.
class Encoder {
 public:
  Encoder(const HeteroGraph& graph, std::vector<MetaPath> metapaths, EncoderConfig config);

  const HeteroGraph& graph() const { return *graph_; }
  const EncoderConfig& config() const { return config_; }
  const std::vector<MetaPath>& metapaths() const { return metapaths_; }
  const std::vector<ViewStructure>& views() const { return views_; }
  std::size_t num_views() const { return views_.size(); }

  ModelParams init_params(std::mt19937_64& rng) const;

  /// Per-view embeddings with the graph's own features.
  std::vector<ViewEmbedding> forward(const ModelParams& params) const;
  /// Per-view embeddings with the target-type feature rows permuted by
  /// `target_permutation` (row i takes the features of node perm[i]).
  std::vector<ViewEmbedding> forward_corrupted(const ModelParams& params,
                                               const std::vector<std::uint32_t>& target_permutation) const;

  ViewEmbedding build_view(std::size_t m, const std::vector<ad::Tensor>& transformed,
                           const ModelParams& params) const;

  /// Final fused representation Z.
  SemanticFusion embed(const ModelParams& params) const;

 private:
  std::vector<ViewEmbedding> forward_with(const std::vector<ad::Tensor>& features, const ModelParams& params) const;

  const HeteroGraph* graph_;
  std::vector<MetaPath> metapaths_;
  EncoderConfig config_;
  std::vector<ViewStructure> views_;
  std::vector<ad::Tensor> features_;
};

}  // namespace m2hgcl
