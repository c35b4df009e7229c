#pragma once

#include <cstdint>
#include <vector>

#include "m2hgcl/autodiff.hpp"
#include "m2hgcl/encoder.hpp"
#include "m2hgcl/metapath.hpp"

namespace m2hgcl {

enum class ViewTag { Positive /* view m */, Counterpart /* view n */ };

struct PositiveMember {
  ViewTag view = ViewTag::Positive;
  std::uint32_t node = 0;

  friend bool operator==(const PositiveMember&, const PositiveMember&) = default;
};

/// Positives of an anchor for the ordered view pair (m, n): the anchor's
/// initial meta-path neighbors in view m plus its own row in view n.
struct PositiveSet {
  std::uint32_t anchor = 0;
  std::size_t view_m = 0;
  std::size_t view_n = 0;
  std::vector<PositiveMember> members;
};

PositiveSet sample_positives(const MetaPathSubgraph& subgraph_m, std::uint32_t anchor, std::size_t view_m,
                             std::size_t view_n, bool metapath_positives = true);

enum class GlobalMode { Literal, Corrupted };

struct ContrastConfig {
  double tau = 0.5;
  double alpha = 0.5;
  GlobalMode global_mode = GlobalMode::Corrupted;
  bool metapath_positives = true;  // false: counterpart is the only positive

  void validate() const;
};

/// Mean-pooled readout of a view: [1 x w].
ad::Tensor summary_vector(const ad::Tensor& h);

/// sigmoid(h W s^T) for row vectors h and s.
double discriminate(const Eigen::RowVectorXd& h, const Matrix& w, const Eigen::RowVectorXd& s);

constexpr double kDiscriminatorClamp = 1e-7;

/// Per-node local-global loss of the ordered pair (m, n): [n x 1].
/// Corrupted mode needs the corrupted-pass embeddings of both views.
ad::Tensor loss_global(const ad::Tensor& h_m, const ad::Tensor& h_n, const ad::Tensor& discriminator,
                       GlobalMode mode, const ad::Tensor* corrupt_m = nullptr,
                       const ad::Tensor* corrupt_n = nullptr);

/// Per-node local-local loss of the ordered pair (m, n): [n x 1]. `neighbors_m`
/// holds the initial meta-path adjacency of view m (ignored when
/// `metapath_positives` is false). Similarity is cosine; computed in
/// log-sum-exp form in row blocks.
ad::Tensor loss_local(const ad::Tensor& h_m, const ad::Tensor& h_n, const BoolCsr& neighbors_m,
                      bool metapath_positives, double tau);

/// Local loss of one anchor evaluated directly from its positive set.
double loss_local(const PositiveSet& positives, const Matrix& h_m, const Matrix& h_n, double tau);

struct Objective {
  ad::Tensor total;           // blended objective (normalized if requested)
  double global_sum = 0.0;    // unweighted sum of global terms over pairs and nodes
  double local_sum = 0.0;     // unweighted sum of local terms over pairs and nodes
  std::size_t ordered_pairs = 0;
};

/// Sum over ordered view pairs m != n and over target nodes of
/// alpha * global + (1 - alpha) * local. With `normalize` the sum is divided
/// by (pairs x n_target). `corruption` is the target-row permutation for the
/// corrupted pass (required in Corrupted mode when alpha > 0).
Objective loss_total(const Encoder& encoder, const ModelParams& params, const ContrastConfig& config,
                     const std::vector<std::uint32_t>* corruption, bool normalize);

/// Same objective from precomputed view embeddings.
Objective loss_total(const std::vector<ad::Tensor>& views, const std::vector<ad::Tensor>& corrupted_views,
                     const std::vector<const BoolCsr*>& neighbors, const ad::Tensor& discriminator,
                     const ContrastConfig& config, bool normalize);

}  // namespace m2hgcl
