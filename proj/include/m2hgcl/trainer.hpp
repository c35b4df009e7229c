#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "m2hgcl/contrastive.hpp"
#include "m2hgcl/encoder.hpp"

namespace m2hgcl {

enum class Variant { Full, WoExpanded, WoDirect, WoGlobal, WoLocal, WoPsamp };

std::string to_string(Variant v);
Variant parse_variant(const std::string& name);
const std::vector<Variant>& all_variants();

struct TrainConfig {
  std::size_t hidden_dim = 64;
  std::size_t attention_dim = 128;
  double lr = 1e-3;
  std::size_t epochs = 1000;
  std::size_t patience = 30;
  double min_improvement = 1e-5;
  std::uint64_t seed = 0;
  double tau = 0.5;
  double alpha = 0.5;
  GlobalMode global_mode = GlobalMode::Corrupted;
  Variant variant = Variant::Full;
  double leaky_slope = 0.2;
  bool normalize_embeddings = false;  // L2-normalize rows of the final Z

  /// Dataset presets: "aminer", "acm", "freebase" (anything else: defaults).
  static TrainConfig preset(const std::string& dataset);
  void validate() const;
};

/// Encoder/loss wiring after applying the ablation variant.
struct Wiring {
  EncoderConfig encoder;
  ContrastConfig contrast;
};

Wiring apply_variant(const TrainConfig& config);

/// Independent sub-seeds derived from the run seed.
struct SubSeeds {
  std::uint64_t init = 0;
  std::uint64_t corruption = 0;
};

SubSeeds derive_seeds(std::uint64_t seed);

struct TrainResult {
  ModelParams params;         // parameters at the lowest-loss epoch
  Matrix embedding;           // Z from those parameters
  Matrix semantic_weights;    // beta [1 x M]
  std::vector<double> loss_curve;
  std::size_t best_epoch = 0;
  SubSeeds seeds;
};

/// Full-batch Adam on the normalized objective with loss-based early stopping.
/// Throws on a non-finite loss or fewer than two meta-paths.
TrainResult train(const HeteroGraph& graph, const std::vector<MetaPath>& metapaths, const TrainConfig& config);

/// Z from freshly initialized (untrained) parameters.
Matrix untrained_embedding(const HeteroGraph& graph, const std::vector<MetaPath>& metapaths,
                           const TrainConfig& config);

}  // namespace m2hgcl
