#include "m2hgcl/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

namespace m2hgcl {

namespace {

const std::vector<std::pair<Variant, std::string>>& variant_names() {
  static const std::vector<std::pair<Variant, std::string>> names = {
      {Variant::Full, "full"},         {Variant::WoExpanded, "wo_expanded"}, {Variant::WoDirect, "wo_direct"},
      {Variant::WoGlobal, "wo_global"}, {Variant::WoLocal, "wo_local"},       {Variant::WoPsamp, "wo_psamp"},
  };
  return names;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

Matrix finalize_embedding(const Matrix& z, bool normalize) {
  if (!normalize) return z;
  Matrix out = z;
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    const double norm = out.row(i).norm();
    if (norm > 0.0) out.row(i) /= norm;
  }
  return out;
}

}  // namespace

std::string to_string(Variant v) {
  for (const auto& [variant, name] : variant_names()) {
    if (variant == v) return name;
  }
  return "unknown";
}

Variant parse_variant(const std::string& name) {
  for (const auto& [variant, n] : variant_names()) {
    if (n == name) return variant;
  }
  throw std::invalid_argument("unknown variant '" + name +
                              "' (expected full, wo_expanded, wo_direct, wo_global, wo_local, wo_psamp)");
}

const std::vector<Variant>& all_variants() {
  static const std::vector<Variant> all = {Variant::Full,     Variant::WoExpanded, Variant::WoDirect,
                                           Variant::WoGlobal, Variant::WoLocal,    Variant::WoPsamp};
  return all;
}

TrainConfig TrainConfig::preset(const std::string& dataset) {
  TrainConfig c;
  if (dataset == "aminer") {
    c.hidden_dim = 64;
    c.lr = 3e-3;
    c.tau = 0.6;
    c.alpha = 0.3;
  } else if (dataset == "acm") {
    c.hidden_dim = 128;
    c.lr = 5e-4;
    c.tau = 0.7;
    c.alpha = 0.4;
  } else if (dataset == "freebase") {
    c.hidden_dim = 64;
    c.lr = 1e-3;
    c.tau = 0.4;
    c.alpha = 0.5;
  }
  return c;
}

void TrainConfig::validate() const {
  if (!(lr > 0.0)) throw std::invalid_argument("lr must be positive");
  if (epochs < 1) throw std::invalid_argument("epochs must be at least 1");
  if (hidden_dim < 1 || attention_dim < 1) throw std::invalid_argument("dimensions must be positive");
  ContrastConfig{tau, alpha, global_mode, true}.validate();
}

Wiring apply_variant(const TrainConfig& config) {
  Wiring w;
  w.encoder.hidden_dim = config.hidden_dim;
  w.encoder.attention_dim = config.attention_dim;
  w.encoder.leaky_slope = config.leaky_slope;
  w.contrast = ContrastConfig{config.tau, config.alpha, config.global_mode, true};
  switch (config.variant) {
    case Variant::Full:
      break;
    case Variant::WoExpanded:
      w.encoder.use_expanded = false;
      break;
    case Variant::WoDirect:
      w.encoder.use_direct = false;
      break;
    case Variant::WoGlobal:
      w.contrast.alpha = 0.0;
      break;
    case Variant::WoLocal:
      w.contrast.alpha = 1.0;
      break;
    case Variant::WoPsamp:
      w.contrast.metapath_positives = false;
      break;
  }
  return w;
}

SubSeeds derive_seeds(std::uint64_t seed) { return {splitmix64(seed ^ 0x1ULL), splitmix64(seed ^ 0x2ULL)}; }

TrainResult train(const HeteroGraph& graph, const std::vector<MetaPath>& metapaths, const TrainConfig& config) {
  config.validate();
  if (metapaths.size() < 2) {
    throw std::invalid_argument("train: cross-view contrast needs at least two meta-paths, got " +
                                std::to_string(metapaths.size()));
  }
  const Wiring wiring = apply_variant(config);
  const Encoder encoder(graph, metapaths, wiring.encoder);

  TrainResult result;
  result.seeds = derive_seeds(config.seed);
  std::mt19937_64 init_rng(result.seeds.init);
  std::mt19937_64 corruption_rng(result.seeds.corruption);
  ModelParams params = encoder.init_params(init_rng);
  auto tensors = params.tensors();
  ad::AdamState adam;

  const bool needs_corruption = wiring.contrast.alpha > 0.0 && wiring.contrast.global_mode == GlobalMode::Corrupted;
  std::vector<std::uint32_t> permutation(graph.target_count());

  ModelParams best = params.clone();
  double best_loss = std::numeric_limits<double>::infinity();
  std::size_t stale = 0;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    if (needs_corruption) {
      std::iota(permutation.begin(), permutation.end(), 0u);
      std::shuffle(permutation.begin(), permutation.end(), corruption_rng);
    }
    auto objective = loss_total(encoder, params, wiring.contrast, needs_corruption ? &permutation : nullptr, true);
    const double loss = objective.total.item();
    if (!std::isfinite(loss)) {
      throw std::runtime_error("train: non-finite loss at epoch " + std::to_string(epoch) + " (global sum " +
                               std::to_string(objective.global_sum) + ", local sum " +
                               std::to_string(objective.local_sum) + ")");
    }
    result.loss_curve.push_back(loss);
    if (loss < best_loss - config.min_improvement) {
      best_loss = loss;
      best = params.clone();
      result.best_epoch = epoch;
      stale = 0;
    } else if (++stale >= config.patience) {
      break;
    }
    ad::zero_grads(tensors);
    ad::backward(objective.total);
    ad::adam_step(tensors, adam, config.lr);
  }

  auto fused = encoder.embed(best);
  result.embedding = finalize_embedding(fused.embedding.value(), config.normalize_embeddings);
  result.semantic_weights = fused.weights.value();
  result.params = std::move(best);
  return result;
}

Matrix untrained_embedding(const HeteroGraph& graph, const std::vector<MetaPath>& metapaths,
                           const TrainConfig& config) {
  const Wiring wiring = apply_variant(config);
  const Encoder encoder(graph, metapaths, wiring.encoder);
  std::mt19937_64 init_rng(derive_seeds(config.seed).init);
  auto params = encoder.init_params(init_rng);
  return finalize_embedding(encoder.embed(params).embedding.value(), config.normalize_embeddings);
}

}  // namespace m2hgcl
