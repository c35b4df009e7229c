#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "m2hgcl/matrix.hpp"

namespace m2hgcl {

/// Holdout sizes are fixed counts unless the fractions are positive.
struct SplitSpec {
  double train_fraction = 0.4;
  std::size_t n_val = 1000;
  std::size_t n_test = 1000;
  double val_fraction = 0.0;
  double test_fraction = 0.0;
  std::uint64_t seed = 0;

  static SplitSpec fixed(double train_fraction, std::uint64_t seed, std::size_t holdout = 1000);
  static SplitSpec fractional(double train_fraction, double holdout_fraction, std::uint64_t seed);
};

struct Split {
  std::vector<std::uint32_t> train;
  std::vector<std::uint32_t> val;
  std::vector<std::uint32_t> test;
};

/// Seeded random partition of the labeled nodes; throws if the counts do not fit.
Split split(std::span<const int> labels, const SplitSpec& spec);

double micro_f1(std::span<const int> truth, std::span<const int> predicted);
/// Mean F1 over every class occurring in truth or predictions (0 when undefined).
double macro_f1(std::span<const int> truth, std::span<const int> predicted);
/// One-vs-rest ROC AUC (tie-aware rank statistic), macro-averaged over the
/// classes that have both positives and negatives.
double auc_ovr(std::span<const int> truth, const Matrix& probabilities);

struct ClassifierOptions {
  double lr = 1e-2;
  double weight_decay = 1e-4;
  std::size_t steps = 300;
};

/// Multinomial logistic regression on frozen embeddings.
class LinearClassifier {
 public:
  LinearClassifier() = default;
  LinearClassifier(Matrix weight, Eigen::RowVectorXd bias) : weight_(std::move(weight)), bias_(std::move(bias)) {}

  std::size_t num_classes() const { return static_cast<std::size_t>(weight_.cols()); }
  Matrix predict_proba(const Matrix& z) const;
  std::vector<int> predict(const Matrix& z) const;

 private:
  Matrix weight_;
  Eigen::RowVectorXd bias_;
};

/// Trains with Adam; keeps the step with the best validation Macro-F1.
LinearClassifier train_linear_classifier(const Matrix& z_train, std::span<const int> y_train, const Matrix& z_val,
                                         std::span<const int> y_val, std::size_t num_classes,
                                         const ClassifierOptions& options = {});

struct ClassificationMetrics {
  double macro_f1 = 0.0;
  double micro_f1 = 0.0;
  double auc = 0.0;
};

ClassificationMetrics classify_metrics(const LinearClassifier& classifier, const Matrix& z, std::span<const int> y);

struct KMeansOptions {
  std::size_t restarts = 10;
  std::size_t max_iterations = 300;
};

/// Lloyd's algorithm with k-means++ seeding; best inertia over restarts.
std::vector<int> kmeans(const Matrix& z, std::size_t k, std::uint64_t seed, const KMeansOptions& options = {});

/// NMI with arithmetic-mean normalization.
double nmi(std::span<const int> a, std::span<const int> b);
double ari(std::span<const int> a, std::span<const int> b);

struct MetricSummary {
  double mean = 0.0;
  double std = 0.0;  // population standard deviation
  std::size_t runs = 0;
};

MetricSummary summarize(std::span<const double> values);

struct EvalReport {
  std::map<std::string, MetricSummary> metrics;
  std::string auc_definition = "one-vs-rest, macro-averaged over classes";

  nlohmann::json to_json() const;
  static EvalReport from_json(const nlohmann::json& j);
  std::string to_text() const;
};

Matrix gather(const Matrix& z, std::span<const std::uint32_t> rows);
std::vector<int> gather(std::span<const int> labels, std::span<const std::uint32_t> rows);

/// Linear probe over `seeds` random splits (seed values 0..seeds-1 offset by `base_seed`).
EvalReport evaluate_classification(const Matrix& z, std::span<const int> labels, std::size_t num_classes,
                                   const SplitSpec& spec, std::size_t seeds, const ClassifierOptions& options = {});

/// K-means with k = number of classes over `seeds` outer seeds.
EvalReport evaluate_clustering(const Matrix& z, std::span<const int> labels, std::size_t num_classes,
                               std::size_t seeds, std::uint64_t base_seed = 0);

}  // namespace m2hgcl
