#include "m2hgcl/eval.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

#include "m2hgcl/autodiff.hpp"

namespace m2hgcl {

namespace {

void check_same_length(std::span<const int> a, std::span<const int> b, const char* what) {
  if (a.size() != b.size()) throw std::invalid_argument(std::string(what) + ": label vectors differ in length");
  if (a.empty()) throw std::invalid_argument(std::string(what) + ": empty label vectors");
}

// Maps arbitrary label values to 0..k-1 in sorted order.
std::vector<int> densify(std::span<const int> labels, std::size_t& k) {
  std::vector<int> values(labels.begin(), labels.end());
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());
  k = values.size();
  std::vector<int> out(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    out[i] = static_cast<int>(std::lower_bound(values.begin(), values.end(), labels[i]) - values.begin());
  }
  return out;
}

struct Contingency {
  std::vector<std::vector<double>> table;
  std::vector<double> row_sums;
  std::vector<double> col_sums;
  double n = 0.0;
};

Contingency contingency(std::span<const int> a, std::span<const int> b) {
  std::size_t ka = 0, kb = 0;
  auto da = densify(a, ka);
  auto db = densify(b, kb);
  Contingency c;
  c.table.assign(ka, std::vector<double>(kb, 0.0));
  c.row_sums.assign(ka, 0.0);
  c.col_sums.assign(kb, 0.0);
  for (std::size_t i = 0; i < da.size(); ++i) {
    c.table[da[i]][db[i]] += 1.0;
    c.row_sums[da[i]] += 1.0;
    c.col_sums[db[i]] += 1.0;
  }
  c.n = static_cast<double>(a.size());
  return c;
}

double entropy(const std::vector<double>& counts, double n) {
  double h = 0.0;
  for (double c : counts) {
    if (c > 0.0) h -= (c / n) * std::log(c / n);
  }
  return h;
}

double comb2(double x) { return x * (x - 1.0) / 2.0; }

}  // namespace

SplitSpec SplitSpec::fixed(double train_fraction, std::uint64_t seed, std::size_t holdout) {
  SplitSpec s;
  s.train_fraction = train_fraction;
  s.n_val = holdout;
  s.n_test = holdout;
  s.seed = seed;
  return s;
}

SplitSpec SplitSpec::fractional(double train_fraction, double holdout_fraction, std::uint64_t seed) {
  SplitSpec s;
  s.train_fraction = train_fraction;
  s.val_fraction = holdout_fraction;
  s.test_fraction = holdout_fraction;
  s.seed = seed;
  return s;
}

Split split(std::span<const int> labels, const SplitSpec& spec) {
  if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0)) {
    throw std::invalid_argument("split: train fraction must lie in (0, 1)");
  }
  std::vector<std::uint32_t> labeled;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= 0) labeled.push_back(static_cast<std::uint32_t>(i));
  }
  const auto n = labeled.size();
  const auto n_train = static_cast<std::size_t>(std::floor(spec.train_fraction * static_cast<double>(n)));
  const auto n_val = spec.val_fraction > 0.0
                         ? static_cast<std::size_t>(std::floor(spec.val_fraction * static_cast<double>(n)))
                         : spec.n_val;
  const auto n_test = spec.test_fraction > 0.0
                          ? static_cast<std::size_t>(std::floor(spec.test_fraction * static_cast<double>(n)))
                          : spec.n_test;
  if (n_train == 0 || n_val == 0 || n_test == 0 || n_train + n_val + n_test > n) {
    throw std::invalid_argument("split: infeasible counts (train " + std::to_string(n_train) + ", val " +
                                std::to_string(n_val) + ", test " + std::to_string(n_test) + ") for " +
                                std::to_string(n) + " labeled nodes");
  }
  std::mt19937_64 rng(spec.seed);
  std::shuffle(labeled.begin(), labeled.end(), rng);
  Split out;
  out.train.assign(labeled.begin(), labeled.begin() + n_train);
  out.val.assign(labeled.begin() + n_train, labeled.begin() + n_train + n_val);
  out.test.assign(labeled.begin() + n_train + n_val, labeled.begin() + n_train + n_val + n_test);
  return out;
}

double micro_f1(std::span<const int> truth, std::span<const int> predicted) {
  check_same_length(truth, predicted, "micro_f1");
  // Single-label multi-class: micro precision = micro recall = accuracy.
  std::size_t correct = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) correct += truth[i] == predicted[i];
  return static_cast<double>(correct) / static_cast<double>(truth.size());
}

double macro_f1(std::span<const int> truth, std::span<const int> predicted) {
  check_same_length(truth, predicted, "macro_f1");
  std::vector<int> classes(truth.begin(), truth.end());
  classes.insert(classes.end(), predicted.begin(), predicted.end());
  std::sort(classes.begin(), classes.end());
  classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
  double total = 0.0;
  for (int c : classes) {
    double tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
      const bool t = truth[i] == c;
      const bool p = predicted[i] == c;
      tp += t && p;
      fp += !t && p;
      fn += t && !p;
    }
    const double denom = 2 * tp + fp + fn;
    total += denom > 0 ? 2 * tp / denom : 0.0;
  }
  return total / static_cast<double>(classes.size());
}

double auc_ovr(std::span<const int> truth, const Matrix& probabilities) {
  if (static_cast<Eigen::Index>(truth.size()) != probabilities.rows()) {
    throw std::invalid_argument("auc_ovr: probability rows differ from label count");
  }
  const auto n = truth.size();
  std::vector<std::size_t> order(n);
  std::vector<double> ranks(n);
  double total = 0.0;
  std::size_t used = 0;
  for (Eigen::Index c = 0; c < probabilities.cols(); ++c) {
    double positives = 0;
    for (int t : truth) positives += t == c;
    const double negatives = static_cast<double>(n) - positives;
    if (positives == 0 || negatives == 0) continue;
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return probabilities(a, c) < probabilities(b, c); });
    // Average 1-based ranks over ties.
    for (std::size_t i = 0; i < n;) {
      std::size_t j = i;
      while (j + 1 < n && probabilities(order[j + 1], c) == probabilities(order[i], c)) ++j;
      const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
      for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
      i = j + 1;
    }
    double rank_sum = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (truth[i] == c) rank_sum += ranks[i];
    }
    total += (rank_sum - positives * (positives + 1) / 2) / (positives * negatives);
    ++used;
  }
  if (used == 0) throw std::invalid_argument("auc_ovr: no class has both positives and negatives");
  return total / static_cast<double>(used);
}

Matrix LinearClassifier::predict_proba(const Matrix& z) const {
  Matrix logits = (z * weight_).rowwise() + bias_;
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    logits.row(r).array() -= logits.row(r).maxCoeff();
    logits.row(r) = logits.row(r).array().exp();
    logits.row(r) /= logits.row(r).sum();
  }
  return logits;
}

std::vector<int> LinearClassifier::predict(const Matrix& z) const {
  Matrix logits = (z * weight_).rowwise() + bias_;
  std::vector<int> out(static_cast<std::size_t>(logits.rows()));
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    Eigen::Index best = 0;
    logits.row(r).maxCoeff(&best);
    out[static_cast<std::size_t>(r)] = static_cast<int>(best);
  }
  return out;
}

LinearClassifier train_linear_classifier(const Matrix& z_train, std::span<const int> y_train, const Matrix& z_val,
                                         std::span<const int> y_val, std::size_t num_classes,
                                         const ClassifierOptions& options) {
  if (static_cast<Eigen::Index>(y_train.size()) != z_train.rows()) {
    throw std::invalid_argument("train_linear_classifier: label count differs from embedding rows");
  }
  std::vector<int> present(y_train.begin(), y_train.end());
  std::sort(present.begin(), present.end());
  present.erase(std::unique(present.begin(), present.end()), present.end());
  if (present.size() < 2) throw std::invalid_argument("train_linear_classifier: training labels contain a single class");
  if (present.front() < 0 || static_cast<std::size_t>(present.back()) >= num_classes) {
    throw std::invalid_argument("train_linear_classifier: label outside [0, num_classes)");
  }

  const auto c = static_cast<Eigen::Index>(num_classes);
  Matrix one_hot = Matrix::Zero(z_train.rows(), c);
  for (std::size_t i = 0; i < y_train.size(); ++i) one_hot(static_cast<Eigen::Index>(i), y_train[i]) = 1.0;
  const auto x = ad::Tensor::constant(z_train);
  const auto targets = ad::Tensor::constant(std::move(one_hot));
  std::vector<ad::Tensor> params = {ad::Tensor::parameter(Matrix::Zero(z_train.cols(), c)),
                                    ad::Tensor::parameter(Matrix::Zero(1, c))};
  ad::AdamState adam;
  adam.weight_decay = options.weight_decay;
  const double inv_n = 1.0 / static_cast<double>(z_train.rows());

  LinearClassifier best(params[0].value(), params[1].value().row(0));
  double best_f1 = -1.0;
  for (std::size_t step = 0; step < options.steps; ++step) {
    auto log_p = ad::log_row_softmax(ad::add_row(ad::matmul(x, params[0]), params[1]));
    auto loss = ad::scale(ad::sum(ad::mul(log_p, targets)), -inv_n);
    ad::zero_grads(params);
    ad::backward(loss);
    ad::adam_step(params, adam, options.lr);

    LinearClassifier current(params[0].value(), params[1].value().row(0));
    const double f1 = macro_f1(y_val, current.predict(z_val));
    if (f1 > best_f1) {
      best_f1 = f1;
      best = std::move(current);
    }
  }
  return best;
}

ClassificationMetrics classify_metrics(const LinearClassifier& classifier, const Matrix& z, std::span<const int> y) {
  const auto predicted = classifier.predict(z);
  return {macro_f1(y, predicted), micro_f1(y, predicted), auc_ovr(y, classifier.predict_proba(z))};
}

std::vector<int> kmeans(const Matrix& z, std::size_t k, std::uint64_t seed, const KMeansOptions& options) {
  const auto n = static_cast<std::size_t>(z.rows());
  if (k < 2) throw std::invalid_argument("kmeans: k must be at least 2");
  if (k > n) throw std::invalid_argument("kmeans: k = " + std::to_string(k) + " exceeds " + std::to_string(n) + " points");
  std::mt19937_64 rng(seed);
  const Eigen::VectorXd sq_norms = z.rowwise().squaredNorm();

  std::vector<int> best_assign;
  double best_inertia = std::numeric_limits<double>::infinity();
  std::vector<int> assign(n);
  std::vector<double> dist(n);
  for (std::size_t restart = 0; restart < std::max<std::size_t>(1, options.restarts); ++restart) {
    // k-means++ seeding.
    Matrix centers(static_cast<Eigen::Index>(k), z.cols());
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    centers.row(0) = z.row(static_cast<Eigen::Index>(pick(rng)));
    for (std::size_t i = 0; i < n; ++i) dist[i] = (z.row(i) - centers.row(0)).squaredNorm();
    for (std::size_t c = 1; c < k; ++c) {
      const double total = std::accumulate(dist.begin(), dist.end(), 0.0);
      std::size_t chosen = pick(rng);
      if (total > 0.0) {
        std::uniform_real_distribution<double> u(0.0, total);
        double target = u(rng);
        chosen = n - 1;
        for (std::size_t i = 0; i < n; ++i) {
          target -= dist[i];
          if (target <= 0.0 && dist[i] > 0.0) {
            chosen = i;
            break;
          }
        }
      }
      centers.row(static_cast<Eigen::Index>(c)) = z.row(static_cast<Eigen::Index>(chosen));
      for (std::size_t i = 0; i < n; ++i) {
        dist[i] = std::min(dist[i], (z.row(i) - centers.row(static_cast<Eigen::Index>(c))).squaredNorm());
      }
    }

    // Lloyd iterations.
    std::fill(assign.begin(), assign.end(), -1);
    double inertia = 0.0;
    for (std::size_t iter = 0; iter < options.max_iterations; ++iter) {
      Matrix cross = z * centers.transpose();
      Eigen::VectorXd center_sq = centers.rowwise().squaredNorm();
      bool changed = false;
      inertia = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        Eigen::Index best_c = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (Eigen::Index c = 0; c < static_cast<Eigen::Index>(k); ++c) {
          const double d = sq_norms(i) - 2.0 * cross(i, c) + center_sq(c);
          if (d < best_d) {
            best_d = d;
            best_c = c;
          }
        }
        dist[i] = std::max(0.0, best_d);
        inertia += dist[i];
        if (assign[i] != best_c) {
          assign[i] = static_cast<int>(best_c);
          changed = true;
        }
      }
      if (!changed) break;
      Matrix sums = Matrix::Zero(static_cast<Eigen::Index>(k), z.cols());
      std::vector<std::size_t> counts(k, 0);
      for (std::size_t i = 0; i < n; ++i) {
        sums.row(assign[i]) += z.row(static_cast<Eigen::Index>(i));
        ++counts[assign[i]];
      }
      for (std::size_t c = 0; c < k; ++c) {
        if (counts[c] > 0) {
          centers.row(static_cast<Eigen::Index>(c)) = sums.row(static_cast<Eigen::Index>(c)) / static_cast<double>(counts[c]);
        } else {
          // Empty cluster: move it to the point farthest from its center.
          const auto far = static_cast<Eigen::Index>(std::max_element(dist.begin(), dist.end()) - dist.begin());
          centers.row(static_cast<Eigen::Index>(c)) = z.row(far);
          dist[static_cast<std::size_t>(far)] = 0.0;
        }
      }
    }
    if (inertia < best_inertia) {
      best_inertia = inertia;
      best_assign = assign;
    }
  }
  return best_assign;
}

double nmi(std::span<const int> a, std::span<const int> b) {
  check_same_length(a, b, "nmi");
  const auto c = contingency(a, b);
  const double ha = entropy(c.row_sums, c.n);
  const double hb = entropy(c.col_sums, c.n);
  if (ha == 0.0 && hb == 0.0) return 1.0;
  double mi = 0.0;
  for (std::size_t i = 0; i < c.row_sums.size(); ++i) {
    for (std::size_t j = 0; j < c.col_sums.size(); ++j) {
      const double nij = c.table[i][j];
      if (nij > 0.0) mi += (nij / c.n) * std::log(c.n * nij / (c.row_sums[i] * c.col_sums[j]));
    }
  }
  return std::clamp(mi / (0.5 * (ha + hb)), 0.0, 1.0);
}

double ari(std::span<const int> a, std::span<const int> b) {
  check_same_length(a, b, "ari");
  const auto c = contingency(a, b);
  double index = 0.0;
  for (const auto& row : c.table) {
    for (double nij : row) index += comb2(nij);
  }
  double sum_a = 0.0, sum_b = 0.0;
  for (double x : c.row_sums) sum_a += comb2(x);
  for (double x : c.col_sums) sum_b += comb2(x);
  const double total = comb2(c.n);
  const double expected = total > 0.0 ? sum_a * sum_b / total : 0.0;
  const double max_index = 0.5 * (sum_a + sum_b);
  if (max_index == expected) return 1.0;
  return (index - expected) / (max_index - expected);
}

MetricSummary summarize(std::span<const double> values) {
  MetricSummary s;
  s.runs = values.size();
  if (values.empty()) return s;
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  double var = 0.0;
  for (double v : values) var += (v - s.mean) * (v - s.mean);
  s.std = std::sqrt(var / static_cast<double>(values.size()));
  return s;
}

nlohmann::json EvalReport::to_json() const {
  nlohmann::json j;
  j["auc_definition"] = auc_definition;
  for (const auto& [name, s] : metrics) j["metrics"][name] = {{"mean", s.mean}, {"std", s.std}, {"runs", s.runs}};
  return j;
}

EvalReport EvalReport::from_json(const nlohmann::json& j) {
  EvalReport r;
  r.auc_definition = j.value("auc_definition", r.auc_definition);
  for (const auto& [name, s] : j.at("metrics").items()) {
    r.metrics[name] = {s.at("mean").get<double>(), s.at("std").get<double>(), s.at("runs").get<std::size_t>()};
  }
  return r;
}

std::string EvalReport::to_text() const {
  std::ostringstream os;
  os << std::fixed << std::setprecision(2);
  for (const auto& [name, s] : metrics) {
    os << "  " << std::left << std::setw(10) << name << " " << 100.0 * s.mean << " +- " << 100.0 * s.std << "  (" << s.runs
       << " runs)\n";
  }
  if (metrics.count("auc")) os << "  AUC: " << auc_definition << "\n";
  return os.str();
}

Matrix gather(const Matrix& z, std::span<const std::uint32_t> rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), z.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = z.row(rows[i]);
  return out;
}

std::vector<int> gather(std::span<const int> labels, std::span<const std::uint32_t> rows) {
  std::vector<int> out;
  out.reserve(rows.size());
  for (auto r : rows) out.push_back(labels[r]);
  return out;
}

EvalReport evaluate_classification(const Matrix& z, std::span<const int> labels, std::size_t num_classes,
                                   const SplitSpec& spec, std::size_t seeds, const ClassifierOptions& options) {
  if (static_cast<Eigen::Index>(labels.size()) != z.rows()) {
    throw std::invalid_argument("evaluate_classification: " + std::to_string(labels.size()) + " labels for " +
                                std::to_string(z.rows()) + " embeddings");
  }
  std::vector<double> ma, mi, auc;
  for (std::size_t s = 0; s < seeds; ++s) {
    SplitSpec run = spec;
    run.seed = spec.seed + s;
    const auto parts = split(labels, run);
    const auto y_train = gather(labels, parts.train);
    const auto y_val = gather(labels, parts.val);
    const auto y_test = gather(labels, parts.test);
    const auto clf = train_linear_classifier(gather(z, parts.train), y_train, gather(z, parts.val), y_val,
                                             num_classes, options);
    const auto m = classify_metrics(clf, gather(z, parts.test), y_test);
    ma.push_back(m.macro_f1);
    mi.push_back(m.micro_f1);
    auc.push_back(m.auc);
  }
  EvalReport r;
  r.metrics["macro_f1"] = summarize(ma);
  r.metrics["micro_f1"] = summarize(mi);
  r.metrics["auc"] = summarize(auc);
  return r;
}

EvalReport evaluate_clustering(const Matrix& z, std::span<const int> labels, std::size_t num_classes,
                               std::size_t seeds, std::uint64_t base_seed) {
  if (static_cast<Eigen::Index>(labels.size()) != z.rows()) {
    throw std::invalid_argument("evaluate_clustering: label count differs from embedding rows");
  }
  std::vector<double> n_values, a_values;
  for (std::size_t s = 0; s < seeds; ++s) {
    const auto assign = kmeans(z, num_classes, base_seed + s);
    n_values.push_back(nmi(labels, assign));
    a_values.push_back(ari(labels, assign));
  }
  EvalReport r;
  r.metrics["nmi"] = summarize(n_values);
  r.metrics["ari"] = summarize(a_values);
  return r;
}

}  // namespace m2hgcl
