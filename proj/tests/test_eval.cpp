#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <set>

#include "helpers.hpp"
#include "m2hgcl/eval.hpp"
#include "metric_oracles.hpp"

using namespace m2hgcl;

namespace {

std::vector<int> random_labels(std::mt19937_64& rng, std::size_t n, int k) {
  std::uniform_int_distribution<int> d(0, k - 1);
  std::vector<int> out(n);
  for (auto& v : out) v = d(rng);
  return out;
}

// Well separated class blobs.
Matrix blobs(const std::vector<int>& labels, std::size_t dim, double spread, std::mt19937_64& rng) {
  std::normal_distribution<double> noise(0.0, spread);
  Matrix z(static_cast<Eigen::Index>(labels.size()), static_cast<Eigen::Index>(dim));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    for (std::size_t c = 0; c < dim; ++c) {
      z(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) =
          (static_cast<int>(c) == labels[i] ? 5.0 : 0.0) + noise(rng);
    }
  }
  return z;
}

}  // namespace

TEST_CASE("split counts follow the floor of the training fraction") {
  std::vector<int> labels(4019, 0);
  auto s = split(labels, SplitSpec::fixed(0.4, 3));
  CHECK(s.train.size() == 1607);
  CHECK(s.val.size() == 1000);
  CHECK(s.test.size() == 1000);
  std::set<std::uint32_t> all(s.train.begin(), s.train.end());
  all.insert(s.val.begin(), s.val.end());
  all.insert(s.test.begin(), s.test.end());
  CHECK(all.size() == 3607);
  // the 60% setting does not fit beside a 1000/1000 holdout
  CHECK_THROWS_AS(split(labels, SplitSpec::fixed(0.6, 3)), std::invalid_argument);
}

TEST_CASE("split is seeded and disjoint") {
  std::vector<int> labels(60, 1);
  auto spec = SplitSpec::fractional(0.4, 0.1, 5);
  auto a = split(labels, spec);
  auto b = split(labels, spec);
  CHECK(a.train == b.train);
  CHECK(a.test == b.test);
  CHECK(a.train.size() == 24);
  CHECK(a.val.size() == 6);
  CHECK(a.test.size() == 6);
  std::set<std::uint32_t> tr(a.train.begin(), a.train.end()), va(a.val.begin(), a.val.end()),
      te(a.test.begin(), a.test.end());
  for (auto v : va) CHECK_FALSE(tr.count(v));
  for (auto v : te) CHECK((!tr.count(v) && !va.count(v)));
  spec.seed = 6;
  CHECK(split(labels, spec).train != a.train);
  // unlabeled nodes are never drawn
  labels[0] = -1;
  auto c = split(labels, spec);
  CHECK(std::find(c.train.begin(), c.train.end(), 0u) == c.train.end());
  CHECK_THROWS_AS(split(labels, SplitSpec::fractional(0.0, 0.1, 0)), std::invalid_argument);
}

TEST_CASE("F1 on an all-one-class prediction") {
  std::vector<int> truth{0, 0, 1, 1}, pred{0, 0, 0, 0};
  CHECK(micro_f1(truth, pred) == doctest::Approx(0.5));
  CHECK(macro_f1(truth, pred) == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("F1 on balanced symmetric errors") {
  std::vector<int> truth{0, 0, 0, 0, 1, 1, 1, 1}, pred{0, 0, 0, 1, 1, 1, 1, 0};
  CHECK(macro_f1(truth, pred) == doctest::Approx(micro_f1(truth, pred)));
  CHECK(macro_f1(truth, pred) <= 1.0);
}

TEST_CASE("metrics agree with confusion-table and pair-count oracles") {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 25; ++trial) {
    const int k = 2 + trial % 4;
    auto truth = random_labels(rng, 30, k);
    auto pred = random_labels(rng, 30, k + (trial % 2));
    CHECK(std::abs(micro_f1(truth, pred) - test::oracle_micro_f1(truth, pred)) < 1e-12);
    CHECK(std::abs(macro_f1(truth, pred) - test::oracle_macro_f1(truth, pred)) < 1e-12);
    CHECK(std::abs(nmi(truth, pred) - test::oracle_nmi(truth, pred)) < 1e-12);
    CHECK(std::abs(ari(truth, pred) - test::oracle_ari(truth, pred)) < 1e-12);
    Matrix prob = test::random_features(30, k, rng).array().abs();
    for (Eigen::Index r = 0; r < 6; ++r) prob(r, 0) = 0.25;  // ties
    CHECK(std::abs(auc_ovr(truth, prob) - test::oracle_auc(truth, prob)) < 1e-12);
  }
}

TEST_CASE("hand-computed clustering example") {
  // contingency [[2, 1], [0, 3]] over six points
  std::vector<int> a{0, 0, 0, 1, 1, 1}, b{0, 0, 1, 1, 1, 1};
  // ARI: index = C(2,2) + C(3,2) = 4; rows C(3,2)+C(3,2) = 6; cols C(2,2)+C(4,2) = 7; total 15
  const double expected = 6.0 * 7.0 / 15.0;
  CHECK(ari(a, b) == doctest::Approx((4.0 - expected) / (6.5 - expected)));
  const double ha = std::log(2.0);
  const double hb = -(1.0 / 3.0) * std::log(1.0 / 3.0) - (2.0 / 3.0) * std::log(2.0 / 3.0);
  const double mi = (2.0 / 6.0) * std::log((2.0 / 6.0) / (0.5 * (2.0 / 6.0))) +
                    (1.0 / 6.0) * std::log((1.0 / 6.0) / (0.5 * (4.0 / 6.0))) +
                    (3.0 / 6.0) * std::log((3.0 / 6.0) / (0.5 * (4.0 / 6.0)));
  CHECK(nmi(a, b) == doctest::Approx(mi / ((ha + hb) / 2.0)));
}

TEST_CASE("NMI and ARI are 1 for identical or relabeled assignments") {
  std::vector<int> y{0, 0, 1, 1, 2, 2, 2};
  std::vector<int> perm{2, 2, 0, 0, 1, 1, 1};
  CHECK(nmi(y, y) == doctest::Approx(1.0));
  CHECK(ari(y, y) == doctest::Approx(1.0));
  CHECK(nmi(y, perm) == doctest::Approx(1.0));
  CHECK(ari(y, perm) == doctest::Approx(1.0));
  std::mt19937_64 rng(2);
  auto x = random_labels(rng, 40, 3);
  auto z = random_labels(rng, 40, 4);
  auto zp = z;
  for (auto& v : zp) v = (v + 1) % 4;
  CHECK(nmi(x, z) == doctest::Approx(nmi(x, zp)));
  CHECK(ari(x, z) == doctest::Approx(ari(x, zp)));
}

TEST_CASE("linear probe on separated classes is perfect") {
  std::mt19937_64 rng(3);
  std::vector<int> y(80);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = static_cast<int>(i % 2);
  Matrix z = blobs(y, 2, 0.3, rng);
  auto clf = train_linear_classifier(z, y, z, y, 2);
  auto m = classify_metrics(clf, z, y);
  CHECK(m.macro_f1 == 1.0);
  CHECK(m.micro_f1 == 1.0);
  CHECK(m.auc == 1.0);
  auto p = clf.predict_proba(z);
  for (Eigen::Index r = 0; r < p.rows(); ++r) CHECK(p.row(r).sum() == doctest::Approx(1.0));
}

TEST_CASE("random embeddings give chance-level AUC") {
  std::mt19937_64 rng(4);
  double total = 0.0;
  for (int seed = 0; seed < 10; ++seed) {
    std::vector<int> y(400);
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = static_cast<int>(i % 2);
    Matrix z = test::random_features(400, 8, rng);
    auto report = evaluate_classification(z, y, 2, SplitSpec::fractional(0.4, 0.2, static_cast<std::uint64_t>(seed)), 1);
    total += report.metrics.at("auc").mean;
  }
  CHECK(std::abs(total / 10.0 - 0.5) < 0.05);
}

TEST_CASE("classifier rejects a single training class") {
  Matrix z = Matrix::Ones(4, 2);
  std::vector<int> y{1, 1, 1, 1};
  CHECK_THROWS_AS(train_linear_classifier(z, y, z, y, 2), std::invalid_argument);
}

TEST_CASE("k-means recovers separated clusters") {
  std::mt19937_64 rng(5);
  std::vector<int> y(90);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = static_cast<int>(i % 3);
  Matrix z = blobs(y, 3, 0.2, rng);
  auto a = kmeans(z, 3, 7);
  CHECK(nmi(y, a) == doctest::Approx(1.0));
  CHECK(ari(y, a) == doctest::Approx(1.0));
  CHECK(kmeans(z, 3, 7) == a);
  CHECK_THROWS_AS(kmeans(z, 1, 0), std::invalid_argument);
  CHECK_THROWS_AS(kmeans(z, 91, 0), std::invalid_argument);
  // duplicated points still yield k labels in range
  auto dup = kmeans(Matrix::Zero(5, 2), 2, 1);
  for (int v : dup) CHECK((v == 0 || v == 1));
}

TEST_CASE("summaries and reports") {
  std::vector<double> v{0.5, 0.7};
  auto s = summarize(v);
  CHECK(s.mean == doctest::Approx(0.6));
  CHECK(s.std == doctest::Approx(0.1));
  CHECK(s.runs == 2);
  EvalReport r;
  r.metrics["nmi"] = s;
  auto back = EvalReport::from_json(r.to_json());
  CHECK(back.metrics.at("nmi").mean == s.mean);
  CHECK(back.to_text().find("60.00 +- 10.00") != std::string::npos);
}

TEST_CASE("clustering evaluation of perfect embeddings") {
  std::vector<int> y(30);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = static_cast<int>(i % 3);
  std::mt19937_64 rng(6);
  auto report = evaluate_clustering(blobs(y, 3, 0.1, rng), y, 3, 3);
  CHECK(report.metrics.at("nmi").mean == doctest::Approx(1.0));
  CHECK(report.metrics.at("ari").runs == 3);
}
