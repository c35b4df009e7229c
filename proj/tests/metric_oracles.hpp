#pragma once

// Reference metric implementations built from explicit confusion tables,
// pair counts and pairwise comparisons.

#include <cmath>
#include <map>
#include <set>
#include <vector>

#include "m2hgcl/matrix.hpp"

namespace m2hgcl::test {

struct Confusion {
  std::set<int> classes;
  std::map<std::pair<int, int>, double> cell;  // (truth, predicted) -> count
};

inline Confusion confusion(const std::vector<int>& truth, const std::vector<int>& pred) {
  Confusion c;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    c.classes.insert(truth[i]);
    c.classes.insert(pred[i]);
    c.cell[{truth[i], pred[i]}] += 1.0;
  }
  return c;
}

inline double oracle_micro_f1(const std::vector<int>& truth, const std::vector<int>& pred) {
  auto c = confusion(truth, pred);
  double tp = 0, fp = 0, fn = 0;
  for (int k : c.classes) {
    for (int j : c.classes) {
      const double v = c.cell.count({k, j}) ? c.cell.at({k, j}) : 0.0;
      if (k == j) tp += v;
      else {
        fn += v;  // truth k missed
        fp += v;  // predicted j wrongly
      }
    }
  }
  const double p = tp / (tp + fp), r = tp / (tp + fn);
  return 2 * p * r / (p + r);
}

inline double oracle_macro_f1(const std::vector<int>& truth, const std::vector<int>& pred) {
  auto c = confusion(truth, pred);
  double total = 0.0;
  for (int k : c.classes) {
    double tp = 0, pred_k = 0, true_k = 0;
    for (int j : c.classes) {
      pred_k += c.cell.count({j, k}) ? c.cell.at({j, k}) : 0.0;
      true_k += c.cell.count({k, j}) ? c.cell.at({k, j}) : 0.0;
    }
    tp = c.cell.count({k, k}) ? c.cell.at({k, k}) : 0.0;
    const double p = pred_k > 0 ? tp / pred_k : 0.0;
    const double r = true_k > 0 ? tp / true_k : 0.0;
    total += (p + r) > 0 ? 2 * p * r / (p + r) : 0.0;
  }
  return total / static_cast<double>(c.classes.size());
}

// Mann-Whitney statistic by explicit comparison of every positive/negative pair.
inline double oracle_auc(const std::vector<int>& truth, const Matrix& prob) {
  double total = 0.0;
  int used = 0;
  for (Eigen::Index k = 0; k < prob.cols(); ++k) {
    double wins = 0, pairs = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
      if (truth[i] != k) continue;
      for (std::size_t j = 0; j < truth.size(); ++j) {
        if (truth[j] == k) continue;
        pairs += 1;
        const double a = prob(static_cast<Eigen::Index>(i), k), b = prob(static_cast<Eigen::Index>(j), k);
        wins += a > b ? 1.0 : (a == b ? 0.5 : 0.0);
      }
    }
    if (pairs > 0) {
      total += wins / pairs;
      ++used;
    }
  }
  return total / used;
}

inline double oracle_nmi(const std::vector<int>& a, const std::vector<int>& b) {
  const double n = static_cast<double>(a.size());
  std::map<int, double> pa, pb;
  std::map<std::pair<int, int>, double> pab;
  for (std::size_t i = 0; i < a.size(); ++i) {
    pa[a[i]] += 1.0 / n;
    pb[b[i]] += 1.0 / n;
    pab[{a[i], b[i]}] += 1.0 / n;
  }
  double ha = 0, hb = 0, mi = 0;
  for (auto& [k, p] : pa) ha -= p * std::log(p);
  for (auto& [k, p] : pb) hb -= p * std::log(p);
  if (ha == 0 && hb == 0) return 1.0;
  for (auto& [kk, p] : pab) mi += p * std::log(p / (pa[kk.first] * pb[kk.second]));
  return mi / ((ha + hb) / 2);
}

// Adjusted Rand index from the four pair-agreement counts.
inline double oracle_ari(const std::vector<int>& a, const std::vector<int>& b) {
  double same_both = 0, same_a = 0, same_b = 0, diff_both = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = i + 1; j < a.size(); ++j) {
      const bool sa = a[i] == a[j], sb = b[i] == b[j];
      if (sa && sb) same_both += 1;
      else if (sa) same_a += 1;
      else if (sb) same_b += 1;
      else diff_both += 1;
    }
  }
  const double num = 2.0 * (same_both * diff_both - same_a * same_b);
  const double den = (same_both + same_a) * (same_a + diff_both) + (same_both + same_b) * (same_b + diff_both);
  return den == 0.0 ? 1.0 : num / den;
}

}  // namespace m2hgcl::test
