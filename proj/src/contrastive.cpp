#include "m2hgcl/contrastive.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>
#include <vector>
#include <stdexcept>
#include <string>

namespace m2hgcl {

PositiveSet sample_positives(const MetaPathSubgraph& subgraph_m, std::uint32_t anchor, std::size_t view_m,
                             std::size_t view_n, bool metapath_positives) {
  if (anchor >= subgraph_m.adjacency.rows()) {
    throw std::out_of_range("sample_positives: anchor " + std::to_string(anchor) + " out of range");
  }
  PositiveSet set{anchor, view_m, view_n, {}};
  if (metapath_positives) {
    for (auto j : subgraph_m.adjacency.row(anchor)) {
      if (j != anchor) set.members.push_back({ViewTag::Positive, j});
    }
  }
  set.members.push_back({ViewTag::Counterpart, anchor});
  return set;
}

void ContrastConfig::validate() const {
  if (!(tau > 0.0 && tau <= 1.0)) throw std::invalid_argument("tau must lie in (0, 1], got " + std::to_string(tau));
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw std::invalid_argument("alpha must lie in [0, 1], got " + std::to_string(alpha));
  }
}

ad::Tensor summary_vector(const ad::Tensor& h) {
  if (h.rows() == 0 || h.cols() == 0) throw std::invalid_argument("summary_vector: empty view");
  return ad::mean_rows(h);
}

double discriminate(const Eigen::RowVectorXd& h, const Matrix& w, const Eigen::RowVectorXd& s) {
  const double x = h * w * s.transpose();
  return 1.0 / (1.0 + std::exp(-x));
}

namespace {

ad::Tensor log_discriminator(const ad::Tensor& logits) {
  return ad::log(ad::clamp(ad::sigmoid(logits), kDiscriminatorClamp, 1.0 - kDiscriminatorClamp));
}

}  // namespace

ad::Tensor loss_global(const ad::Tensor& h_m, const ad::Tensor& h_n, const ad::Tensor& discriminator,
                       GlobalMode mode, const ad::Tensor* corrupt_m, const ad::Tensor* corrupt_n) {
  auto s = ad::transpose(summary_vector(h_m));  // [w x 1]
  auto ws = ad::matmul(discriminator, s);
  auto positive = ad::add(log_discriminator(ad::matmul(h_m, ws)), log_discriminator(ad::matmul(h_n, ws)));
  if (mode == GlobalMode::Literal) return ad::scale(positive, -1.0);
  if (!corrupt_m || !corrupt_n) throw std::invalid_argument("loss_global: corrupted mode needs corrupted views");
  // log(1 - sigmoid(x)) = log(sigmoid(-x))
  auto negative = ad::add(log_discriminator(ad::scale(ad::matmul(*corrupt_m, ws), -1.0)),
                          log_discriminator(ad::scale(ad::matmul(*corrupt_n, ws), -1.0)));
  return ad::scale(ad::add(positive, negative), -1.0);
}

namespace {

constexpr Eigen::Index kRowBlock = 256;

// Local InfoNCE for a list of ordered view pairs, evaluated in row blocks so
// no n x n matrix is held. Each view's similarity block is shared by every
// pair it appears in.
struct LocalLossKernel {
  std::vector<const BoolCsr*> neighbors;  // per view; used as positives when it is the anchor view
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  bool metapath_positives = true;
  double tau = 0.5;

  // Writes losses (n x pairs) for rows [begin, begin + len), or, when
  // `upstream` is set, accumulates gradients with respect to each view.
  void run(const std::vector<const Matrix*>& u, Eigen::Index begin, Eigen::Index len, Matrix* losses,
           const Matrix* upstream, std::vector<Matrix>* grads) const {
    const std::size_t views = u.size();
    const double inv_tau = 1.0 / tau;
    std::vector<char> used(views, 0);
    for (const auto& [m, n] : pairs) used[m] = used[n] = 1;

    // Per-row shift: the largest logit this row touches in any pair.
    std::vector<Matrix> sim(views);
    Eigen::VectorXd top = Eigen::VectorXd::Constant(len, -std::numeric_limits<double>::infinity());
    for (std::size_t v = 0; v < views; ++v) {
      if (!used[v]) continue;
      sim[v].noalias() = u[v]->middleRows(begin, len) * u[v]->transpose() * inv_tau;
      for (Eigen::Index r = 0; r < len; ++r) sim[v](r, begin + r) = -std::numeric_limits<double>::infinity();
      top = top.cwiseMax(sim[v].rowwise().maxCoeff());
    }
    Matrix cross(len, static_cast<Eigen::Index>(pairs.size()));
    for (std::size_t p = 0; p < pairs.size(); ++p) {
      const auto& [m, n] = pairs[p];
      cross.col(p) = u[m]->middleRows(begin, len).cwiseProduct(u[n]->middleRows(begin, len)).rowwise().sum() * inv_tau;
      top = top.cwiseMax(cross.col(p));
    }
    std::vector<Matrix>& e = sim;  // exponentiated in place; the diagonal becomes 0
    std::vector<Eigen::VectorXd> rowsum(views);
    for (std::size_t v = 0; v < views; ++v) {
      if (!used[v]) continue;
      e[v] = (e[v].colwise() - top).array().exp().matrix();
      rowsum[v] = e[v].rowwise().sum();
    }

    std::vector<Eigen::VectorXd> scale(views);
    Matrix pos_weight;
    if (upstream) {
      for (std::size_t v = 0; v < views; ++v) scale[v] = Eigen::VectorXd::Zero(len);
      pos_weight = Matrix::Zero(len, static_cast<Eigen::Index>(pairs.size()));
    }
    for (std::size_t p = 0; p < pairs.size(); ++p) {
      const auto& [m, n] = pairs[p];
      for (Eigen::Index r = 0; r < len; ++r) {
        const Eigen::Index i = begin + r;
        const double e_mn = std::exp(cross(r, p) - top(r));
        const double all = e_mn + rowsum[m](r) + rowsum[n](r);
        double pos = e_mn;
        if (metapath_positives) {
          for (auto j : neighbors[m]->row(static_cast<std::size_t>(i))) pos += e[m](r, j);
        }
        if (losses) (*losses)(i, p) = std::log(all) - std::log(pos);
        if (!upstream) continue;

        // d loss / d logit = softmax over all terms - softmax over positives.
        const double g = (*upstream)(i, p) * inv_tau;
        scale[m](r) += g / all;
        scale[n](r) += g / all;
        pos_weight(r, p) = g / pos;
        const double c = g * (e_mn / all - e_mn / pos);
        (*grads)[m].row(i) += c * u[n]->row(i);
        (*grads)[n].row(i) += c * u[m]->row(i);
      }
    }
    if (!upstream) return;
    for (std::size_t v = 0; v < views; ++v) {
      if (!used[v]) continue;
      Matrix coef = scale[v].asDiagonal() * e[v];
      if (metapath_positives) {
        for (std::size_t p = 0; p < pairs.size(); ++p) {
          if (pairs[p].first != v) continue;
          for (Eigen::Index r = 0; r < len; ++r) {
            for (auto j : neighbors[v]->row(static_cast<std::size_t>(begin + r))) {
              coef(r, j) -= pos_weight(r, p) * e[v](r, j);
            }
          }
        }
      }
      // sim(r, k) = u(begin + r) . u(k)
      (*grads)[v].middleRows(begin, len).noalias() += coef * *u[v];
      (*grads)[v].noalias() += coef.transpose() * u[v]->middleRows(begin, len);
    }
  }
};

// Returns an [n x pairs] tensor of per-anchor local losses.
ad::Tensor local_loss_pairs(const std::vector<ad::Tensor>& h, LocalLossKernel kernel) {
  if (!(kernel.tau > 0.0)) throw std::invalid_argument("loss_local: tau must be positive");
  const Eigen::Index n = h.front().rows();
  for (const auto& t : h) {
    if (t.rows() != n || t.cols() != h.front().cols()) throw std::invalid_argument("loss_local: views differ in shape");
  }
  for (const auto& [m, other] : kernel.pairs) {
    (void)other;
    if (kernel.metapath_positives && static_cast<Eigen::Index>(kernel.neighbors[m]->rows()) != n) {
      throw std::invalid_argument("loss_local: neighbor pattern does not match view size");
    }
  }
  std::vector<ad::Tensor> u;
  std::vector<const Matrix*> values;
  for (const auto& t : h) u.push_back(ad::l2_normalize_rows(t));
  for (const auto& t : u) values.push_back(&t.value());
  Matrix losses(n, static_cast<Eigen::Index>(kernel.pairs.size()));
  for (Eigen::Index b = 0; b < n; b += kRowBlock) {
    kernel.run(values, b, std::min(kRowBlock, n - b), &losses, nullptr, nullptr);
  }
  return ad::record(std::move(losses), u, [kernel = std::move(kernel)](ad::Node& self) {
    std::vector<const Matrix*> um;
    std::vector<Matrix> grads;
    for (const auto& in : self.inputs) {
      um.push_back(&in->value);
      grads.push_back(Matrix::Zero(in->value.rows(), in->value.cols()));
    }
    const Eigen::Index rows = um.front()->rows();
    for (Eigen::Index b = 0; b < rows; b += kRowBlock) {
      kernel.run(um, b, std::min(kRowBlock, rows - b), nullptr, &self.grad, &grads);
    }
    for (std::size_t v = 0; v < grads.size(); ++v) {
      if (auto* g = self.input_grad(v)) *g += grads[v];
    }
  });
}

}  // namespace

ad::Tensor loss_local(const ad::Tensor& h_m, const ad::Tensor& h_n, const BoolCsr& neighbors_m,
                      bool metapath_positives, double tau) {
  return local_loss_pairs({h_m, h_n}, LocalLossKernel{{&neighbors_m, nullptr}, {{0, 1}}, metapath_positives, tau});
}

double loss_local(const PositiveSet& positives, const Matrix& h_m, const Matrix& h_n, double tau) {
  if (!(tau > 0.0)) throw std::invalid_argument("loss_local: tau must be positive");
  const Matrix u_m = h_m.rowwise().normalized();
  const Matrix u_n = h_n.rowwise().normalized();
  const auto i = static_cast<Eigen::Index>(positives.anchor);
  const Eigen::Index n = h_m.rows();
  std::vector<char> in_m(n, 0), in_n(n, 0);
  double pos = 0.0;
  for (const auto& member : positives.members) {
    const bool from_m = member.view == ViewTag::Positive;
    (from_m ? in_m : in_n)[member.node] = 1;
    const auto& other = from_m ? u_m : u_n;
    pos += std::exp(u_m.row(i).dot(other.row(member.node)) / tau);
  }
  double neg = 0.0;
  for (Eigen::Index v = 0; v < n; ++v) {
    if (v != i && !in_m[v]) neg += std::exp(u_m.row(i).dot(u_m.row(v)) / tau);
    if (v != i && !in_n[v]) neg += std::exp(u_n.row(i).dot(u_n.row(v)) / tau);
  }
  return -std::log(pos / (pos + neg));
}

Objective loss_total(const std::vector<ad::Tensor>& views, const std::vector<ad::Tensor>& corrupted_views,
                     const std::vector<const BoolCsr*>& neighbors, const ad::Tensor& discriminator,
                     const ContrastConfig& config, bool normalize) {
  config.validate();
  if (views.size() < 2) throw std::invalid_argument("loss_total: at least two meta-path views are required");
  if (neighbors.size() != views.size()) throw std::invalid_argument("loss_total: one neighbor pattern per view");
  const bool use_global = config.alpha > 0.0;
  const bool use_local = config.alpha < 1.0;
  const bool corrupted = config.global_mode == GlobalMode::Corrupted;
  if (use_global && corrupted && corrupted_views.size() != views.size()) {
    throw std::invalid_argument("loss_total: corrupted mode needs one corrupted embedding per view");
  }

  Objective out;
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t m = 0; m < views.size(); ++m) {
    for (std::size_t n = 0; n < views.size(); ++n) {
      if (m != n) pairs.emplace_back(m, n);
    }
  }
  out.ordered_pairs = pairs.size();
  ad::Tensor total;
  if (use_global) {
    for (const auto& [m, n] : pairs) {
      auto g = loss_global(views[m], views[n], discriminator, config.global_mode,
                           corrupted ? &corrupted_views[m] : nullptr, corrupted ? &corrupted_views[n] : nullptr);
      out.global_sum += g.value().sum();
      auto s = ad::scale(ad::sum(g), config.alpha);
      total = total.defined() ? ad::add(total, s) : s;
    }
  }
  if (use_local) {
    auto l = local_loss_pairs(views, LocalLossKernel{neighbors, pairs, config.metapath_positives, config.tau});
    out.local_sum = l.value().sum();
    auto s = ad::scale(ad::sum(l), 1.0 - config.alpha);
    total = total.defined() ? ad::add(total, s) : s;
  }
  if (normalize) {
    const double denom = static_cast<double>(out.ordered_pairs) * static_cast<double>(views.front().rows());
    total = ad::scale(total, 1.0 / denom);
  }
  out.total = total;
  return out;
}

Objective loss_total(const Encoder& encoder, const ModelParams& params, const ContrastConfig& config,
                     const std::vector<std::uint32_t>* corruption, bool normalize) {
  std::vector<ad::Tensor> views;
  for (auto& v : encoder.forward(params)) views.push_back(v.embedding);
  std::vector<ad::Tensor> corrupted;
  if (config.alpha > 0.0 && config.global_mode == GlobalMode::Corrupted) {
    if (!corruption) throw std::invalid_argument("loss_total: corrupted mode needs a target permutation");
    for (auto& v : encoder.forward_corrupted(params, *corruption)) corrupted.push_back(v.embedding);
  }
  std::vector<const BoolCsr*> neighbors;
  for (const auto& v : encoder.views()) neighbors.push_back(&v.initial.adjacency);
  return loss_total(views, corrupted, neighbors, params.discriminator, config, normalize);
}

}  // namespace m2hgcl
