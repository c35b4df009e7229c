#include "m2hgcl/autodiff.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <unordered_set>

namespace m2hgcl::ad {

namespace {

std::string shape(const Matrix& m) { return std::to_string(m.rows()) + "x" + std::to_string(m.cols()); }

void require(bool ok, const char* op, const std::string& detail) {
  if (!ok) throw std::invalid_argument(std::string(op) + ": " + detail);
}

void same_shape(const char* op, const Tensor& a, const Tensor& b) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), op,
          "shape mismatch " + shape(a.value()) + " vs " + shape(b.value()));
}

template <typename F>
Tensor unary(const Tensor& a, Matrix value, F&& local_grad) {
  // local_grad(x, y) -> dy/dx elementwise
  return record(std::move(value), {a}, [local_grad](Node& self) {
    if (auto* g = self.input_grad(0)) {
      const Matrix& x = self.inputs[0]->value;
      *g += self.grad.cwiseProduct(x.binaryExpr(self.value, local_grad));
    }
  });
}

}  // namespace

Matrix& Node::grad_buffer() {
  if (grad.rows() != value.rows() || grad.cols() != value.cols()) {
    grad = Matrix::Zero(value.rows(), value.cols());
  }
  return grad;
}

Matrix* Node::input_grad(std::size_t k) {
  auto& in = inputs[k];
  return in->requires_grad ? &in->grad_buffer() : nullptr;
}

Tensor Tensor::parameter(Matrix value) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  node->requires_grad = true;
  return Tensor(std::move(node));
}

Tensor Tensor::constant(Matrix value) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  return Tensor(std::move(node));
}

double Tensor::item() const {
  require(rows() == 1 && cols() == 1, "item", "tensor is " + shape(value()) + ", not scalar");
  return value()(0, 0);
}

void Tensor::zero_grad() {
  if (node_->grad.size() > 0) node_->grad.setZero();
}

Tensor record(Matrix value, std::vector<Tensor> inputs, BackwardFn backward) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  for (const auto& in : inputs) {
    if (in.requires_grad()) node->requires_grad = true;
  }
  if (node->requires_grad) {
    node->inputs.reserve(inputs.size());
    for (auto& in : inputs) node->inputs.push_back(in.node_);
    node->backward = std::move(backward);
  }
  return Tensor(std::move(node));
}

void backward(const Tensor& loss) {
  require(loss.rows() == 1 && loss.cols() == 1, "backward", "loss must be scalar, got " + shape(loss.value()));
  if (!loss.requires_grad()) return;

  // Iterative post-order DFS gives a topological order.
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack{{loss.node().get(), 0}};
  visited.insert(loss.node().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      Node* child = node->inputs[next++].get();
      if (child->requires_grad && visited.insert(child).second) stack.emplace_back(child, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  for (Node* n : order) {
    if (!n->inputs.empty()) n->grad = Matrix::Zero(n->value.rows(), n->value.cols());
  }
  loss.node()->grad_buffer()(0, 0) += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    if ((*it)->backward) (*it)->backward(**it);
  }
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  require(a.cols() == b.rows(), "matmul", shape(a.value()) + " * " + shape(b.value()));
  Matrix out = a.value() * b.value();
  return record(std::move(out), {a, b}, [](Node& self) {
    const Matrix& av = self.inputs[0]->value;
    const Matrix& bv = self.inputs[1]->value;
    if (auto* g = self.input_grad(0)) g->noalias() += self.grad * bv.transpose();
    if (auto* g = self.input_grad(1)) g->noalias() += av.transpose() * self.grad;
  });
}

Tensor transpose(const Tensor& a) {
  return record(a.value().transpose(), {a}, [](Node& self) {
    if (auto* g = self.input_grad(0)) *g += self.grad.transpose();
  });
}

Tensor add(const Tensor& a, const Tensor& b) {
  same_shape("add", a, b);
  return record(a.value() + b.value(), {a, b}, [](Node& self) {
    if (auto* g = self.input_grad(0)) *g += self.grad;
    if (auto* g = self.input_grad(1)) *g += self.grad;
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  same_shape("sub", a, b);
  return record(a.value() - b.value(), {a, b}, [](Node& self) {
    if (auto* g = self.input_grad(0)) *g += self.grad;
    if (auto* g = self.input_grad(1)) *g -= self.grad;
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  same_shape("mul", a, b);
  return record(a.value().cwiseProduct(b.value()), {a, b}, [](Node& self) {
    if (auto* g = self.input_grad(0)) *g += self.grad.cwiseProduct(self.inputs[1]->value);
    if (auto* g = self.input_grad(1)) *g += self.grad.cwiseProduct(self.inputs[0]->value);
  });
}

Tensor add_row(const Tensor& a, const Tensor& row) {
  require(row.rows() == 1 && row.cols() == a.cols(), "add_row",
          "row " + shape(row.value()) + " does not broadcast over " + shape(a.value()));
  Matrix out = a.value().rowwise() + row.value().row(0);
  return record(std::move(out), {a, row}, [](Node& self) {
    if (auto* g = self.input_grad(0)) *g += self.grad;
    if (auto* g = self.input_grad(1)) *g += self.grad.colwise().sum();
  });
}

Tensor scale(const Tensor& a, double s) {
  return record(a.value() * s, {a}, [s](Node& self) {
    if (auto* g = self.input_grad(0)) *g += s * self.grad;
  });
}

Tensor scale_by(const Tensor& a, const Tensor& s) {
  require(s.rows() == 1 && s.cols() == 1, "scale_by", "factor must be 1x1, got " + shape(s.value()));
  return record(a.value() * s.value()(0, 0), {a, s}, [](Node& self) {
    const double sv = self.inputs[1]->value(0, 0);
    if (auto* g = self.input_grad(0)) *g += sv * self.grad;
    if (auto* g = self.input_grad(1)) (*g)(0, 0) += self.grad.cwiseProduct(self.inputs[0]->value).sum();
  });
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
  require(!parts.empty(), "concat_cols", "no inputs");
  Eigen::Index total = 0;
  for (const auto& p : parts) {
    require(p.rows() == parts.front().rows(), "concat_cols", "row counts differ");
    total += p.cols();
  }
  Matrix out(parts.front().rows(), total);
  Eigen::Index at = 0;
  for (const auto& p : parts) {
    out.middleCols(at, p.cols()) = p.value();
    at += p.cols();
  }
  return record(std::move(out), parts, [](Node& self) {
    Eigen::Index at = 0;
    for (std::size_t k = 0; k < self.inputs.size(); ++k) {
      const auto width = self.inputs[k]->value.cols();
      if (auto* g = self.input_grad(k)) *g += self.grad.middleCols(at, width);
      at += width;
    }
  });
}

Tensor slice_cols(const Tensor& a, Eigen::Index begin, Eigen::Index end) {
  require(0 <= begin && begin <= end && end <= a.cols(), "slice_cols", "range out of bounds");
  return record(a.value().middleCols(begin, end - begin), {a}, [begin](Node& self) {
    if (auto* g = self.input_grad(0)) g->middleCols(begin, self.grad.cols()) += self.grad;
  });
}

Tensor slice_rows(const Tensor& a, Eigen::Index begin, Eigen::Index end) {
  require(0 <= begin && begin <= end && end <= a.rows(), "slice_rows", "range out of bounds");
  return record(a.value().middleRows(begin, end - begin), {a}, [begin](Node& self) {
    if (auto* g = self.input_grad(0)) g->middleRows(begin, self.grad.rows()) += self.grad;
  });
}

Tensor mean_rows(const Tensor& a) {
  require(a.rows() > 0, "mean_rows", "empty matrix");
  return record(a.value().colwise().mean(), {a}, [](Node& self) {
    if (auto* g = self.input_grad(0)) {
      const double inv = 1.0 / static_cast<double>(g->rows());
      g->rowwise() += inv * self.grad.row(0);
    }
  });
}

Tensor sum(const Tensor& a) {
  Matrix out(1, 1);
  out(0, 0) = a.value().sum();
  return record(std::move(out), {a}, [](Node& self) {
    if (auto* g = self.input_grad(0)) g->array() += self.grad(0, 0);
  });
}

Tensor row_softmax(const Tensor& a) {
  Matrix out(a.rows(), a.cols());
  for (Eigen::Index r = 0; r < a.rows(); ++r) {
    const double m = a.value().row(r).maxCoeff();
    out.row(r) = (a.value().row(r).array() - m).exp();
    out.row(r) /= out.row(r).sum();
  }
  return record(std::move(out), {a}, [](Node& self) {
    if (auto* g = self.input_grad(0)) {
      const Matrix& y = self.value;
      Eigen::VectorXd dot = self.grad.cwiseProduct(y).rowwise().sum();
      *g += y.cwiseProduct(self.grad - dot.replicate(1, y.cols()));
    }
  });
}

Tensor log_row_softmax(const Tensor& a) {
  Matrix out(a.rows(), a.cols());
  for (Eigen::Index r = 0; r < a.rows(); ++r) {
    const double m = a.value().row(r).maxCoeff();
    const double lse = m + std::log((a.value().row(r).array() - m).exp().sum());
    out.row(r) = a.value().row(r).array() - lse;
  }
  return record(std::move(out), {a}, [](Node& self) {
    if (auto* g = self.input_grad(0)) {
      Matrix p = self.value.array().exp();
      Eigen::VectorXd total = self.grad.rowwise().sum();
      *g += self.grad - p.cwiseProduct(total.replicate(1, p.cols()));
    }
  });
}

Tensor masked_row_softmax(const Tensor& a, const BoolCsr& mask) {
  require(static_cast<Eigen::Index>(mask.rows()) == a.rows() && static_cast<Eigen::Index>(mask.cols()) == a.cols(),
          "masked_row_softmax", "mask shape differs from " + shape(a.value()));
  Matrix out = Matrix::Zero(a.rows(), a.cols());
  for (Eigen::Index r = 0; r < a.rows(); ++r) {
    auto cols = mask.row(r);
    if (cols.empty()) continue;
    double m = -std::numeric_limits<double>::infinity();
    for (auto c : cols) m = std::max(m, a.value()(r, c));
    double z = 0.0;
    for (auto c : cols) z += (out(r, c) = std::exp(a.value()(r, c) - m));
    for (auto c : cols) out(r, c) /= z;
  }
  return record(std::move(out), {a}, [](Node& self) {
    if (auto* g = self.input_grad(0)) {
      // Unmasked entries have y = 0, so the dense formula leaves them untouched.
      const Matrix& y = self.value;
      Eigen::VectorXd dot = self.grad.cwiseProduct(y).rowwise().sum();
      *g += y.cwiseProduct(self.grad - dot.replicate(1, y.cols()));
    }
  });
}

Tensor elu(const Tensor& a) {
  Matrix out = a.value().unaryExpr([](double x) { return x > 0.0 ? x : std::expm1(x); });
  return unary(a, std::move(out), [](double x, double y) { return x > 0.0 ? 1.0 : y + 1.0; });
}

Tensor leaky_relu(const Tensor& a, double slope) {
  Matrix out = a.value().unaryExpr([slope](double x) { return x > 0.0 ? x : slope * x; });
  return unary(a, std::move(out), [slope](double x, double) { return x > 0.0 ? 1.0 : slope; });
}

Tensor tanh(const Tensor& a) {
  Matrix out = a.value().array().tanh();
  return unary(a, std::move(out), [](double, double y) { return 1.0 - y * y; });
}

Tensor sigmoid(const Tensor& a) {
  Matrix out = a.value().unaryExpr([](double x) {
    return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
  });
  return unary(a, std::move(out), [](double, double y) { return y * (1.0 - y); });
}

Tensor log(const Tensor& a) {
  require((a.value().array() > 0.0).all(), "log", "input has non-positive entries");
  Matrix out = a.value().array().log();
  return unary(a, std::move(out), [](double x, double) { return 1.0 / x; });
}

Tensor exp(const Tensor& a) {
  Matrix out = a.value().array().exp();
  return unary(a, std::move(out), [](double, double y) { return y; });
}

Tensor clamp(const Tensor& a, double lo, double hi) {
  require(lo <= hi, "clamp", "lo > hi");
  Matrix out = a.value().cwiseMax(lo).cwiseMin(hi);
  return unary(a, std::move(out), [lo, hi](double x, double) { return (x >= lo && x <= hi) ? 1.0 : 0.0; });
}

Tensor l2_normalize_rows(const Tensor& a) {
  constexpr double kMinNorm = 1e-12;
  Eigen::VectorXd norms = a.value().rowwise().norm().cwiseMax(kMinNorm);
  Matrix out = a.value().array().colwise() / norms.array();
  return record(std::move(out), {a}, [norms](Node& self) {
    if (auto* g = self.input_grad(0)) {
      const Matrix& y = self.value;
      Eigen::VectorXd dot = self.grad.cwiseProduct(y).rowwise().sum();
      Matrix d = self.grad - y.cwiseProduct(dot.replicate(1, y.cols()));
      *g += (d.array().colwise() / norms.array()).matrix();
    }
  });
}

Tensor gather_rows(const Tensor& a, std::span<const std::uint32_t> rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), a.cols());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    require(rows[k] < a.rows(), "gather_rows", "row index " + std::to_string(rows[k]) + " out of range");
    out.row(static_cast<Eigen::Index>(k)) = a.value().row(rows[k]);
  }
  std::vector<std::uint32_t> idx(rows.begin(), rows.end());
  return record(std::move(out), {a}, [idx = std::move(idx)](Node& self) {
    if (auto* g = self.input_grad(0)) {
      for (std::size_t k = 0; k < idx.size(); ++k) g->row(idx[k]) += self.grad.row(static_cast<Eigen::Index>(k));
    }
  });
}

Tensor spmm(const SparseMatrix& s, const Tensor& b) {
  require(s.cols() == b.rows(), "spmm", "sparse cols " + std::to_string(s.cols()) + " vs " + shape(b.value()));
  Matrix out = s * b.value();
  return record(std::move(out), {b}, [&s](Node& self) {
    if (auto* g = self.input_grad(0)) g->noalias() += s.transpose() * self.grad;
  });
}

Tensor csr_row_softmax(const BoolCsr& pattern, const Tensor& edge_scores) {
  require(edge_scores.cols() == 1 && static_cast<std::size_t>(edge_scores.rows()) == pattern.nnz(),
          "csr_row_softmax", "scores must be [nnz x 1]");
  const auto& ptr = pattern.row_ptr();
  Matrix out(edge_scores.rows(), 1);
  const Matrix& x = edge_scores.value();
  for (std::size_t r = 0; r < pattern.rows(); ++r) {
    if (ptr[r] == ptr[r + 1]) continue;
    double m = -std::numeric_limits<double>::infinity();
    for (auto e = ptr[r]; e < ptr[r + 1]; ++e) m = std::max(m, x(e, 0));
    double z = 0.0;
    for (auto e = ptr[r]; e < ptr[r + 1]; ++e) z += (out(e, 0) = std::exp(x(e, 0) - m));
    for (auto e = ptr[r]; e < ptr[r + 1]; ++e) out(e, 0) /= z;
  }
  return record(std::move(out), {edge_scores}, [&pattern](Node& self) {
    if (auto* g = self.input_grad(0)) {
      const auto& p = pattern.row_ptr();
      for (std::size_t r = 0; r < pattern.rows(); ++r) {
        double dot = 0.0;
        for (auto e = p[r]; e < p[r + 1]; ++e) dot += self.grad(e, 0) * self.value(e, 0);
        for (auto e = p[r]; e < p[r + 1]; ++e) (*g)(e, 0) += self.value(e, 0) * (self.grad(e, 0) - dot);
      }
    }
  });
}

Tensor csr_weighted_sum(const BoolCsr& pattern, const Tensor& edge_weights, const Tensor& h) {
  require(edge_weights.cols() == 1 && static_cast<std::size_t>(edge_weights.rows()) == pattern.nnz(),
          "csr_weighted_sum", "weights must be [nnz x 1]");
  require(static_cast<Eigen::Index>(pattern.cols()) == h.rows(), "csr_weighted_sum",
          "pattern cols " + std::to_string(pattern.cols()) + " vs " + shape(h.value()));
  const auto& ptr = pattern.row_ptr();
  const auto& col = pattern.col_idx();
  Matrix out = Matrix::Zero(static_cast<Eigen::Index>(pattern.rows()), h.cols());
  for (std::size_t r = 0; r < pattern.rows(); ++r) {
    for (auto e = ptr[r]; e < ptr[r + 1]; ++e) out.row(r) += edge_weights.value()(e, 0) * h.value().row(col[e]);
  }
  return record(std::move(out), {edge_weights, h}, [&pattern](Node& self) {
    const auto& p = pattern.row_ptr();
    const auto& c = pattern.col_idx();
    const Matrix& w = self.inputs[0]->value;
    const Matrix& hv = self.inputs[1]->value;
    auto* gw = self.input_grad(0);
    auto* gh = self.input_grad(1);
    for (std::size_t r = 0; r < pattern.rows(); ++r) {
      for (auto e = p[r]; e < p[r + 1]; ++e) {
        if (gw) (*gw)(e, 0) += self.grad.row(r).dot(hv.row(c[e]));
        if (gh) gh->row(c[e]) += w(e, 0) * self.grad.row(r);
      }
    }
  });
}

Matrix glorot_uniform(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  const double a = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::uniform_real_distribution<double> dist(-a, a);
  Matrix out(rows, cols);
  for (Eigen::Index i = 0; i < out.size(); ++i) out.data()[i] = dist(rng);
  return out;
}

void adam_step(std::span<Tensor> params, AdamState& state, double lr) {
  if (state.first_moment.empty()) {
    for (const auto& p : params) {
      state.first_moment.push_back(Matrix::Zero(p.rows(), p.cols()));
      state.second_moment.push_back(Matrix::Zero(p.rows(), p.cols()));
    }
  }
  require(state.first_moment.size() == params.size(), "adam_step", "parameter count changed between steps");
  ++state.step;
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto& p = params[k];
    Matrix g = p.grad();
    if (state.weight_decay != 0.0) g += state.weight_decay * p.value();
    auto& m = state.first_moment[k];
    auto& v = state.second_moment[k];
    require(m.rows() == p.rows() && m.cols() == p.cols(), "adam_step", "moment shape mismatch");
    m = state.beta1 * m + (1.0 - state.beta1) * g;
    v = state.beta2 * v + (1.0 - state.beta2) * g.cwiseProduct(g);
    p.mutable_value().array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + state.eps);
  }
}

void zero_grads(std::span<Tensor> params) {
  for (auto& p : params) p.zero_grad();
}

}  // namespace m2hgcl::ad
