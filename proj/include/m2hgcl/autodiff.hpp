#pragma once

#include <functional>
#include <memory>
#include <random>
#include <span>
#include <vector>

#include "m2hgcl/matrix.hpp"
#include "m2hgcl/sparse.hpp"

namespace m2hgcl::ad {

struct Node;
using NodePtr = std::shared_ptr<Node>;
/// Propagates self.grad into the grads of self.inputs.
using BackwardFn = std::function<void(Node& self)>;

struct Node {
  Matrix value;
  Matrix grad;  // allocated on first accumulation
  bool requires_grad = false;
  std::vector<NodePtr> inputs;
  BackwardFn backward;

  /// Gradient accumulator, zero-initialized on first use.
  Matrix& grad_buffer();
  /// Accumulator of input k, or nullptr when that input needs no gradient.
  Matrix* input_grad(std::size_t k);
};

/// Handle to a value in a dynamically recorded computation graph. Copies
/// share the underlying node.
class Tensor {
 public:
  Tensor() = default;

  static Tensor parameter(Matrix value);
  static Tensor constant(Matrix value);

  bool defined() const { return node_ != nullptr; }
  const Matrix& value() const { return node_->value; }
  /// In-place access for optimizers; only meaningful on leaf tensors.
  Matrix& mutable_value() { return node_->value; }
  /// Accumulated gradient (zeros of the value's shape if nothing flowed in).
  const Matrix& grad() const { return node_->grad_buffer(); }
  Matrix& mutable_grad() { return node_->grad_buffer(); }
  bool requires_grad() const { return node_->requires_grad; }
  Eigen::Index rows() const { return node_->value.rows(); }
  Eigen::Index cols() const { return node_->value.cols(); }
  double item() const;
  void zero_grad();

  const NodePtr& node() const { return node_; }

 private:
  explicit Tensor(NodePtr node) : node_(std::move(node)) {}
  NodePtr node_;
  friend Tensor record(Matrix value, std::vector<Tensor> inputs, BackwardFn backward);
};

/// Registers a new result node. The backward function is dropped when no
/// input requires a gradient.
Tensor record(Matrix value, std::vector<Tensor> inputs, BackwardFn backward);

/// Reverse-topological sweep from a scalar loss. Accumulates (+=) into the
/// grads of every reachable tensor that requires one.
void backward(const Tensor& loss);

// Primitives. Shape mismatches throw std::invalid_argument.
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);       // elementwise
Tensor add_row(const Tensor& a, const Tensor& row);  // broadcast [1 x c] over rows
Tensor scale(const Tensor& a, double s);
Tensor scale_by(const Tensor& a, const Tensor& s);  // s is [1 x 1]
Tensor concat_cols(const std::vector<Tensor>& parts);
Tensor slice_cols(const Tensor& a, Eigen::Index begin, Eigen::Index end);
Tensor slice_rows(const Tensor& a, Eigen::Index begin, Eigen::Index end);
Tensor mean_rows(const Tensor& a);  // [1 x c] column means
Tensor sum(const Tensor& a);        // [1 x 1]
Tensor row_softmax(const Tensor& a);
Tensor log_row_softmax(const Tensor& a);
/// Softmax over the masked entries of each row; other entries and fully
/// masked rows are zero.
Tensor masked_row_softmax(const Tensor& a, const BoolCsr& mask);
Tensor elu(const Tensor& a);
Tensor leaky_relu(const Tensor& a, double slope);
Tensor tanh(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor log(const Tensor& a);  // throws on non-positive input
Tensor exp(const Tensor& a);
Tensor clamp(const Tensor& a, double lo, double hi);
Tensor l2_normalize_rows(const Tensor& a);
Tensor gather_rows(const Tensor& a, std::span<const std::uint32_t> rows);

// The sparse operands below are captured by reference and must outlive the
// backward pass.

/// Constant sparse operator times a tensor.
Tensor spmm(const SparseMatrix& s, const Tensor& b);
/// Per-row softmax of edge scores laid out in the pattern's nnz order ([nnz x 1]).
Tensor csr_row_softmax(const BoolCsr& pattern, const Tensor& edge_scores);
/// out(i) = sum over edges (i, j) of weight(e) * h(j).
Tensor csr_weighted_sum(const BoolCsr& pattern, const Tensor& edge_weights, const Tensor& h);

/// Uniform(-a, a) with a = sqrt(6 / (fan_in + fan_out)).
Matrix glorot_uniform(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng);

struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;  // L2 term added to the gradient
  long step = 0;
  std::vector<Matrix> first_moment;
  std::vector<Matrix> second_moment;
};

/// One bias-corrected Adam update of `params` from their current grads.
void adam_step(std::span<Tensor> params, AdamState& state, double lr);

void zero_grads(std::span<Tensor> params);

}  // namespace m2hgcl::ad
