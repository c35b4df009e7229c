#include "m2hgcl/sparse.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace m2hgcl {

BoolCsr::BoolCsr(std::size_t rows, std::size_t cols) : cols_(cols), row_ptr_(rows + 1, 0) {}

BoolCsr BoolCsr::from_pairs(std::size_t rows, std::size_t cols,
                            std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs) {
  for (const auto& [r, c] : pairs) {
    if (r >= rows || c >= cols) {
      throw std::out_of_range("BoolCsr: entry (" + std::to_string(r) + ", " + std::to_string(c) +
                              ") outside " + std::to_string(rows) + "x" + std::to_string(cols));
    }
  }
  std::sort(pairs.begin(), pairs.end());
  pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());

  BoolCsr out(rows, cols);
  out.col_idx_.reserve(pairs.size());
  for (const auto& [r, c] : pairs) {
    ++out.row_ptr_[r + 1];
    out.col_idx_.push_back(c);
  }
  for (std::size_t r = 0; r < rows; ++r) out.row_ptr_[r + 1] += out.row_ptr_[r];
  return out;
}

BoolCsr BoolCsr::identity(std::size_t n) {
  BoolCsr out(n, n);
  out.col_idx_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.row_ptr_[i + 1] = i + 1;
    out.col_idx_[i] = static_cast<std::uint32_t>(i);
  }
  return out;
}

bool BoolCsr::contains(std::size_t r, std::size_t c) const {
  auto cols = row(r);
  return std::binary_search(cols.begin(), cols.end(), static_cast<std::uint32_t>(c));
}

BoolCsr BoolCsr::transpose() const {
  BoolCsr out(cols_, rows());
  out.col_idx_.resize(nnz());
  for (auto c : col_idx_) ++out.row_ptr_[c + 1];
  for (std::size_t c = 0; c < cols_; ++c) out.row_ptr_[c + 1] += out.row_ptr_[c];
  std::vector<std::size_t> cursor(out.row_ptr_.begin(), out.row_ptr_.end() - 1);
  // Rows are visited in increasing order, so each output row stays sorted.
  for (std::size_t r = 0; r < rows(); ++r) {
    for (auto c : row(r)) out.col_idx_[cursor[c]++] = static_cast<std::uint32_t>(r);
  }
  return out;
}

BoolCsr BoolCsr::without_diagonal() const {
  BoolCsr out(rows(), cols_);
  out.col_idx_.reserve(nnz());
  for (std::size_t r = 0; r < rows(); ++r) {
    for (auto c : row(r)) {
      if (c != r) out.col_idx_.push_back(c);
    }
    out.row_ptr_[r + 1] = out.col_idx_.size();
  }
  return out;
}

BoolCsr BoolCsr::with_diagonal() const {
  if (rows() != cols_) throw std::invalid_argument("BoolCsr::with_diagonal: matrix is not square");
  return union_with(identity(rows()));
}

BoolCsr BoolCsr::union_with(const BoolCsr& other) const {
  if (rows() != other.rows() || cols_ != other.cols_) {
    throw std::invalid_argument("BoolCsr::union_with: shape mismatch");
  }
  BoolCsr out(rows(), cols_);
  out.col_idx_.reserve(nnz() + other.nnz());
  for (std::size_t r = 0; r < rows(); ++r) {
    auto a = row(r);
    auto b = other.row(r);
    std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out.col_idx_));
    out.row_ptr_[r + 1] = out.col_idx_.size();
  }
  return out;
}

bool BoolCsr::is_symmetric() const { return rows() == cols_ && *this == transpose(); }

BoolCsr bool_product(const BoolCsr& a, const BoolCsr& b) {
  if (a.cols() != b.rows()) {
    throw std::invalid_argument("bool_product: inner dimensions differ (" + std::to_string(a.cols()) +
                                " vs " + std::to_string(b.rows()) + ")");
  }
  BoolCsr out(a.rows(), b.cols());
  // Each output row is the union of the rows of b selected by a(i, :),
  // collected through a marker array and emitted sorted.
  std::vector<char> seen(b.cols(), 0);
  std::vector<std::uint32_t> acc;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    acc.clear();
    for (auto k : a.row(i)) {
      for (auto j : b.row(k)) {
        if (!seen[j]) {
          seen[j] = 1;
          acc.push_back(j);
        }
      }
    }
    std::sort(acc.begin(), acc.end());
    for (auto j : acc) seen[j] = 0;
    out.col_idx_.insert(out.col_idx_.end(), acc.begin(), acc.end());
    out.row_ptr_[i + 1] = out.col_idx_.size();
  }
  return out;
}

}  // namespace m2hgcl
