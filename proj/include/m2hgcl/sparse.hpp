#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace m2hgcl {

/// Sparse binary matrix in compressed-row form. Column indices within a row
/// are sorted and unique.
class BoolCsr {
 public:
  BoolCsr() = default;
  BoolCsr(std::size_t rows, std::size_t cols);

  /// Builds from an unordered pair list; duplicates collapse. Pairs outside
  /// the declared shape are an error.
  static BoolCsr from_pairs(std::size_t rows, std::size_t cols,
                            std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs);
  static BoolCsr identity(std::size_t n);

  std::size_t rows() const { return row_ptr_.empty() ? 0 : row_ptr_.size() - 1; }
  std::size_t cols() const { return cols_; }
  std::size_t nnz() const { return col_idx_.size(); }

  std::span<const std::uint32_t> row(std::size_t r) const {
    return {col_idx_.data() + row_ptr_[r], col_idx_.data() + row_ptr_[r + 1]};
  }
  bool contains(std::size_t r, std::size_t c) const;

  const std::vector<std::size_t>& row_ptr() const { return row_ptr_; }
  const std::vector<std::uint32_t>& col_idx() const { return col_idx_; }

  BoolCsr transpose() const;
  BoolCsr without_diagonal() const;
  BoolCsr with_diagonal() const;
  BoolCsr union_with(const BoolCsr& other) const;
  bool is_symmetric() const;

  friend bool operator==(const BoolCsr& a, const BoolCsr& b) {
    return a.cols_ == b.cols_ && a.row_ptr_ == b.row_ptr_ && a.col_idx_ == b.col_idx_;
  }

 private:
  std::size_t cols_ = 0;
  std::vector<std::size_t> row_ptr_{0};
  std::vector<std::uint32_t> col_idx_;

  friend BoolCsr bool_product(const BoolCsr& a, const BoolCsr& b);
};

/// Boolean-semiring product: out(i, j) = OR_k a(i, k) AND b(k, j).
BoolCsr bool_product(const BoolCsr& a, const BoolCsr& b);

}  // namespace m2hgcl
