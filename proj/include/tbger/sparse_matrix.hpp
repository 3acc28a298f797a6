#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace tbger {

// Non-negative user x tag matrix in compressed sparse row form. Only strictly
// positive values are stored; column indices within a row are ascending.
class SparseUserTagMatrix {
 public:
  struct Entry {
    std::uint32_t row = 0;
    std::uint32_t col = 0;
    double value = 0.0;

    bool operator==(const Entry&) const = default;
  };

  SparseUserTagMatrix() : row_ptr_(1, 0) {}
  SparseUserTagMatrix(std::uint32_t rows, std::uint32_t cols);

  // Duplicate (row, col) pairs are summed in input order, starting from 0.0.
  // Cells summing to zero are not stored. Throws PreconditionError on
  // out-of-range indices or negative / non-finite values.
  static SparseUserTagMatrix from_triplets(std::uint32_t rows, std::uint32_t cols,
                                           std::vector<Entry> entries);

  std::uint32_t rows() const { return rows_; }
  std::uint32_t cols() const { return cols_; }
  std::size_t nnz() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  std::span<const std::uint32_t> row_cols(std::uint32_t r) const {
    return {col_idx_.data() + row_ptr_[r], col_idx_.data() + row_ptr_[r + 1]};
  }
  std::span<const double> row_values(std::uint32_t r) const {
    return {values_.data() + row_ptr_[r], values_.data() + row_ptr_[r + 1]};
  }

  double at(std::uint32_t r, std::uint32_t c) const;

  // Stored entries in ascending (row, col) order.
  std::vector<Entry> triplets() const;

  SparseUserTagMatrix transposed() const;
  SparseUserTagMatrix scaled(double factor) const;

  std::vector<double> row_sums() const;
  std::vector<double> col_sums() const;
  std::vector<double> row_counts() const;
  std::vector<double> col_counts() const;

  bool operator==(const SparseUserTagMatrix&) const = default;

 private:
  std::uint32_t rows_ = 0;
  std::uint32_t cols_ = 0;
  std::vector<std::size_t> row_ptr_;
  std::vector<std::uint32_t> col_idx_;
  std::vector<double> values_;
};

}  // namespace tbger
