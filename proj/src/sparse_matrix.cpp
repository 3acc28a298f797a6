#include "tbger/sparse_matrix.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "tbger/common.hpp"

namespace tbger {

SparseUserTagMatrix::SparseUserTagMatrix(std::uint32_t rows, std::uint32_t cols)
    : rows_(rows), cols_(cols), row_ptr_(static_cast<std::size_t>(rows) + 1, 0) {}

SparseUserTagMatrix SparseUserTagMatrix::from_triplets(std::uint32_t rows, std::uint32_t cols,
                                                       std::vector<Entry> entries) {
  for (const Entry& e : entries) {
    if (e.row >= rows || e.col >= cols) {
      throw PreconditionError("matrix entry (" + std::to_string(e.row) + ", " +
                              std::to_string(e.col) + ") outside " + std::to_string(rows) + "x" +
                              std::to_string(cols));
    }
    if (!(e.value >= 0.0) || !std::isfinite(e.value)) {
      throw PreconditionError("matrix entries must be finite and non-negative");
    }
  }
  // Stable: cells keep their input order, which fixes the summation order.
  std::stable_sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });

  SparseUserTagMatrix m(rows, cols);
  m.col_idx_.reserve(entries.size());
  m.values_.reserve(entries.size());
  std::size_t i = 0;
  while (i < entries.size()) {
    const std::uint32_t r = entries[i].row;
    const std::uint32_t c = entries[i].col;
    double sum = 0.0;
    for (; i < entries.size() && entries[i].row == r && entries[i].col == c; ++i) {
      sum += entries[i].value;
    }
    if (sum > 0.0) {
      m.col_idx_.push_back(c);
      m.values_.push_back(sum);
      ++m.row_ptr_[r + 1];
    }
  }
  for (std::uint32_t r = 0; r < rows; ++r) m.row_ptr_[r + 1] += m.row_ptr_[r];
  return m;
}

double SparseUserTagMatrix::at(std::uint32_t r, std::uint32_t c) const {
  const auto cols = row_cols(r);
  const auto it = std::lower_bound(cols.begin(), cols.end(), c);
  if (it == cols.end() || *it != c) return 0.0;
  return row_values(r)[static_cast<std::size_t>(it - cols.begin())];
}

std::vector<SparseUserTagMatrix::Entry> SparseUserTagMatrix::triplets() const {
  std::vector<Entry> out;
  out.reserve(nnz());
  for (std::uint32_t r = 0; r < rows_; ++r) {
    for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) {
      out.push_back({r, col_idx_[k], values_[k]});
    }
  }
  return out;
}

SparseUserTagMatrix SparseUserTagMatrix::transposed() const {
  SparseUserTagMatrix t(cols_, rows_);
  for (std::uint32_t c : col_idx_) ++t.row_ptr_[c + 1];
  for (std::uint32_t r = 0; r < t.rows_; ++r) t.row_ptr_[r + 1] += t.row_ptr_[r];
  t.col_idx_.resize(nnz());
  t.values_.resize(nnz());
  std::vector<std::size_t> next(t.row_ptr_.begin(), t.row_ptr_.end() - 1);
  for (std::uint32_t r = 0; r < rows_; ++r) {
    for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) {
      const std::size_t dst = next[col_idx_[k]]++;
      t.col_idx_[dst] = r;
      t.values_[dst] = values_[k];
    }
  }
  return t;
}

SparseUserTagMatrix SparseUserTagMatrix::scaled(double factor) const {
  if (!(factor > 0.0) || !std::isfinite(factor)) {
    throw PreconditionError("scale factor must be positive and finite");
  }
  SparseUserTagMatrix m = *this;
  for (double& v : m.values_) v *= factor;
  return m;
}

std::vector<double> SparseUserTagMatrix::row_sums() const {
  std::vector<double> out(rows_, 0.0);
  for (std::uint32_t r = 0; r < rows_; ++r) {
    for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) out[r] += values_[k];
  }
  return out;
}

std::vector<double> SparseUserTagMatrix::col_sums() const {
  std::vector<double> out(cols_, 0.0);
  for (std::size_t k = 0; k < values_.size(); ++k) out[col_idx_[k]] += values_[k];
  return out;
}

std::vector<double> SparseUserTagMatrix::row_counts() const {
  std::vector<double> out(rows_, 0.0);
  for (std::uint32_t r = 0; r < rows_; ++r) {
    out[r] = static_cast<double>(row_ptr_[r + 1] - row_ptr_[r]);
  }
  return out;
}

std::vector<double> SparseUserTagMatrix::col_counts() const {
  std::vector<double> out(cols_, 0.0);
  for (std::uint32_t c : col_idx_) out[c] += 1.0;
  return out;
}

}  // namespace tbger
