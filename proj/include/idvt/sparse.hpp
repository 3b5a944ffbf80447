#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace idvt {

using Index = std::uint32_t;
using IndexPair = std::pair<Index, Index>;

// CSR sparsity pattern with sorted, unique columns per row.
struct SparseBinaryMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::size_t> row_offsets{0};
  std::vector<Index> col_indices;

  // Duplicates are collapsed; out-of-range pairs throw DimensionError.
  static SparseBinaryMatrix from_pairs(std::size_t rows, std::size_t cols,
                                       std::span<const IndexPair> pairs);

  std::size_t nnz() const noexcept { return col_indices.size(); }
  std::size_t degree(std::size_t r) const { return row_offsets[r + 1] - row_offsets[r]; }
  std::span<const Index> row(std::size_t r) const {
    return {col_indices.data() + row_offsets[r], degree(r)};
  }
  bool contains(std::size_t r, std::size_t c) const;
  std::vector<IndexPair> pairs() const;
  SparseBinaryMatrix transpose() const;
  // Throws DimensionError if any structural invariant is violated.
  void validate() const;
};

// CSR matrix with explicit coefficients; same ordering rules as above.
struct SparseMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::size_t> row_offsets{0};
  std::vector<Index> col_indices;
  std::vector<double> values;

  std::size_t nnz() const noexcept { return col_indices.size(); }
  double value_at(std::size_t r, std::size_t c) const;
};

}  // namespace idvt
