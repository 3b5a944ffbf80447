#include "idvt/sparse.hpp"

#include <algorithm>

#include "idvt/error.hpp"

namespace idvt {

SparseBinaryMatrix SparseBinaryMatrix::from_pairs(std::size_t rows, std::size_t cols,
                                                  std::span<const IndexPair> pairs) {
  std::vector<IndexPair> sorted(pairs.begin(), pairs.end());
  for (const auto& [r, c] : sorted) {
    if (r >= rows || c >= cols) throw DimensionError("SparseBinaryMatrix: index out of range");
  }
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());

  SparseBinaryMatrix m;
  m.rows = rows;
  m.cols = cols;
  m.row_offsets.assign(rows + 1, 0);
  m.col_indices.reserve(sorted.size());
  for (const auto& [r, c] : sorted) {
    ++m.row_offsets[r + 1];
    m.col_indices.push_back(c);
  }
  for (std::size_t r = 0; r < rows; ++r) m.row_offsets[r + 1] += m.row_offsets[r];
  return m;
}

bool SparseBinaryMatrix::contains(std::size_t r, std::size_t c) const {
  auto cols_of_row = row(r);
  return std::binary_search(cols_of_row.begin(), cols_of_row.end(), static_cast<Index>(c));
}

std::vector<IndexPair> SparseBinaryMatrix::pairs() const {
  std::vector<IndexPair> out;
  out.reserve(nnz());
  for (std::size_t r = 0; r < rows; ++r)
    for (Index c : row(r)) out.emplace_back(static_cast<Index>(r), c);
  return out;
}

SparseBinaryMatrix SparseBinaryMatrix::transpose() const {
  SparseBinaryMatrix t;
  t.rows = cols;
  t.cols = rows;
  t.row_offsets.assign(cols + 1, 0);
  for (Index c : col_indices) ++t.row_offsets[c + 1];
  for (std::size_t c = 0; c < cols; ++c) t.row_offsets[c + 1] += t.row_offsets[c];
  t.col_indices.resize(nnz());
  std::vector<std::size_t> cursor(t.row_offsets.begin(), t.row_offsets.end() - 1);
  // Rows are visited in increasing order, so each transposed row stays sorted.
  for (std::size_t r = 0; r < rows; ++r)
    for (Index c : row(r)) t.col_indices[cursor[c]++] = static_cast<Index>(r);
  return t;
}

void SparseBinaryMatrix::validate() const {
  if (row_offsets.size() != rows + 1 || row_offsets.front() != 0 ||
      row_offsets.back() != col_indices.size())
    throw DimensionError("SparseBinaryMatrix: malformed offsets");
  for (std::size_t r = 0; r < rows; ++r) {
    if (row_offsets[r] > row_offsets[r + 1])
      throw DimensionError("SparseBinaryMatrix: offsets not monotone");
    auto cs = row(r);
    for (std::size_t k = 0; k < cs.size(); ++k) {
      if (cs[k] >= cols) throw DimensionError("SparseBinaryMatrix: column out of range");
      if (k > 0 && cs[k - 1] >= cs[k])
        throw DimensionError("SparseBinaryMatrix: columns not strictly increasing");
    }
  }
}

double SparseMatrix::value_at(std::size_t r, std::size_t c) const {
  const auto begin = col_indices.begin() + static_cast<std::ptrdiff_t>(row_offsets[r]);
  const auto end = col_indices.begin() + static_cast<std::ptrdiff_t>(row_offsets[r + 1]);
  auto it = std::lower_bound(begin, end, static_cast<Index>(c));
  if (it == end || *it != c) return 0.0;
  return values[static_cast<std::size_t>(it - col_indices.begin())];
}

}  // namespace idvt
