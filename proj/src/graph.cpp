#include "idvt/graph.hpp"

#include <cmath>

#include "idvt/error.hpp"

namespace idvt {

SparseBinaryMatrix build_interaction_matrix(const Dataset& ds, InteractionSource source) {
  const bool all = source == InteractionSource::kAll || !ds.is_split();
  return SparseBinaryMatrix::from_pairs(ds.n_users, ds.n_items, all ? ds.interactions : ds.train_pairs);
}

SparseBinaryMatrix build_social_matrix(const Dataset& ds) {
  return SparseBinaryMatrix::from_pairs(ds.n_users, ds.n_users, ds.social_edges);
}

NormalizedAdjacency symmetric_normalize(const SparseBinaryMatrix& interactions, IsolatedNodes isolated) {
  const SparseBinaryMatrix t = interactions.transpose();
  if (isolated == IsolatedNodes::kReject) {
    for (std::size_t u = 0; u < interactions.rows; ++u)
      if (interactions.degree(u) == 0)
        throw DegenerateGraphError("symmetric_normalize: user " + std::to_string(u) + " has no interactions");
    for (std::size_t i = 0; i < t.rows; ++i)
      if (t.degree(i) == 0)
        throw DegenerateGraphError("symmetric_normalize: item " + std::to_string(i) + " has no interactions");
  }
  auto weigh = [](const SparseBinaryMatrix& pattern, const SparseBinaryMatrix& other) {
    SparseMatrix s;
    s.rows = pattern.rows;
    s.cols = pattern.cols;
    s.row_offsets = pattern.row_offsets;
    s.col_indices = pattern.col_indices;
    s.values.reserve(pattern.nnz());
    for (std::size_t r = 0; r < pattern.rows; ++r) {
      const double dr = static_cast<double>(pattern.degree(r));
      for (Index c : pattern.row(r)) {
        const double dc = static_cast<double>(other.degree(c));
        s.values.push_back(1.0 / std::sqrt(dr * dc));
      }
    }
    return s;
  };
  return {weigh(interactions, t), weigh(t, interactions)};
}

std::size_t common_items(const SparseBinaryMatrix& r, std::size_t u, std::size_t v) {
  auto a = r.row(u);
  auto b = r.row(v);
  std::size_t i = 0, j = 0, n = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] < b[j]) {
      ++i;
    } else if (b[j] < a[i]) {
      ++j;
    } else {
      ++n;
      ++i;
      ++j;
    }
  }
  return n;
}

SparseBinaryMatrix with_self_loops(const SparseBinaryMatrix& square) {
  if (square.rows != square.cols) throw DimensionError("with_self_loops: matrix is not square");
  auto pairs = square.pairs();
  for (std::size_t r = 0; r < square.rows; ++r) pairs.emplace_back(static_cast<Index>(r), static_cast<Index>(r));
  return SparseBinaryMatrix::from_pairs(square.rows, square.cols, pairs);
}

}  // namespace idvt
