#pragma once

#include <cstddef>

#include "idvt/dataset.hpp"
#include "idvt/sparse.hpp"

namespace idvt {

// Symmetric bipartite normalization: both directions carry the coefficient
// 1 / sqrt(deg(u) * deg(i)) for every interaction (u, i).
struct NormalizedAdjacency {
  SparseMatrix user_item;  // n x m
  SparseMatrix item_user;  // m x n
};

enum class InteractionSource { kTrain, kAll };

// n x m interaction matrix from the train pairs (or every pair when the
// dataset has not been split yet, or when kAll is requested).
SparseBinaryMatrix build_interaction_matrix(const Dataset& ds,
                                            InteractionSource source = InteractionSource::kTrain);

// n x n directed social matrix, exactly as listed in the dataset.
SparseBinaryMatrix build_social_matrix(const Dataset& ds);

enum class IsolatedNodes { kReject, kAllow };

// Throws DegenerateGraphError on a zero-degree user or item under kReject.
// kAllow leaves isolated nodes without coefficients (used when a split
// moves every interaction of an item into the test set).
NormalizedAdjacency symmetric_normalize(const SparseBinaryMatrix& interactions,
                                        IsolatedNodes isolated = IsolatedNodes::kReject);

// |N_u ∩ N_v| by merging the two sorted rows.
std::size_t common_items(const SparseBinaryMatrix& r, std::size_t u, std::size_t v);

// Row pattern with the diagonal added to every row (rows == cols required).
SparseBinaryMatrix with_self_loops(const SparseBinaryMatrix& square);

}  // namespace idvt
