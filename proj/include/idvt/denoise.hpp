#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "idvt/matrix.hpp"
#include "idvt/rng.hpp"
#include "idvt/sparse.hpp"

namespace idvt {

// E^ST = S * E^IN: each user's row is the sum of its out-neighbors' ID
// embeddings. Socially isolated users get a zero row.
Matrix structural_embeddings(const SparseBinaryMatrix& social, const Matrix& user_embeddings);

inline constexpr double kCosineEps = 1e-12;

// Interest confidence (cos(a, b) + 1) / 2. A vector with norm below
// kCosineEps has cosine 0 by definition, giving 0.5.
double interest_confidence(std::span<const double> a, std::span<const double> b);

struct ScoredEdge {
  Index from = 0;
  Index to = 0;
  double ic = 0.0;
  bool kept = false;
};

struct DenoisedSocialGraph {
  std::size_t n_users = 0;
  double threshold = 0.0;
  std::vector<ScoredEdge> edges;  // every original edge, in CSR order
  std::size_t removed = 0;
  double removal_ratio = 0.0;     // removed / original, 0 for an empty graph

  std::vector<IndexPair> kept_pairs() const;
  SparseBinaryMatrix kept_matrix() const;
};

// Scores every directed edge independently and drops those with IC below
// the threshold. Thresholds above 1 remove every edge. Throws ConfigError
// for negative or non-finite thresholds.
DenoisedSocialGraph denoise_graph(const SparseBinaryMatrix& social, const Matrix& user_embeddings,
                                  double threshold);

// Removes exactly round(drop_ratio * |E|) edges chosen uniformly without
// replacement. Throws ConfigError unless drop_ratio is in [0, 1].
SparseBinaryMatrix edge_dropout(const SparseBinaryMatrix& social, double drop_ratio, Rng& rng);
SparseBinaryMatrix edge_dropout(const SparseBinaryMatrix& social, double drop_ratio, std::uint64_t seed);

}  // namespace idvt
