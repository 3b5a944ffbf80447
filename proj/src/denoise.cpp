#include "idvt/denoise.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "idvt/error.hpp"

namespace idvt {

Matrix structural_embeddings(const SparseBinaryMatrix& social, const Matrix& user_embeddings) {
  if (social.rows != social.cols || social.cols != user_embeddings.rows)
    throw DimensionError("structural_embeddings: social matrix and embeddings disagree on users");
  Matrix out(social.rows, user_embeddings.cols);
  for (std::size_t u = 0; u < social.rows; ++u) {
    auto o = out.row(u);
    for (Index v : social.row(u)) {
      auto e = user_embeddings.row(v);
      for (std::size_t c = 0; c < o.size(); ++c) o[c] += e[c];
    }
  }
  return out;
}

double interest_confidence(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionError("interest_confidence: length mismatch");
  const double na = l2_norm(a);
  const double nb = l2_norm(b);
  double cosine = 0.0;
  if (na >= kCosineEps && nb >= kCosineEps) cosine = std::clamp(dot(a, b) / (na * nb), -1.0, 1.0);
  return (cosine + 1.0) / 2.0;
}

std::vector<IndexPair> DenoisedSocialGraph::kept_pairs() const {
  std::vector<IndexPair> out;
  for (const auto& e : edges)
    if (e.kept) out.emplace_back(e.from, e.to);
  return out;
}

SparseBinaryMatrix DenoisedSocialGraph::kept_matrix() const {
  const auto pairs = kept_pairs();
  return SparseBinaryMatrix::from_pairs(n_users, n_users, pairs);
}

DenoisedSocialGraph denoise_graph(const SparseBinaryMatrix& social, const Matrix& user_embeddings,
                                  double threshold) {
  if (!std::isfinite(threshold) || threshold < 0.0)
    throw ConfigError("denoise threshold must be a finite value >= 0");
  const Matrix structural = structural_embeddings(social, user_embeddings);
  DenoisedSocialGraph g;
  g.n_users = social.rows;
  g.threshold = threshold;
  g.edges.reserve(social.nnz());
  for (std::size_t u = 0; u < social.rows; ++u) {
    for (Index v : social.row(u)) {
      const double ic = interest_confidence(structural.row(u), structural.row(v));
      const bool kept = ic >= threshold;
      g.edges.push_back({static_cast<Index>(u), v, ic, kept});
      if (!kept) ++g.removed;
    }
  }
  g.removal_ratio = g.edges.empty() ? 0.0 : static_cast<double>(g.removed) / static_cast<double>(g.edges.size());
  return g;
}

SparseBinaryMatrix edge_dropout(const SparseBinaryMatrix& social, double drop_ratio, Rng& rng) {
  if (!(drop_ratio >= 0.0 && drop_ratio <= 1.0)) throw ConfigError("drop_ratio must lie in [0, 1]");
  const std::size_t total = social.nnz();
  const auto n_drop = static_cast<std::size_t>(std::llround(drop_ratio * static_cast<double>(total)));
  // Partial Fisher-Yates: the first n_drop slots become the dropped edges.
  std::vector<std::size_t> order(total);
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t k = 0; k < n_drop; ++k) {
    const auto j = k + static_cast<std::size_t>(rng.uniform_index(total - k));
    std::swap(order[k], order[j]);
  }
  std::vector<bool> dropped(total, false);
  for (std::size_t k = 0; k < n_drop; ++k) dropped[order[k]] = true;

  SparseBinaryMatrix out;
  out.rows = social.rows;
  out.cols = social.cols;
  out.row_offsets.assign(social.rows + 1, 0);
  out.col_indices.reserve(total - n_drop);
  for (std::size_t r = 0; r < social.rows; ++r) {
    for (std::size_t k = social.row_offsets[r]; k < social.row_offsets[r + 1]; ++k)
      if (!dropped[k]) out.col_indices.push_back(social.col_indices[k]);
    out.row_offsets[r + 1] = out.col_indices.size();
  }
  return out;
}

SparseBinaryMatrix edge_dropout(const SparseBinaryMatrix& social, double drop_ratio, std::uint64_t seed) {
  Rng rng = seeded_rng(seed, "dropout");
  return edge_dropout(social, drop_ratio, rng);
}

}  // namespace idvt
