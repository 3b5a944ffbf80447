#pragma once

#include <cstddef>
#include <optional>

#include "idvt/sparse.hpp"

namespace idvt {

// How directed social edges map onto "user pairs".
//   kUnordered: (u,v) and (v,u) count as one pair.
//   kDirected:  every directed edge is its own pair.
enum class PairMode { kUnordered, kDirected };

struct StatsReport {
  double noise_ratio = 0.0;
  std::optional<double> soc_ave_int;
  std::optional<double> col_ave_int;
  std::size_t counted_social_pairs = 0;
  std::size_t noisy_social_pairs = 0;
  std::size_t counted_collab_pairs = 0;
};

// Fraction of socially connected pairs sharing no interacted item.
// Throws UndefinedMetricError when there are no social pairs.
double noise_ratio(const SparseBinaryMatrix& r, const SparseBinaryMatrix& s,
                   PairMode mode = PairMode::kUnordered);

// Mean co-interaction count over social pairs that share at least one item.
double soc_ave_int(const SparseBinaryMatrix& r, const SparseBinaryMatrix& s,
                   PairMode mode = PairMode::kUnordered);

// Mean co-interaction count over all unordered user pairs sharing at least
// one item, accumulated item by item instead of scanning all n^2 pairs.
double col_ave_int(const SparseBinaryMatrix& r);

// All three metrics; undefined averages are left empty instead of throwing.
// Throws UndefinedMetricError only when there is no social pair at all.
StatsReport compute_stats(const SparseBinaryMatrix& r, const SparseBinaryMatrix& s,
                          PairMode mode = PairMode::kUnordered);

}  // namespace idvt
