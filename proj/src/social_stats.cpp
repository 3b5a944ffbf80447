#include "idvt/social_stats.hpp"

#include <algorithm>
#include <vector>

#include "idvt/error.hpp"
#include "idvt/graph.hpp"

namespace idvt {
namespace {

std::vector<IndexPair> social_pairs(const SparseBinaryMatrix& s, PairMode mode) {
  std::vector<IndexPair> pairs = s.pairs();
  if (mode == PairMode::kUnordered) {
    for (auto& [u, v] : pairs)
      if (u > v) std::swap(u, v);
    std::sort(pairs.begin(), pairs.end());
    pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
  }
  return pairs;
}

struct SocialTally {
  std::size_t pairs = 0;
  std::size_t noisy = 0;
  std::size_t shared_total = 0;
};

SocialTally tally(const SparseBinaryMatrix& r, const SparseBinaryMatrix& s, PairMode mode) {
  if (r.rows != s.rows || s.rows != s.cols) throw DimensionError("social stats: R and S disagree on users");
  SocialTally t;
  for (const auto& [u, v] : social_pairs(s, mode)) {
    const std::size_t common = common_items(r, u, v);
    ++t.pairs;
    if (common == 0) {
      ++t.noisy;
    } else {
      t.shared_total += common;
    }
  }
  return t;
}

struct CollabTally {
  std::size_t pairs = 0;
  std::size_t shared_total = 0;
};

CollabTally collab_tally(const SparseBinaryMatrix& r) {
  const SparseBinaryMatrix users_of = r.transpose();
  std::vector<std::size_t> counter(r.rows, 0);
  std::vector<Index> touched;
  CollabTally t;
  for (std::size_t u = 0; u < r.rows; ++u) {
    for (Index item : r.row(u)) {
      for (Index v : users_of.row(item)) {
        if (v <= u) continue;
        if (counter[v]++ == 0) touched.push_back(v);
      }
    }
    for (Index v : touched) {
      ++t.pairs;
      t.shared_total += counter[v];
      counter[v] = 0;
    }
    touched.clear();
  }
  return t;
}

}  // namespace

double noise_ratio(const SparseBinaryMatrix& r, const SparseBinaryMatrix& s, PairMode mode) {
  const SocialTally t = tally(r, s, mode);
  if (t.pairs == 0) throw UndefinedMetricError("noise_ratio: no socially connected pairs");
  return static_cast<double>(t.noisy) / static_cast<double>(t.pairs);
}

double soc_ave_int(const SparseBinaryMatrix& r, const SparseBinaryMatrix& s, PairMode mode) {
  const SocialTally t = tally(r, s, mode);
  const std::size_t sharing = t.pairs - t.noisy;
  if (sharing == 0) throw UndefinedMetricError("soc_ave_int: no social pair shares an item");
  return static_cast<double>(t.shared_total) / static_cast<double>(sharing);
}

double col_ave_int(const SparseBinaryMatrix& r) {
  const CollabTally t = collab_tally(r);
  if (t.pairs == 0) throw UndefinedMetricError("col_ave_int: no two users share an item");
  return static_cast<double>(t.shared_total) / static_cast<double>(t.pairs);
}

StatsReport compute_stats(const SparseBinaryMatrix& r, const SparseBinaryMatrix& s, PairMode mode) {
  const SocialTally st = tally(r, s, mode);
  if (st.pairs == 0) throw UndefinedMetricError("compute_stats: no socially connected pairs");
  const CollabTally ct = collab_tally(r);
  StatsReport rep;
  rep.counted_social_pairs = st.pairs;
  rep.noisy_social_pairs = st.noisy;
  rep.noise_ratio = static_cast<double>(st.noisy) / static_cast<double>(st.pairs);
  if (st.pairs > st.noisy)
    rep.soc_ave_int = static_cast<double>(st.shared_total) / static_cast<double>(st.pairs - st.noisy);
  rep.counted_collab_pairs = ct.pairs;
  if (ct.pairs > 0) rep.col_ave_int = static_cast<double>(ct.shared_total) / static_cast<double>(ct.pairs);
  return rep;
}

}  // namespace idvt
