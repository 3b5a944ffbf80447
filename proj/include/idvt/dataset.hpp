#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <string>
#include <unordered_map>
#include <vector>

#include "idvt/sparse.hpp"

namespace idvt {

struct InteractionRecord {
  std::string user;
  std::string item;
  double rating = 0.0;
};

struct SocialRecord {
  std::string truster;
  std::string trustee;
};

struct TrustLoad {
  std::vector<SocialRecord> edges;
  std::size_t duplicates = 0;
  std::size_t self_loops = 0;
};

struct RawRecords {
  std::vector<InteractionRecord> interactions;
  std::vector<SocialRecord> social;
};

// Parsers accept whitespace-separated fields, blank lines and '#' comments.
// Ratings need `user item rating` (extra trailing columns such as timestamps
// are ignored); trust needs `truster trustee` with an optional weight column.
std::vector<InteractionRecord> parse_ratings(std::istream& in, const std::string& source = "<ratings>");
TrustLoad parse_trust(std::istream& in, const std::string& source = "<trust>");
std::vector<InteractionRecord> load_ratings(const std::filesystem::path& path);
TrustLoad load_trust(const std::filesystem::path& path);

// Reads <dir>/ratings.txt and <dir>/trust.txt.
RawRecords load_raw(const std::filesystem::path& data_dir);

// Dense-indexed dataset. Before split() only `interactions` is populated;
// afterwards train_pairs/test_pairs partition it.
struct Dataset {
  std::size_t n_users = 0;
  std::size_t n_items = 0;
  std::vector<std::string> user_tokens;
  std::vector<std::string> item_tokens;
  std::unordered_map<std::string, Index> user_index;
  std::unordered_map<std::string, Index> item_index;

  std::vector<IndexPair> interactions;  // unique (user, item), first-appearance order
  std::vector<IndexPair> train_pairs;   // sorted
  std::vector<IndexPair> test_pairs;    // sorted
  std::vector<IndexPair> social_edges;  // sorted, unique, directed, no self-loops

  bool is_split() const noexcept { return !train_pairs.empty() || !test_pairs.empty(); }
};

struct PreprocessOptions {
  std::size_t min_degree = 5;
  bool require_social = true;
};

// Drops users without an incident social edge, then applies the iterative
// k-core to the interaction graph, then restricts social edges to surviving
// users. The three steps repeat until nothing changes, so the result always
// satisfies both the degree and the social-connectivity invariants. IDs are
// assigned in first-appearance order of the filtered rating stream.
Dataset preprocess(const RawRecords& raw, const PreprocessOptions& opts = {});

// Token-level records in index order; preprocess(to_raw(ds)) == ds.
RawRecords to_raw(const Dataset& ds);

// Indexes every record without filtering (used for "before k-core" audits).
Dataset index_unfiltered(const RawRecords& raw);

// Per-user random split: floor(test_fraction * k) test interactions, clamped
// to [1, k - 1]. Deterministic in `seed`.
Dataset split(const Dataset& unsplit, double test_fraction, std::uint64_t seed);

// Moves round(fraction * k) of each user's k train pairs into `held_out`,
// always leaving at least one pair kept. Used for early stopping.
struct HoldOut {
  std::vector<IndexPair> kept;
  std::vector<IndexPair> held_out;
};
HoldOut hold_out(std::span<const IndexPair> pairs, std::size_t n_users, double fraction,
                 std::uint64_t seed);

}  // namespace idvt
