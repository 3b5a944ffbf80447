#include "idvt/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_set>

#include "idvt/error.hpp"
#include "idvt/rng.hpp"

namespace idvt {
namespace {

std::vector<std::string> fields_of(const std::string& line) {
  std::istringstream ss(line);
  std::vector<std::string> out;
  std::string tok;
  while (ss >> tok) out.push_back(std::move(tok));
  return out;
}

bool is_skippable(const std::vector<std::string>& fields) {
  return fields.empty() || fields.front().starts_with('#');
}

bool parse_real(const std::string& s, double& out) {
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && ptr == end && std::isfinite(out);
}

std::ifstream open_or_throw(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return in;
}

}  // namespace

std::vector<InteractionRecord> parse_ratings(std::istream& in, const std::string& source) {
  std::vector<InteractionRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto f = fields_of(line);
    if (is_skippable(f)) continue;
    if (f.size() < 3) throw ParseError(source, line_no, "expected `user item rating`");
    double rating = 0.0;
    if (!parse_real(f[2], rating)) throw ParseError(source, line_no, "rating is not a number");
    out.push_back({std::move(f[0]), std::move(f[1]), rating});
  }
  if (out.empty()) throw EmptyDatasetError(source + ": no interaction records");
  return out;
}

TrustLoad parse_trust(std::istream& in, const std::string& source) {
  TrustLoad out;
  std::set<std::pair<std::string, std::string>> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto f = fields_of(line);
    if (is_skippable(f)) continue;
    double weight = 0.0;
    if (f.size() < 2 || f.size() > 3 || (f.size() == 3 && !parse_real(f[2], weight)))
      throw ParseError(source, line_no, "expected `truster trustee`");
    if (f[0] == f[1]) {
      ++out.self_loops;
      continue;
    }
    if (!seen.emplace(f[0], f[1]).second) {
      ++out.duplicates;
      continue;
    }
    out.edges.push_back({std::move(f[0]), std::move(f[1])});
  }
  return out;
}

std::vector<InteractionRecord> load_ratings(const std::filesystem::path& path) {
  auto in = open_or_throw(path);
  return parse_ratings(in, path.string());
}

TrustLoad load_trust(const std::filesystem::path& path) {
  auto in = open_or_throw(path);
  return parse_trust(in, path.string());
}

RawRecords load_raw(const std::filesystem::path& data_dir) {
  RawRecords raw;
  raw.interactions = load_ratings(data_dir / "ratings.txt");
  raw.social = load_trust(data_dir / "trust.txt").edges;
  return raw;
}

namespace {

// Assigns dense IDs in first-appearance order over the kept interaction
// records and maps the kept social edges.
Dataset build_indexed(const RawRecords& raw, const std::vector<bool>& keep_interaction,
                      const std::unordered_set<std::string>& users_alive) {
  Dataset ds;
  std::set<IndexPair> seen;
  for (std::size_t k = 0; k < raw.interactions.size(); ++k) {
    if (!keep_interaction[k]) continue;
    const auto& rec = raw.interactions[k];
    auto [uit, unew] = ds.user_index.try_emplace(rec.user, static_cast<Index>(ds.user_tokens.size()));
    if (unew) ds.user_tokens.push_back(rec.user);
    auto [iit, inew] = ds.item_index.try_emplace(rec.item, static_cast<Index>(ds.item_tokens.size()));
    if (inew) ds.item_tokens.push_back(rec.item);
    if (seen.insert(IndexPair(uit->second, iit->second)).second)
      ds.interactions.emplace_back(uit->second, iit->second);
  }
  ds.n_users = ds.user_tokens.size();
  ds.n_items = ds.item_tokens.size();
  for (const auto& e : raw.social) {
    if (e.truster == e.trustee) continue;
    if (!users_alive.contains(e.truster) || !users_alive.contains(e.trustee)) continue;
    auto a = ds.user_index.find(e.truster);
    auto b = ds.user_index.find(e.trustee);
    if (a == ds.user_index.end() || b == ds.user_index.end()) continue;
    ds.social_edges.emplace_back(a->second, b->second);
  }
  std::sort(ds.social_edges.begin(), ds.social_edges.end());
  ds.social_edges.erase(std::unique(ds.social_edges.begin(), ds.social_edges.end()),
                        ds.social_edges.end());
  return ds;
}

}  // namespace

RawRecords to_raw(const Dataset& ds) {
  RawRecords raw;
  raw.interactions.reserve(ds.interactions.size());
  for (const auto& [u, i] : ds.interactions)
    raw.interactions.push_back({ds.user_tokens[u], ds.item_tokens[i], 1.0});
  for (const auto& [u, v] : ds.social_edges)
    raw.social.push_back({ds.user_tokens[u], ds.user_tokens[v]});
  return raw;
}

Dataset index_unfiltered(const RawRecords& raw) {
  std::unordered_set<std::string> users;
  for (const auto& r : raw.interactions) users.insert(r.user);
  return build_indexed(raw, std::vector<bool>(raw.interactions.size(), true), users);
}

Dataset preprocess(const RawRecords& raw, const PreprocessOptions& opts) {
  // Work on token-level unique (user, item) pairs; ratings only signal presence.
  std::vector<bool> keep(raw.interactions.size(), true);
  {
    std::set<std::pair<std::string_view, std::string_view>> seen;
    for (std::size_t k = 0; k < raw.interactions.size(); ++k) {
      const auto& r = raw.interactions[k];
      if (!seen.emplace(r.user, r.item).second) keep[k] = false;
    }
  }

  std::unordered_set<std::string> alive_users;
  for (std::size_t k = 0; k < raw.interactions.size(); ++k)
    if (keep[k]) alive_users.insert(raw.interactions[k].user);

  bool changed = true;
  while (changed) {
    changed = false;

    if (opts.require_social) {
      std::unordered_set<std::string> connected;
      for (const auto& e : raw.social) {
        if (e.truster == e.trustee) continue;
        if (alive_users.contains(e.truster) && alive_users.contains(e.trustee)) {
          connected.insert(e.truster);
          connected.insert(e.trustee);
        }
      }
      for (std::size_t k = 0; k < raw.interactions.size(); ++k) {
        if (keep[k] && !connected.contains(raw.interactions[k].user)) {
          keep[k] = false;
          changed = true;
        }
      }
    }

    // Iterative k-core.
    bool core_changed = true;
    while (core_changed) {
      core_changed = false;
      std::unordered_map<std::string_view, std::size_t> udeg, ideg;
      for (std::size_t k = 0; k < raw.interactions.size(); ++k) {
        if (!keep[k]) continue;
        ++udeg[raw.interactions[k].user];
        ++ideg[raw.interactions[k].item];
      }
      for (std::size_t k = 0; k < raw.interactions.size(); ++k) {
        if (!keep[k]) continue;
        const auto& r = raw.interactions[k];
        if (udeg[r.user] < opts.min_degree || ideg[r.item] < opts.min_degree) {
          keep[k] = false;
          core_changed = true;
          changed = true;
        }
      }
    }

    std::unordered_set<std::string> now_alive;
    for (std::size_t k = 0; k < raw.interactions.size(); ++k)
      if (keep[k]) now_alive.insert(raw.interactions[k].user);
    alive_users = std::move(now_alive);
  }

  Dataset ds = build_indexed(raw, keep, alive_users);
  if (ds.n_users == 0 || ds.n_items == 0)
    throw EmptyDatasetError("preprocessing removed every interaction");
  return ds;
}

Dataset split(const Dataset& unsplit, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0))
    throw ConfigError("test_fraction must lie in (0, 1)");
  Dataset ds = unsplit;
  ds.train_pairs.clear();
  ds.test_pairs.clear();

  std::vector<std::vector<Index>> items_of(ds.n_users);
  for (const auto& [u, i] : ds.interactions) items_of[u].push_back(i);

  Rng rng = seeded_rng(seed, "split");
  for (std::size_t u = 0; u < ds.n_users; ++u) {
    auto& items = items_of[u];
    const std::size_t k = items.size();
    if (k == 0) continue;
    if (k == 1) {
      ds.train_pairs.emplace_back(static_cast<Index>(u), items[0]);
      continue;
    }
    rng.shuffle(std::span<Index>(items));
    auto n_test = static_cast<std::size_t>(std::floor(test_fraction * static_cast<double>(k) + 1e-9));
    n_test = std::clamp<std::size_t>(n_test, 1, k - 1);
    for (std::size_t j = 0; j < k; ++j)
      (j < n_test ? ds.test_pairs : ds.train_pairs).emplace_back(static_cast<Index>(u), items[j]);
  }
  std::sort(ds.train_pairs.begin(), ds.train_pairs.end());
  std::sort(ds.test_pairs.begin(), ds.test_pairs.end());
  return ds;
}

HoldOut hold_out(std::span<const IndexPair> pairs, std::size_t n_users, double fraction,
                 std::uint64_t seed) {
  if (!(fraction >= 0.0 && fraction < 1.0)) throw ConfigError("hold-out fraction must lie in [0, 1)");
  HoldOut out;
  std::vector<std::vector<Index>> items_of(n_users);
  for (const auto& [u, i] : pairs) items_of[u].push_back(i);
  Rng rng = seeded_rng(seed, "holdout");
  for (std::size_t u = 0; u < n_users; ++u) {
    auto& items = items_of[u];
    rng.shuffle(std::span<Index>(items));
    const std::size_t k = items.size();
    auto n_held = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(k)));
    if (k > 0) n_held = std::min(n_held, k - 1);
    for (std::size_t j = 0; j < k; ++j)
      (j < n_held ? out.held_out : out.kept).emplace_back(static_cast<Index>(u), items[j]);
  }
  std::sort(out.kept.begin(), out.kept.end());
  std::sort(out.held_out.begin(), out.held_out.end());
  return out;
}

}  // namespace idvt
