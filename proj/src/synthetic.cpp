#include "idvt/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "idvt/error.hpp"
#include "idvt/report.hpp"
#include "idvt/rng.hpp"

namespace idvt {
namespace {

constexpr std::size_t kMinCore = 5;

std::size_t block_of(std::size_t index, std::size_t total, std::size_t blocks) {
  return index * blocks / total;
}

}  // namespace

SyntheticData make_synthetic(const SyntheticOptions& opts) {
  const std::size_t n = opts.users, m = opts.items, c = opts.communities;
  if (c < 2) throw GenerationError("need at least 2 communities");
  if (!(opts.noise_fraction >= 0.0 && opts.noise_fraction <= 1.0))
    throw GenerationError("noise_fraction must lie in [0, 1]");
  if (opts.items_per_user < kMinCore) throw GenerationError("items_per_user must be >= 5");
  if (opts.social_degree < 1) throw GenerationError("social_degree must be >= 1");
  if (n / c < kMinCore + 1 || m / c < opts.items_per_user + 1)
    throw GenerationError("too few users or items per community for a 5-core");

  SyntheticData data;
  data.user_community.resize(n);
  data.item_community.resize(m);
  std::vector<std::vector<Index>> users_in(c), items_in(c);
  for (std::size_t u = 0; u < n; ++u) {
    data.user_community[u] = block_of(u, n, c);
    users_in[data.user_community[u]].push_back(static_cast<Index>(u));
  }
  for (std::size_t i = 0; i < m; ++i) {
    data.item_community[i] = block_of(i, m, c);
    items_in[data.item_community[i]].push_back(static_cast<Index>(i));
  }

  Rng rng = seeded_rng(opts.seed, "synthetic");
  std::vector<std::set<Index>> items_of(n);
  std::vector<std::vector<Index>> users_of(m);
  for (std::size_t k = 0; k < c; ++k) {
    // Every item first gets kMinCore distinct users of its community.
    for (Index item : items_in[k]) {
      std::vector<Index> pool = users_in[k];
      for (std::size_t j = 0; j < kMinCore; ++j) {
        const auto pick = j + static_cast<std::size_t>(rng.uniform_index(pool.size() - j));
        std::swap(pool[j], pool[pick]);
        items_of[pool[j]].insert(item);
      }
    }
    // Then every user is topped up to the minimum history length.
    for (Index u : users_in[k]) {
      while (items_of[u].size() < opts.items_per_user)
        items_of[u].insert(items_in[k][rng.uniform_index(items_in[k].size())]);
    }
  }
  for (std::size_t u = 0; u < n; ++u) {
    for (Index i : items_of[u]) {
      users_of[i].push_back(static_cast<Index>(u));
      data.raw.interactions.push_back(
          {"u" + std::to_string(u), "i" + std::to_string(i), static_cast<double>(1 + rng.uniform_index(5))});
    }
  }

  const std::size_t total_edges = n * opts.social_degree;
  const auto n_noise = static_cast<std::size_t>(std::llround(opts.noise_fraction * static_cast<double>(total_edges)));
  std::vector<char> slot_is_noise(total_edges, 0);
  std::fill(slot_is_noise.begin(), slot_is_noise.begin() + static_cast<std::ptrdiff_t>(n_noise), 1);
  rng.shuffle(std::span<char>(slot_is_noise));

  std::set<IndexPair> taken;
  constexpr std::size_t kMaxTries = 1000;
  for (std::size_t slot = 0; slot < total_edges; ++slot) {
    const auto u = static_cast<Index>(slot / opts.social_degree);
    const std::size_t home = data.user_community[u];
    bool placed = false;
    for (std::size_t attempt = 0; attempt < kMaxTries && !placed; ++attempt) {
      Index v = 0;
      if (slot_is_noise[slot]) {
        v = static_cast<Index>(rng.uniform_index(n));
        if (data.user_community[v] == home) continue;
      } else {
        const std::vector<Index> mine(items_of[u].begin(), items_of[u].end());
        const Index item = mine[rng.uniform_index(mine.size())];
        v = users_of[item][rng.uniform_index(users_of[item].size())];
      }
      if (v == u || taken.contains({u, v}) || taken.contains({v, u})) continue;
      taken.insert({u, v});
      data.raw.social.push_back({"u" + std::to_string(u), "u" + std::to_string(v)});
      data.edge_is_noise.push_back(slot_is_noise[slot]);
      placed = true;
    }
    if (!placed) throw GenerationError("could not place social edge for user " + std::to_string(u));
  }
  return data;
}

void write_synthetic(const SyntheticData& data, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ostringstream ratings, trust, labels;
  for (const auto& r : data.raw.interactions) ratings << r.user << ' ' << r.item << ' ' << r.rating << '\n';
  for (std::size_t k = 0; k < data.raw.social.size(); ++k) {
    const auto& e = data.raw.social[k];
    trust << e.truster << ' ' << e.trustee << '\n';
    labels << e.truster << ' ' << e.trustee << ' ' << (data.edge_is_noise[k] ? "noise" : "intra") << '\n';
  }
  write_text(dir / "ratings.txt", ratings.str());
  write_text(dir / "trust.txt", trust.str());
  write_text(dir / "edge_labels.txt", labels.str());
}

}  // namespace idvt
