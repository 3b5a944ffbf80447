#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "idvt/dataset.hpp"

namespace idvt {

// Planted-noise social recommendation data. Users and items are split into
// contiguous community blocks and users only interact inside their own
// block. A `noise_fraction` share of the social edges crosses communities
// (those pairs share no item); every other edge joins two users of the same
// community who share at least one item. No edge is reciprocated, so the
// unordered-pair noise ratio equals the planted fraction up to rounding.
struct SyntheticOptions {
  std::size_t users = 400;
  std::size_t items = 600;
  std::size_t communities = 4;
  double noise_fraction = 0.5;
  std::uint64_t seed = 1;
  std::size_t items_per_user = 10;  // minimum interactions per user
  std::size_t social_degree = 5;    // out-edges per user
};

struct SyntheticData {
  RawRecords raw;
  std::vector<std::size_t> user_community;
  std::vector<std::size_t> item_community;
  std::vector<bool> edge_is_noise;  // aligned with raw.social
};

// Throws GenerationError when the sizes cannot satisfy the 5-core.
SyntheticData make_synthetic(const SyntheticOptions& opts);

// Writes ratings.txt, trust.txt and edge_labels.txt (`u v intra|noise`).
void write_synthetic(const SyntheticData& data, const std::filesystem::path& dir);

}  // namespace idvt
