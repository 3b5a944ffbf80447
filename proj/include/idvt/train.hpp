#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "idvt/dataset.hpp"
#include "idvt/model.hpp"

namespace idvt {

// One triple per training pair, negative drawn uniformly by rejection from
// the user's non-interacted items, in an order shuffled by `rng`.
// Throws SamplingError for a user who interacted with every item.
std::vector<Triple> sample_negatives(const SparseBinaryMatrix& train, Rng& rng);
std::vector<Triple> sample_negatives(const SparseBinaryMatrix& train, std::uint64_t epoch_seed);

struct EpochStats {
  std::size_t epoch = 0;
  std::size_t batches = 0;
  LossValues mean;          // per-batch means of each term
  double total = 0.0;       // per-batch mean of the weighted objective
  double removal_ratio = 0.0;
  std::optional<double> validation_ndcg;
};

// Refreshes the social graphs, samples negatives from the epoch's seed and
// runs one optimization step per batch.
EpochStats train_epoch(IdvtModel& model, const SparseBinaryMatrix& train, std::size_t epoch);

// ---------------------------------------------------------------------------

enum class HitRatioMode {
  kPooled,   // sum_u |L_u ∩ T_u| / sum_u |T_u|
  kUserHit,  // fraction of users with at least one hit
};

struct EvalOptions {
  std::size_t k = 5;
  bool exclude_train = true;
  HitRatioMode hit_mode = HitRatioMode::kPooled;
  std::size_t threads = 1;
};

struct UserMetrics {
  Index user = 0;
  std::size_t hits = 0;
  std::size_t relevant = 0;
  double precision = 0.0;
  double recall = 0.0;
  double ndcg = 0.0;
};

struct MetricsReport {
  std::size_t k = 0;
  double hit_ratio = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double ndcg = 0.0;
  std::size_t evaluated_users = 0;
  std::size_t skipped_users = 0;
  std::vector<UserMetrics> per_user;
  std::uint64_t seed = 0;
  std::size_t epoch = 0;
  std::string variant;
  std::string config_digest;
};

// Scores every item for `user`, drops `excluded` (sorted), and orders by
// descending score with ties broken by ascending item index.
std::vector<Index> rank_items(const Matrix& user_emb, const Matrix& item_emb, Index user,
                              std::span<const Index> excluded);

// Top `k` of rank_items without sorting the whole list.
std::vector<Index> top_k_items(std::span<const double> scores, std::span<const Index> excluded,
                               std::size_t k);

// Metrics of one ranked list against sorted relevant items.
UserMetrics score_user(std::span<const Index> top, std::span<const Index> relevant, std::size_t k);

// Full-ranking evaluation. Users without test items are skipped and counted.
// Per-user work may run on several threads; reductions run in user order so
// the result does not depend on the thread count.
MetricsReport evaluate(const Matrix& user_emb, const Matrix& item_emb, const SparseBinaryMatrix& exclude,
                       const SparseBinaryMatrix& test, const EvalOptions& opts);

// ---------------------------------------------------------------------------

struct TrainOptions {
  Hyperparams hyper;
  Variant variant = Variant::kFull;
  // Fraction of each user's train pairs held out for early stopping; 0
  // trains for exactly hyper.epochs epochs and keeps the final parameters.
  double val_fraction = 0.1;
  std::size_t patience = 20;
  EvalOptions eval;
};

struct TrainResult {
  ParameterSet params;  // best (or final) parameters
  std::size_t best_epoch = 0;
  std::vector<EpochStats> history;
  MetricsReport test_report;
  DenoisedSocialGraph denoised;  // denoising from the returned parameters
  std::size_t social_edges_read = 0;
};

using EpochCallback = std::function<void(const EpochStats&)>;

// Trains `opts.variant` on a split dataset and evaluates the kept
// parameters on its test pairs.
TrainResult train_and_evaluate(const Dataset& ds, const TrainOptions& opts, const EpochCallback& on_epoch = {});

MetricsReport run_variant(Variant variant, const Dataset& ds, TrainOptions opts);

}  // namespace idvt
