#include "idvt/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>

#include "idvt/error.hpp"

namespace idvt {

std::vector<Triple> sample_negatives(const SparseBinaryMatrix& train, Rng& rng) {
  std::vector<Triple> triples;
  triples.reserve(train.nnz());
  for (std::size_t u = 0; u < train.rows; ++u) {
    if (train.degree(u) == 0) continue;
    if (train.degree(u) >= train.cols)
      throw SamplingError("user " + std::to_string(u) + " interacted with every item");
    for (Index pos : train.row(u)) {
      Index neg = 0;
      do {
        neg = static_cast<Index>(rng.uniform_index(train.cols));
      } while (train.contains(u, neg));
      triples.push_back({static_cast<Index>(u), pos, neg});
    }
  }
  rng.shuffle(std::span<Triple>(triples));
  return triples;
}

std::vector<Triple> sample_negatives(const SparseBinaryMatrix& train, std::uint64_t epoch_seed) {
  Rng rng = seeded_rng(epoch_seed, "sampling");
  return sample_negatives(train, rng);
}

EpochStats train_epoch(IdvtModel& model, const SparseBinaryMatrix& train, std::size_t epoch) {
  model.refresh_social_graphs();
  const Hyperparams& h = model.hyper();
  const auto triples = sample_negatives(train, h.seed ^ splitmix64(epoch));

  EpochStats stats;
  stats.epoch = epoch;
  stats.removal_ratio = model.denoised().removal_ratio;
  for (std::size_t begin = 0; begin < triples.size(); begin += h.batch_size) {
    const std::size_t end = std::min(triples.size(), begin + h.batch_size);
    double total = 0.0;
    const LossValues v = model.train_step(std::span(triples).subspan(begin, end - begin), &total);
    stats.mean.bpr += v.bpr;
    stats.mean.inter += v.inter;
    stats.mean.intra += v.intra;
    stats.mean.dropout += v.dropout;
    stats.mean.reg += v.reg;
    stats.total += total;
    ++stats.batches;
  }
  if (stats.batches > 0) {
    const double inv = 1.0 / static_cast<double>(stats.batches);
    stats.mean.bpr *= inv;
    stats.mean.inter *= inv;
    stats.mean.intra *= inv;
    stats.mean.dropout *= inv;
    stats.mean.reg *= inv;
    stats.total *= inv;
  }
  return stats;
}

// ---------------------------------------------------------------------------

namespace {

bool ranks_before(double score_a, Index a, double score_b, Index b) {
  if (score_a != score_b) return score_a > score_b;
  return a < b;
}

std::vector<Index> candidates(std::size_t n_items, std::span<const Index> excluded) {
  std::vector<Index> out;
  out.reserve(n_items);
  std::size_t e = 0;
  for (Index i = 0; i < n_items; ++i) {
    while (e < excluded.size() && excluded[e] < i) ++e;
    if (e < excluded.size() && excluded[e] == i) continue;
    out.push_back(i);
  }
  return out;
}

std::vector<double> item_scores(const Matrix& user_emb, const Matrix& item_emb, Index user) {
  if (user_emb.cols != item_emb.cols) throw DimensionError("item_scores: embedding dims differ");
  std::vector<double> scores(item_emb.rows);
  auto u = user_emb.row(user);
  for (std::size_t i = 0; i < item_emb.rows; ++i) scores[i] = predict(u, item_emb.row(i));
  return scores;
}

}  // namespace

std::vector<Index> rank_items(const Matrix& user_emb, const Matrix& item_emb, Index user,
                              std::span<const Index> excluded) {
  const auto scores = item_scores(user_emb, item_emb, user);
  auto order = candidates(item_emb.rows, excluded);
  std::sort(order.begin(), order.end(),
            [&scores](Index a, Index b) { return ranks_before(scores[a], a, scores[b], b); });
  return order;
}

std::vector<Index> top_k_items(std::span<const double> scores, std::span<const Index> excluded, std::size_t k) {
  auto order = candidates(scores.size(), excluded);
  const std::size_t take = std::min(k, order.size());
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take), order.end(),
                    [&scores](Index a, Index b) { return ranks_before(scores[a], a, scores[b], b); });
  order.resize(take);
  return order;
}

UserMetrics score_user(std::span<const Index> top, std::span<const Index> relevant, std::size_t k) {
  UserMetrics m;
  m.relevant = relevant.size();
  double dcg = 0.0;
  for (std::size_t r = 0; r < top.size() && r < k; ++r) {
    if (std::binary_search(relevant.begin(), relevant.end(), top[r])) {
      ++m.hits;
      dcg += 1.0 / std::log2(static_cast<double>(r) + 2.0);
    }
  }
  double idcg = 0.0;
  for (std::size_t r = 0; r < std::min(relevant.size(), k); ++r) idcg += 1.0 / std::log2(static_cast<double>(r) + 2.0);
  m.precision = static_cast<double>(m.hits) / static_cast<double>(k);
  m.recall = relevant.empty() ? 0.0 : static_cast<double>(m.hits) / static_cast<double>(relevant.size());
  m.ndcg = idcg > 0.0 ? dcg / idcg : 0.0;
  return m;
}

MetricsReport evaluate(const Matrix& user_emb, const Matrix& item_emb, const SparseBinaryMatrix& exclude,
                       const SparseBinaryMatrix& test, const EvalOptions& opts) {
  if (opts.k < 1) throw ConfigError("evaluate: k must be >= 1");
  if (test.rows != user_emb.rows || test.cols != item_emb.rows || exclude.rows != test.rows ||
      exclude.cols != test.cols)
    throw DimensionError("evaluate: matrices and embeddings disagree");

  const std::size_t n = test.rows;
  std::vector<std::optional<UserMetrics>> slots(n);
  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t u = begin; u < end; ++u) {
      if (test.degree(u) == 0) continue;
      const auto scores = item_scores(user_emb, item_emb, static_cast<Index>(u));
      const std::span<const Index> excluded =
          opts.exclude_train ? exclude.row(u) : std::span<const Index>{};
      const auto top = top_k_items(scores, excluded, opts.k);
      UserMetrics m = score_user(top, test.row(u), opts.k);
      m.user = static_cast<Index>(u);
      slots[u] = m;
    }
  };
  const std::size_t threads = std::clamp<std::size_t>(opts.threads, 1, std::max<std::size_t>(n, 1));
  if (threads == 1) {
    work(0, n);
  } else {
    std::vector<std::jthread> pool;
    const std::size_t chunk = (n + threads - 1) / threads;
    for (std::size_t t = 0; t < threads; ++t) {
      const std::size_t begin = t * chunk, end = std::min(n, begin + chunk);
      if (begin < end) pool.emplace_back(work, begin, end);
    }
  }

  MetricsReport rep;
  rep.k = opts.k;
  std::size_t total_hits = 0, total_relevant = 0, users_hit = 0;
  for (const auto& slot : slots) {
    if (!slot) {
      ++rep.skipped_users;
      continue;
    }
    rep.per_user.push_back(*slot);
    rep.precision += slot->precision;
    rep.recall += slot->recall;
    rep.ndcg += slot->ndcg;
    total_hits += slot->hits;
    total_relevant += slot->relevant;
    if (slot->hits > 0) ++users_hit;
  }
  rep.evaluated_users = rep.per_user.size();
  if (rep.evaluated_users > 0) {
    const double inv = 1.0 / static_cast<double>(rep.evaluated_users);
    rep.precision *= inv;
    rep.recall *= inv;
    rep.ndcg *= inv;
    rep.hit_ratio = opts.hit_mode == HitRatioMode::kPooled
                        ? static_cast<double>(total_hits) / static_cast<double>(total_relevant)
                        : static_cast<double>(users_hit) * inv;
  }
  return rep;
}

// ---------------------------------------------------------------------------

TrainResult train_and_evaluate(const Dataset& ds, const TrainOptions& opts, const EpochCallback& on_epoch) {
  opts.hyper.validate();
  if (!ds.is_split()) throw ContractError("train_and_evaluate: dataset has not been split");
  if (!(opts.val_fraction >= 0.0 && opts.val_fraction < 1.0))
    throw ConfigError("val_fraction must lie in [0, 1)");

  HoldOut fit;
  if (opts.val_fraction > 0.0) {
    fit = hold_out(ds.train_pairs, ds.n_users, opts.val_fraction, opts.hyper.seed);
  } else {
    fit.kept = ds.train_pairs;
  }
  const bool validate = !fit.held_out.empty();
  const auto fit_matrix = SparseBinaryMatrix::from_pairs(ds.n_users, ds.n_items, fit.kept);
  const auto val_matrix = SparseBinaryMatrix::from_pairs(ds.n_users, ds.n_items, fit.held_out);

  std::optional<SparseBinaryMatrix> social;
  if (uses_social(opts.variant)) social = build_social_matrix(ds);
  IdvtModel model(fit_matrix, social ? &*social : nullptr, opts.hyper, opts.variant);

  TrainResult result;
  ParameterSet best = model.params();
  double best_ndcg = -std::numeric_limits<double>::infinity();
  std::size_t since_best = 0;
  for (std::size_t epoch = 1; epoch <= opts.hyper.epochs; ++epoch) {
    EpochStats stats = train_epoch(model, fit_matrix, epoch);
    bool stop = false;
    if (validate) {
      const auto emb = model.inference_embeddings();
      const double ndcg = evaluate(emb.users, emb.items, fit_matrix, val_matrix, opts.eval).ndcg;
      stats.validation_ndcg = ndcg;
      if (ndcg > best_ndcg) {
        best_ndcg = ndcg;
        best = model.params();
        result.best_epoch = epoch;
        since_best = 0;
      } else if (++since_best >= opts.patience) {
        stop = true;
      }
    } else {
      result.best_epoch = epoch;
    }
    result.history.push_back(stats);
    if (on_epoch) on_epoch(stats);
    if (stop) break;
  }
  if (validate) model.params() = best;

  const auto emb = model.inference_embeddings();
  const auto train_matrix = SparseBinaryMatrix::from_pairs(ds.n_users, ds.n_items, ds.train_pairs);
  const auto test_matrix = SparseBinaryMatrix::from_pairs(ds.n_users, ds.n_items, ds.test_pairs);
  result.test_report = evaluate(emb.users, emb.items, train_matrix, test_matrix, opts.eval);
  result.test_report.seed = opts.hyper.seed;
  result.test_report.epoch = result.best_epoch;
  result.test_report.variant = std::string(to_string(opts.variant));
  if (social) {
    result.denoised = denoise_graph(*social, model.params()[IdvtModel::kUserEmb].value, model.hyper().threshold);
  }
  result.social_edges_read = model.social_edges_read();
  result.params = model.params();
  return result;
}

MetricsReport run_variant(Variant variant, const Dataset& ds, TrainOptions opts) {
  opts.variant = variant;
  return train_and_evaluate(ds, opts).test_report;
}

}  // namespace idvt
