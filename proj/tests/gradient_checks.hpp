#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "idvt/model.hpp"
#include "idvt/train.hpp"
#include "support.hpp"

namespace idvt::testing {

enum class LossTerm { kBpr, kInter, kIntra, kDropout, kTotal };

inline const char* term_name(LossTerm t) {
  switch (t) {
    case LossTerm::kBpr: return "bpr";
    case LossTerm::kInter: return "inter";
    case LossTerm::kIntra: return "intra";
    case LossTerm::kDropout: return "dropout";
    case LossTerm::kTotal: return "total";
  }
  return "?";
}

struct ModelGradientReport {
  std::size_t n = 0, m = 0, d = 0;
  std::vector<std::pair<LossTerm, double>> errors;
  double worst() const {
    double w = 0;
    for (const auto& [t, e] : errors) w = std::max(w, e);
    return w;
  }
};

// Random model with n <= 8 users, m <= 8 items, d <= 4, every social and
// contrastive switch on, and larger-than-default initial values so that no
// gradient is trivially tiny. Checks each loss term and the weighted total.
inline ModelGradientReport model_gradient_errors(std::uint64_t seed) {
  Rng rng = seeded_rng(seed, "gradient-case");
  ModelGradientReport rep;
  rep.n = 3 + rng.uniform_index(6);
  rep.m = 3 + rng.uniform_index(6);
  rep.d = 1 + rng.uniform_index(4);

  const auto train = random_interactions(rep.n, rep.m, 0.3, rng);
  auto social = random_social(rep.n, 0.4, rng);
  if (social.nnz() == 0) social = SparseBinaryMatrix::from_pairs(rep.n, rep.n, std::vector<IndexPair>{{0, 1}, {1, 2}});

  Hyperparams h;
  h.dim = rep.d;
  h.layers = 1 + rng.uniform_index(2);
  h.tau = 0.5;
  h.threshold = 0.4;
  h.drop_ratio = 0.3;
  h.lambda1 = 0.7;
  h.lambda2 = 0.6;
  h.lambda3 = 0.05;
  h.beta = 0.3;
  h.init_bound = 0.8;
  h.seed = seed;
  h.negatives = rng.uniform() < 0.5 ? ContrastNegatives::kInBatch : ContrastNegatives::kAllUsers;
  h.similarity = rng.uniform() < 0.75 ? ContrastSimilarity::kCosine : ContrastSimilarity::kDot;

  // Users with every item cannot be sampled; keep the batch to the others.
  std::vector<Triple> batch;
  for (std::size_t u = 0; u < train.rows; ++u) {
    if (train.degree(u) >= train.cols) continue;
    for (Index pos : train.row(u)) {
      Index neg = 0;
      while (train.contains(u, neg)) ++neg;
      batch.push_back({static_cast<Index>(u), pos, neg});
    }
  }
  if (batch.empty()) {
    batch.push_back({0, train.row(0)[0], train.row(0)[0]});
  }

  IdvtModel model(train, &social, h, Variant::kFull);
  for (LossTerm term : {LossTerm::kBpr, LossTerm::kInter, LossTerm::kIntra, LossTerm::kDropout, LossTerm::kTotal}) {
    const double err = max_gradient_error(model.params(), [&](Tape& t) {
      LossTerms terms;
      Var total = model.batch_loss(t, batch, &terms);
      switch (term) {
        case LossTerm::kBpr: return terms.bpr;
        case LossTerm::kInter: return *terms.inter;
        case LossTerm::kIntra: return *terms.intra;
        case LossTerm::kDropout: return *terms.dropout;
        case LossTerm::kTotal: return total;
      }
      return total;
    });
    rep.errors.emplace_back(term, err);
  }
  return rep;
}

}  // namespace idvt::testing
