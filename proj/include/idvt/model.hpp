#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "idvt/autodiff.hpp"
#include "idvt/denoise.hpp"
#include "idvt/graph.hpp"
#include "idvt/optim.hpp"

namespace idvt {

enum class Variant { kFull, kNoLocalView, kNoDropoutView, kNoBoth, kLightGcn, kBprMf };

std::string_view to_string(Variant v);
// Accepts full, no_LV, no_DV, no_both, lightgcn_baseline, bpr_mf_baseline.
Variant parse_variant(std::string_view name);
bool uses_social(Variant v);

enum class ContrastNegatives { kInBatch, kAllUsers };
enum class ContrastSimilarity { kCosine, kDot };

struct Hyperparams {
  std::size_t dim = 64;
  std::size_t layers = 2;
  double tau = 0.2;
  double threshold = 0.5;
  double drop_ratio = 0.2;
  double lambda1 = 0.01;
  double lambda2 = 0.01;
  double lambda3 = 1e-4;
  double beta = 0.5;
  double lr = 1e-3;
  std::size_t batch_size = 2048;
  std::size_t epochs = 100;
  std::size_t top_k = 5;
  std::uint64_t seed = 2024;
  double init_bound = 0.05;
  double leaky_slope = 0.2;
  ContrastNegatives negatives = ContrastNegatives::kInBatch;
  ContrastSimilarity similarity = ContrastSimilarity::kCosine;

  // Throws ConfigError on the first violated constraint.
  void validate() const;
};

// Applies the variant's switches (zeroed lambdas) to a copy of `h`.
Hyperparams effective_hyperparams(const Hyperparams& h, Variant v);

struct Triple {
  Index user = 0;
  Index pos = 0;
  Index neg = 0;
  friend bool operator==(const Triple&, const Triple&) = default;
};

// ---------------------------------------------------------------------------
// Differentiable building blocks. Sparse operands are referenced by the tape
// and must outlive its backward pass.

struct GatOutput {
  Var embeddings;  // n x d
  Var attention;   // nnz x 1, aligned with the neighbor pattern
};

// Single-head graph attention over `neighbors` (out-neighbors plus self-loop
// per row): logits LeakyReLU(a^T [W e_u || W e_v]) softmaxed per user,
// output sum_v alpha_uv W e_v. `attn` is a 2d x 1 column.
GatOutput gat_encode(Var user_emb, const SparseBinaryMatrix& neighbors, Var w, Var attn,
                     double negative_slope = 0.2);

Var fuse(Var social, Var user_emb);

// LightGCN: alternating normalized propagation for `layers` steps, output is
// the mean of layers 0..K for users and items.
std::pair<Var, Var> lightgcn_propagate(Var users, Var items, const NormalizedAdjacency& adj,
                                       std::size_t layers);

struct GlobalEncoding {
  Var fused_users;  // E^G_FU
  Var items;        // E^G_I
  Var social;       // E^SO
};

GlobalEncoding global_encode(Var user_emb, Var item_emb, const SparseBinaryMatrix& neighbors,
                             const NormalizedAdjacency& adj, Var gat_w, Var gat_attn,
                             std::size_t layers, double negative_slope = 0.2);

struct GateOutput {
  Var users;  // E^G_U
  Var gate;   // g, entries in (0, 1)
};

GateOutput gate_aggregate(Var fused_global, Var social, Var w1, Var w2);

Var local_encode(Var user_emb, Var item_emb, const NormalizedAdjacency& adj, std::size_t layers);

struct ContrastOptions {
  ContrastNegatives negatives = ContrastNegatives::kInBatch;
  ContrastSimilarity similarity = ContrastSimilarity::kCosine;
};

// sum_u -log( exp(s(a_u, b_u)/tau) / sum_v exp(s(a_u, b_v)/tau) ) over the
// batch (which must hold distinct users). Negatives v range over the batch
// or over all users. Throws ConfigError for tau <= 0.
Var infonce_inter(Var a, Var b, double tau, std::span<const Index> batch, const ContrastOptions& opts = {});
// Same-view form: positives are each user's own embedding.
Var infonce_intra(Var e, double tau, std::span<const Index> batch, const ContrastOptions& opts = {});
Var infonce_dropout(Var view1, Var view2, double tau, std::span<const Index> batch,
                    const ContrastOptions& opts = {});

double predict(std::span<const double> user, std::span<const double> item);

// sum -log sigma(pos - neg); pos and neg are k x 1 columns.
Var bpr_loss(Var pos_scores, Var neg_scores);

struct LossTerms {
  Var bpr;
  std::optional<Var> inter;
  std::optional<Var> intra;
  std::optional<Var> dropout;
  std::optional<Var> reg;
};

struct LossValues {
  double bpr = 0.0;
  double inter = 0.0;
  double intra = 0.0;
  double dropout = 0.0;
  double reg = 0.0;
};

// L = bpr + l1 (beta inter + (1 - beta) intra) + l2 dropout + l3 reg.
// Terms whose weight is zero may be absent; a weighted absent term throws
// ContractError.
Var total_loss(const LossTerms& terms, const Hyperparams& h);
double total_loss(const LossValues& values, const Hyperparams& h);

// ---------------------------------------------------------------------------

// Parameters, epoch-frozen social graphs and one optimization step of the
// joint objective for any variant.
class IdvtModel {
 public:
  static constexpr std::size_t kUserEmb = 0;
  static constexpr std::size_t kItemEmb = 1;
  static constexpr std::size_t kGatW = 2;
  static constexpr std::size_t kGatAttn = 3;
  static constexpr std::size_t kGateW1 = 4;
  static constexpr std::size_t kGateW2 = 5;

  // `social` is only read by variants that use it; pass nullptr otherwise.
  IdvtModel(const SparseBinaryMatrix& train, const SparseBinaryMatrix* social, const Hyperparams& h,
            Variant variant);

  const Hyperparams& hyper() const noexcept { return hyper_; }
  Variant variant() const noexcept { return variant_; }
  ParameterSet& params() noexcept { return params_; }
  const ParameterSet& params() const noexcept { return params_; }
  const NormalizedAdjacency& adjacency() const noexcept { return adj_; }

  // Re-denoises the social graph from the current user ID embeddings and
  // resamples the two dropout views. Call once per epoch.
  void refresh_social_graphs();

  const DenoisedSocialGraph& denoised() const noexcept { return denoised_; }
  // Social edges read from the input so far; stays 0 for social-free variants.
  std::size_t social_edges_read() const noexcept { return social_edges_read_; }

  // Records the forward pass of one batch on `tape`; returns the weighted
  // total and fills `terms`.
  Var batch_loss(Tape& tape, std::span<const Triple> batch, LossTerms* terms = nullptr);

  // Forward + backward + Adam. Throws DivergenceError on a non-finite loss.
  LossValues train_step(std::span<const Triple> batch, double* total = nullptr);

  struct Embeddings {
    Matrix users;
    Matrix items;
  };
  // Prediction embeddings, denoising from the current parameters.
  Embeddings inference_embeddings() const;

 private:
  struct SocialView {
    DenoisedSocialGraph denoised;
    SparseBinaryMatrix neighbors;  // kept edges plus self-loops
  };
  SocialView make_view(const SparseBinaryMatrix& social) const;
  // Prediction-side user/item representations for the variant.
  std::pair<Var, Var> encode(Var users, Var items, const SparseBinaryMatrix* neighbors, Var gat_w,
                             Var gat_attn, Var w1, Var w2) const;

  Hyperparams hyper_;
  Variant variant_;
  std::size_t n_users_;
  std::size_t n_items_;
  NormalizedAdjacency adj_;
  const SparseBinaryMatrix* social_ = nullptr;
  ParameterSet params_;
  Rng dropout_rng_;
  DenoisedSocialGraph denoised_;
  SparseBinaryMatrix main_neighbors_;
  SparseBinaryMatrix dropout_neighbors_[2];
  std::size_t social_edges_read_ = 0;
};

}  // namespace idvt
