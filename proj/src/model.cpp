#include "idvt/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "idvt/error.hpp"

namespace idvt {

std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::kFull: return "full";
    case Variant::kNoLocalView: return "no_LV";
    case Variant::kNoDropoutView: return "no_DV";
    case Variant::kNoBoth: return "no_both";
    case Variant::kLightGcn: return "lightgcn_baseline";
    case Variant::kBprMf: return "bpr_mf_baseline";
  }
  return "unknown";
}

Variant parse_variant(std::string_view name) {
  for (Variant v : {Variant::kFull, Variant::kNoLocalView, Variant::kNoDropoutView, Variant::kNoBoth,
                    Variant::kLightGcn, Variant::kBprMf}) {
    if (to_string(v) == name) return v;
  }
  throw ConfigError("unknown variant '" + std::string(name) + "'");
}

bool uses_social(Variant v) { return v != Variant::kLightGcn && v != Variant::kBprMf; }

void Hyperparams::validate() const {
  if (dim < 1) throw ConfigError("dim must be >= 1");
  if (layers < 1) throw ConfigError("layers must be >= 1");
  if (!(tau > 0.0)) throw ConfigError("tau must be > 0");
  if (!std::isfinite(threshold) || threshold < 0.0) throw ConfigError("threshold must be >= 0");
  if (!(drop_ratio >= 0.0 && drop_ratio <= 1.0)) throw ConfigError("drop_ratio must lie in [0, 1]");
  if (!(lambda1 >= 0.0)) throw ConfigError("lambda1 must be >= 0");
  if (!(lambda2 >= 0.0)) throw ConfigError("lambda2 must be >= 0");
  if (!(lambda3 >= 0.0)) throw ConfigError("lambda3 must be >= 0");
  if (!(beta >= 0.0 && beta <= 1.0)) throw ConfigError("beta must lie in [0, 1]");
  if (!(lr >= 0.0) || !std::isfinite(lr)) throw ConfigError("lr must be >= 0");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (top_k < 1) throw ConfigError("top_k must be >= 1");
  if (!(init_bound > 0.0)) throw ConfigError("init_bound must be > 0");
}

Hyperparams effective_hyperparams(const Hyperparams& h, Variant v) {
  Hyperparams e = h;
  switch (v) {
    case Variant::kFull: break;
    case Variant::kNoLocalView: e.lambda1 = 0.0; break;
    case Variant::kNoDropoutView: e.lambda2 = 0.0; break;
    case Variant::kNoBoth:
    case Variant::kLightGcn:
    case Variant::kBprMf:
      e.lambda1 = 0.0;
      e.lambda2 = 0.0;
      break;
  }
  return e;
}

GatOutput gat_encode(Var user_emb, const SparseBinaryMatrix& neighbors, Var w, Var attn,
                     double negative_slope) {
  const std::size_t d = user_emb.cols();
  if (w.rows() != d || w.cols() != d) throw DimensionError("gat_encode: W must be d x d");
  if (attn.rows() != 2 * d || attn.cols() != 1) throw DimensionError("gat_encode: attention must be 2d x 1");
  if (neighbors.rows != user_emb.rows() || neighbors.cols != user_emb.rows())
    throw DimensionError("gat_encode: neighbor pattern does not match users");

  Var h = ad::matmul(user_emb, ad::transpose(w));
  Var src_score = ad::matmul(h, ad::slice_rows(attn, 0, d));
  Var dst_score = ad::matmul(h, ad::slice_rows(attn, d, 2 * d));

  std::vector<Index> src(neighbors.nnz());
  for (std::size_t r = 0; r < neighbors.rows; ++r)
    for (std::size_t k = neighbors.row_offsets[r]; k < neighbors.row_offsets[r + 1]; ++k)
      src[k] = static_cast<Index>(r);

  Var logits = ad::leaky_relu(
      ad::add(ad::gather_rows(src_score, src), ad::gather_rows(dst_score, neighbors.col_indices)),
      negative_slope);
  Var alpha = ad::segment_softmax(logits, neighbors.row_offsets);
  return {ad::weighted_spmm(neighbors, alpha, h), alpha};
}

Var fuse(Var social, Var user_emb) { return ad::add(social, user_emb); }

std::pair<Var, Var> lightgcn_propagate(Var users, Var items, const NormalizedAdjacency& adj,
                                       std::size_t layers) {
  if (layers < 1) throw ConfigError("lightgcn_propagate: layers must be >= 1");
  if (adj.user_item.rows != users.rows() || adj.user_item.cols != items.rows())
    throw DimensionError("lightgcn_propagate: adjacency does not match embeddings");
  Var u = users, i = items;
  Var u_sum = users, i_sum = items;
  for (std::size_t k = 0; k < layers; ++k) {
    Var next_u = ad::spmm(adj.user_item, i);
    Var next_i = ad::spmm(adj.item_user, u);
    u = next_u;
    i = next_i;
    u_sum = ad::add(u_sum, u);
    i_sum = ad::add(i_sum, i);
  }
  const double inv = 1.0 / static_cast<double>(layers + 1);
  return {ad::scale(u_sum, inv), ad::scale(i_sum, inv)};
}

GlobalEncoding global_encode(Var user_emb, Var item_emb, const SparseBinaryMatrix& neighbors,
                             const NormalizedAdjacency& adj, Var gat_w, Var gat_attn,
                             std::size_t layers, double negative_slope) {
  Var social = gat_encode(user_emb, neighbors, gat_w, gat_attn, negative_slope).embeddings;
  Var fused = fuse(social, user_emb);
  auto [fused_users, items] = lightgcn_propagate(fused, item_emb, adj, layers);
  return {fused_users, items, social};
}

GateOutput gate_aggregate(Var fused_global, Var social, Var w1, Var w2) {
  Var g = ad::sigmoid(ad::add(ad::matmul(fused_global, ad::transpose(w1)),
                              ad::matmul(social, ad::transpose(w2))));
  Var one_minus_g = ad::add_scalar(ad::scale(g, -1.0), 1.0);
  return {ad::add(ad::mul(g, fused_global), ad::mul(one_minus_g, social)), g};
}

Var local_encode(Var user_emb, Var item_emb, const NormalizedAdjacency& adj, std::size_t layers) {
  return lightgcn_propagate(user_emb, item_emb, adj, layers).first;
}

Var infonce_inter(Var a, Var b, double tau, std::span<const Index> batch, const ContrastOptions& opts) {
  if (!(tau > 0.0)) throw ConfigError("infonce: tau must be > 0");
  if (batch.empty()) throw ContractError("infonce: empty batch");
  if (!a.value().same_shape(b.value())) throw DimensionError("infonce: views differ in shape");
  const bool cosine = opts.similarity == ContrastSimilarity::kCosine;
  auto prep = [cosine](Var x) { return cosine ? ad::row_l2_normalize(x) : x; };

  Var anchors = prep(ad::gather_rows(a, batch));
  Var positives = prep(ad::gather_rows(b, batch));
  Var negatives = opts.negatives == ContrastNegatives::kInBatch ? positives : prep(b);
  const double inv_tau = 1.0 / tau;
  Var logits = ad::scale(ad::matmul(anchors, ad::transpose(negatives)), inv_tau);
  Var pos = ad::scale(ad::row_sum(ad::mul(anchors, positives)), inv_tau);
  return ad::sum(ad::sub(ad::row_logsumexp(logits), pos));
}

Var infonce_intra(Var e, double tau, std::span<const Index> batch, const ContrastOptions& opts) {
  return infonce_inter(e, e, tau, batch, opts);
}

Var infonce_dropout(Var view1, Var view2, double tau, std::span<const Index> batch,
                    const ContrastOptions& opts) {
  return infonce_inter(view1, view2, tau, batch, opts);
}

double predict(std::span<const double> user, std::span<const double> item) {
  if (user.size() != item.size()) throw DimensionError("predict: dimension mismatch");
  return dot(user, item);
}

Var bpr_loss(Var pos_scores, Var neg_scores) {
  if (pos_scores.rows() == 0) throw ContractError("bpr_loss: empty batch");
  return ad::scale(ad::sum(ad::log_sigmoid(ad::sub(pos_scores, neg_scores))), -1.0);
}

namespace {

struct LossWeights {
  double inter, intra, dropout, reg;
};

LossWeights weights_of(const Hyperparams& h) {
  return {h.lambda1 * h.beta, h.lambda1 * (1.0 - h.beta), h.lambda2, h.lambda3};
}

}  // namespace

Var total_loss(const LossTerms& terms, const Hyperparams& h) {
  const LossWeights w = weights_of(h);
  Var total = terms.bpr;
  auto add_term = [&total](const std::optional<Var>& term, double weight, const char* name) {
    if (weight == 0.0) return;
    if (!term) throw ContractError(std::string("total_loss: missing weighted term ") + name);
    total = ad::add(total, ad::scale(*term, weight));
  };
  add_term(terms.inter, w.inter, "inter");
  add_term(terms.intra, w.intra, "intra");
  add_term(terms.dropout, w.dropout, "dropout");
  add_term(terms.reg, w.reg, "reg");
  return total;
}

double total_loss(const LossValues& v, const Hyperparams& h) {
  const LossWeights w = weights_of(h);
  double total = v.bpr;
  if (w.inter != 0.0) total += w.inter * v.inter;
  if (w.intra != 0.0) total += w.intra * v.intra;
  if (w.dropout != 0.0) total += w.dropout * v.dropout;
  if (w.reg != 0.0) total += w.reg * v.reg;
  return total;
}

// ---------------------------------------------------------------------------

IdvtModel::IdvtModel(const SparseBinaryMatrix& train, const SparseBinaryMatrix* social,
                     const Hyperparams& h, Variant variant)
    : hyper_(effective_hyperparams(h, variant)),
      variant_(variant),
      n_users_(train.rows),
      n_items_(train.cols),
      adj_(symmetric_normalize(train, IsolatedNodes::kAllow)),
      social_(uses_social(variant) ? social : nullptr),
      dropout_rng_(seeded_rng(h.seed, "dropout")) {
  hyper_.validate();
  if (uses_social(variant_)) {
    if (social_ == nullptr) throw ConfigError("variant " + std::string(to_string(variant_)) + " needs a social graph");
    if (social_->rows != n_users_ || social_->cols != n_users_)
      throw DimensionError("social matrix does not match the user count");
  }
  const std::size_t d = hyper_.dim;
  Rng init = seeded_rng(hyper_.seed, "init");
  params_.add("user_embedding", uniform_init(n_users_, d, hyper_.init_bound, init));
  params_.add("item_embedding", uniform_init(n_items_, d, hyper_.init_bound, init));
  params_.add("gat_weight", uniform_init(d, d, hyper_.init_bound, init));
  params_.add("gat_attention", uniform_init(2 * d, 1, hyper_.init_bound, init));
  params_.add("gate_weight_1", uniform_init(d, d, hyper_.init_bound, init));
  params_.add("gate_weight_2", uniform_init(d, d, hyper_.init_bound, init));
  refresh_social_graphs();
}

IdvtModel::SocialView IdvtModel::make_view(const SparseBinaryMatrix& social) const {
  SocialView view;
  view.denoised = denoise_graph(social, params_[kUserEmb].value, hyper_.threshold);
  view.neighbors = with_self_loops(view.denoised.kept_matrix());
  return view;
}

void IdvtModel::refresh_social_graphs() {
  if (social_ == nullptr) return;
  social_edges_read_ += social_->nnz();
  SocialView main = make_view(*social_);
  denoised_ = std::move(main.denoised);
  main_neighbors_ = std::move(main.neighbors);
  if (hyper_.lambda2 > 0.0) {
    for (auto& view : dropout_neighbors_) {
      view = make_view(edge_dropout(*social_, hyper_.drop_ratio, dropout_rng_)).neighbors;
    }
  }
}

std::pair<Var, Var> IdvtModel::encode(Var users, Var items, const SparseBinaryMatrix* neighbors,
                                      Var gat_w, Var gat_attn, Var w1, Var w2) const {
  switch (variant_) {
    case Variant::kBprMf: return {users, items};
    case Variant::kLightGcn: return lightgcn_propagate(users, items, adj_, hyper_.layers);
    default: break;
  }
  GlobalEncoding g = global_encode(users, items, *neighbors, adj_, gat_w, gat_attn, hyper_.layers,
                                   hyper_.leaky_slope);
  return {gate_aggregate(g.fused_users, g.social, w1, w2).users, g.items};
}

Var IdvtModel::batch_loss(Tape& tape, std::span<const Triple> batch, LossTerms* out_terms) {
  if (batch.empty()) throw ContractError("batch_loss: empty batch");
  const bool social = uses_social(variant_);
  Var eu = tape.param(params_[kUserEmb]);
  Var ei = tape.param(params_[kItemEmb]);
  Var gat_w, gat_attn, w1, w2;
  if (social) {
    gat_w = tape.param(params_[kGatW]);
    gat_attn = tape.param(params_[kGatAttn]);
    w1 = tape.param(params_[kGateW1]);
    w2 = tape.param(params_[kGateW2]);
  }

  auto [users, items] = encode(eu, ei, &main_neighbors_, gat_w, gat_attn, w1, w2);

  std::vector<Index> u_idx, p_idx, n_idx;
  u_idx.reserve(batch.size());
  p_idx.reserve(batch.size());
  n_idx.reserve(batch.size());
  for (const Triple& t : batch) {
    u_idx.push_back(t.user);
    p_idx.push_back(t.pos);
    n_idx.push_back(t.neg);
  }
  Var batch_users = ad::gather_rows(users, u_idx);
  Var pos = ad::row_sum(ad::mul(batch_users, ad::gather_rows(items, p_idx)));
  Var neg = ad::row_sum(ad::mul(batch_users, ad::gather_rows(items, n_idx)));

  LossTerms terms;
  terms.bpr = bpr_loss(pos, neg);

  std::vector<Index> unique_users = u_idx;
  std::sort(unique_users.begin(), unique_users.end());
  unique_users.erase(std::unique(unique_users.begin(), unique_users.end()), unique_users.end());

  const ContrastOptions copts{hyper_.negatives, hyper_.similarity};
  if (social && hyper_.lambda1 > 0.0) {
    if (hyper_.beta > 0.0) {
      Var local = local_encode(eu, ei, adj_, hyper_.layers);
      terms.inter = infonce_inter(users, local, hyper_.tau, unique_users, copts);
    }
    if (hyper_.beta < 1.0) terms.intra = infonce_intra(users, hyper_.tau, unique_users, copts);
  }
  if (social && hyper_.lambda2 > 0.0) {
    Var view1 = encode(eu, ei, &dropout_neighbors_[0], gat_w, gat_attn, w1, w2).first;
    Var view2 = encode(eu, ei, &dropout_neighbors_[1], gat_w, gat_attn, w1, w2).first;
    terms.dropout = infonce_dropout(view1, view2, hyper_.tau, unique_users, copts);
  }
  if (hyper_.lambda3 > 0.0) {
    std::vector<Index> unique_items = p_idx;
    unique_items.insert(unique_items.end(), n_idx.begin(), n_idx.end());
    std::sort(unique_items.begin(), unique_items.end());
    unique_items.erase(std::unique(unique_items.begin(), unique_items.end()), unique_items.end());
    auto sq = [](Var x) { return ad::sum(ad::mul(x, x)); };
    Var reg = ad::add(sq(ad::gather_rows(eu, unique_users)), sq(ad::gather_rows(ei, unique_items)));
    if (social) {
      reg = ad::add(reg, ad::add(ad::add(sq(gat_w), sq(gat_attn)), ad::add(sq(w1), sq(w2))));
    }
    terms.reg = reg;
  }

  Var total = total_loss(terms, hyper_);
  if (out_terms != nullptr) *out_terms = terms;
  return total;
}

LossValues IdvtModel::train_step(std::span<const Triple> batch, double* total_out) {
  Tape tape;
  LossTerms terms;
  Var total = batch_loss(tape, batch, &terms);
  LossValues values;
  values.bpr = terms.bpr.item();
  if (terms.inter) values.inter = terms.inter->item();
  if (terms.intra) values.intra = terms.intra->item();
  if (terms.dropout) values.dropout = terms.dropout->item();
  if (terms.reg) values.reg = terms.reg->item();
  const double total_value = total.item();
  if (!std::isfinite(total_value)) {
    throw DivergenceError("non-finite loss: bpr=" + std::to_string(values.bpr) +
                          " inter=" + std::to_string(values.inter) + " intra=" + std::to_string(values.intra) +
                          " dropout=" + std::to_string(values.dropout) + " reg=" + std::to_string(values.reg));
  }
  tape.backward(total);
  adam_step(params_, AdamOptions{hyper_.lr, 0.9, 0.999, 1e-8});
  if (total_out != nullptr) *total_out = total_value;
  return values;
}

IdvtModel::Embeddings IdvtModel::inference_embeddings() const {
  Tape tape;
  Var eu = tape.constant(params_[kUserEmb].value);
  Var ei = tape.constant(params_[kItemEmb].value);
  SparseBinaryMatrix neighbors;
  Var gat_w, gat_attn, w1, w2;
  if (uses_social(variant_)) {
    neighbors = make_view(*social_).neighbors;
    gat_w = tape.constant(params_[kGatW].value);
    gat_attn = tape.constant(params_[kGatAttn].value);
    w1 = tape.constant(params_[kGateW1].value);
    w2 = tape.constant(params_[kGateW2].value);
  }
  auto [users, items] = encode(eu, ei, &neighbors, gat_w, gat_attn, w1, w2);
  return {users.value(), items.value()};
}

}  // namespace idvt
