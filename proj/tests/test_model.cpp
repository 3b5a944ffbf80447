#include <gtest/gtest.h>

#include <cmath>

#include "idvt/error.hpp"
#include "idvt/model.hpp"
#include "gradient_checks.hpp"
#include "support.hpp"

using namespace idvt;
using idvt::testing::random_matrix;

namespace {

const double kLn2 = std::log(2.0);
// -log(e / (e + 1))
const double kOrthogonalTerm = std::log1p(std::exp(-1.0));

SparseBinaryMatrix pairs_matrix(std::size_t rows, std::size_t cols, std::vector<IndexPair> pairs) {
  return SparseBinaryMatrix::from_pairs(rows, cols, pairs);
}

void expect_matrix_near(const Matrix& a, const Matrix& b, double tol) {
  ASSERT_TRUE(a.same_shape(b));
  EXPECT_LE(max_abs_diff(a, b), tol);
}

}  // namespace

TEST(Variant, NamesRoundTrip) {
  for (Variant v : {Variant::kFull, Variant::kNoLocalView, Variant::kNoDropoutView, Variant::kNoBoth,
                    Variant::kLightGcn, Variant::kBprMf})
    EXPECT_EQ(parse_variant(to_string(v)), v);
  EXPECT_EQ(to_string(Variant::kNoBoth), "no_both");
  EXPECT_THROW(parse_variant("nope"), ConfigError);
  EXPECT_FALSE(uses_social(Variant::kLightGcn));
  EXPECT_TRUE(uses_social(Variant::kNoBoth));
}

TEST(Variant, SwitchesOnlyTouchLambdas) {
  Hyperparams h;
  const Hyperparams nb = effective_hyperparams(h, Variant::kNoBoth);
  EXPECT_EQ(nb.lambda1, 0.0);
  EXPECT_EQ(nb.lambda2, 0.0);
  EXPECT_EQ(nb.lambda3, h.lambda3);
  EXPECT_EQ(effective_hyperparams(h, Variant::kNoLocalView).lambda2, h.lambda2);
  EXPECT_EQ(effective_hyperparams(h, Variant::kNoDropoutView).lambda1, h.lambda1);
}

// ---------------------------------------------------------------------------

TEST(Gat, SelfLoopOnlyGivesProjection) {
  Rng rng(1);
  const Matrix e = random_matrix(3, 2, rng), w = random_matrix(2, 2, rng), a = random_matrix(4, 1, rng);
  Tape t;
  const auto out = gat_encode(t.constant(e), with_self_loops(pairs_matrix(3, 3, {})), t.constant(w), t.constant(a));
  expect_matrix_near(out.embeddings.value(), matmul(e, transposed(w)), 1e-15);
  for (double alpha : out.attention.value().data) EXPECT_EQ(alpha, 1.0);
}

TEST(Gat, EqualLogitsSplitEvenly) {
  // Users 1 and 2 have identical embeddings, so user 0's two non-self
  // neighbors receive the same logit.
  const Matrix e = Matrix::from_rows({{0.5, -0.2}, {0.3, 0.7}, {0.3, 0.7}});
  const Matrix w = Matrix::from_rows({{1, 0.5}, {-0.3, 2}});
  const Matrix a = Matrix::column({0.4, -0.1, 0.9, 0.2});
  Tape t;
  const auto nb = pairs_matrix(3, 3, {{0, 1}, {0, 2}});
  const auto out = gat_encode(t.constant(e), nb, t.constant(w), t.constant(a));
  EXPECT_DOUBLE_EQ(out.attention.value()(0, 0), 0.5);
  EXPECT_DOUBLE_EQ(out.attention.value()(1, 0), 0.5);
}

TEST(Gat, ZeroAttentionVectorAverages) {
  Rng rng(2);
  const Matrix e = random_matrix(3, 2, rng), w = random_matrix(2, 2, rng);
  Tape t;
  const auto nb = with_self_loops(pairs_matrix(3, 3, {{0, 1}, {0, 2}, {1, 2}}));
  const auto out = gat_encode(t.constant(e), nb, t.constant(w), t.constant(Matrix(4, 1)));
  const Matrix h = matmul(e, transposed(w));
  for (std::size_t c = 0; c < 2; ++c) {
    EXPECT_NEAR(out.embeddings.value()(0, c), (h(0, c) + h(1, c) + h(2, c)) / 3.0, 1e-15);
    EXPECT_NEAR(out.embeddings.value()(1, c), (h(1, c) + h(2, c)) / 2.0, 1e-15);
    EXPECT_NEAR(out.embeddings.value()(2, c), h(2, c), 1e-15);
  }
}

TEST(Fuse, ElementwiseSum) {
  Rng rng(3);
  const Matrix a = random_matrix(2, 2, rng), b = random_matrix(2, 2, rng);
  Tape t;
  const Matrix sum = fuse(t.constant(a), t.constant(b)).value();
  for (std::size_t k = 0; k < 4; ++k) EXPECT_EQ(sum.data[k], a.data[k] + b.data[k]);
  EXPECT_EQ(fuse(t.constant(Matrix(2, 2)), t.constant(b)).value().data, b.data);
  Matrix neg = b;
  for (double& v : neg.data) v = -v;
  for (double v : fuse(t.constant(neg), t.constant(b)).value().data) EXPECT_EQ(v, 0.0);
}

// ---------------------------------------------------------------------------

TEST(LightGcn, SinglePairOneLayer) {
  const auto adj = symmetric_normalize(pairs_matrix(1, 1, {{0, 0}}));
  const Matrix eu = Matrix::from_rows({{1.0, 2.0}}), ei = Matrix::from_rows({{3.0, -1.0}});
  Tape t;
  auto [u, i] = lightgcn_propagate(t.constant(eu), t.constant(ei), adj, 1);
  EXPECT_EQ(u.value().data, (std::vector<double>{2.0, 0.5}));
  EXPECT_EQ(i.value().data, (std::vector<double>{2.0, 0.5}));
  EXPECT_EQ(local_encode(t.constant(eu), t.constant(ei), adj, 1).value().data, (std::vector<double>{2.0, 0.5}));
}

TEST(LightGcn, Linear) {
  Rng rng(4);
  const auto adj = symmetric_normalize(pairs_matrix(3, 3, {{0, 0}, {0, 1}, {1, 1}, {1, 2}, {2, 2}}));
  const Matrix eu = random_matrix(3, 2, rng), ei = random_matrix(3, 2, rng);
  Matrix eu2 = eu, ei2 = ei;
  for (double& v : eu2.data) v *= 2;
  for (double& v : ei2.data) v *= 2;
  Tape t;
  const auto [u, i] = lightgcn_propagate(t.constant(eu), t.constant(ei), adj, 2);
  const auto [u2, i2] = lightgcn_propagate(t.constant(eu2), t.constant(ei2), adj, 2);
  for (std::size_t k = 0; k < 6; ++k) {
    EXPECT_NEAR(u2.value().data[k], 2 * u.value().data[k], 1e-15);
    EXPECT_NEAR(i2.value().data[k], 2 * i.value().data[k], 1e-15);
  }
}

TEST(LightGcn, ToyFirstLayer) {
  // u1:{i1,i2}, u2:{i2}; e_u1^(1) = e_i1 / sqrt(2) + e_i2 / 2.
  const auto adj = symmetric_normalize(pairs_matrix(2, 2, {{0, 0}, {0, 1}, {1, 1}}));
  const Matrix eu = Matrix::from_rows({{0.2, -0.4}, {1.0, 0.5}});
  const Matrix ei = Matrix::from_rows({{1.0, 2.0}, {-3.0, 0.5}});
  Tape t;
  const auto [u, i] = lightgcn_propagate(t.constant(eu), t.constant(ei), adj, 1);
  for (std::size_t c = 0; c < 2; ++c) {
    const double layer1 = ei(0, c) / std::sqrt(2.0) + ei(1, c) / 2.0;
    EXPECT_NEAR(u.value()(0, c), (eu(0, c) + layer1) / 2.0, 1e-15);
  }
}

// ---------------------------------------------------------------------------

TEST(GlobalEncode, EmptySocialGraphIsLightGcnOverProjectedSum) {
  Rng rng(5);
  const auto adj = symmetric_normalize(pairs_matrix(3, 2, {{0, 0}, {1, 1}, {2, 0}, {2, 1}}));
  const Matrix eu = random_matrix(3, 2, rng), ei = random_matrix(2, 2, rng);
  const Matrix w = random_matrix(2, 2, rng), a = random_matrix(4, 1, rng);
  Tape t;
  const auto g = global_encode(t.constant(eu), t.constant(ei), with_self_loops(pairs_matrix(3, 3, {})), adj,
                               t.constant(w), t.constant(a), 2);
  Matrix fused = matmul(eu, transposed(w));
  fused += eu;
  const auto [u, i] = lightgcn_propagate(t.constant(fused), t.constant(ei), adj, 2);
  expect_matrix_near(g.fused_users.value(), u.value(), 1e-14);
  expect_matrix_near(g.items.value(), i.value(), 1e-14);
}

TEST(GlobalEncode, ZeroGatWeightsGiveLightGcn) {
  Rng rng(6);
  const auto adj = symmetric_normalize(pairs_matrix(3, 2, {{0, 0}, {1, 1}, {2, 0}, {2, 1}}));
  const Matrix eu = random_matrix(3, 2, rng), ei = random_matrix(2, 2, rng);
  Tape t;
  const auto g = global_encode(t.constant(eu), t.constant(ei), with_self_loops(pairs_matrix(3, 3, {{0, 1}, {2, 1}})),
                               adj, t.constant(Matrix(2, 2)), t.constant(random_matrix(4, 1, rng)), 2);
  for (double v : g.social.value().data) EXPECT_EQ(v, 0.0);
  const auto [u, i] = lightgcn_propagate(t.constant(eu), t.constant(ei), adj, 2);
  expect_matrix_near(g.fused_users.value(), u.value(), 1e-15);
}

// ---------------------------------------------------------------------------

TEST(Gate, ZeroWeightsGiveMean) {
  Rng rng(7);
  const Matrix fu = random_matrix(3, 2, rng), so = random_matrix(3, 2, rng);
  Tape t;
  const auto out = gate_aggregate(t.constant(fu), t.constant(so), t.constant(Matrix(2, 2)), t.constant(Matrix(2, 2)));
  for (std::size_t k = 0; k < 6; ++k) {
    EXPECT_EQ(out.gate.value().data[k], 0.5);
    EXPECT_NEAR(out.users.value().data[k], (fu.data[k] + so.data[k]) / 2, 1e-15);
  }
}

TEST(Gate, EqualInputsPassThrough) {
  Rng rng(8);
  const Matrix e = random_matrix(3, 2, rng);
  Tape t;
  const auto out = gate_aggregate(t.constant(e), t.constant(e), t.constant(random_matrix(2, 2, rng)),
                                  t.constant(random_matrix(2, 2, rng)));
  expect_matrix_near(out.users.value(), e, 1e-15);
}

TEST(Gate, ScalarCase) {
  Tape t;
  const auto out = gate_aggregate(t.constant(Matrix(1, 1, 1.0)), t.constant(Matrix(1, 1, 0.0)),
                                  t.constant(Matrix(1, 1, 2.0)), t.constant(Matrix(1, 1, 5.0)));
  const double g = 1.0 / (1.0 + std::exp(-2.0));
  EXPECT_NEAR(out.gate.value()(0, 0), g, 1e-15);
  EXPECT_NEAR(out.gate.value()(0, 0), 0.880797, 1e-6);
  EXPECT_NEAR(out.users.value()(0, 0), 0.880797, 1e-6);
}

// ---------------------------------------------------------------------------

TEST(InfoNce, BatchOfOneIsZero) {
  Rng rng(9);
  const Matrix a = random_matrix(4, 3, rng), b = random_matrix(4, 3, rng);
  const std::vector<Index> one{2};
  Tape t;
  EXPECT_NEAR(infonce_inter(t.constant(a), t.constant(b), 0.2, one).item(), 0.0, 1e-12);
  EXPECT_NEAR(infonce_intra(t.constant(a), 0.2, one).item(), 0.0, 1e-12);
  EXPECT_NEAR(infonce_dropout(t.constant(a), t.constant(b), 0.2, one).item(), 0.0, 1e-12);
}

TEST(InfoNce, SharedEmbeddingGivesUniformSoftmax) {
  const Matrix e = Matrix::from_rows({{0.3, 0.4}, {0.3, 0.4}});
  const std::vector<Index> batch{0, 1};
  Tape t;
  EXPECT_NEAR(infonce_inter(t.constant(e), t.constant(e), 0.2, batch).item(), 2 * kLn2, 1e-12);
  EXPECT_NEAR(infonce_intra(t.constant(e), 0.7, batch).item(), 2 * kLn2, 1e-12);
  EXPECT_NEAR(2 * kLn2, 1.386294, 1e-6);
}

TEST(InfoNce, OrthogonalPairs) {
  const Matrix e = Matrix::from_rows({{1, 0}, {0, 1}});
  const std::vector<Index> batch{0, 1};
  Tape t;
  EXPECT_NEAR(infonce_inter(t.constant(e), t.constant(e), 1.0, batch).item(), 2 * kOrthogonalTerm, 1e-12);
  EXPECT_NEAR(infonce_intra(t.constant(e), 1.0, batch).item(), 0.626524, 1e-6);
  EXPECT_NEAR(kOrthogonalTerm, 0.313262, 1e-6);
}

TEST(InfoNce, DropoutMatchesInter) {
  Rng rng(10);
  const Matrix a = random_matrix(5, 3, rng), b = random_matrix(5, 3, rng);
  const std::vector<Index> batch{0, 2, 4};
  Tape t;
  EXPECT_EQ(infonce_dropout(t.constant(a), t.constant(b), 0.3, batch).item(),
            infonce_inter(t.constant(a), t.constant(b), 0.3, batch).item());
  EXPECT_EQ(infonce_dropout(t.constant(a), t.constant(a), 0.3, batch).item(),
            infonce_inter(t.constant(a), t.constant(a), 0.3, batch).item());
}

TEST(InfoNce, AllUserNegativesAndDotSimilarity) {
  const Matrix a = Matrix::from_rows({{1, 0}, {0, 2}, {1, 1}});
  const std::vector<Index> batch{0};
  Tape t;
  ContrastOptions all{ContrastNegatives::kAllUsers, ContrastSimilarity::kDot};
  // Anchor (1,0) against (1,0), (0,2), (1,1): logits 1, 0, 1 at tau 1.
  const double expected = std::log(std::exp(1.0) + 1.0 + std::exp(1.0)) - 1.0;
  EXPECT_NEAR(infonce_inter(t.constant(a), t.constant(a), 1.0, batch, all).item(), expected, 1e-12);
}

TEST(InfoNce, RejectsBadArguments) {
  const Matrix e(2, 2, 1.0);
  Tape t;
  const std::vector<Index> batch{0};
  EXPECT_THROW(infonce_inter(t.constant(e), t.constant(e), 0.0, batch), ConfigError);
  EXPECT_THROW(infonce_inter(t.constant(e), t.constant(e), 0.2, {}), ContractError);
}

// ---------------------------------------------------------------------------

TEST(Predict, DotProduct) {
  const std::vector<double> a{1, 2}, b{3, 4}, x{1, 0}, y{0, 1};
  EXPECT_EQ(predict(a, b), 11.0);
  EXPECT_EQ(predict(x, y), 0.0);
  EXPECT_EQ(predict(x, x), 1.0);
}

TEST(Bpr, ReferenceValues) {
  Tape t;
  EXPECT_NEAR(bpr_loss(t.constant(Matrix::column({0.3, -1.0})), t.constant(Matrix::column({0.3, -1.0}))).item(),
              2 * kLn2, 1e-15);
  EXPECT_NEAR(bpr_loss(t.constant(Matrix::column({1.5})), t.constant(Matrix::column({0.5}))).item(), 0.313262, 1e-6);
  double previous = std::numeric_limits<double>::infinity();
  for (double margin : {-2.0, 0.0, 1.0, 5.0, 20.0, 40.0}) {
    const double loss = bpr_loss(t.constant(Matrix(1, 1, margin)), t.constant(Matrix(1, 1, 0.0))).item();
    EXPECT_LT(loss, previous);
    previous = loss;
  }
  EXPECT_LT(previous, 1e-15);
}

TEST(TotalLoss, WeightedSum) {
  LossValues v{1.5, 2.0, 3.0, 4.0, 10.0};
  Hyperparams h;
  h.lambda1 = h.lambda2 = h.lambda3 = 0.0;
  EXPECT_EQ(total_loss(v, h), 1.5);
  h.lambda1 = 0.1;
  h.lambda2 = 0.2;
  h.lambda3 = 0.01;
  h.beta = 0.25;
  EXPECT_NEAR(total_loss(v, h), 1.5 + 0.1 * (0.25 * 2.0 + 0.75 * 3.0) + 0.2 * 4.0 + 0.01 * 10.0, 1e-15);

  Tape t;
  LossTerms terms;
  terms.bpr = t.constant(Matrix(1, 1, 1.5));
  terms.inter = t.constant(Matrix(1, 1, 2.0));
  terms.dropout = t.constant(Matrix(1, 1, 4.0));
  terms.reg = t.constant(Matrix(1, 1, 10.0));
  h.beta = 1.0;  // intra is absent and unweighted
  EXPECT_NEAR(total_loss(terms, h).item(), 1.5 + 0.1 * 2.0 + 0.2 * 4.0 + 0.01 * 10.0, 1e-15);
  h.beta = 0.5;
  EXPECT_THROW(total_loss(terms, h), ContractError);
}

TEST(Hyperparams, Validation) {
  Hyperparams h;
  EXPECT_NO_THROW(h.validate());
  h.lambda1 = -0.1;
  EXPECT_THROW(h.validate(), ConfigError);
  h = {};
  h.tau = 0;
  EXPECT_THROW(h.validate(), ConfigError);
  h = {};
  h.drop_ratio = 1.2;
  EXPECT_THROW(h.validate(), ConfigError);
}

// ---------------------------------------------------------------------------

TEST(Gradients, EveryLossTermMatchesFiniteDifferences) {
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    const auto rep = idvt::testing::model_gradient_errors(seed);
    for (const auto& [term, err] : rep.errors) EXPECT_LT(err, 1e-4) << idvt::testing::term_name(term) << " seed " << seed;
  }
}
