#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "idvt/autodiff.hpp"
#include "idvt/optim.hpp"
#include "idvt/rng.hpp"
#include "idvt/sparse.hpp"

namespace idvt::testing {

inline Matrix random_matrix(std::size_t rows, std::size_t cols, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Matrix m(rows, cols);
  for (double& v : m.data) v = rng.uniform(lo, hi);
  return m;
}

// Random directed graph without self-loops, each possible edge with probability p.
inline SparseBinaryMatrix random_social(std::size_t n, double p, Rng& rng) {
  std::vector<IndexPair> pairs;
  for (Index u = 0; u < n; ++u)
    for (Index v = 0; v < n; ++v)
      if (u != v && rng.uniform() < p) pairs.emplace_back(u, v);
  return SparseBinaryMatrix::from_pairs(n, n, pairs);
}

// Bipartite graph where every user and every item has at least one edge.
inline SparseBinaryMatrix random_interactions(std::size_t n, std::size_t m, double p, Rng& rng) {
  std::vector<IndexPair> pairs;
  for (Index u = 0; u < n; ++u)
    for (Index i = 0; i < m; ++i)
      if (rng.uniform() < p) pairs.emplace_back(u, i);
  for (Index u = 0; u < n; ++u) pairs.emplace_back(u, static_cast<Index>(u % m));
  for (Index i = 0; i < m; ++i) pairs.emplace_back(static_cast<Index>(i % n), i);
  return SparseBinaryMatrix::from_pairs(n, m, pairs);
}

// |a - n| / max(|a|, |n|, floor). The floor keeps entries whose true
// gradient is ~0 from dividing round-off by round-off.
inline double relative_error(double analytic, double numeric, double floor = 1e-3) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

// Central differences of `loss` over every entry of every parameter,
// compared with the reverse-mode gradient. `loss` must record onto the
// given tape and return a 1x1 Var.
using LossBuilder = std::function<Var(Tape&)>;

inline double max_gradient_error(ParameterSet& params, const LossBuilder& loss, double h = 1e-6) {
  params.zero_grad();
  {
    Tape tape;
    tape.backward(loss(tape));
  }
  std::vector<Matrix> analytic;
  for (const auto& p : params) analytic.push_back(p.grad);

  double worst = 0.0;
  for (std::size_t s = 0; s < params.size(); ++s) {
    auto& value = params[s].value.data;
    for (std::size_t k = 0; k < value.size(); ++k) {
      const double saved = value[k];
      value[k] = saved + h;
      double plus = 0.0, minus = 0.0;
      {
        Tape tape;
        plus = loss(tape).item();
      }
      value[k] = saved - h;
      {
        Tape tape;
        minus = loss(tape).item();
      }
      value[k] = saved;
      worst = std::max(worst, relative_error(analytic[s].data[k], (plus - minus) / (2.0 * h)));
    }
  }
  params.zero_grad();
  return worst;
}

}  // namespace idvt::testing
