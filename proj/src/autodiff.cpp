#include "idvt/autodiff.hpp"

#include <algorithm>
#include <cmath>

namespace idvt {

Parameter::Parameter(std::string n, Matrix v)
    : name(std::move(n)),
      value(std::move(v)),
      grad(value.rows, value.cols),
      first_moment(value.rows, value.cols),
      second_moment(value.rows, value.cols) {}

const Matrix& Var::value() const { return tape_->value(id_); }

double Var::item() const {
  const Matrix& v = value();
  if (v.rows != 1 || v.cols != 1) throw ContractError("Var::item: not a scalar");
  return v.data[0];
}

bool Var::requires_grad() const { return tape_->requires_grad(id_); }

Var Tape::constant(Matrix value) {
  nodes_.push_back(Node{std::move(value), {}, false, {}, nullptr});
  return {this, nodes_.size() - 1};
}

Var Tape::param(Parameter& p) {
  nodes_.push_back(Node{p.value, {}, true, {}, &p});
  return {this, nodes_.size() - 1};
}

Var Tape::record(Matrix value, std::initializer_list<Var> inputs, Backward backward) {
  bool needs = false;
  for (const Var& in : inputs) {
    if (in.tape() != this) throw ContractError("Tape::record: input from another tape");
    needs = needs || requires_grad(in.id());
  }
  nodes_.push_back(Node{std::move(value), {}, needs, needs ? std::move(backward) : Backward{},
                        nullptr});
  return {this, nodes_.size() - 1};
}

void Tape::backward(Var loss) {
  if (loss.tape() != this) throw ContractError("Tape::backward: loss from another tape");
  const Matrix& lv = value(loss.id());
  if (lv.rows != 1 || lv.cols != 1) throw ContractError("backward: loss must be a 1x1 scalar");
  for (std::size_t id = 0; id <= loss.id(); ++id) {
    Node& n = nodes_[id];
    if (n.requires_grad) n.grad = Matrix(n.value.rows, n.value.cols);
  }
  if (nodes_[loss.id()].requires_grad) {
    nodes_[loss.id()].grad.data[0] = 1.0;
    for (std::size_t id = loss.id() + 1; id-- > 0;) {
      Node& n = nodes_[id];
      if (n.requires_grad && n.backward) n.backward(*this, id);
    }
    for (std::size_t id = 0; id <= loss.id(); ++id) {
      Node& n = nodes_[id];
      if (n.sink != nullptr) n.sink->grad += n.grad;
    }
  }
  clear();
}

void Tape::clear() { nodes_.clear(); }

namespace ad {
namespace {

void require_same_shape(const Var& a, const Var& b, const char* op) {
  if (!a.value().same_shape(b.value())) throw DimensionError(std::string(op) + ": shape mismatch");
}

// Elementwise unary op with derivative expressed through input and output.
template <typename Fwd, typename Deriv>
Var unary(Var a, Fwd fwd, Deriv deriv) {
  const Matrix& x = a.value();
  Matrix out(x.rows, x.cols);
  for (std::size_t k = 0; k < x.size(); ++k) out.data[k] = fwd(x.data[k]);
  const std::size_t ia = a.id();
  return a.tape()->record(std::move(out), {a}, [ia, deriv](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    const Matrix& x = t.value(ia);
    const Matrix& y = t.value(self);
    Matrix& ga = t.grad_mut(ia);
    for (std::size_t k = 0; k < g.size(); ++k) ga.data[k] += g.data[k] * deriv(x.data[k], y.data[k]);
  });
}

}  // namespace

Var matmul(Var a, Var b) {
  Matrix out = idvt::matmul(a.value(), b.value());
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape()->record(std::move(out), {a, b}, [ia, ib](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    const Matrix& av = t.value(ia);
    const Matrix& bv = t.value(ib);
    if (t.requires_grad(ia)) t.grad_mut(ia) += idvt::matmul(g, transposed(bv));
    if (t.requires_grad(ib)) t.grad_mut(ib) += idvt::matmul(transposed(av), g);
  });
}

Var transpose(Var a) {
  const std::size_t ia = a.id();
  return a.tape()->record(transposed(a.value()), {a}, [ia](Tape& t, std::size_t self) {
    t.grad_mut(ia) += transposed(t.grad(self));
  });
}

Var add(Var a, Var b) {
  require_same_shape(a, b, "add");
  Matrix out = a.value();
  out += b.value();
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape()->record(std::move(out), {a, b}, [ia, ib](Tape& t, std::size_t self) {
    if (t.requires_grad(ia)) t.grad_mut(ia) += t.grad(self);
    if (t.requires_grad(ib)) t.grad_mut(ib) += t.grad(self);
  });
}

Var sub(Var a, Var b) {
  require_same_shape(a, b, "sub");
  Matrix out = a.value();
  const Matrix& bv = b.value();
  for (std::size_t k = 0; k < out.size(); ++k) out.data[k] -= bv.data[k];
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape()->record(std::move(out), {a, b}, [ia, ib](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    if (t.requires_grad(ia)) t.grad_mut(ia) += g;
    if (t.requires_grad(ib)) {
      Matrix& gb = t.grad_mut(ib);
      for (std::size_t k = 0; k < g.size(); ++k) gb.data[k] -= g.data[k];
    }
  });
}

Var mul(Var a, Var b) {
  require_same_shape(a, b, "mul");
  Matrix out = a.value();
  const Matrix& bv = b.value();
  for (std::size_t k = 0; k < out.size(); ++k) out.data[k] *= bv.data[k];
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape()->record(std::move(out), {a, b}, [ia, ib](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    if (t.requires_grad(ia)) {
      Matrix& ga = t.grad_mut(ia);
      const Matrix& bv = t.value(ib);
      for (std::size_t k = 0; k < g.size(); ++k) ga.data[k] += g.data[k] * bv.data[k];
    }
    if (t.requires_grad(ib)) {
      Matrix& gb = t.grad_mut(ib);
      const Matrix& av = t.value(ia);
      for (std::size_t k = 0; k < g.size(); ++k) gb.data[k] += g.data[k] * av.data[k];
    }
  });
}

Var scale(Var a, double s) {
  return unary(a, [s](double x) { return s * x; }, [s](double, double) { return s; });
}

Var add_scalar(Var a, double s) {
  return unary(a, [s](double x) { return x + s; }, [](double, double) { return 1.0; });
}

Var sigmoid(Var a) {
  return unary(
      a,
      [](double x) {
        if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Var exp(Var a) {
  return unary(a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Var log(Var a) {
  for (double v : a.value().data) {
    if (!(v > 0.0)) throw DomainError("log: non-positive argument");
  }
  return unary(a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Var log_sigmoid(Var a) {
  // log sigma(x) = -softplus(-x); derivative sigma(-x).
  return unary(
      a, [](double x) { return x >= 0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x)); },
      [](double x, double) {
        if (x >= 0) {
          const double e = std::exp(-x);
          return e / (1.0 + e);
        }
        return 1.0 / (1.0 + std::exp(x));
      });
}

Var leaky_relu(Var a, double negative_slope) {
  return unary(
      a, [negative_slope](double x) { return x > 0 ? x : negative_slope * x; },
      [negative_slope](double x, double) { return x > 0 ? 1.0 : negative_slope; });
}

Var row_l2_normalize(Var a, double eps) {
  const Matrix& x = a.value();
  Matrix out(x.rows, x.cols);
  Matrix norms(x.rows, 1);
  for (std::size_t r = 0; r < x.rows; ++r) {
    const double n = std::max(l2_norm(x.row(r)), eps);
    norms.data[r] = n;
    auto o = out.row(r);
    auto xr = x.row(r);
    for (std::size_t c = 0; c < x.cols; ++c) o[c] = xr[c] / n;
  }
  const std::size_t ia = a.id();
  return a.tape()->record(std::move(out), {a},
                          [ia, norms = std::move(norms), eps](Tape& t, std::size_t self) {
                            const Matrix& g = t.grad(self);
                            const Matrix& y = t.value(self);
                            Matrix& ga = t.grad_mut(ia);
                            for (std::size_t r = 0; r < g.rows; ++r) {
                              const double n = norms.data[r];
                              auto gr = g.row(r);
                              auto yr = y.row(r);
                              auto gar = ga.row(r);
                              if (n > eps) {
                                const double proj = dot(yr, gr);
                                for (std::size_t c = 0; c < g.cols; ++c)
                                  gar[c] += (gr[c] - yr[c] * proj) / n;
                              } else {
                                // Clamped branch: y = x / eps.
                                for (std::size_t c = 0; c < g.cols; ++c) gar[c] += gr[c] / eps;
                              }
                            }
                          });
}

Var spmm(const SparseMatrix& s, Var x) {
  const Matrix& xv = x.value();
  if (s.cols != xv.rows) throw DimensionError("spmm: sparse cols != dense rows");
  Matrix out(s.rows, xv.cols);
  for (std::size_t r = 0; r < s.rows; ++r) {
    auto o = out.row(r);
    for (std::size_t k = s.row_offsets[r]; k < s.row_offsets[r + 1]; ++k) {
      const double w = s.values[k];
      auto xr = xv.row(s.col_indices[k]);
      for (std::size_t c = 0; c < xv.cols; ++c) o[c] += w * xr[c];
    }
  }
  const std::size_t ix = x.id();
  const SparseMatrix* sp = &s;
  return x.tape()->record(std::move(out), {x}, [ix, sp](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    Matrix& gx = t.grad_mut(ix);
    for (std::size_t r = 0; r < sp->rows; ++r) {
      auto gr = g.row(r);
      for (std::size_t k = sp->row_offsets[r]; k < sp->row_offsets[r + 1]; ++k) {
        const double w = sp->values[k];
        auto gxr = gx.row(sp->col_indices[k]);
        for (std::size_t c = 0; c < g.cols; ++c) gxr[c] += w * gr[c];
      }
    }
  });
}

Var weighted_spmm(const SparseBinaryMatrix& pattern, Var w, Var x) {
  const Matrix& wv = w.value();
  const Matrix& xv = x.value();
  if (wv.rows != pattern.nnz() || wv.cols != 1)
    throw DimensionError("weighted_spmm: weights must be nnz x 1");
  if (pattern.cols != xv.rows) throw DimensionError("weighted_spmm: pattern cols != dense rows");
  Matrix out(pattern.rows, xv.cols);
  for (std::size_t r = 0; r < pattern.rows; ++r) {
    auto o = out.row(r);
    for (std::size_t k = pattern.row_offsets[r]; k < pattern.row_offsets[r + 1]; ++k) {
      const double wk = wv.data[k];
      auto xr = xv.row(pattern.col_indices[k]);
      for (std::size_t c = 0; c < xv.cols; ++c) o[c] += wk * xr[c];
    }
  }
  const std::size_t iw = w.id(), ix = x.id();
  const SparseBinaryMatrix* p = &pattern;
  return w.tape()->record(std::move(out), {w, x}, [iw, ix, p](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    const Matrix& wv = t.value(iw);
    const Matrix& xv = t.value(ix);
    const bool need_w = t.requires_grad(iw), need_x = t.requires_grad(ix);
    for (std::size_t r = 0; r < p->rows; ++r) {
      auto gr = g.row(r);
      for (std::size_t k = p->row_offsets[r]; k < p->row_offsets[r + 1]; ++k) {
        const Index col = p->col_indices[k];
        if (need_w) t.grad_mut(iw).data[k] += dot(gr, xv.row(col));
        if (need_x) {
          auto gxr = t.grad_mut(ix).row(col);
          for (std::size_t c = 0; c < g.cols; ++c) gxr[c] += wv.data[k] * gr[c];
        }
      }
    }
  });
}

Var segment_softmax(Var logits, std::span<const std::size_t> segment_offsets) {
  const Matrix& z = logits.value();
  if (z.cols != 1 || segment_offsets.empty() || segment_offsets.back() != z.rows)
    throw DimensionError("segment_softmax: offsets do not cover the logits");
  Matrix out(z.rows, 1);
  for (std::size_t s = 0; s + 1 < segment_offsets.size(); ++s) {
    const std::size_t b = segment_offsets[s], e = segment_offsets[s + 1];
    if (b == e) continue;
    double mx = z.data[b];
    for (std::size_t k = b + 1; k < e; ++k) mx = std::max(mx, z.data[k]);
    double total = 0.0;
    for (std::size_t k = b; k < e; ++k) total += (out.data[k] = std::exp(z.data[k] - mx));
    for (std::size_t k = b; k < e; ++k) out.data[k] /= total;
  }
  const std::size_t iz = logits.id();
  std::vector<std::size_t> offsets(segment_offsets.begin(), segment_offsets.end());
  return logits.tape()->record(
      std::move(out), {logits}, [iz, offsets = std::move(offsets)](Tape& t, std::size_t self) {
        const Matrix& g = t.grad(self);
        const Matrix& y = t.value(self);
        Matrix& gz = t.grad_mut(iz);
        for (std::size_t s = 0; s + 1 < offsets.size(); ++s) {
          double weighted = 0.0;
          for (std::size_t k = offsets[s]; k < offsets[s + 1]; ++k) weighted += y.data[k] * g.data[k];
          for (std::size_t k = offsets[s]; k < offsets[s + 1]; ++k)
            gz.data[k] += y.data[k] * (g.data[k] - weighted);
        }
      });
}

Var gather_rows(Var a, std::span<const Index> rows) {
  const Matrix& x = a.value();
  Matrix out(rows.size(), x.cols);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r] >= x.rows) throw DimensionError("gather_rows: row index out of range");
    std::copy_n(x.row(rows[r]).begin(), x.cols, out.row(r).begin());
  }
  const std::size_t ia = a.id();
  std::vector<Index> idx(rows.begin(), rows.end());
  return a.tape()->record(std::move(out), {a}, [ia, idx = std::move(idx)](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    Matrix& ga = t.grad_mut(ia);
    for (std::size_t r = 0; r < idx.size(); ++r) {
      auto gr = g.row(r);
      auto gar = ga.row(idx[r]);
      for (std::size_t c = 0; c < g.cols; ++c) gar[c] += gr[c];
    }
  });
}

Var slice_rows(Var a, std::size_t begin, std::size_t end) {
  const Matrix& x = a.value();
  if (begin > end || end > x.rows) throw DimensionError("slice_rows: range out of bounds");
  Matrix out(end - begin, x.cols);
  std::copy(x.data.begin() + static_cast<std::ptrdiff_t>(begin * x.cols),
            x.data.begin() + static_cast<std::ptrdiff_t>(end * x.cols), out.data.begin());
  const std::size_t ia = a.id();
  return a.tape()->record(std::move(out), {a}, [ia, begin](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    Matrix& ga = t.grad_mut(ia);
    for (std::size_t k = 0; k < g.size(); ++k) ga.data[begin * g.cols + k] += g.data[k];
  });
}

Var diag(Var square) {
  const Matrix& x = square.value();
  if (x.rows != x.cols) throw DimensionError("diag: matrix is not square");
  Matrix out(x.rows, 1);
  for (std::size_t r = 0; r < x.rows; ++r) out.data[r] = x(r, r);
  const std::size_t ia = square.id();
  return square.tape()->record(std::move(out), {square}, [ia](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    Matrix& ga = t.grad_mut(ia);
    for (std::size_t r = 0; r < g.rows; ++r) ga(r, r) += g.data[r];
  });
}

Var sum(Var a) {
  double s = 0.0;
  for (double v : a.value().data) s += v;
  const std::size_t ia = a.id();
  return a.tape()->record(Matrix(1, 1, s), {a}, [ia](Tape& t, std::size_t self) {
    const double g = t.grad(self).data[0];
    for (double& v : t.grad_mut(ia).data) v += g;
  });
}

Var mean(Var a) {
  const std::size_t n = a.value().size();
  if (n == 0) throw DimensionError("mean: empty input");
  return scale(sum(a), 1.0 / static_cast<double>(n));
}

Var row_sum(Var a) {
  const Matrix& x = a.value();
  Matrix out(x.rows, 1);
  for (std::size_t r = 0; r < x.rows; ++r)
    for (double v : x.row(r)) out.data[r] += v;
  const std::size_t ia = a.id();
  return a.tape()->record(std::move(out), {a}, [ia](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    Matrix& ga = t.grad_mut(ia);
    for (std::size_t r = 0; r < ga.rows; ++r)
      for (double& v : ga.row(r)) v += g.data[r];
  });
}

Var row_logsumexp(Var a) {
  const Matrix& x = a.value();
  if (x.cols == 0) throw DimensionError("row_logsumexp: empty rows");
  Matrix out(x.rows, 1);
  for (std::size_t r = 0; r < x.rows; ++r) {
    auto xr = x.row(r);
    const double mx = *std::max_element(xr.begin(), xr.end());
    double total = 0.0;
    for (double v : xr) total += std::exp(v - mx);
    out.data[r] = mx + std::log(total);
  }
  const std::size_t ia = a.id();
  return a.tape()->record(std::move(out), {a}, [ia](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    const Matrix& y = t.value(self);
    const Matrix& x = t.value(ia);
    Matrix& ga = t.grad_mut(ia);
    for (std::size_t r = 0; r < x.rows; ++r) {
      auto xr = x.row(r);
      auto gar = ga.row(r);
      for (std::size_t c = 0; c < x.cols; ++c) gar[c] += g.data[r] * std::exp(xr[c] - y.data[r]);
    }
  });
}

}  // namespace ad
}  // namespace idvt
