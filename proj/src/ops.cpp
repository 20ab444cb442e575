#include "hosdp/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hosdp/error.hpp"
#include "linalg.hpp"

namespace hosdp {
namespace {

Graph& graph_of(Var a) {
  if (!a.valid()) throw ContractError("operation on an unbound Var");
  return *a.graph();
}

Graph& graph_of(Var a, Var b) {
  if (a.graph() != b.graph()) throw ContractError("operands belong to different graphs");
  return graph_of(a);
}

void require_rank2(Var a, const char* op) {
  if (a.value().rank() != 2) {
    throw DimensionError(std::string(op) + ": expected a matrix, got " + shape_string(a.shape()));
  }
}

void require_same(Var a, Var b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) +
                         " vs " + shape_string(b.shape()));
  }
}

void accumulate(Graph& g, std::size_t id, const Tensor& delta) {
  if (!g.requires_grad(id)) return;
  auto& dst = g.grad_mut(id).storage();
  const auto src = delta.data();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

// Splits a shape into (outer, axis, inner) extents around `axis`.
struct AxisView {
  std::size_t outer = 1, len = 1, inner = 1;
};

AxisView axis_view(const Shape& s, std::size_t axis) {
  AxisView v;
  for (std::size_t i = 0; i < axis; ++i) v.outer *= s[i];
  v.len = s[axis];
  for (std::size_t i = axis + 1; i < s.size(); ++i) v.inner *= s[i];
  return v;
}

template <typename Fwd, typename Deriv>
Var unary(Var a, const char* op, Fwd fwd, Deriv deriv) {
  Graph& g = graph_of(a);
  Tensor out(a.shape());
  const auto x = a.value().data();
  auto y = out.data();
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = fwd(x[i]);
  const std::size_t ia = a.id();
  return g.record(op, std::move(out), {ia}, [ia, deriv](Graph& g, std::size_t self) {
    if (!g.requires_grad(ia)) return;
    const auto x = g.value(ia).data();
    const auto y = g.value(self).data();
    const auto gy = g.grad(self).data();
    auto gx = g.grad_mut(ia).data();
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += gy[i] * deriv(x[i], y[i]);
  });
}

}  // namespace

Var matmul(Var a, Var b) {
  Graph& g = graph_of(a, b);
  require_rank2(a, "matmul");
  require_rank2(b, "matmul");
  const std::size_t m = a.value().rows(), k = a.value().cols(), n = b.value().cols();
  if (b.value().rows() != k) {
    throw DimensionError("matmul: inner extents differ, " + shape_string(a.shape()) + " x " +
                         shape_string(b.shape()));
  }
  Tensor out({m, n});
  linalg::gemm_nn(a.value().data().data(), b.value().data().data(), out.data().data(), m, k, n);
  const std::size_t ia = a.id(), ib = b.id();
  return g.record("matmul", std::move(out), {ia, ib}, [ia, ib, m, k, n](Graph& g, std::size_t self) {
    const double* dc = g.grad(self).data().data();
    if (g.requires_grad(ia)) {
      linalg::gemm_nt(dc, g.value(ib).data().data(), g.grad_mut(ia).data().data(), m, n, k);
    }
    if (g.requires_grad(ib)) {
      linalg::gemm_tn(g.value(ia).data().data(), dc, g.grad_mut(ib).data().data(), k, m, n);
    }
  });
}

Var transpose(Var a) {
  Graph& g = graph_of(a);
  require_rank2(a, "transpose");
  const std::size_t m = a.value().rows(), n = a.value().cols();
  Tensor out({n, m});
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out.at(j, i) = a.value().at(i, j);
  const std::size_t ia = a.id();
  return g.record("transpose", std::move(out), {ia}, [ia, m, n](Graph& g, std::size_t self) {
    const Tensor& gy = g.grad(self);
    Tensor& gx = g.grad_mut(ia);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) gx.at(i, j) += gy.at(j, i);
  });
}

Var add(Var a, Var b) {
  Graph& g = graph_of(a, b);
  require_same(a, b, "add");
  Tensor out = a.value();
  const auto bv = b.value().data();
  for (std::size_t i = 0; i < bv.size(); ++i) out[i] += bv[i];
  const std::size_t ia = a.id(), ib = b.id();
  return g.record("add", std::move(out), {ia, ib}, [ia, ib](Graph& g, std::size_t self) {
    accumulate(g, ia, g.grad(self));
    accumulate(g, ib, g.grad(self));
  });
}

Var add_row(Var a, Var row) {
  Graph& g = graph_of(a, row);
  require_rank2(a, "add_row");
  const std::size_t m = a.value().rows(), n = a.value().cols();
  if (row.value().rank() != 2 || row.value().rows() != 1 || row.value().cols() != n) {
    throw DimensionError("add_row: row " + shape_string(row.shape()) + " does not broadcast over " +
                         shape_string(a.shape()));
  }
  Tensor out = a.value();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out.at(i, j) += row.value()[j];
  const std::size_t ia = a.id(), ir = row.id();
  return g.record("add_row", std::move(out), {ia, ir}, [ia, ir, m, n](Graph& g, std::size_t self) {
    const Tensor& gy = g.grad(self);
    accumulate(g, ia, gy);
    if (g.requires_grad(ir)) {
      Tensor& gr = g.grad_mut(ir);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) gr[j] += gy.at(i, j);
    }
  });
}

Var sub(Var a, Var b) {
  Graph& g = graph_of(a, b);
  require_same(a, b, "sub");
  Tensor out = a.value();
  const auto bv = b.value().data();
  for (std::size_t i = 0; i < bv.size(); ++i) out[i] -= bv[i];
  const std::size_t ia = a.id(), ib = b.id();
  return g.record("sub", std::move(out), {ia, ib}, [ia, ib](Graph& g, std::size_t self) {
    accumulate(g, ia, g.grad(self));
    if (g.requires_grad(ib)) {
      auto gb = g.grad_mut(ib).data();
      const auto gy = g.grad(self).data();
      for (std::size_t i = 0; i < gb.size(); ++i) gb[i] -= gy[i];
    }
  });
}

Var mul(Var a, Var b) {
  Graph& g = graph_of(a, b);
  require_same(a, b, "mul");
  Tensor out = a.value();
  const auto bv = b.value().data();
  for (std::size_t i = 0; i < bv.size(); ++i) out[i] *= bv[i];
  const std::size_t ia = a.id(), ib = b.id();
  return g.record("mul", std::move(out), {ia, ib}, [ia, ib](Graph& g, std::size_t self) {
    const auto gy = g.grad(self).data();
    if (g.requires_grad(ia)) {
      auto ga = g.grad_mut(ia).data();
      const auto bv = g.value(ib).data();
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += gy[i] * bv[i];
    }
    if (g.requires_grad(ib)) {
      auto gb = g.grad_mut(ib).data();
      const auto av = g.value(ia).data();
      for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += gy[i] * av[i];
    }
  });
}

Var scale(Var a, double s) {
  return unary(a, "scale", [s](double x) { return s * x; }, [s](double, double) { return s; });
}

Var relu(Var a) {
  return unary(
      a, "relu", [](double x) { return x > 0.0 ? x : 0.0; },
      [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Var leaky_relu(Var a, double alpha) {
  return unary(
      a, "leaky_relu", [alpha](double x) { return x > 0.0 ? x : alpha * x; },
      [alpha](double x, double) { return x > 0.0 ? 1.0 : alpha; });
}

Var sigmoid(Var a) {
  return unary(
      a, "sigmoid",
      [](double x) {
        if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Var tanh(Var a) {
  return unary(
      a, "tanh", [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Var softmax(Var a, std::size_t axis) {
  Graph& g = graph_of(a);
  if (axis >= a.value().rank()) {
    throw DimensionError("softmax: axis " + std::to_string(axis) + " invalid for shape " +
                         shape_string(a.shape()));
  }
  const AxisView v = axis_view(a.shape(), axis);
  Tensor out(a.shape());
  const auto x = a.value().data();
  auto y = out.data();
  for (std::size_t o = 0; o < v.outer; ++o) {
    for (std::size_t in = 0; in < v.inner; ++in) {
      const std::size_t base = o * v.len * v.inner + in;
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t t = 0; t < v.len; ++t) mx = std::max(mx, x[base + t * v.inner]);
      double z = 0.0;
      for (std::size_t t = 0; t < v.len; ++t) {
        const double e = std::exp(x[base + t * v.inner] - mx);
        y[base + t * v.inner] = e;
        z += e;
      }
      for (std::size_t t = 0; t < v.len; ++t) y[base + t * v.inner] /= z;
    }
  }
  const std::size_t ia = a.id();
  return g.record("softmax", std::move(out), {ia}, [ia, v](Graph& g, std::size_t self) {
    const auto y = g.value(self).data();
    const auto gy = g.grad(self).data();
    auto gx = g.grad_mut(ia).data();
    for (std::size_t o = 0; o < v.outer; ++o) {
      for (std::size_t in = 0; in < v.inner; ++in) {
        const std::size_t base = o * v.len * v.inner + in;
        double dot = 0.0;
        for (std::size_t t = 0; t < v.len; ++t) dot += gy[base + t * v.inner] * y[base + t * v.inner];
        for (std::size_t t = 0; t < v.len; ++t) {
          const std::size_t i = base + t * v.inner;
          gx[i] += y[i] * (gy[i] - dot);
        }
      }
    }
  });
}

Var masked_softmax_rows(Var a, const Tensor& mask) {
  Graph& g = graph_of(a);
  require_rank2(a, "masked_softmax_rows");
  if (mask.shape() != a.shape()) {
    throw DimensionError("masked_softmax_rows: mask " + shape_string(mask.shape()) +
                         " vs input " + shape_string(a.shape()));
  }
  const std::size_t m = a.value().rows(), n = a.value().cols();
  Tensor out(a.shape());
  for (std::size_t i = 0; i < m; ++i) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j)
      if (mask.at(i, j) != 0.0) mx = std::max(mx, a.value().at(i, j));
    if (!std::isfinite(mx)) continue;
    double z = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (mask.at(i, j) == 0.0) continue;
      const double e = std::exp(a.value().at(i, j) - mx);
      out.at(i, j) = e;
      z += e;
    }
    for (std::size_t j = 0; j < n; ++j) out.at(i, j) /= z;
  }
  const std::size_t ia = a.id();
  return g.record("masked_softmax_rows", std::move(out), {ia}, [ia, m, n](Graph& g, std::size_t self) {
    const Tensor& y = g.value(self);
    const Tensor& gy = g.grad(self);
    Tensor& gx = g.grad_mut(ia);
    for (std::size_t i = 0; i < m; ++i) {
      double dot = 0.0;
      for (std::size_t j = 0; j < n; ++j) dot += gy.at(i, j) * y.at(i, j);
      for (std::size_t j = 0; j < n; ++j) gx.at(i, j) += y.at(i, j) * (gy.at(i, j) - dot);
    }
  });
}

Var concat(std::span<const Var> parts, std::size_t axis) {
  if (parts.empty()) throw DimensionError("concat: no operands");
  Graph& g = graph_of(parts[0]);
  const Shape& s0 = parts[0].shape();
  if (axis >= s0.size()) throw DimensionError("concat: axis out of range for " + shape_string(s0));
  Shape out_shape = s0;
  out_shape[axis] = 0;
  for (const Var& p : parts) {
    graph_of(parts[0], p);
    const Shape& s = p.shape();
    if (s.size() != s0.size()) throw DimensionError("concat: rank mismatch");
    for (std::size_t d = 0; d < s.size(); ++d) {
      if (d != axis && s[d] != s0[d]) {
        throw DimensionError("concat: shape mismatch " + shape_string(s0) + " vs " + shape_string(s));
      }
    }
    out_shape[axis] += s[axis];
  }
  const AxisView ov = axis_view(out_shape, axis);
  Tensor out(out_shape);
  std::vector<std::size_t> ids, offsets;
  std::size_t offset = 0;
  for (const Var& p : parts) {
    const AxisView pv = axis_view(p.shape(), axis);
    const auto src = p.value().data();
    for (std::size_t o = 0; o < ov.outer; ++o)
      for (std::size_t t = 0; t < pv.len; ++t)
        std::copy_n(src.begin() + (o * pv.len + t) * pv.inner, pv.inner,
                    out.data().begin() + (o * ov.len + offset + t) * ov.inner);
    ids.push_back(p.id());
    offsets.push_back(offset);
    offset += pv.len;
  }
  return g.record("concat", std::move(out), ids, [ids, offsets, axis, ov](Graph& g, std::size_t self) {
    const auto gy = g.grad(self).data();
    for (std::size_t k = 0; k < ids.size(); ++k) {
      if (!g.requires_grad(ids[k])) continue;
      const AxisView pv = axis_view(g.value(ids[k]).shape(), axis);
      auto gx = g.grad_mut(ids[k]).data();
      for (std::size_t o = 0; o < ov.outer; ++o)
        for (std::size_t t = 0; t < pv.len; ++t) {
          const double* s = gy.data() + (o * ov.len + offsets[k] + t) * ov.inner;
          double* d = gx.data() + (o * pv.len + t) * pv.inner;
          for (std::size_t i = 0; i < pv.inner; ++i) d[i] += s[i];
        }
    }
  });
}

Var concat(std::initializer_list<Var> parts, std::size_t axis) {
  return concat(std::span<const Var>(parts.begin(), parts.size()), axis);
}

Var slice(Var a, std::size_t axis, std::size_t start, std::size_t length) {
  Graph& g = graph_of(a);
  const Shape& s = a.shape();
  if (axis >= s.size() || length == 0 || start + length > s[axis]) {
    throw DimensionError("slice: [" + std::to_string(start) + ", +" + std::to_string(length) +
                         ") on axis " + std::to_string(axis) + " invalid for " + shape_string(s));
  }
  Shape out_shape = s;
  out_shape[axis] = length;
  const AxisView v = axis_view(s, axis);
  Tensor out(out_shape);
  const auto src = a.value().data();
  for (std::size_t o = 0; o < v.outer; ++o)
    std::copy_n(src.begin() + (o * v.len + start) * v.inner, length * v.inner,
                out.data().begin() + o * length * v.inner);
  const std::size_t ia = a.id();
  return g.record("slice", std::move(out), {ia}, [ia, v, start, length](Graph& g, std::size_t self) {
    const auto gy = g.grad(self).data();
    auto gx = g.grad_mut(ia).data();
    for (std::size_t o = 0; o < v.outer; ++o) {
      const double* s = gy.data() + o * length * v.inner;
      double* d = gx.data() + (o * v.len + start) * v.inner;
      for (std::size_t i = 0; i < length * v.inner; ++i) d[i] += s[i];
    }
  });
}

Var reshape(Var a, Shape shape) {
  Graph& g = graph_of(a);
  if (shape_size(shape) != a.value().size()) {
    throw DimensionError("reshape: " + shape_string(a.shape()) + " -> " + shape_string(shape));
  }
  Tensor out(std::move(shape), std::vector<double>(a.value().data().begin(), a.value().data().end()));
  const std::size_t ia = a.id();
  return g.record("reshape", std::move(out), {ia}, [ia](Graph& g, std::size_t self) {
    const auto gy = g.grad(self).data();
    auto gx = g.grad_mut(ia).data();
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += gy[i];
  });
}

Var sum(Var a) {
  Graph& g = graph_of(a);
  const std::size_t ia = a.id();
  return g.record("sum", Tensor::scalar(a.value().sum()), {ia}, [ia](Graph& g, std::size_t self) {
    const double gy = g.grad(self)[0];
    for (double& x : g.grad_mut(ia).data()) x += gy;
  });
}

Var mean(Var a) { return scale(sum(a), 1.0 / static_cast<double>(a.value().size())); }

Var dropout(Var a, double p, Mode mode, Rng& rng) {
  if (!(p >= 0.0 && p < 1.0)) throw ConfigError("dropout probability must be in [0, 1), got " + std::to_string(p));
  if (mode == Mode::kEval || p == 0.0) return a;
  Graph& g = graph_of(a);
  const double keep_scale = 1.0 / (1.0 - p);
  Tensor mask(a.shape());
  for (double& m : mask.data()) m = rng.bernoulli(p) ? 0.0 : keep_scale;
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= mask[i];
  const std::size_t ia = a.id();
  return g.record("dropout", std::move(out), {ia}, [ia, mask = std::move(mask)](Graph& g, std::size_t self) {
    const auto gy = g.grad(self).data();
    auto gx = g.grad_mut(ia).data();
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += gy[i] * mask[i];
  });
}

Var dropout(Var a, double p) {
  Graph& g = graph_of(a);
  if (!(p >= 0.0 && p < 1.0)) throw ConfigError("dropout probability must be in [0, 1), got " + std::to_string(p));
  if (!g.training() || p == 0.0) return a;
  return dropout(a, p, g.mode(), g.rng());
}

Var gather_rows(Var table, std::span<const std::size_t> ids) {
  Graph& g = graph_of(table);
  require_rank2(table, "gather_rows");
  const std::size_t vocab = table.value().rows(), d = table.value().cols();
  if (ids.empty()) throw DimensionError("gather_rows: empty id list");
  Tensor out({ids.size(), d});
  for (std::size_t r = 0; r < ids.size(); ++r) {
    if (ids[r] >= vocab) {
      throw ContractError("gather_rows: id " + std::to_string(ids[r]) + " outside table of " +
                          std::to_string(vocab) + " rows");
    }
    std::copy_n(table.value().data().begin() + ids[r] * d, d, out.data().begin() + r * d);
  }
  const std::size_t it = table.id();
  std::vector<std::size_t> idv(ids.begin(), ids.end());
  return g.record("gather_rows", std::move(out), {it}, [it, idv = std::move(idv), d](Graph& g, std::size_t self) {
    const auto gy = g.grad(self).data();
    auto gt = g.grad_mut(it).data();
    for (std::size_t r = 0; r < idv.size(); ++r)
      for (std::size_t c = 0; c < d; ++c) gt[idv[r] * d + c] += gy[r * d + c];
  });
}

Var embedding_lookup(Graph& g, Parameter& table, std::span<const std::size_t> ids) {
  if (table.value.rank() != 2) throw DimensionError("embedding_lookup: table must be rank 2");
  const std::size_t vocab = table.value.rows(), d = table.value.cols();
  if (ids.empty()) throw DimensionError("embedding_lookup: empty id list");
  Tensor out({ids.size(), d});
  for (std::size_t r = 0; r < ids.size(); ++r) {
    if (ids[r] >= vocab) {
      throw ContractError("embedding_lookup: id " + std::to_string(ids[r]) + " outside table '" +
                          table.name + "' of " + std::to_string(vocab) + " rows");
    }
    std::copy_n(table.value.data().begin() + ids[r] * d, d, out.data().begin() + r * d);
  }
  if (!table.trainable) return g.constant(std::move(out));
  std::vector<std::size_t> idv(ids.begin(), ids.end());
  return g.record_sink("embedding_lookup", std::move(out), [p = &table, idv = std::move(idv), d](Graph& g, std::size_t self) {
    const auto gy = g.grad(self).data();
    auto gt = p->grad.data();
    for (std::size_t r = 0; r < idv.size(); ++r)
      for (std::size_t c = 0; c < d; ++c) gt[idv[r] * d + c] += gy[r * d + c];
  });
}

Var biaffine_scores(Var dep, Var head, Var u, Var w, Var b) {
  Graph& g = graph_of(dep, head);
  graph_of(dep, u);
  graph_of(dep, w);
  graph_of(dep, b);
  require_rank2(dep, "biaffine_scores");
  require_rank2(head, "biaffine_scores");
  const std::size_t n = dep.value().rows(), d = dep.value().cols();
  if (head.value().rows() != n || head.value().cols() != d) {
    throw DimensionError("biaffine_scores: dep " + shape_string(dep.shape()) + " vs head " +
                         shape_string(head.shape()));
  }
  if (u.value().rank() != 3 || u.value().dim(1) != d || u.value().dim(2) != d) {
    throw DimensionError("biaffine_scores: U must be [c x d x d], got " + shape_string(u.shape()));
  }
  const std::size_t c = u.value().dim(0);
  if (w.value().rank() != 2 || w.value().rows() != c || w.value().cols() != 2 * d) {
    throw DimensionError("biaffine_scores: W must be [c x 2d], got " + shape_string(w.shape()));
  }
  if (b.value().size() != c) {
    throw DimensionError("biaffine_scores: b must have c entries, got " + shape_string(b.shape()));
  }
  const double* D = dep.value().data().data();
  const double* H = head.value().data().data();
  const double* U = u.value().data().data();
  const double* W = w.value().data().data();
  const double* B = b.value().data().data();

  // T_k = D U_k  ([c][n x d]); per-row linear terms.
  std::vector<double> t(c * n * d, 0.0), lin_dep(c * n, 0.0), lin_head(c * n, 0.0);
  for (std::size_t k = 0; k < c; ++k) {
    linalg::gemm_nn(D, U + k * d * d, t.data() + k * n * d, n, d, d);
    for (std::size_t i = 0; i < n; ++i) {
      double sd = 0.0, sh = 0.0;
      for (std::size_t p = 0; p < d; ++p) {
        sd += W[k * 2 * d + p] * D[i * d + p];
        sh += W[k * 2 * d + d + p] * H[i * d + p];
      }
      lin_dep[k * n + i] = sd;
      lin_head[k * n + i] = sh;
    }
  }
  Tensor out({n, n, c});
  std::vector<double> bil(n * n);
  for (std::size_t k = 0; k < c; ++k) {
    std::fill(bil.begin(), bil.end(), 0.0);
    linalg::gemm_nt(t.data() + k * n * d, H, bil.data(), n, d, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        out.at(i, j, k) = bil[i * n + j] + lin_dep[k * n + i] + lin_head[k * n + j] + B[k];
  }

  const std::size_t id = dep.id(), ih = head.id(), iu = u.id(), iw = w.id(), ib = b.id();
  return g.record(
      "biaffine_scores", std::move(out), {id, ih, iu, iw, ib},
      [id, ih, iu, iw, ib, n, d, c, t = std::move(t)](Graph& g, std::size_t self) {
        const Tensor& G = g.grad(self);
        const double* D = g.value(id).data().data();
        const double* H = g.value(ih).data().data();
        const double* U = g.value(iu).data().data();
        const double* W = g.value(iw).data().data();
        std::vector<double> gk(n * n), row_sum(n), col_sum(n), dt(n * d);
        std::vector<double> gD(n * d, 0.0), gH(n * d, 0.0);
        Tensor* gU = g.requires_grad(iu) ? &g.grad_mut(iu) : nullptr;
        Tensor* gW = g.requires_grad(iw) ? &g.grad_mut(iw) : nullptr;
        Tensor* gB = g.requires_grad(ib) ? &g.grad_mut(ib) : nullptr;
        for (std::size_t k = 0; k < c; ++k) {
          std::fill(row_sum.begin(), row_sum.end(), 0.0);
          std::fill(col_sum.begin(), col_sum.end(), 0.0);
          for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
              const double v = G.at(i, j, k);
              gk[i * n + j] = v;
              row_sum[i] += v;
              col_sum[j] += v;
            }
          // dT_k = G_k H ; dH += G_k^T T_k
          std::fill(dt.begin(), dt.end(), 0.0);
          linalg::gemm_nn(gk.data(), H, dt.data(), n, n, d);
          linalg::gemm_tn(gk.data(), t.data() + k * n * d, gH.data(), n, n, d);
          // dU_k = D^T dT_k ; dD += dT_k U_k^T
          if (gU) linalg::gemm_tn(D, dt.data(), gU->data().data() + k * d * d, d, n, d);
          linalg::gemm_nt(dt.data(), U + k * d * d, gD.data(), n, d, d);
          for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t p = 0; p < d; ++p) {
              gD[i * d + p] += row_sum[i] * W[k * 2 * d + p];
              gH[i * d + p] += col_sum[i] * W[k * 2 * d + d + p];
              if (gW) {
                gW->at(k, p) += row_sum[i] * D[i * d + p];
                gW->at(k, d + p) += col_sum[i] * H[i * d + p];
              }
            }
            if (gB) (*gB)[k] += row_sum[i];
          }
        }
        if (g.requires_grad(id)) {
          auto dst = g.grad_mut(id).data();
          for (std::size_t i = 0; i < gD.size(); ++i) dst[i] += gD[i];
        }
        if (g.requires_grad(ih)) {
          auto dst = g.grad_mut(ih).data();
          for (std::size_t i = 0; i < gH.size(); ++i) dst[i] += gH[i];
        }
      });
}

Var sigmoid_bce_mean(Var logits, const Tensor& target, const Tensor& mask) {
  Graph& g = graph_of(logits);
  if (target.shape() != logits.shape() || mask.shape() != logits.shape()) {
    throw DimensionError("sigmoid_bce_mean: logits " + shape_string(logits.shape()) + ", target " +
                         shape_string(target.shape()) + ", mask " + shape_string(mask.shape()));
  }
  const auto x = logits.value().data();
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (mask[i] == 0.0) continue;
    // log(1 + e^x) - y x, evaluated stably.
    total += std::max(x[i], 0.0) - x[i] * target[i] + std::log1p(std::exp(-std::abs(x[i])));
    ++count;
  }
  const double denom = count ? static_cast<double>(count) : 1.0;
  const std::size_t il = logits.id();
  return g.record("sigmoid_bce_mean", Tensor::scalar(total / denom), {il},
                  [il, target, mask, denom](Graph& g, std::size_t self) {
                    const double gy = g.grad(self)[0];
                    const auto x = g.value(il).data();
                    auto gx = g.grad_mut(il).data();
                    for (std::size_t i = 0; i < x.size(); ++i) {
                      if (mask[i] == 0.0) continue;
                      const double s = x[i] >= 0.0 ? 1.0 / (1.0 + std::exp(-x[i]))
                                                   : std::exp(x[i]) / (1.0 + std::exp(x[i]));
                      gx[i] += gy * (s - target[i]) / denom;
                    }
                  });
}

Var softmax_xent_cells(Var logits, std::span<const CellTarget> targets) {
  Graph& g = graph_of(logits);
  if (logits.value().rank() != 3) {
    throw DimensionError("softmax_xent_cells: expected [N x N x c], got " + shape_string(logits.shape()));
  }
  const Tensor& x = logits.value();
  const std::size_t c = x.dim(2);
  std::vector<CellTarget> tv(targets.begin(), targets.end());
  std::vector<double> probs(tv.size() * c);
  double total = 0.0;
  for (std::size_t t = 0; t < tv.size(); ++t) {
    const auto& ct = tv[t];
    if (ct.row >= x.dim(0) || ct.col >= x.dim(1) || ct.label >= c) {
      throw DimensionError("softmax_xent_cells: target out of range");
    }
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < c; ++k) mx = std::max(mx, x.at(ct.row, ct.col, k));
    double z = 0.0;
    for (std::size_t k = 0; k < c; ++k) z += std::exp(x.at(ct.row, ct.col, k) - mx);
    for (std::size_t k = 0; k < c; ++k) probs[t * c + k] = std::exp(x.at(ct.row, ct.col, k) - mx) / z;
    total += -(x.at(ct.row, ct.col, ct.label) - mx - std::log(z));
  }
  const double denom = tv.empty() ? 1.0 : static_cast<double>(tv.size());
  const std::size_t il = logits.id();
  return g.record("softmax_xent_cells", Tensor::scalar(total / denom), {il},
                  [il, tv = std::move(tv), probs = std::move(probs), c, denom](Graph& g, std::size_t self) {
                    const double gy = g.grad(self)[0];
                    Tensor& gx = g.grad_mut(il);
                    for (std::size_t t = 0; t < tv.size(); ++t) {
                      const auto& ct = tv[t];
                      for (std::size_t k = 0; k < c; ++k) {
                        const double ind = k == ct.label ? 1.0 : 0.0;
                        gx.at(ct.row, ct.col, k) += gy * (probs[t * c + k] - ind) / denom;
                      }
                    }
                  });
}

}  // namespace hosdp
