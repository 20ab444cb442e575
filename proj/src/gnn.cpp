#include "hosdp/gnn.hpp"

#include <iostream>

#include "hosdp/error.hpp"
#include "hosdp/init.hpp"
#include "hosdp/ops.hpp"

namespace hosdp {

std::vector<std::vector<std::size_t>> neighborhood(const AdjMatrix& adj, NeighborMode mode) {
  std::size_t n = adj.dim();
  std::vector<std::vector<std::size_t>> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      bool heads = adj.at(j, i);  // j -> i
      bool deps = adj.at(i, j);   // i -> j
      bool in = mode == NeighborMode::kSymmetric ? (heads || deps)
                : mode == NeighborMode::kHeads   ? heads
                                                 : deps;
      if (in) out[i].push_back(j);
    }
  }
  return out;
}

Tensor neighbor_mask(const AdjMatrix& adj, NeighborMode mode) {
  std::size_t n = adj.dim();
  Tensor m({n, n}, 0.0);
  auto nb = neighborhood(adj, mode);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j : nb[i]) m.at(i, j) = 1.0;
  return m;
}

Var gcn_layer(Graph& g, Var r, const Tensor& mask, Var w, Var b) {
  std::size_t n = r.value().rows();
  if (mask.shape() != Shape{n, n})
    throw DimensionError("gcn_layer: mask " + shape_string(mask.shape()) + " for " +
                         std::to_string(n) + " nodes");
  Var agg = matmul(g.constant(mask), r);
  return relu(add(matmul(agg, w), matmul(r, b)));
}

Var gat_layer(Graph& g, Var r, const Tensor& mask, const GatVars& v, std::size_t heads,
              double alpha, std::vector<Tensor>* attention) {
  std::size_t n = r.value().rows();
  if (mask.shape() != Shape{n, n})
    throw DimensionError("gat_layer: mask " + shape_string(mask.shape()) + " for " +
                         std::to_string(n) + " nodes");
  if (heads == 0 || v.proj.value().cols() % heads != 0)
    throw DimensionError("gat_layer: projection width not divisible by head count");
  std::size_t dh = v.proj.value().cols() / heads;
  Var projected = matmul(r, v.proj);
  Var ones_row = g.constant(Tensor({1, n}, 1.0));
  Var ones_col = g.constant(Tensor({n, 1}, 1.0));
  if (attention) attention->clear();
  Var summed;
  for (std::size_t m = 0; m < heads; ++m) {
    Var pm = slice(projected, 1, m * dh, dh);
    Var src = matmul(pm, slice(v.a_src, 1, m, 1));  // [n x 1]
    Var dst = matmul(pm, slice(v.a_dst, 1, m, 1));  // [n x 1]
    Var logits = leaky_relu(add(matmul(src, ones_row), matmul(ones_col, transpose(dst))), alpha);
    Var att = masked_softmax_rows(logits, mask);
    if (attention) attention->push_back(att.value());
    Var head = matmul(att, pm);
    summed = summed.valid() ? add(summed, head) : head;
  }
  Var avg = scale(summed, 1.0 / static_cast<double>(heads));
  return relu(add(matmul(avg, v.w), matmul(r, v.b)));
}

namespace {

Tensor scaled(Tensor t, double f) {
  for (double& x : t.data()) x *= f;
  return t;
}

// Self transform starts close to the identity so a fresh stack passes the
// encoder output through; neighbor messages start small.
Tensor near_identity(std::size_t dim, Rng& rng) {
  Tensor t = scaled(xavier_uniform(dim, dim, rng), 0.1);
  for (std::size_t i = 0; i < dim; ++i) t.at(i, i) += 1.0;
  return t;
}

}  // namespace

GnnStack::GnnStack(ParameterStore& store, const std::string& prefix, const GnnConfig& cfg,
                   std::size_t dim, Rng& rng)
    : cfg_(cfg) {
  cfg.validate(dim);
  if (cfg.layers > kOversmoothingWarnLayers)
    std::cerr << "warning: " << cfg.layers
              << " GNN layers; node representations tend to over-smooth beyond "
              << kOversmoothingWarnLayers << "\n";
  for (std::size_t k = 0; k < cfg.layers; ++k) {
    std::string base = prefix + ".l" + std::to_string(k);
    if (cfg.variant == GnnVariant::kGcn) {
      GcnParams p;
      p.w = &store.add(base + ".w", scaled(xavier_uniform(dim, dim, rng), 0.1));
      p.b = &store.add(base + ".b", near_identity(dim, rng));
      gcn_.push_back(p);
    } else {
      std::size_t dh = dim / cfg.heads;
      GatParams p;
      p.proj = &store.add(base + ".proj", xavier_uniform(dim, dim, rng));
      p.a_src = &store.add(base + ".a_src", xavier_uniform(dh, cfg.heads, rng));
      p.a_dst = &store.add(base + ".a_dst", xavier_uniform(dh, cfg.heads, rng));
      p.w = &store.add(base + ".w", xavier_uniform(dh, dim, rng));
      p.b = &store.add(base + ".b", near_identity(dim, rng));
      gat_.push_back(p);
    }
  }
}

Var GnnStack::forward(Graph& g, Var r0, const AdjMatrix& adj) const {
  if (adj.dim() != r0.value().rows())
    throw DimensionError("gnn: adjacency of dim " + std::to_string(adj.dim()) + " for " +
                         std::to_string(r0.value().rows()) + " nodes");
  Tensor mask = neighbor_mask(adj, cfg_.neighbors);
  Var r = r0;
  for (std::size_t k = 0; k < cfg_.layers; ++k) {
    if (k > 0) r = dropout(r, cfg_.dropout);
    if (cfg_.variant == GnnVariant::kGcn) {
      r = gcn_layer(g, r, mask, g.param(*gcn_[k].w), g.param(*gcn_[k].b));
    } else {
      const GatParams& p = gat_[k];
      GatVars v{g.param(*p.proj), g.param(*p.a_src), g.param(*p.a_dst), g.param(*p.w),
                g.param(*p.b)};
      r = gat_layer(g, r, mask, v, cfg_.heads, cfg_.alpha);
    }
  }
  return r;
}

}  // namespace hosdp
