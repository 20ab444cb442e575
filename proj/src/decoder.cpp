#include "hosdp/decoder.hpp"

#include "hosdp/error.hpp"
#include "hosdp/init.hpp"
#include "hosdp/ops.hpp"

namespace hosdp {

Affine make_affine(ParameterStore& store, const std::string& prefix, std::size_t in,
                   std::size_t out, Rng& rng) {
  Affine a;
  a.w = &store.add(prefix + ".w", xavier_uniform(in, out, rng));
  a.b = &store.add(prefix + ".b", Tensor({1, out}, 0.0));
  return a;
}

Var affine(Graph& g, Var x, const Affine& a) {
  return add_row(matmul(x, g.param(*a.w)), g.param(*a.b));
}

MlpHeads make_mlp_heads(ParameterStore& store, const std::string& prefix, std::size_t in,
                        std::size_t out, Rng& rng) {
  MlpHeads h;
  h.edge_head = make_affine(store, prefix + ".edge_head", in, out, rng);
  h.edge_dep = make_affine(store, prefix + ".edge_dep", in, out, rng);
  h.label_head = make_affine(store, prefix + ".label_head", in, out, rng);
  h.label_dep = make_affine(store, prefix + ".label_dep", in, out, rng);
  return h;
}

Splits mlp_split(Graph& g, Var r, const MlpHeads& heads, double p) {
  auto one = [&](const Affine& a) { return dropout(relu(affine(g, r, a)), p); };
  return {one(heads.edge_head), one(heads.edge_dep), one(heads.label_head), one(heads.label_dep)};
}

BiaffineParams make_biaffine(ParameterStore& store, const std::string& prefix, std::size_t d,
                             std::size_t channels, Rng& rng) {
  if (channels == 0) throw ConfigError("biaffine scorer needs at least one output channel");
  Tensor u({channels, d, d});
  for (std::size_t k = 0; k < channels; ++k) {
    Tensor block = xavier_uniform(d, d, rng);
    std::copy(block.data().begin(), block.data().end(),
              u.data().begin() + static_cast<std::ptrdiff_t>(k * d * d));
  }
  BiaffineParams p;
  p.u = &store.add(prefix + ".u", std::move(u));
  p.w = &store.add(prefix + ".w", xavier_uniform(channels, 2 * d, rng));
  p.b = &store.add(prefix + ".b", Tensor({1, channels}, 0.0));
  return p;
}

Var biaffine(Var x1, Var x2, Var u, Var w, Var b) {
  if (u.value().rank() != 3) throw DimensionError("biaffine: U must be [c x d x d]");
  std::size_t c = u.value().dim(0), d = u.value().dim(1);
  if (x1.shape() != Shape{1, d} || x2.shape() != Shape{1, d})
    throw DimensionError("biaffine: inputs must be [1x" + std::to_string(d) + "]");
  Var ux2 = reshape(matmul(reshape(u, {c * d, d}), transpose(x2)), {c, d});
  Var bilinear = matmul(ux2, transpose(x1));
  Var linear = matmul(w, transpose(concat({x1, x2}, 1)));
  return add_row(transpose(add(bilinear, linear)), b);
}

Scores score_graph(Graph& g, const Splits& s, const BiaffineParams& edge,
                   const BiaffineParams& label) {
  if (edge.channels() != 1) throw DimensionError("score_graph: edge scorer must have one channel");
  std::size_t n = s.edge_dep.value().rows();
  Var e = biaffine_scores(s.edge_dep, s.edge_head, g.param(*edge.u), g.param(*edge.w),
                          g.param(*edge.b));
  Var l = biaffine_scores(s.label_dep, s.label_head, g.param(*label.u), g.param(*label.w),
                          g.param(*label.b));
  return {reshape(e, {n, n}), l};
}

SemanticGraph decode(const Tensor& s_edge, const Tensor& s_label,
                     std::span<const std::string> labels) {
  if (s_edge.rank() != 2 || s_edge.rows() != s_edge.cols() || s_edge.rows() == 0)
    throw DimensionError("decode: edge scores must be square, got " + shape_string(s_edge.shape()));
  std::size_t n = s_edge.rows();
  if (s_label.rank() != 3 || s_label.dim(0) != n || s_label.dim(1) != n ||
      s_label.dim(2) != labels.size() || labels.empty())
    throw DimensionError("decode: label scores " + shape_string(s_label.shape()) +
                         " do not match " + std::to_string(labels.size()) + " labels");
  if (!s_edge.all_finite() || !s_label.all_finite())
    throw NumericError("decode: non-finite scores");
  std::size_t c = labels.size();
  SemanticGraph graph(n - 1);
  for (std::size_t i = 1; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j || !(s_edge.at(i, j) > 0.0)) continue;
      if (j == 0) {
        graph.add_edge(0, i, kRootLabel);
        continue;
      }
      std::size_t best = 0;
      for (std::size_t k = 1; k < c; ++k)
        if (s_label.at(i, j, k) > s_label.at(i, j, best)) best = k;
      graph.add_edge(j, i, labels[best]);
    }
  }
  return graph;
}

Decoder::Decoder(ParameterStore& store, const std::string& prefix, std::size_t input_dim,
                 std::size_t mlp_dim, double dropout, std::size_t n_labels, Rng& rng)
    : mlp_(make_mlp_heads(store, prefix + ".mlp", input_dim, mlp_dim, rng)),
      edge_(make_biaffine(store, prefix + ".edge", mlp_dim, 1, rng)),
      label_(make_biaffine(store, prefix + ".label", mlp_dim, n_labels, rng)),
      dropout_(dropout) {}

Scores Decoder::score(Graph& g, Var r) const {
  return score_graph(g, mlp_split(g, r, mlp_, dropout_), edge_, label_);
}

}  // namespace hosdp
