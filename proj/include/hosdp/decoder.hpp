#pragma once

#include <span>
#include <string>
#include <vector>

#include "hosdp/autograd.hpp"
#include "hosdp/sdp.hpp"

namespace hosdp {

// x * w + b with w [in x out], b [1 x out].
struct Affine {
  Parameter* w = nullptr;
  Parameter* b = nullptr;
};

Affine make_affine(ParameterStore& store, const std::string& prefix, std::size_t in,
                   std::size_t out, Rng& rng);
Var affine(Graph& g, Var x, const Affine& a);

struct MlpHeads {
  Affine edge_head;
  Affine edge_dep;
  Affine label_head;
  Affine label_dep;
};

MlpHeads make_mlp_heads(ParameterStore& store, const std::string& prefix, std::size_t in,
                        std::size_t out, Rng& rng);

struct Splits {
  Var edge_head;
  Var edge_dep;
  Var label_head;
  Var label_dep;
};

// Four independent ReLU layers over the node matrix, dropout in train mode.
Splits mlp_split(Graph& g, Var r, const MlpHeads& heads, double dropout);

// u [c x d x d], w [c x 2d], b [1 x c]; c = 1 for the edge scorer.
struct BiaffineParams {
  Parameter* u = nullptr;
  Parameter* w = nullptr;
  Parameter* b = nullptr;

  std::size_t channels() const { return u->value.dim(0); }
};

BiaffineParams make_biaffine(ParameterStore& store, const std::string& prefix, std::size_t d,
                             std::size_t channels, Rng& rng);

// One pair, x1 [1 x d] and x2 [1 x d] -> [1 x c]:
//   x1^T U_k x2 + W_k (x1 ++ x2) + b_k
// Built from generic ops; the batched scorer is checked against it.
Var biaffine(Var x1, Var x2, Var u, Var w, Var b);

struct Scores {
  Var edge;   // [N x N], row = dependent, column = head
  Var label;  // [N x N x c]
};

Scores score_graph(Graph& g, const Splits& splits, const BiaffineParams& edge,
                   const BiaffineParams& label);

// Edge head j -> dependent i iff s_edge[i][j] > 0, i != j and i != 0. The
// label is the highest-scoring channel (lowest id on ties), except that arcs
// from ROOT always carry the ROOT label.
SemanticGraph decode(const Tensor& s_edge, const Tensor& s_label,
                     std::span<const std::string> labels);

// MLP split plus both biaffine scorers.
class Decoder {
 public:
  Decoder(ParameterStore& store, const std::string& prefix, std::size_t input_dim,
          std::size_t mlp_dim, double dropout, std::size_t n_labels, Rng& rng);

  Scores score(Graph& g, Var r) const;

  const MlpHeads& mlp() const { return mlp_; }
  const BiaffineParams& edge() const { return edge_; }
  const BiaffineParams& label() const { return label_; }

 private:
  MlpHeads mlp_;
  BiaffineParams edge_;
  BiaffineParams label_;
  double dropout_;
};

}  // namespace hosdp
