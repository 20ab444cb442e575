#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "hosdp/autograd.hpp"

// Differentiable operations. Every op validates shapes, records a backward
// rule on the operand graph and rejects non-finite results.
namespace hosdp {

Var matmul(Var a, Var b);
Var transpose(Var a);

Var add(Var a, Var b);
// a[m x n] + row[1 x n], broadcast over rows.
Var add_row(Var a, Var row);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double s);

Var relu(Var a);
Var leaky_relu(Var a, double alpha);
Var sigmoid(Var a);
Var tanh(Var a);
Var softmax(Var a, std::size_t axis);
// Row-wise softmax restricted to entries where mask != 0. Rows with an empty
// mask produce all zeros.
Var masked_softmax_rows(Var a, const Tensor& mask);

Var concat(std::span<const Var> parts, std::size_t axis);
Var concat(std::initializer_list<Var> parts, std::size_t axis);
Var slice(Var a, std::size_t axis, std::size_t start, std::size_t length);
Var reshape(Var a, Shape shape);

Var sum(Var a);
Var mean(Var a);

// Inverted dropout: survivors are scaled by 1/(1-p); eval mode is identity.
Var dropout(Var a, double p, Mode mode, Rng& rng);
// Same, taking mode and Rng from the owning graph.
Var dropout(Var a, double p);

// Rows of a [V x d] table selected by ids -> [ids.size() x d].
Var gather_rows(Var table, std::span<const std::size_t> ids);

// Same as gather_rows on a parameter, without binding (copying) the whole
// table into the graph; gradients are scattered straight into table.grad.
Var embedding_lookup(Graph& g, Parameter& table, std::span<const std::size_t> ids);

// Batched biaffine scorer over all (dependent, head) pairs.
//   dep, head: [N x d]; u: [c x d x d]; w: [c x 2d]; b: [1 x c]
//   out[i][j][k] = dep_i^T U_k head_j + W_k (dep_i ++ head_j) + b_k
Var biaffine_scores(Var dep, Var head, Var u, Var w, Var b);

// Mean binary cross-entropy between sigmoid(logits) and target over cells
// where mask != 0.
Var sigmoid_bce_mean(Var logits, const Tensor& target, const Tensor& mask);

struct CellTarget {
  std::size_t row;
  std::size_t col;
  std::size_t label;
};
// Mean softmax cross-entropy over the listed cells of a [N x N x c] tensor.
// An empty target list yields a zero loss.
Var softmax_xent_cells(Var logits, std::span<const CellTarget> targets);

}  // namespace hosdp
