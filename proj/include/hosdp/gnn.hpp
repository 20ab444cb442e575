#pragma once

#include <string>
#include <vector>

#include "hosdp/autograd.hpp"
#include "hosdp/config.hpp"
#include "hosdp/sdp.hpp"

namespace hosdp {

// N(i) for every node of Ã, ascending; i itself is never included.
std::vector<std::vector<std::size_t>> neighborhood(const AdjMatrix& adj, NeighborMode mode);
// mask[i][j] = 1 iff j is in N(i).
Tensor neighbor_mask(const AdjMatrix& adj, NeighborMode mode);

// Row-vector convention: r'_i = relu(sum_{j in N(i)} r_j * w + r_i * b).
struct GcnParams {
  Parameter* w = nullptr;  // [d_in x d_out]
  Parameter* b = nullptr;  // [d_in x d_out]
};

// Heads share one packed projection; head m owns columns [m*dh, (m+1)*dh).
struct GatParams {
  Parameter* proj = nullptr;   // [d_in x heads*dh]
  Parameter* a_src = nullptr;  // [dh x heads], scores the attending node i
  Parameter* a_dst = nullptr;  // [dh x heads], scores the neighbor j
  Parameter* w = nullptr;      // [dh x d_out]
  Parameter* b = nullptr;      // [d_in x d_out]
};

Var gcn_layer(Graph& g, Var r, const Tensor& mask, Var w, Var b);

struct GatVars {
  Var proj, a_src, a_dst, w, b;
};
// Attention per head is a masked row softmax of
//   leaky_relu(a_src . P r_i + a_dst . P r_j)
// over N(i); head outputs are averaged before w. When `attention` is given it
// receives one [N x N] matrix per head.
Var gat_layer(Graph& g, Var r, const Tensor& mask, const GatVars& vars, std::size_t heads,
              double alpha, std::vector<Tensor>* attention = nullptr);

class GnnStack {
 public:
  GnnStack(ParameterStore& store, const std::string& prefix, const GnnConfig& cfg, std::size_t dim,
           Rng& rng);

  // K layers with per-layer parameters; dropout before every layer but the
  // first in train mode.
  Var forward(Graph& g, Var r0, const AdjMatrix& adj) const;

  const GnnConfig& config() const { return cfg_; }
  const std::vector<GcnParams>& gcn() const { return gcn_; }
  const std::vector<GatParams>& gat() const { return gat_; }

 private:
  GnnConfig cfg_;
  std::vector<GcnParams> gcn_;
  std::vector<GatParams> gat_;
};

inline constexpr std::size_t kOversmoothingWarnLayers = 6;

}  // namespace hosdp
