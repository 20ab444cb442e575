#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "hosdp/autograd.hpp"

namespace hosdp {

struct AdamState {
  double lr = 1e-2;
  double beta1 = 0.95;
  double beta2 = 0.95;
  double eps = 1e-8;
  std::uint64_t t = 0;
  std::vector<Tensor> m;
  std::vector<Tensor> v;
};

// One bias-corrected Adam update of every parameter from its accumulated
// grad. Moments are created on the first call; t is incremented before use.
void adam_step(std::span<Parameter* const> params, AdamState& state);

}  // namespace hosdp
