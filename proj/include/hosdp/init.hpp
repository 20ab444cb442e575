#pragma once

#include "hosdp/rng.hpp"
#include "hosdp/tensor.hpp"

namespace hosdp {

// Uniform in +-sqrt(6 / (fan_in + fan_out)) for a [rows x cols] matrix.
Tensor xavier_uniform(std::size_t rows, std::size_t cols, Rng& rng);
// Square matrix with orthonormal rows (Gram-Schmidt on Gaussian draws).
Tensor orthogonal(std::size_t n, Rng& rng);
// Uniform in +-sqrt(3 / cols): unit-variance rows after scaling by sqrt(cols).
Tensor embedding_init(std::size_t rows, std::size_t cols, Rng& rng);

}  // namespace hosdp
