#include "hosdp/init.hpp"

#include <cmath>

namespace hosdp {

Tensor xavier_uniform(std::size_t rows, std::size_t cols, Rng& rng) {
  Tensor t({rows, cols});
  double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
  for (double& v : t.data()) v = rng.uniform(-bound, bound);
  return t;
}

Tensor orthogonal(std::size_t n, Rng& rng) {
  Tensor t({n, n});
  auto d = t.data();
  for (std::size_t r = 0; r < n; ++r) {
    double* row = d.data() + r * n;
    double norm = 0.0;
    // Redraw in the (measure-zero) event the row collapses.
    while (norm < 1e-8) {
      for (std::size_t c = 0; c < n; ++c) row[c] = rng.normal();
      for (std::size_t q = 0; q < r; ++q) {
        const double* prev = d.data() + q * n;
        double dot = 0.0;
        for (std::size_t c = 0; c < n; ++c) dot += row[c] * prev[c];
        for (std::size_t c = 0; c < n; ++c) row[c] -= dot * prev[c];
      }
      norm = 0.0;
      for (std::size_t c = 0; c < n; ++c) norm += row[c] * row[c];
      norm = std::sqrt(norm);
    }
    for (std::size_t c = 0; c < n; ++c) row[c] /= norm;
  }
  return t;
}

Tensor embedding_init(std::size_t rows, std::size_t cols, Rng& rng) {
  Tensor t({rows, cols});
  double bound = std::sqrt(3.0 / static_cast<double>(cols));
  for (double& v : t.data()) v = rng.uniform(-bound, bound);
  return t;
}

}  // namespace hosdp
