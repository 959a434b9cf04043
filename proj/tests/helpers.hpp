#pragma once

#include <string>
#include <vector>

#include "ixsum/expr.hpp"
#include "ixsum/formats.hpp"
#include "ixsum/plan.hpp"
#include "ixsum/synth.hpp"
#include "ixsum/tensor.hpp"

namespace ixsum::test {

// 4x4 matrix with per-row occupancy [3,1,1,2] (7 nonzeros), the running
// example for grouping and the cost model.
inline Tensor occ3112_matrix() {
  return Tensor::from_real({4, 4}, {1, 2, 0, 3,   //
                                    0, 4, 0, 0,   //
                                    0, 0, 5, 0,   //
                                    6, 0, 0, 7});
}

// Independent dense matmul, the reference for SpMM-shaped checks.
inline Tensor naive_matmul(const Tensor& a, const Tensor& b) {
  int64_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  Tensor c = Tensor::zeros(a.kind(), {m, n});
  for (int64_t i = 0; i < m; ++i) {
    for (int64_t j = 0; j < n; ++j) {
      for (int64_t t = 0; t < k; ++t) {
        if (a.is_int()) {
          c.int_at(i * n + j) += a.int_at(i * k + t) * b.int_at(t * n + j);
        } else {
          c.real_at(i * n + j) += a.real_at(i * k + t) * b.real_at(t * n + j);
        }
      }
    }
  }
  return c;
}

// Group count by direct evaluation of sum_i ceil(occ_i / g).
inline int64_t count_groups(const std::vector<int64_t>& occ, int64_t g) {
  int64_t total = 0;
  for (int64_t o : occ) total += (o + g - 1) / g;
  return total;
}

inline EinsumStmt inferred(const std::string& expr, const ShapeMap& shapes) {
  return infer_extents(parse(expr), shapes);
}

inline ShapeMap shapes_of(const TensorMap& tensors, const std::string& out_name,
                          const std::vector<int64_t>& out_shape) {
  ShapeMap shapes;
  for (const auto& [name, t] : tensors) shapes[name] = t.shape();
  shapes[out_name] = out_shape;
  return shapes;
}

}  // namespace ixsum::test
