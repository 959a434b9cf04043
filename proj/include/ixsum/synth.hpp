#pragma once

#include <cstdint>
#include <random>

#include "ixsum/formats.hpp"
#include "ixsum/tensor.hpp"

namespace ixsum {

// Reproducible synthetic inputs (fixed-seed mt19937_64 throughout).
// Int64 values are small nonzero integers so products stay exact; real64
// values are uniform in [-1, 1] away from zero.

using Rng = std::mt19937_64;

Tensor synth_dense(std::vector<int64_t> shape, ElemKind kind, Rng& rng);

/// Dense matrix with approximately `density` nonzero fraction.
Tensor synth_sparse_matrix(int64_t rows, int64_t cols, double density, ElemKind kind, Rng& rng);

/// Block-sparse matrix: each block_rows x block_cols tile is dense with
/// probability block_density, zero otherwise.
Tensor synth_block_sparse_matrix(int64_t rows, int64_t cols, int64_t block_rows,
                                 int64_t block_cols, double block_density, ElemKind kind,
                                 Rng& rng);

/// Rank-n COO with `nnz` distinct coordinates (canonically sorted).
CooTensor synth_coo_tensor(std::vector<int64_t> shape, int64_t nnz, ElemKind kind, Rng& rng);

}  // namespace ixsum
