#include "ixsum/synth.hpp"

#include <algorithm>
#include <set>

namespace ixsum {

namespace {

int64_t nonzero_int(Rng& rng) {
  std::uniform_int_distribution<int64_t> dist(1, 4);
  std::bernoulli_distribution sign(0.5);
  int64_t v = dist(rng);
  return sign(rng) ? v : -v;
}

double nonzero_real(Rng& rng) {
  std::uniform_real_distribution<double> dist(0.125, 1.0);
  std::bernoulli_distribution sign(0.5);
  double v = dist(rng);
  return sign(rng) ? v : -v;
}

void fill_nonzero(Tensor& t, ElemKind kind, Rng& rng) {
  for (int64_t i = 0; i < t.numel(); ++i) {
    if (kind == ElemKind::Int64) {
      t.int_at(i) = nonzero_int(rng);
    } else {
      t.real_at(i) = nonzero_real(rng);
    }
  }
}

}  // namespace

Tensor synth_dense(std::vector<int64_t> shape, ElemKind kind, Rng& rng) {
  Tensor t = Tensor::zeros(kind, std::move(shape));
  fill_nonzero(t, kind, rng);
  return t;
}

Tensor synth_sparse_matrix(int64_t rows, int64_t cols, double density, ElemKind kind, Rng& rng) {
  Tensor t = Tensor::zeros(kind, {rows, cols});
  std::bernoulli_distribution keep(density);
  for (int64_t i = 0; i < t.numel(); ++i) {
    if (!keep(rng)) continue;
    if (kind == ElemKind::Int64) {
      t.int_at(i) = nonzero_int(rng);
    } else {
      t.real_at(i) = nonzero_real(rng);
    }
  }
  return t;
}

Tensor synth_block_sparse_matrix(int64_t rows, int64_t cols, int64_t block_rows,
                                 int64_t block_cols, double block_density, ElemKind kind,
                                 Rng& rng) {
  Tensor t = Tensor::zeros(kind, {rows, cols});
  std::bernoulli_distribution keep(block_density);
  int64_t grid_r = (rows + block_rows - 1) / block_rows;
  int64_t grid_c = (cols + block_cols - 1) / block_cols;
  for (int64_t br = 0; br < grid_r; ++br) {
    for (int64_t bc = 0; bc < grid_c; ++bc) {
      if (!keep(rng)) continue;
      for (int64_t i = br * block_rows; i < std::min((br + 1) * block_rows, rows); ++i) {
        for (int64_t j = bc * block_cols; j < std::min((bc + 1) * block_cols, cols); ++j) {
          if (kind == ElemKind::Int64) {
            t.int_at(i * cols + j) = nonzero_int(rng);
          } else {
            t.real_at(i * cols + j) = nonzero_real(rng);
          }
        }
      }
    }
  }
  return t;
}

CooTensor synth_coo_tensor(std::vector<int64_t> shape, int64_t nnz, ElemKind kind, Rng& rng) {
  int64_t capacity = 1;
  for (int64_t d : shape) capacity *= d;
  nnz = std::min(nnz, capacity);

  std::set<std::vector<int64_t>> seen;
  std::vector<std::vector<int64_t>> picked;
  while (static_cast<int64_t>(picked.size()) < nnz) {
    std::vector<int64_t> coord(shape.size());
    for (size_t d = 0; d < shape.size(); ++d) {
      std::uniform_int_distribution<int64_t> dist(0, shape[d] - 1);
      coord[d] = dist(rng);
    }
    if (seen.insert(coord).second) picked.push_back(std::move(coord));
  }
  std::sort(picked.begin(), picked.end());

  CooTensor c;
  c.shape = std::move(shape);
  c.coords.resize(c.shape.size());
  for (const auto& coord : picked) {
    for (size_t d = 0; d < coord.size(); ++d) c.coords[d].push_back(coord[d]);
  }
  c.values = Tensor::zeros(kind, {static_cast<int64_t>(picked.size())});
  fill_nonzero(c.values, kind, rng);
  return c;
}

}  // namespace ixsum
