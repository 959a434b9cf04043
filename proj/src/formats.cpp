#include "ixsum/formats.hpp"

#include <algorithm>
#include <numeric>

namespace ixsum {

namespace {

bool elem_is_zero(const Tensor& t, int64_t flat) {
  return t.is_int() ? t.int_at(flat) == 0 : t.real_at(flat) == 0.0;
}

Tensor take_elems(const Tensor& src, const std::vector<int64_t>& order) {
  Tensor out = Tensor::zeros(src.kind(), {static_cast<int64_t>(order.size())});
  for (size_t i = 0; i < order.size(); ++i) {
    out.copy_elem_from(static_cast<int64_t>(i), src, order[i]);
  }
  return out;
}

}  // namespace

CooMatrix dense_to_coo(const Tensor& t) {
  if (t.rank() != 2) {
    throw ShapeError("dense_to_coo expects a rank-2 tensor, got rank " +
                     std::to_string(t.rank()));
  }
  CooMatrix c;
  c.rows = t.dim(0);
  c.cols = t.dim(1);
  std::vector<int64_t> picked;
  for (int64_t i = 0; i < c.rows; ++i) {
    for (int64_t j = 0; j < c.cols; ++j) {
      int64_t flat = i * c.cols + j;
      if (!elem_is_zero(t, flat)) {
        c.row_coord.push_back(i);
        c.col_coord.push_back(j);
        picked.push_back(flat);
      }
    }
  }
  c.values = take_elems(t, picked);
  c.canonical = true;
  return c;
}

Tensor coo_to_dense(const CooMatrix& c) {
  Tensor t = Tensor::zeros(c.values.kind(), {c.rows, c.cols});
  for (int64_t p = 0; p < c.nnz(); ++p) {
    int64_t i = c.row_coord[static_cast<size_t>(p)];
    int64_t j = c.col_coord[static_cast<size_t>(p)];
    if (i < 0 || i >= c.rows || j < 0 || j >= c.cols) {
      throw ShapeError("COO coordinate (" + std::to_string(i) + "," + std::to_string(j) +
                       ") out of range for " + std::to_string(c.rows) + "x" +
                       std::to_string(c.cols));
    }
    int64_t flat = i * c.cols + j;
    if (t.is_int()) {
      t.int_at(flat) += c.values.int_at(p);
    } else {
      t.real_at(flat) += c.values.real_at(p);
    }
  }
  return t;
}

CooMatrix canonicalize(CooMatrix c) {
  std::vector<int64_t> order(static_cast<size_t>(c.nnz()));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&c](int64_t a, int64_t b) {
    auto sa = static_cast<size_t>(a);
    auto sb = static_cast<size_t>(b);
    if (c.row_coord[sa] != c.row_coord[sb]) return c.row_coord[sa] < c.row_coord[sb];
    return c.col_coord[sa] < c.col_coord[sb];
  });
  CooMatrix out;
  out.rows = c.rows;
  out.cols = c.cols;
  out.row_coord.reserve(order.size());
  out.col_coord.reserve(order.size());
  for (int64_t idx : order) {
    out.row_coord.push_back(c.row_coord[static_cast<size_t>(idx)]);
    out.col_coord.push_back(c.col_coord[static_cast<size_t>(idx)]);
  }
  out.values = take_elems(c.values, order);
  out.canonical = true;
  return out;
}

bool structurally_equal(const CooMatrix& a, const CooMatrix& b) {
  return a.rows == b.rows && a.cols == b.cols && a.row_coord == b.row_coord &&
         a.col_coord == b.col_coord && a.values.bit_equal(b.values);
}

std::vector<int64_t> occupancy(const CooMatrix& c, int dim) {
  if (dim != 0 && dim != 1) throw ShapeError("occupancy: dim must be 0 or 1");
  int64_t extent = dim == 0 ? c.rows : c.cols;
  const auto& coord = dim == 0 ? c.row_coord : c.col_coord;
  std::vector<int64_t> occ(static_cast<size_t>(extent), 0);
  for (int64_t v : coord) occ.at(static_cast<size_t>(v))++;
  return occ;
}

int64_t GroupCooMatrix::real_count() const {
  int64_t n = 0;
  for (uint8_t m : pad_mask) n += m;
  return n;
}

int64_t GroupCooMatrix::pad_count() const {
  return static_cast<int64_t>(pad_mask.size()) - real_count();
}

GroupCooMatrix coo_to_groupcoo(const CooMatrix& c, int group_dim, int64_t g) {
  if (g < 1) throw ShapeError("group size must be >= 1, got " + std::to_string(g));
  if (group_dim != 0 && group_dim != 1) throw ShapeError("group_dim must be 0 or 1");

  // Order entries by (grouped coordinate, other coordinate).
  std::vector<int64_t> order(static_cast<size_t>(c.nnz()));
  std::iota(order.begin(), order.end(), 0);
  const auto& gcoord = group_dim == 0 ? c.row_coord : c.col_coord;
  const auto& mcoord = group_dim == 0 ? c.col_coord : c.row_coord;
  std::stable_sort(order.begin(), order.end(), [&](int64_t a, int64_t b) {
    auto sa = static_cast<size_t>(a);
    auto sb = static_cast<size_t>(b);
    if (gcoord[sa] != gcoord[sb]) return gcoord[sa] < gcoord[sb];
    return mcoord[sa] < mcoord[sb];
  });

  GroupCooMatrix gc;
  gc.rows = c.rows;
  gc.cols = c.cols;
  gc.group_dim = group_dim;
  gc.group_size = g;

  // Split each run of equal grouped coordinates into ceil(occ/g) groups.
  std::vector<int64_t> group_elem_src;  // source entry per slot, -1 for padding
  size_t i = 0;
  while (i < order.size()) {
    size_t run_end = i;
    while (run_end < order.size() &&
           gcoord[static_cast<size_t>(order[run_end])] == gcoord[static_cast<size_t>(order[i])]) {
      ++run_end;
    }
    for (size_t start = i; start < run_end; start += static_cast<size_t>(g)) {
      gc.group_coord.push_back(gcoord[static_cast<size_t>(order[i])]);
      size_t take = std::min(static_cast<size_t>(g), run_end - start);
      for (size_t k = 0; k < static_cast<size_t>(g); ++k) {
        if (k < take) {
          int64_t src = order[start + k];
          gc.member_coord.push_back(mcoord[static_cast<size_t>(src)]);
          gc.pad_mask.push_back(1);
          group_elem_src.push_back(src);
        } else {
          // Padding repeats the last real in-group coordinate.
          gc.member_coord.push_back(gc.member_coord.back());
          gc.pad_mask.push_back(0);
          group_elem_src.push_back(-1);
        }
      }
    }
    i = run_end;
  }

  int64_t total = static_cast<int64_t>(group_elem_src.size());
  gc.values = Tensor::zeros(c.values.kind(), {gc.num_groups(), g});
  for (int64_t s = 0; s < total; ++s) {
    if (group_elem_src[static_cast<size_t>(s)] >= 0) {
      gc.values.copy_elem_from(s, c.values, group_elem_src[static_cast<size_t>(s)]);
    }
  }
  return gc;
}

CooMatrix groupcoo_to_coo(const GroupCooMatrix& gc) {
  CooMatrix c;
  c.rows = gc.rows;
  c.cols = gc.cols;
  std::vector<int64_t> picked;
  for (int64_t p = 0; p < gc.num_groups(); ++p) {
    for (int64_t q = 0; q < gc.group_size; ++q) {
      int64_t slot = p * gc.group_size + q;
      if (!gc.pad_mask[static_cast<size_t>(slot)]) continue;
      int64_t gco = gc.group_coord[static_cast<size_t>(p)];
      int64_t mco = gc.member_coord[static_cast<size_t>(slot)];
      c.row_coord.push_back(gc.group_dim == 0 ? gco : mco);
      c.col_coord.push_back(gc.group_dim == 0 ? mco : gco);
      picked.push_back(slot);
    }
  }
  c.values = take_elems(gc.values, picked);
  return canonicalize(std::move(c));
}

GroupCooMatrix ell_view(const CooMatrix& c, int group_dim) {
  auto occ = occupancy(c, group_dim);
  int64_t max_occ = occ.empty() ? 0 : *std::max_element(occ.begin(), occ.end());
  return coo_to_groupcoo(c, group_dim, std::max<int64_t>(max_occ, 1));
}

bool is_ell(const GroupCooMatrix& gc) {
  // One group per distinct grouped coordinate.
  for (size_t i = 1; i < gc.group_coord.size(); ++i) {
    if (gc.group_coord[i] == gc.group_coord[i - 1]) return false;
  }
  return true;
}

int64_t BlockGroupCooMatrix::block_grid_rows() const {
  return (rows + block_rows - 1) / block_rows;
}

int64_t BlockGroupCooMatrix::block_grid_cols() const {
  return (cols + block_cols - 1) / block_cols;
}

int64_t BlockGroupCooMatrix::real_count() const {
  int64_t n = 0;
  for (uint8_t m : pad_mask) n += m;
  return n;
}

BlockGroupCooMatrix dense_to_blockgroupcoo(const Tensor& t, int64_t block_rows,
                                           int64_t block_cols, int64_t g, int group_dim) {
  if (t.rank() != 2) throw ShapeError("dense_to_blockgroupcoo expects a rank-2 tensor");
  if (block_rows < 1 || block_cols < 1) throw ShapeError("block dims must be >= 1");
  if (g < 1) throw ShapeError("group size must be >= 1");

  BlockGroupCooMatrix b;
  b.rows = t.dim(0);
  b.cols = t.dim(1);
  b.block_rows = block_rows;
  b.block_cols = block_cols;
  b.group_dim = group_dim;
  b.group_size = g;

  int64_t grid_r = b.block_grid_rows();
  int64_t grid_c = b.block_grid_cols();

  // Nonzero-block structure as a block-level COO, then reuse scalar grouping.
  CooMatrix blocks;
  blocks.rows = grid_r;
  blocks.cols = grid_c;
  for (int64_t br = 0; br < grid_r; ++br) {
    for (int64_t bc = 0; bc < grid_c; ++bc) {
      bool any = false;
      for (int64_t i = br * block_rows; i < std::min((br + 1) * block_rows, b.rows) && !any; ++i) {
        for (int64_t j = bc * block_cols; j < std::min((bc + 1) * block_cols, b.cols); ++j) {
          if (!elem_is_zero(t, i * b.cols + j)) {
            any = true;
            break;
          }
        }
      }
      if (any) {
        blocks.row_coord.push_back(br);
        blocks.col_coord.push_back(bc);
      }
    }
  }
  blocks.values = Tensor::zeros(t.kind(), {blocks.nnz()});
  blocks.canonical = true;

  GroupCooMatrix gblocks = coo_to_groupcoo(blocks, group_dim, g);
  b.group_coord = gblocks.group_coord;
  b.member_coord = gblocks.member_coord;
  b.pad_mask = gblocks.pad_mask;

  int64_t G = b.num_groups();
  b.values = Tensor::zeros(t.kind(), {G, g, block_rows, block_cols});
  for (int64_t p = 0; p < G; ++p) {
    for (int64_t q = 0; q < g; ++q) {
      int64_t slot = p * g + q;
      if (!b.pad_mask[static_cast<size_t>(slot)]) continue;  // padded slots stay all-zero
      int64_t br = group_dim == 0 ? b.group_coord[static_cast<size_t>(p)]
                                  : b.member_coord[static_cast<size_t>(slot)];
      int64_t bc = group_dim == 0 ? b.member_coord[static_cast<size_t>(slot)]
                                  : b.group_coord[static_cast<size_t>(p)];
      for (int64_t i = 0; i < block_rows; ++i) {
        for (int64_t j = 0; j < block_cols; ++j) {
          int64_t si = br * block_rows + i;
          int64_t sj = bc * block_cols + j;
          if (si >= b.rows || sj >= b.cols) continue;  // implicit zero padding
          int64_t dst = ((p * g + q) * block_rows + i) * block_cols + j;
          b.values.copy_elem_from(dst, t, si * b.cols + sj);
        }
      }
    }
  }
  return b;
}

Tensor blockgroupcoo_to_dense(const BlockGroupCooMatrix& b) {
  Tensor t = Tensor::zeros(b.values.kind(), {b.rows, b.cols});
  for (int64_t p = 0; p < b.num_groups(); ++p) {
    for (int64_t q = 0; q < b.group_size; ++q) {
      int64_t slot = p * b.group_size + q;
      if (!b.pad_mask[static_cast<size_t>(slot)]) continue;
      int64_t br = b.group_dim == 0 ? b.group_coord[static_cast<size_t>(p)]
                                    : b.member_coord[static_cast<size_t>(slot)];
      int64_t bc = b.group_dim == 0 ? b.member_coord[static_cast<size_t>(slot)]
                                    : b.group_coord[static_cast<size_t>(p)];
      for (int64_t i = 0; i < b.block_rows; ++i) {
        for (int64_t j = 0; j < b.block_cols; ++j) {
          int64_t di = br * b.block_rows + i;
          int64_t dj = bc * b.block_cols + j;
          if (di >= b.rows || dj >= b.cols) continue;
          int64_t src = (slot * b.block_rows + i) * b.block_cols + j;
          t.copy_elem_from(di * b.cols + dj, b.values, src);
        }
      }
    }
  }
  return t;
}

int64_t format_nbytes(const CooMatrix& c) {
  return 8 * (c.nnz() + c.nnz() + c.values.numel());
}

int64_t format_nbytes(const GroupCooMatrix& gc) {
  return 8 * (gc.num_groups() + static_cast<int64_t>(gc.member_coord.size()) +
              gc.values.numel());
}

int64_t format_nbytes(const BlockGroupCooMatrix& b) {
  return 8 * (b.num_groups() + static_cast<int64_t>(b.member_coord.size()) +
              b.values.numel());
}

int64_t mask_nbytes(const GroupCooMatrix& gc) {
  return static_cast<int64_t>(gc.pad_mask.size());
}

int64_t mask_nbytes(const BlockGroupCooMatrix& b) {
  return static_cast<int64_t>(b.pad_mask.size());
}

std::map<std::string, Tensor> emit_operands(const CooMatrix& c, const std::string& prefix,
                                            const std::string& suffix0,
                                            const std::string& suffix1) {
  std::map<std::string, Tensor> out;
  out[prefix + "V"] = c.values;
  out[prefix + suffix0] = Tensor::from_int({c.nnz()}, c.row_coord);
  out[prefix + suffix1] = Tensor::from_int({c.nnz()}, c.col_coord);
  return out;
}

std::map<std::string, Tensor> emit_operands(const GroupCooMatrix& gc, const std::string& prefix,
                                            const std::string& suffix0,
                                            const std::string& suffix1) {
  const std::string& gsuf = gc.group_dim == 0 ? suffix0 : suffix1;
  const std::string& msuf = gc.group_dim == 0 ? suffix1 : suffix0;
  std::map<std::string, Tensor> out;
  out[prefix + "V"] = gc.values;
  out[prefix + gsuf] = Tensor::from_int({gc.num_groups()}, gc.group_coord);
  out[prefix + msuf] = Tensor::from_int({gc.num_groups(), gc.group_size}, gc.member_coord);
  return out;
}

std::map<std::string, Tensor> emit_operands(const BlockGroupCooMatrix& b,
                                            const std::string& prefix,
                                            const std::string& suffix0,
                                            const std::string& suffix1) {
  const std::string& gsuf = b.group_dim == 0 ? suffix0 : suffix1;
  const std::string& msuf = b.group_dim == 0 ? suffix1 : suffix0;
  std::map<std::string, Tensor> out;
  out[prefix + "V"] = b.values;
  out[prefix + gsuf] = Tensor::from_int({b.num_groups()}, b.group_coord);
  out[prefix + msuf] = Tensor::from_int({b.num_groups(), b.group_size}, b.member_coord);
  return out;
}

Tensor coo_tensor_to_dense(const CooTensor& c) {
  Tensor t = Tensor::zeros(c.values.kind(), c.shape);
  std::vector<int64_t> idx(c.coords.size());
  for (int64_t p = 0; p < c.nnz(); ++p) {
    for (size_t d = 0; d < c.coords.size(); ++d) {
      idx[d] = c.coords[d][static_cast<size_t>(p)];
      if (idx[d] < 0 || idx[d] >= c.shape[d]) {
        throw ShapeError("COO tensor coordinate out of range in dim " + std::to_string(d));
      }
    }
    int64_t flat = t.flat_index(idx);
    if (t.is_int()) {
      t.int_at(flat) += c.values.int_at(p);
    } else {
      t.real_at(flat) += c.values.real_at(p);
    }
  }
  return t;
}

CooTensor canonicalize(CooTensor c) {
  std::vector<int64_t> order(static_cast<size_t>(c.nnz()));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&c](int64_t a, int64_t b) {
    for (const auto& coord : c.coords) {
      int64_t ca = coord[static_cast<size_t>(a)];
      int64_t cb = coord[static_cast<size_t>(b)];
      if (ca != cb) return ca < cb;
    }
    return false;
  });
  CooTensor out;
  out.shape = c.shape;
  out.coords.resize(c.coords.size());
  for (size_t d = 0; d < c.coords.size(); ++d) {
    out.coords[d].reserve(order.size());
    for (int64_t idx : order) out.coords[d].push_back(c.coords[d][static_cast<size_t>(idx)]);
  }
  out.values = take_elems(c.values, order);
  return out;
}

GroupCooTensor group_coo_tensor(const CooTensor& c, int group_dim, int64_t g) {
  if (g < 1) throw ShapeError("group size must be >= 1");
  if (group_dim < 0 || group_dim >= c.rank()) throw ShapeError("group_dim out of range");

  std::vector<int64_t> order(static_cast<size_t>(c.nnz()));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int64_t a, int64_t b) {
    int64_t ga = c.coords[static_cast<size_t>(group_dim)][static_cast<size_t>(a)];
    int64_t gb = c.coords[static_cast<size_t>(group_dim)][static_cast<size_t>(b)];
    if (ga != gb) return ga < gb;
    for (int d = 0; d < c.rank(); ++d) {
      if (d == group_dim) continue;
      int64_t ca = c.coords[static_cast<size_t>(d)][static_cast<size_t>(a)];
      int64_t cb = c.coords[static_cast<size_t>(d)][static_cast<size_t>(b)];
      if (ca != cb) return ca < cb;
    }
    return false;
  });

  GroupCooTensor out;
  out.shape = c.shape;
  out.group_dim = group_dim;
  out.group_size = g;
  for (int d = 0; d < c.rank(); ++d) {
    if (d != group_dim) out.member_dims.push_back(d);
  }
  out.member_coords.resize(out.member_dims.size());

  const auto& gcoord = c.coords[static_cast<size_t>(group_dim)];
  std::vector<int64_t> slot_src;
  size_t i = 0;
  while (i < order.size()) {
    size_t run_end = i;
    while (run_end < order.size() &&
           gcoord[static_cast<size_t>(order[run_end])] == gcoord[static_cast<size_t>(order[i])]) {
      ++run_end;
    }
    for (size_t start = i; start < run_end; start += static_cast<size_t>(g)) {
      out.group_coord.push_back(gcoord[static_cast<size_t>(order[i])]);
      size_t take = std::min(static_cast<size_t>(g), run_end - start);
      for (size_t k = 0; k < static_cast<size_t>(g); ++k) {
        bool real = k < take;
        int64_t src = real ? order[start + k] : -1;
        for (size_t m = 0; m < out.member_dims.size(); ++m) {
          const auto& coord = c.coords[static_cast<size_t>(out.member_dims[m])];
          out.member_coords[m].push_back(real ? coord[static_cast<size_t>(src)]
                                              : out.member_coords[m].back());
        }
        out.pad_mask.push_back(real ? 1 : 0);
        slot_src.push_back(src);
      }
    }
    i = run_end;
  }

  out.values = Tensor::zeros(c.values.kind(), {out.num_groups(), g});
  for (size_t s = 0; s < slot_src.size(); ++s) {
    if (slot_src[s] >= 0) {
      out.values.copy_elem_from(static_cast<int64_t>(s), c.values, slot_src[s]);
    }
  }
  return out;
}

}  // namespace ixsum
