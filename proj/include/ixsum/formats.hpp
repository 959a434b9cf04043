#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ixsum/tensor.hpp"

namespace ixsum {

// Coordinate format for a matrix: parallel coordinate arrays plus values.
// Canonical form is row-major sorted (by row, then column); duplicates are
// representable and sum on densification.
struct CooMatrix {
  int64_t rows = 0;
  int64_t cols = 0;
  std::vector<int64_t> row_coord;  // AM
  std::vector<int64_t> col_coord;  // AK
  Tensor values;                   // rank-1 [nnz]
  bool canonical = false;

  int64_t nnz() const { return static_cast<int64_t>(row_coord.size()); }
};

CooMatrix dense_to_coo(const Tensor& t);
Tensor coo_to_dense(const CooMatrix& c);
CooMatrix canonicalize(CooMatrix c);
bool structurally_equal(const CooMatrix& a, const CooMatrix& b);

/// occ[i] = number of entries whose coordinate along `dim` equals i.
std::vector<int64_t> occupancy(const CooMatrix& c, int dim);

// Fixed-length format partitioning nonzeros into size-g groups along one
// dimension; the group coordinate is stored once per group. Padded slots
// carry value 0 and repeat the last real in-group coordinate, so they are
// semantically inert in any Einsum.
struct GroupCooMatrix {
  int64_t rows = 0;
  int64_t cols = 0;
  int group_dim = 0;
  int64_t group_size = 1;              // g
  std::vector<int64_t> group_coord;    // AM, length G
  std::vector<int64_t> member_coord;   // AK, flattened [G, g]
  Tensor values;                       // [G, g]
  std::vector<uint8_t> pad_mask;       // [G, g]; 1 = real entry

  int64_t num_groups() const { return static_cast<int64_t>(group_coord.size()); }
  int64_t real_count() const;
  int64_t pad_count() const;
};

GroupCooMatrix coo_to_groupcoo(const CooMatrix& c, int group_dim, int64_t g);
CooMatrix groupcoo_to_coo(const GroupCooMatrix& gc);

/// GroupCOO with g = max occupancy: exactly one group per nonempty row.
GroupCooMatrix ell_view(const CooMatrix& c, int group_dim = 0);
bool is_ell(const GroupCooMatrix& gc);

// GroupCOO over dense bM x bK blocks. The dense source is implicitly
// zero-padded to block multiples; a block is stored iff it has a nonzero.
// group_dim selects the block-coordinate dimension to group along.
struct BlockGroupCooMatrix {
  int64_t rows = 0;
  int64_t cols = 0;  // original, pre-padding
  int64_t block_rows = 1;
  int64_t block_cols = 1;
  int group_dim = 0;
  int64_t group_size = 1;
  std::vector<int64_t> group_coord;   // [G]
  std::vector<int64_t> member_coord;  // [G, g]
  Tensor values;                      // [G, g, bM, bK]
  std::vector<uint8_t> pad_mask;      // [G, g]

  int64_t num_groups() const { return static_cast<int64_t>(group_coord.size()); }
  int64_t block_grid_rows() const;
  int64_t block_grid_cols() const;
  int64_t real_count() const;
};

BlockGroupCooMatrix dense_to_blockgroupcoo(const Tensor& t, int64_t block_rows,
                                           int64_t block_cols, int64_t g,
                                           int group_dim = 0);
Tensor blockgroupcoo_to_dense(const BlockGroupCooMatrix& b);

// Storage accounting for the coordinate and value arrays (AM + AK + AV, 8-byte
// elements). The pad mask is bookkeeping metadata and reported separately.
int64_t format_nbytes(const CooMatrix& c);
int64_t format_nbytes(const GroupCooMatrix& gc);
int64_t format_nbytes(const BlockGroupCooMatrix& b);
int64_t mask_nbytes(const GroupCooMatrix& gc);
int64_t mask_nbytes(const BlockGroupCooMatrix& b);

// The format's arrays as named dense tensors ready to bind into an Einsum;
// padding is already embedded so no mask operand is needed. Names are
// prefix + "V" for values and prefix + dim suffix for coordinates
// (defaults: "M" for dim 0, "K" for dim 1, matching AV/AM/AK for prefix "A").
std::map<std::string, Tensor> emit_operands(const CooMatrix& c,
                                            const std::string& prefix = "A",
                                            const std::string& suffix0 = "M",
                                            const std::string& suffix1 = "K");
std::map<std::string, Tensor> emit_operands(const GroupCooMatrix& gc,
                                            const std::string& prefix = "A",
                                            const std::string& suffix0 = "M",
                                            const std::string& suffix1 = "K");
std::map<std::string, Tensor> emit_operands(const BlockGroupCooMatrix& b,
                                            const std::string& prefix = "A",
                                            const std::string& suffix0 = "M",
                                            const std::string& suffix1 = "K");

// Rank-n coordinate tensor, used by the convolution-map and tensor-product
// corpora. Coordinates are one array per dimension.
struct CooTensor {
  std::vector<int64_t> shape;
  std::vector<std::vector<int64_t>> coords;  // [rank][nnz]
  Tensor values;                             // [nnz]

  int rank() const { return static_cast<int>(shape.size()); }
  int64_t nnz() const { return coords.empty() ? 0 : static_cast<int64_t>(coords[0].size()); }
};

Tensor coo_tensor_to_dense(const CooTensor& c);
CooTensor canonicalize(CooTensor c);

// Grouping of a rank-n COO along one dimension: the grouped dimension keeps
// one coordinate per group; every other dimension becomes a [G, g] in-group
// coordinate array.
struct GroupCooTensor {
  std::vector<int64_t> shape;
  int group_dim = 0;
  int64_t group_size = 1;
  std::vector<int64_t> group_coord;                 // [G]
  std::vector<std::vector<int64_t>> member_coords;  // one per non-grouped dim, each [G, g]
  std::vector<int> member_dims;                     // original dim of each member array
  Tensor values;                                    // [G, g]
  std::vector<uint8_t> pad_mask;                    // [G, g]

  int64_t num_groups() const { return static_cast<int64_t>(group_coord.size()); }
};

GroupCooTensor group_coo_tensor(const CooTensor& c, int group_dim, int64_t g);

}  // namespace ixsum
