#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>

#include "helpers.hpp"
#include "ixsum/formats.hpp"
#include "ixsum/plan.hpp"
#include "ixsum/synth.hpp"

using namespace ixsum;
using test::occ3112_matrix;

TEST_CASE("dense_to_coo extracts exactly the nonzeros in row-major order") {
  CooMatrix c = dense_to_coo(occ3112_matrix());
  CHECK(c.nnz() == 7);
  CHECK(c.canonical);
  CHECK(c.row_coord == std::vector<int64_t>{0, 0, 0, 1, 2, 3, 3});
  CHECK(c.col_coord == std::vector<int64_t>{0, 1, 3, 1, 2, 0, 3});

  CooMatrix zero = dense_to_coo(Tensor::zeros(ElemKind::Real64, {3, 3}));
  CHECK(zero.nnz() == 0);

  Tensor eye = Tensor::from_real({3, 3}, {1, 0, 0, 0, 1, 0, 0, 0, 1});
  CooMatrix ec = dense_to_coo(eye);
  CHECK(ec.row_coord == std::vector<int64_t>{0, 1, 2});
  CHECK(ec.col_coord == std::vector<int64_t>{0, 1, 2});
  for (int64_t i = 0; i < 3; ++i) CHECK(ec.values.real_at(i) == 1.0);
}

TEST_CASE("coo_to_dense inverts dense_to_coo and sums duplicates") {
  Rng rng(11);
  for (int iter = 0; iter < 20; ++iter) {
    Tensor t = synth_sparse_matrix(9, 7, 0.3, ElemKind::Real64, rng);
    CHECK(coo_to_dense(dense_to_coo(t)).bit_equal(t));
  }

  CooMatrix dup;
  dup.rows = 2;
  dup.cols = 2;
  dup.row_coord = {0, 0};
  dup.col_coord = {0, 0};
  dup.values = Tensor::from_real({2}, {2.0, 3.0});
  CHECK(coo_to_dense(dup).real_at(0) == 5.0);

  CooMatrix empty;
  empty.rows = 2;
  empty.cols = 3;
  empty.values = Tensor::zeros(ElemKind::Real64, {0});
  Tensor z = coo_to_dense(empty);
  for (int64_t i = 0; i < z.numel(); ++i) CHECK(z.real_at(i) == 0.0);
}

TEST_CASE("occupancy counts per-coordinate nonzeros") {
  CooMatrix c = dense_to_coo(occ3112_matrix());
  CHECK(occupancy(c, 0) == std::vector<int64_t>{3, 1, 1, 2});
  CHECK(occupancy(c, 1) == std::vector<int64_t>{2, 2, 1, 2});

  CooMatrix empty = dense_to_coo(Tensor::zeros(ElemKind::Real64, {3, 3}));
  CHECK(occupancy(empty, 0) == std::vector<int64_t>{0, 0, 0});

  Tensor eye = Tensor::from_real({3, 3}, {1, 0, 0, 0, 1, 0, 0, 0, 1});
  CHECK(occupancy(dense_to_coo(eye), 0) == std::vector<int64_t>{1, 1, 1});
}

TEST_CASE("grouping the occ [3,1,1,2] matrix at g=2 gives 5 groups, 3 pads") {
  CooMatrix c = dense_to_coo(occ3112_matrix());
  GroupCooMatrix gc = coo_to_groupcoo(c, 0, 2);
  CHECK(gc.num_groups() == 5);
  CHECK(gc.values.shape() == std::vector<int64_t>{5, 2});
  CHECK(gc.pad_count() == 3);  // 10 slots - 7 nonzeros
  CHECK(gc.real_count() == 7);
  // Padded slots carry value 0 and an in-range repeated coordinate.
  for (int64_t s = 0; s < 10; ++s) {
    if (!gc.pad_mask[static_cast<size_t>(s)]) {
      CHECK(gc.values.real_at(s) == 0.0);
      CHECK(gc.member_coord[static_cast<size_t>(s)] ==
            gc.member_coord[static_cast<size_t>(s) - 1]);
    }
    CHECK(gc.member_coord[static_cast<size_t>(s)] >= 0);
    CHECK(gc.member_coord[static_cast<size_t>(s)] < 4);
  }
}

TEST_CASE("g=1 grouping is structurally canonical COO") {
  CooMatrix c = dense_to_coo(occ3112_matrix());
  GroupCooMatrix gc = coo_to_groupcoo(c, 0, 1);
  CHECK(gc.num_groups() == c.nnz());
  CHECK(gc.pad_count() == 0);
  CHECK(gc.group_coord == c.row_coord);
  CHECK(gc.member_coord == c.col_coord);
  CHECK(gc.values.reals() == c.values.reals());
}

TEST_CASE("g = max occ yields the ELL structure: one group per nonempty row") {
  CooMatrix c = dense_to_coo(occ3112_matrix());
  GroupCooMatrix gc = coo_to_groupcoo(c, 0, 3);
  CHECK(gc.num_groups() == 4);
  CHECK(gc.pad_count() == 5);  // 4*3 - 7
  CHECK(is_ell(gc));
  GroupCooMatrix ell = ell_view(c);
  CHECK(ell.group_size == 3);
  CHECK(ell.num_groups() == 4);
  CHECK(is_ell(ell));
}

TEST_CASE("group, ungroup round-trips to the canonical COO") {
  CooMatrix c = dense_to_coo(occ3112_matrix());
  for (int64_t g : {1, 2, 3, 5}) {  // g=5 exceeds max occ: extra padding only
    CooMatrix back = groupcoo_to_coo(coo_to_groupcoo(c, 0, g));
    CHECK(structurally_equal(back, c));
  }
  CooMatrix empty = dense_to_coo(Tensor::zeros(ElemKind::Real64, {4, 4}));
  CHECK(structurally_equal(groupcoo_to_coo(coo_to_groupcoo(empty, 0, 2)), empty));
}

TEST_CASE("round trips hold for random matrices, any g, both group dims") {
  Rng rng(23);
  for (int iter = 0; iter < 30; ++iter) {
    Tensor t = synth_sparse_matrix(12, 9, 0.25, ElemKind::Real64, rng);
    CooMatrix c = dense_to_coo(t);
    auto occ = occupancy(c, iter % 2);
    int64_t max_occ = occ.empty() ? 0 : *std::max_element(occ.begin(), occ.end());
    for (int64_t g = 1; g <= std::max<int64_t>(max_occ, 1); ++g) {
      GroupCooMatrix gc = coo_to_groupcoo(c, iter % 2, g);
      CHECK(structurally_equal(groupcoo_to_coo(gc), c));
      CHECK(gc.num_groups() == test::count_groups(occupancy(c, iter % 2), g));
      CHECK(gc.real_count() == c.nnz());
    }
  }
}

TEST_CASE("group count formula G = sum ceil(occ_i/g) holds exactly") {
  CooMatrix c = dense_to_coo(occ3112_matrix());
  auto occ = occupancy(c, 0);
  for (int64_t g = 1; g <= 3; ++g) {
    CHECK(coo_to_groupcoo(c, 0, g).num_groups() == test::count_groups(occ, g));
  }
}

TEST_CASE("format_nbytes matches the AM+AK+AV accounting") {
  CooMatrix c = dense_to_coo(occ3112_matrix());
  CHECK(format_nbytes(c) == 168);  // 7 * 8 * 3
  GroupCooMatrix g2 = coo_to_groupcoo(c, 0, 2);
  CHECK(format_nbytes(g2) == 200);  // AM 5*8 + AK 10*8 + AV 10*8
  CHECK(mask_nbytes(g2) == 10);
  // The redundancy reduction at this size is in AM only: 5 entries vs 7.
  CHECK(g2.num_groups() == 5);
  CHECK(c.nnz() == 7);
}

TEST_CASE("emit_operands produces bind-ready arrays with embedded padding") {
  CooMatrix c = dense_to_coo(occ3112_matrix());
  auto coo_ops = emit_operands(c);
  CHECK(coo_ops.at("AV").shape() == std::vector<int64_t>{7});
  CHECK(coo_ops.at("AM").shape() == std::vector<int64_t>{7});
  CHECK(coo_ops.at("AK").shape() == std::vector<int64_t>{7});
  CHECK(coo_ops.at("AM").is_int());

  auto g_ops = emit_operands(coo_to_groupcoo(c, 0, 2));
  CHECK(g_ops.at("AV").shape() == std::vector<int64_t>{5, 2});
  CHECK(g_ops.at("AM").shape() == std::vector<int64_t>{5});
  CHECK(g_ops.at("AK").shape() == std::vector<int64_t>{5, 2});

  auto b_ops = emit_operands(dense_to_blockgroupcoo(occ3112_matrix(), 2, 2, 2));
  CHECK(b_ops.at("AV").rank() == 4);
  CHECK(b_ops.at("AM").rank() == 1);
  CHECK(b_ops.at("AK").rank() == 2);
}

TEST_CASE("block conversion stores only blocks holding a nonzero") {
  Tensor t = Tensor::zeros(ElemKind::Real64, {4, 4});
  t.real_at(0) = 1.0;
  t.real_at(1 * 4 + 1) = 2.0;  // both in the top-left 2x2 block
  BlockGroupCooMatrix b = dense_to_blockgroupcoo(t, 2, 2, 1);
  CHECK(b.num_groups() == 1);
  CHECK(b.values.shape() == std::vector<int64_t>{1, 1, 2, 2});
  CHECK(blockgroupcoo_to_dense(b).bit_equal(t));
}

TEST_CASE("fully dense 4x4 with 2x2 blocks and g=2 gives 4 blocks in 2 groups") {
  Rng rng(5);
  Tensor t = synth_dense({4, 4}, ElemKind::Real64, rng);
  BlockGroupCooMatrix b = dense_to_blockgroupcoo(t, 2, 2, 2);
  CHECK(b.real_count() == 4);
  CHECK(b.num_groups() == 2);  // 2 block-rows x ceil(2/2)
  CHECK(blockgroupcoo_to_dense(b).bit_equal(t));
}

TEST_CASE("block equal to the whole matrix degenerates to one dense block") {
  Rng rng(6);
  Tensor t = synth_dense({4, 4}, ElemKind::Real64, rng);
  BlockGroupCooMatrix b = dense_to_blockgroupcoo(t, 4, 4, 1);
  CHECK(b.num_groups() == 1);
  CHECK(b.real_count() == 1);
  CHECK(b.values.numel() == 16);
  CHECK(blockgroupcoo_to_dense(b).bit_equal(t));
}

TEST_CASE("block conversion zero-pads ragged edges") {
  Rng rng(7);
  Tensor t = synth_sparse_matrix(5, 6, 0.5, ElemKind::Real64, rng);
  BlockGroupCooMatrix b = dense_to_blockgroupcoo(t, 4, 4, 2);
  CHECK(blockgroupcoo_to_dense(b).bit_equal(t));
}

TEST_CASE("padded slots never change an einsum result") {
  // GroupCOO SpMM equals a dense matmul of the source matrix, for every g.
  Rng rng(37);
  for (int iter = 0; iter < 10; ++iter) {
    Tensor a = synth_sparse_matrix(10, 8, 0.3, ElemKind::Int64, rng);
    Tensor b = synth_dense({8, 5}, ElemKind::Int64, rng);
    Tensor expect = test::naive_matmul(a, b);
    CooMatrix coo = dense_to_coo(a);
    auto occ = occupancy(coo, 0);
    int64_t max_occ = occ.empty() ? 1 : std::max<int64_t>(*std::max_element(occ.begin(), occ.end()), 1);
    for (int64_t g = 1; g <= max_occ + 1; ++g) {
      TensorMap tensors;
      for (auto& [n, t] : emit_operands(coo_to_groupcoo(coo, 0, g))) tensors[n] = t;
      tensors["B"] = b;
      ShapeMap shapes = test::shapes_of(tensors, "C", {10, 5});
      EinsumStmt stmt = test::inferred("C[AM[p],n] += AV[p,q] * B[AK[p,q],n]", shapes);
      Tensor out = Tensor::zeros(ElemKind::Int64, {10, 5});
      Tensor got = oracle_einsum(stmt, tensors, out);
      CHECK(got.bit_equal(expect));
    }
  }
}

TEST_CASE("the g=1 GroupCOO einsum equals the COO einsum") {
  Rng rng(41);
  Tensor a = synth_sparse_matrix(9, 9, 0.35, ElemKind::Int64, rng);
  Tensor b = synth_dense({9, 4}, ElemKind::Int64, rng);
  CooMatrix coo = dense_to_coo(a);

  TensorMap coo_ops;
  for (auto& [n, t] : emit_operands(coo)) coo_ops[n] = t;
  coo_ops["B"] = b;
  ShapeMap coo_shapes = test::shapes_of(coo_ops, "C", {9, 4});
  EinsumStmt coo_stmt = test::inferred("C[AM[p],n] += AV[p] * B[AK[p],n]", coo_shapes);
  Tensor out = Tensor::zeros(ElemKind::Int64, {9, 4});
  Tensor via_coo = oracle_einsum(coo_stmt, coo_ops, out);

  TensorMap g_ops;
  for (auto& [n, t] : emit_operands(coo_to_groupcoo(coo, 0, 1))) g_ops[n] = t;
  g_ops["B"] = b;
  ShapeMap g_shapes = test::shapes_of(g_ops, "C", {9, 4});
  EinsumStmt g_stmt = test::inferred("C[AM[p],n] += AV[p,q] * B[AK[p,q],n]", g_shapes);
  Tensor via_group = oracle_einsum(g_stmt, g_ops, out);
  CHECK(via_coo.bit_equal(via_group));
}

TEST_CASE("rank-n COO grouping pads inertly and densifies back") {
  Rng rng(53);
  CooTensor c = synth_coo_tensor({6, 5, 4}, 17, ElemKind::Int64, rng);
  Tensor dense = coo_tensor_to_dense(c);
  GroupCooTensor g = group_coo_tensor(c, 2, 3);
  CHECK(g.member_dims == std::vector<int>{0, 1});
  int64_t real = 0;
  for (uint8_t m : g.pad_mask) real += m;
  CHECK(real == c.nnz());
  // Re-densify from the grouped arrays: padded slots contribute value 0.
  Tensor back = Tensor::zeros(ElemKind::Int64, c.shape);
  for (int64_t p = 0; p < g.num_groups(); ++p) {
    for (int64_t q = 0; q < g.group_size; ++q) {
      int64_t slot = p * g.group_size + q;
      std::vector<int64_t> idx(3);
      idx[2] = g.group_coord[static_cast<size_t>(p)];
      idx[0] = g.member_coords[0][static_cast<size_t>(slot)];
      idx[1] = g.member_coords[1][static_cast<size_t>(slot)];
      back.int_at(back.flat_index(idx)) += g.values.int_at(slot);
    }
  }
  CHECK(back.bit_equal(dense));
}

TEST_CASE("grouping rejects invalid parameters") {
  CooMatrix c = dense_to_coo(occ3112_matrix());
  CHECK_THROWS_AS(coo_to_groupcoo(c, 0, 0), ShapeError);
  CHECK_THROWS_AS(coo_to_groupcoo(c, 2, 1), ShapeError);
  CHECK_THROWS_AS(dense_to_blockgroupcoo(occ3112_matrix(), 0, 2, 1), ShapeError);
}
