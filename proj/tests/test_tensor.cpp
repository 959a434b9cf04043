#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "ixsum/matrix_market.hpp"
#include "ixsum/tensor.hpp"

using namespace ixsum;
namespace fs = std::filesystem;

namespace {

std::string temp_path(const std::string& name) {
  return (fs::temp_directory_path() / name).string();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream os(path);
  os << text;
}

}  // namespace

TEST_CASE("binary round trip is bitwise for both element kinds") {
  Tensor r = Tensor::from_real({2, 3}, {1.5, -2.25, 0.0, 1e-300, 3.0, -0.0});
  Tensor i = Tensor::from_int({4, 2}, {1, -2, 3, 4, 5, 6, 7, 8});
  std::string pr = temp_path("ixsum_r.ixt");
  std::string pi = temp_path("ixsum_i.ixt");
  save_tensor(pr, r);
  save_tensor(pi, i);
  CHECK(load_tensor(pr).bit_equal(r));
  CHECK(load_tensor(pi).bit_equal(i));
}

TEST_CASE("binary round trip survives zero-extent dims") {
  Tensor empty = Tensor::zeros(ElemKind::Real64, {0});
  std::string p = temp_path("ixsum_empty.ixt");
  save_tensor(p, empty);
  CHECK(load_tensor(p).bit_equal(empty));
}

TEST_CASE("rank-0 tensors are rejected by file IO") {
  Tensor t = Tensor::zeros(ElemKind::Real64, {});
  CHECK_THROWS_AS(save_tensor(temp_path("ixsum_rank0.ixt"), t), IoError);
}

TEST_CASE("bad magic and truncated payloads are reported") {
  std::string p = temp_path("ixsum_bad.ixt");
  write_text(p, "not a tensor file");
  CHECK_THROWS_AS(load_tensor(p), IoError);

  Tensor t = Tensor::from_int({4}, {1, 2, 3, 4});
  std::string p2 = temp_path("ixsum_trunc.ixt");
  save_tensor(p2, t);
  fs::resize_file(p2, fs::file_size(p2) - 8);
  CHECK_THROWS_AS(load_tensor(p2), IoError);
}

TEST_CASE("reshape is metadata only") {
  Tensor t = Tensor::from_int({4, 2}, {0, 1, 2, 3, 4, 5, 6, 7});
  Tensor r = t.reshape({2, 2, 2});
  CHECK(r.shape() == std::vector<int64_t>{2, 2, 2});
  CHECK(r.ints() == t.ints());
  CHECK_THROWS_AS(t.reshape({3, 3}), ShapeError);
}

TEST_CASE("matrix market array file yields a dense tensor") {
  std::string p = temp_path("ixsum_arr.mtx");
  write_text(p,
             "%%MatrixMarket matrix array real general\n"
             "% comment\n"
             "2 2\n1.0\n3.0\n2.0\n4.0\n");
  auto data = load_matrix_market(p);
  REQUIRE(std::holds_alternative<Tensor>(data));
  const Tensor& t = std::get<Tensor>(data);
  CHECK(t.shape() == std::vector<int64_t>{2, 2});
  // Array data is column-major: [[1,2],[3,4]].
  CHECK(t.real_at(0) == 1.0);
  CHECK(t.real_at(1) == 2.0);
  CHECK(t.real_at(2) == 3.0);
  CHECK(t.real_at(3) == 4.0);
}

TEST_CASE("matrix market coordinate file yields zero-based COO") {
  std::string p = temp_path("ixsum_coo.mtx");
  write_text(p,
             "%%MatrixMarket matrix coordinate real general\n"
             "2 2 2\n"
             "1 2 5.0\n"
             "2 1 7.0\n");
  auto data = load_matrix_market(p);
  REQUIRE(std::holds_alternative<CooMatrix>(data));
  const CooMatrix& c = std::get<CooMatrix>(data);
  CHECK(c.row_coord == std::vector<int64_t>{0, 1});
  CHECK(c.col_coord == std::vector<int64_t>{1, 0});
  CHECK(c.values.real_at(0) == 5.0);
  CHECK(c.values.real_at(1) == 7.0);
}

TEST_CASE("duplicate coordinates are kept and sum on densification") {
  std::string p = temp_path("ixsum_dup.mtx");
  write_text(p,
             "%%MatrixMarket matrix coordinate real general\n"
             "2 2 2\n"
             "1 1 2.0\n"
             "1 1 3.0\n");
  CooMatrix c = std::get<CooMatrix>(load_matrix_market(p));
  CHECK(c.nnz() == 2);
  Tensor dense = coo_to_dense(c);
  CHECK(dense.real_at(0) == 5.0);
}

TEST_CASE("symmetric files expand to full storage") {
  std::string p = temp_path("ixsum_sym.mtx");
  write_text(p,
             "%%MatrixMarket matrix coordinate real symmetric\n"
             "3 3 2\n"
             "2 1 4.0\n"
             "3 3 9.0\n");
  CooMatrix c = std::get<CooMatrix>(load_matrix_market(p));
  CHECK(c.nnz() == 3);  // off-diagonal mirrored, diagonal kept once
  Tensor dense = coo_to_dense(c);
  CHECK(dense.real_at(1 * 3 + 0) == 4.0);
  CHECK(dense.real_at(0 * 3 + 1) == 4.0);
  CHECK(dense.real_at(2 * 3 + 2) == 9.0);
  for (int64_t i = 0; i < 3; ++i) {
    for (int64_t j = 0; j < 3; ++j) {
      CHECK(dense.real_at(i * 3 + j) == dense.real_at(j * 3 + i));
    }
  }
}

TEST_CASE("malformed matrix market input is rejected") {
  std::string p = temp_path("ixsum_badmm.mtx");
  write_text(p, "%%NotMatrixMarket matrix coordinate real general\n1 1 0\n");
  CHECK_THROWS_AS(load_matrix_market(p), IoError);

  write_text(p,
             "%%MatrixMarket matrix coordinate real general\n"
             "2 2 1\n"
             "3 1 1.0\n");  // row index out of declared bounds
  CHECK_THROWS_AS(load_matrix_market(p), IoError);

  write_text(p,
             "%%MatrixMarket matrix coordinate real general\n"
             "2 2 2\n"
             "1 1 1.0\n");  // truncated entry list
  CHECK_THROWS_AS(load_matrix_market(p), IoError);
}

TEST_CASE("integer coordinate files keep int64 values") {
  std::string p = temp_path("ixsum_int.mtx");
  write_text(p,
             "%%MatrixMarket matrix coordinate integer general\n"
             "2 2 1\n"
             "2 2 -7\n");
  CooMatrix c = std::get<CooMatrix>(load_matrix_market(p));
  CHECK(c.values.is_int());
  CHECK(c.values.int_at(0) == -7);
}

TEST_CASE("tensor hash is stable and sensitive") {
  Tensor a = Tensor::from_int({3}, {1, 2, 3});
  Tensor b = Tensor::from_int({3}, {1, 2, 4});
  CHECK(tensor_hash(a) == tensor_hash(a));
  CHECK(tensor_hash(a) != tensor_hash(b));
}
