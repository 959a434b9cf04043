#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace ixsum {

enum class ElemKind { Real64, Int64 };

const char* elem_kind_name(ElemKind k);

/// Dense n-dimensional array, row-major, with one of two element kinds:
/// Real64 for numeric work, Int64 for coordinates and exact-arithmetic tests.
/// Immutable by convention once built; executors copy before mutating.
class Tensor {
public:
  Tensor() = default;

  static Tensor zeros(ElemKind kind, std::vector<int64_t> shape);
  static Tensor from_real(std::vector<int64_t> shape, std::vector<double> data);
  static Tensor from_int(std::vector<int64_t> shape, std::vector<int64_t> data);

  ElemKind kind() const { return kind_; }
  bool is_int() const { return kind_ == ElemKind::Int64; }
  const std::vector<int64_t>& shape() const { return shape_; }
  int rank() const { return static_cast<int>(shape_.size()); }
  int64_t dim(int i) const { return shape_.at(static_cast<size_t>(i)); }
  int64_t numel() const;

  std::vector<int64_t> strides() const;  // row-major element strides
  int64_t flat_index(std::span<const int64_t> idx) const;

  double real_at(int64_t flat) const { return real_.at(static_cast<size_t>(flat)); }
  double& real_at(int64_t flat) { return real_.at(static_cast<size_t>(flat)); }
  int64_t int_at(int64_t flat) const { return int_.at(static_cast<size_t>(flat)); }
  int64_t& int_at(int64_t flat) { return int_.at(static_cast<size_t>(flat)); }

  const std::vector<double>& reals() const { return real_; }
  std::vector<double>& reals() { return real_; }
  const std::vector<int64_t>& ints() const { return int_; }
  std::vector<int64_t>& ints() { return int_; }

  /// Reads an element as double regardless of kind (int values converted).
  double as_real(int64_t flat) const;
  /// Copies one element from src (same kind required).
  void copy_elem_from(int64_t dst_flat, const Tensor& src, int64_t src_flat);

  Tensor reshape(std::vector<int64_t> new_shape) const;

  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }
  bool bit_equal(const Tensor& o) const;

private:
  std::vector<int64_t> shape_;
  ElemKind kind_ = ElemKind::Real64;
  std::vector<double> real_;
  std::vector<int64_t> int_;
};

/// Largest relative elementwise difference, 0 for identical tensors.
/// Throws on shape or kind mismatch.
double max_rel_error(const Tensor& a, const Tensor& b);

/// FNV-1a over the tensor header and payload bytes; stable across runs.
uint64_t tensor_hash(const Tensor& t);

// Binary tensor file ("IXTN" magic + rank/dims/kind header + flat
// little-endian payload; see docs/file-formats.md). Round-trips bitwise.
void save_tensor(const std::string& path, const Tensor& t);
Tensor load_tensor(const std::string& path);

struct IoError : std::runtime_error {
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

struct ShapeError : std::runtime_error {
  explicit ShapeError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace ixsum
