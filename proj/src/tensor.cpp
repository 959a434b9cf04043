#include "ixsum/tensor.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>

namespace ixsum {

namespace {

int64_t checked_numel(const std::vector<int64_t>& shape) {
  int64_t n = 1;
  for (int64_t d : shape) {
    if (d < 0) {
      throw ShapeError("tensor dimension must be non-negative, got " + std::to_string(d));
    }
    n *= d;
  }
  return n;
}

}  // namespace

const char* elem_kind_name(ElemKind k) {
  return k == ElemKind::Real64 ? "real64" : "int64";
}

Tensor Tensor::zeros(ElemKind kind, std::vector<int64_t> shape) {
  int64_t n = checked_numel(shape);
  Tensor t;
  t.shape_ = std::move(shape);
  t.kind_ = kind;
  if (kind == ElemKind::Real64) {
    t.real_.assign(static_cast<size_t>(n), 0.0);
  } else {
    t.int_.assign(static_cast<size_t>(n), 0);
  }
  return t;
}

Tensor Tensor::from_real(std::vector<int64_t> shape, std::vector<double> data) {
  int64_t n = checked_numel(shape);
  if (n != static_cast<int64_t>(data.size())) {
    throw ShapeError("data length " + std::to_string(data.size()) +
                     " does not match shape product " + std::to_string(n));
  }
  Tensor t;
  t.shape_ = std::move(shape);
  t.kind_ = ElemKind::Real64;
  t.real_ = std::move(data);
  return t;
}

Tensor Tensor::from_int(std::vector<int64_t> shape, std::vector<int64_t> data) {
  int64_t n = checked_numel(shape);
  if (n != static_cast<int64_t>(data.size())) {
    throw ShapeError("data length " + std::to_string(data.size()) +
                     " does not match shape product " + std::to_string(n));
  }
  Tensor t;
  t.shape_ = std::move(shape);
  t.kind_ = ElemKind::Int64;
  t.int_ = std::move(data);
  return t;
}

int64_t Tensor::numel() const {
  int64_t n = 1;
  for (int64_t d : shape_) n *= d;
  return n;
}

std::vector<int64_t> Tensor::strides() const {
  std::vector<int64_t> s(shape_.size(), 1);
  for (int i = static_cast<int>(shape_.size()) - 2; i >= 0; --i) {
    s[static_cast<size_t>(i)] = s[static_cast<size_t>(i) + 1] * shape_[static_cast<size_t>(i) + 1];
  }
  return s;
}

int64_t Tensor::flat_index(std::span<const int64_t> idx) const {
  if (idx.size() != shape_.size()) {
    throw ShapeError("index rank " + std::to_string(idx.size()) + " vs tensor rank " +
                     std::to_string(shape_.size()));
  }
  int64_t flat = 0;
  for (size_t i = 0; i < idx.size(); ++i) {
    flat = flat * shape_[i] + idx[i];
  }
  return flat;
}

double Tensor::as_real(int64_t flat) const {
  return kind_ == ElemKind::Real64 ? real_at(flat) : static_cast<double>(int_at(flat));
}

void Tensor::copy_elem_from(int64_t dst_flat, const Tensor& src, int64_t src_flat) {
  if (src.kind_ != kind_) {
    throw ShapeError("element copy across kinds");
  }
  if (kind_ == ElemKind::Real64) {
    real_at(dst_flat) = src.real_at(src_flat);
  } else {
    int_at(dst_flat) = src.int_at(src_flat);
  }
}

Tensor Tensor::reshape(std::vector<int64_t> new_shape) const {
  int64_t n = checked_numel(new_shape);
  if (n != numel()) {
    throw ShapeError("reshape to " + std::to_string(n) + " elements from " +
                     std::to_string(numel()));
  }
  Tensor t = *this;
  t.shape_ = std::move(new_shape);
  return t;
}

bool Tensor::bit_equal(const Tensor& o) const {
  return kind_ == o.kind_ && shape_ == o.shape_ && real_ == o.real_ && int_ == o.int_;
}

double max_rel_error(const Tensor& a, const Tensor& b) {
  if (a.kind() != b.kind() || !a.same_shape(b)) {
    throw ShapeError("max_rel_error: shape or kind mismatch");
  }
  double worst = 0.0;
  for (int64_t i = 0; i < a.numel(); ++i) {
    double x = a.as_real(i);
    double y = b.as_real(i);
    double denom = std::max({std::fabs(x), std::fabs(y), 1.0});
    worst = std::max(worst, std::fabs(x - y) / denom);
  }
  return worst;
}

uint64_t tensor_hash(const Tensor& t) {
  uint64_t h = 1469598103934665603ull;
  auto mix = [&h](const void* p, size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    for (size_t i = 0; i < n; ++i) {
      h ^= b[i];
      h *= 1099511628211ull;
    }
  };
  uint64_t kind = t.kind() == ElemKind::Real64 ? 0 : 1;
  mix(&kind, sizeof kind);
  for (int64_t d : t.shape()) mix(&d, sizeof d);
  if (t.kind() == ElemKind::Real64) {
    mix(t.reals().data(), t.reals().size() * sizeof(double));
  } else {
    mix(t.ints().data(), t.ints().size() * sizeof(int64_t));
  }
  return h;
}

namespace {

constexpr uint32_t kMagic = 0x4E545849;  // "IXTN" little-endian
constexpr uint32_t kVersion = 1;

template <typename T>
void write_pod(std::ofstream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T read_pod(std::ifstream& is, const std::string& path) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!is) throw IoError("truncated tensor file: " + path);
  return v;
}

}  // namespace

void save_tensor(const std::string& path, const Tensor& t) {
  if (t.rank() == 0) {
    throw IoError("refusing to save rank-0 tensor to " + path);
  }
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open for writing: " + path);
  write_pod(os, kMagic);
  write_pod(os, kVersion);
  write_pod(os, static_cast<uint32_t>(t.kind() == ElemKind::Real64 ? 0 : 1));
  write_pod(os, static_cast<uint32_t>(t.rank()));
  for (int64_t d : t.shape()) write_pod(os, d);
  if (t.kind() == ElemKind::Real64) {
    os.write(reinterpret_cast<const char*>(t.reals().data()),
             static_cast<std::streamsize>(t.reals().size() * sizeof(double)));
  } else {
    os.write(reinterpret_cast<const char*>(t.ints().data()),
             static_cast<std::streamsize>(t.ints().size() * sizeof(int64_t)));
  }
  if (!os) throw IoError("write failed: " + path);
}

Tensor load_tensor(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open: " + path);
  if (read_pod<uint32_t>(is, path) != kMagic) throw IoError("bad magic in " + path);
  if (read_pod<uint32_t>(is, path) != kVersion) throw IoError("unsupported version in " + path);
  uint32_t kind = read_pod<uint32_t>(is, path);
  if (kind > 1) throw IoError("bad element kind in " + path);
  uint32_t rank = read_pod<uint32_t>(is, path);
  if (rank == 0 || rank > 16) throw IoError("bad rank in " + path);
  std::vector<int64_t> shape(rank);
  int64_t n = 1;
  for (uint32_t i = 0; i < rank; ++i) {
    shape[i] = read_pod<int64_t>(is, path);
    if (shape[i] < 0) throw IoError("negative dimension in " + path);
    n *= shape[i];
  }
  Tensor t = Tensor::zeros(kind == 0 ? ElemKind::Real64 : ElemKind::Int64, std::move(shape));
  if (kind == 0) {
    is.read(reinterpret_cast<char*>(t.reals().data()),
            static_cast<std::streamsize>(n * 8));
  } else {
    is.read(reinterpret_cast<char*>(t.ints().data()),
            static_cast<std::streamsize>(n * 8));
  }
  if (!is && n > 0) throw IoError("truncated payload in " + path);
  return t;
}

}  // namespace ixsum
