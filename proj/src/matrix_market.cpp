#include "ixsum/matrix_market.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

namespace ixsum {

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

bool next_data_line(std::istream& is, std::string& line) {
  while (std::getline(is, line)) {
    size_t first = line.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) continue;
    if (line[first] == '%') continue;
    return true;
  }
  return false;
}

}  // namespace

MatrixMarketData load_matrix_market(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open: " + path);

  std::string header;
  if (!std::getline(is, header)) throw IoError("empty MatrixMarket file: " + path);
  std::istringstream hs(header);
  std::string banner, object, format, field, symmetry;
  hs >> banner >> object >> format >> field >> symmetry;
  if (lower(banner) != "%%matrixmarket" || lower(object) != "matrix") {
    throw IoError("malformed MatrixMarket header in " + path);
  }
  format = lower(format);
  field = lower(field);
  symmetry = lower(symmetry);
  if (format != "coordinate" && format != "array") {
    throw IoError("unsupported MatrixMarket format '" + format + "' in " + path);
  }
  if (field != "real" && field != "integer" && field != "pattern" && field != "double") {
    throw IoError("unsupported MatrixMarket field '" + field + "' in " + path);
  }
  if (symmetry != "general" && symmetry != "symmetric" && symmetry != "skew-symmetric") {
    throw IoError("unsupported MatrixMarket symmetry '" + symmetry + "' in " + path);
  }
  bool pattern = field == "pattern";
  ElemKind kind = field == "integer" ? ElemKind::Int64 : ElemKind::Real64;

  std::string line;
  if (!next_data_line(is, line)) throw IoError("missing size line in " + path);
  std::istringstream sz(line);

  if (format == "array") {
    if (pattern) throw IoError("pattern field is invalid for array format in " + path);
    int64_t rows = 0, cols = 0;
    if (!(sz >> rows >> cols) || rows < 0 || cols < 0) {
      throw IoError("malformed array size line in " + path);
    }
    Tensor t = Tensor::zeros(kind, {rows, cols});
    // Array data is listed column by column. Symmetric variants store the
    // lower triangle only.
    auto read_value = [&](int64_t i, int64_t j) {
      if (!next_data_line(is, line)) throw IoError("truncated array data in " + path);
      std::istringstream vs(line);
      int64_t flat = i * cols + j;
      if (kind == ElemKind::Int64) {
        int64_t v;
        if (!(vs >> v)) throw IoError("bad integer value in " + path);
        t.int_at(flat) = v;
        return static_cast<double>(v);
      }
      double v;
      if (!(vs >> v)) throw IoError("bad real value in " + path);
      t.real_at(flat) = v;
      return v;
    };
    if (symmetry == "general") {
      for (int64_t j = 0; j < cols; ++j) {
        for (int64_t i = 0; i < rows; ++i) read_value(i, j);
      }
    } else {
      if (rows != cols) throw IoError("symmetric array must be square in " + path);
      double sign = symmetry == "skew-symmetric" ? -1.0 : 1.0;
      for (int64_t j = 0; j < cols; ++j) {
        for (int64_t i = j; i < rows; ++i) {
          double v = read_value(i, j);
          if (i != j) {
            int64_t flat = j * cols + i;
            if (kind == ElemKind::Int64) {
              t.int_at(flat) = static_cast<int64_t>(sign) * t.int_at(i * cols + j);
            } else {
              t.real_at(flat) = sign * v;
            }
          }
        }
      }
    }
    return t;
  }

  int64_t rows = 0, cols = 0, nnz = 0;
  if (!(sz >> rows >> cols >> nnz) || rows < 0 || cols < 0 || nnz < 0) {
    throw IoError("malformed coordinate size line in " + path);
  }
  CooMatrix c;
  c.rows = rows;
  c.cols = cols;
  std::vector<double> rvals;
  std::vector<int64_t> ivals;
  for (int64_t e = 0; e < nnz; ++e) {
    if (!next_data_line(is, line)) throw IoError("truncated coordinate data in " + path);
    std::istringstream es(line);
    int64_t i = 0, j = 0;
    if (!(es >> i >> j)) throw IoError("bad coordinate entry in " + path);
    if (i < 1 || i > rows || j < 1 || j > cols) {
      throw IoError("coordinate (" + std::to_string(i) + "," + std::to_string(j) +
                    ") out of declared bounds in " + path);
    }
    double rv = 1.0;
    int64_t iv = 1;
    if (!pattern) {
      if (kind == ElemKind::Int64) {
        if (!(es >> iv)) throw IoError("bad integer value in " + path);
      } else {
        if (!(es >> rv)) throw IoError("bad real value in " + path);
      }
    }
    auto push = [&](int64_t r0, int64_t c0, double rvv, int64_t ivv) {
      c.row_coord.push_back(r0);
      c.col_coord.push_back(c0);
      if (kind == ElemKind::Int64) {
        ivals.push_back(ivv);
      } else {
        rvals.push_back(rvv);
      }
    };
    push(i - 1, j - 1, rv, iv);
    if (symmetry != "general" && i != j) {
      double sign = symmetry == "skew-symmetric" ? -1.0 : 1.0;
      push(j - 1, i - 1, sign * rv, symmetry == "skew-symmetric" ? -iv : iv);
    }
  }
  if (kind == ElemKind::Int64) {
    int64_t count = static_cast<int64_t>(ivals.size());
    c.values = Tensor::from_int({count}, std::move(ivals));
  } else {
    int64_t count = static_cast<int64_t>(rvals.size());
    c.values = Tensor::from_real({count}, std::move(rvals));
  }
  return c;
}

}  // namespace ixsum
