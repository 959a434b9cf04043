#pragma once

#include <string>
#include <variant>

#include "ixsum/formats.hpp"
#include "ixsum/tensor.hpp"

namespace ixsum {

// MatrixMarket (.mtx) reader. Coordinate files yield a CooMatrix (one-based
// indices converted to zero-based, duplicates kept); array files yield a dense
// Tensor. symmetric/skew-symmetric files are expanded to full storage.
using MatrixMarketData = std::variant<Tensor, CooMatrix>;

MatrixMarketData load_matrix_market(const std::string& path);

}  // namespace ixsum
