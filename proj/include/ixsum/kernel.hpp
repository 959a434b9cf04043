#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ixsum/expr.hpp"
#include "ixsum/plan.hpp"
#include "ixsum/tensor.hpp"

namespace ixsum {

// Fused loop-nest IR and the tiled kernel it lowers to. All values are SSA:
// axis variables, iota splits, loads, products and accumulators are numbered
// entries in `values`; statements reference them by id.

enum class BroadcastMode { Eager, Lazy };

// Block axes a value can vary over. P is the flattened pointwise axis of
// non-dot kernels; Y/X are the two tiled output axes of dot kernels; R is the
// (single) tiled reduction axis. Unit marks a broadcast placeholder in the
// printed shape.
enum class AxisTag { P, Y, X, R, Unit };

const char* axis_tag_name(AxisTag t);

struct BlockShape {
  std::vector<AxisTag> axes;  // printed shape, possibly with Unit slots
  bool operator==(const BlockShape&) const = default;
};

// ---- loop nest (fused, scalar semantics, pre-tiling) ----

struct NestValue {
  std::string name;
  std::vector<std::string> vars;  // free variables, first-appearance order
  bool is_index = false;          // integer-valued (axis vars, splits, index loads)
};

struct NestStmt {
  enum class Kind {
    IotaSplit,  // result = (src / divisor) % modulo  (modulo 0: plain divide)
    Load,       // result = tensor[dim_index...]
    Mul,        // result = a * b
    Sum,        // result = sum over reduce_var of a
    Dot,        // result = dot(a, b) contracting reduce_var
    Store,      // tensor[dim_index...] = a
    AtomicAdd,  // tensor[dim_index...] += a
  };
  Kind kind;
  int result = -1;
  std::string tensor;           // Load/Store/AtomicAdd
  std::vector<int> dim_index;   // value ids, one per tensor dim
  int a = -1;
  int b = -1;
  std::string reduce_var;       // Sum/Dot
  int split_src = -1;           // IotaSplit
  int64_t divisor = 1;
  int64_t modulo = 0;
};

struct LoopNest {
  EinsumStmt stmt;                         // inferred source statement
  std::vector<std::string> pointwise;      // source order
  std::vector<std::string> reduction;
  // Parallel axes: a single flattened axis over all pointwise vars by
  // default; after dot detection the pointwise vars become individual axes.
  bool flattened = true;
  std::vector<std::string> axes;           // axis var names (flat axis name if flattened)
  std::map<std::string, int> axis_value;   // axis/loop var name -> value id
  std::vector<NestValue> values;
  std::vector<NestStmt> body;

  bool has_dot = false;
  std::string dot_y, dot_x, dot_r;
  std::vector<std::string> dot_batch;
};

/// Fuses a plan into one loop nest performing gather, compute and scatter
/// inline; pointwise variables are flattened into a single axis.
LoopNest fuse(const PlanGraph& plan, const EinsumStmt& stmt);

/// Rewrites broadcast-multiply-followed-by-sum into a Dot when the operands
/// carry (y,r) and (r,x) beyond shared batch variables, and unflattens y and x
/// into separate pointwise axes. Non-matching nests are returned untouched.
LoopNest detect_dot(const LoopNest& nest);

std::string nest_to_text(const LoopNest& nest);

// ---- tiled kernel ----

struct KernelAxis {
  std::string name;                     // axis variable (flat axes keep joined names)
  int64_t extent = 1;
  int64_t block = 1;
  std::vector<std::string> components;  // original vars when flattened
};

struct KernelValue {
  std::string name;
  BlockShape shape;        // printed block shape (mode dependent)
  std::vector<AxisTag> tags;  // semantic axes (no units), canonical order P/Y < R < X
  bool is_index = false;
};

struct KernelStmt {
  enum class Kind {
    AxisInit,   // grid axis value: pid(i)*B + arange(B), or pid(i) when B == 1
    AxisBase,   // serial axis base lanes: arange(B)
    AxisStep,   // serial axis value: offset + base
    IotaSplit,  // component recovery from a flattened axis
    Full,       // accumulator init
    Load,       // masked block load
    Mul,
    AccAdd,     // acc += a        (flattened reduction)
    AccDot,     // acc += dot(a,b) (tiled reduction)
    SumAxis,    // result = sum(a) over the reduction axis
    Reshape,    // eager-mode view dropping unit axes
    Transpose,  // eager-mode 2-D swap
    Store,
    AtomicAdd,
  };
  Kind kind;
  int result = -1;
  int axis = -1;                // AxisInit/AxisBase/AxisStep: index into grid/reduce
  std::string tensor;
  std::vector<int> dim_index;
  int a = -1;
  int b = -1;
  int split_src = -1;
  int64_t divisor = 1;
  int64_t modulo = 0;
};

struct TiledKernel {
  std::string name;
  BroadcastMode mode = BroadcastMode::Lazy;
  bool zero_init = true;   // '=' zero-initializes the output buffer
  std::string output;      // output tensor name
  EinsumStmt stmt;         // source statement (extents + tensor shapes)
  std::vector<KernelAxis> grid;      // parallel program axes
  std::optional<KernelAxis> reduce;  // tiled serial reduction loop
  std::vector<KernelValue> values;
  std::vector<KernelStmt> prologue;
  std::vector<KernelStmt> loop;      // body of the reduction loop
  std::vector<KernelStmt> epilogue;
  bool has_dot = false;
};

using BlockSizeMap = std::map<std::string, int64_t>;

/// Tiles a nest into a kernel: grid over pointwise blocks, inner loop over
/// reduction blocks, output-stationary accumulator. Block sizes are looked up
/// by axis name (flattened axes use the joined component name) and must be
/// powers of two; defaults are 16 for dot axes and the tiled reduction, 64
/// for a flattened pointwise axis. Batch axes of a dot always get block 1.
TiledKernel tile(const LoopNest& nest, const BlockSizeMap& block_sizes, BroadcastMode mode);

/// Structural checks: value shapes must be derivable from their operands,
/// lazy kernels may hold no Reshape/Transpose and every Dot must consume
/// (Y,R) x (R,X) operands, eager shapes are capped at rank 3 (lazy: rank 2).
void validate_kernel(const TiledKernel& k);

struct LayoutOpCounts {
  int reshapes = 0;
  int transposes = 0;
};
LayoutOpCounts count_layout_ops(const TiledKernel& k);

struct InterpOptions {
  int threads = 1;
};

struct InterpResult {
  Tensor out;
  AccessCounters counters;
};

/// Simulates the grid sequentially (or over deterministic instance
/// partitions): masked block loads with additive identity 0, Dot as a block
/// matmul, AtomicAdd accumulated in instance order.
InterpResult interpret_kernel(const TiledKernel& k, const TensorMap& tensors,
                              const Tensor& out, const InterpOptions& opts = {});

/// Deterministic textual form of the kernel (grammar in docs/kernel-ir.md);
/// byte-stable for golden tests.
std::string emit_text(const TiledKernel& k);

}  // namespace ixsum
