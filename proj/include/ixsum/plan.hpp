#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "ixsum/expr.hpp"
#include "ixsum/formats.hpp"
#include "ixsum/tensor.hpp"

namespace ixsum {

// Unfused lowering of an indirect Einsum: gather every indirect input access
// into a dense intermediate, run one direct Einsum over the intermediates,
// scatter-add into indirect output positions.

struct GatherNode {
  std::string source;       // tensor being gathered from
  int dim = 0;              // dimension replaced by the index tensor
  std::string index_tensor;
  std::vector<std::string> index_args;   // vars indexing the index tensor
  std::string result;                    // intermediate name
  std::vector<std::string> result_vars;  // vars of the intermediate, in dim order
};

struct EinsumNode {
  EinsumStmt stmt;  // fully direct statement over inputs/intermediates
};

struct ScatterAddNode {
  std::string dest;
  std::vector<int> dims;                        // indirect output dims
  std::vector<std::string> index_tensors;       // one per indirect dim
  std::vector<std::vector<std::string>> index_args;
  std::string source;                           // computed intermediate
  std::vector<std::string> source_vars;
};

using PlanNode = std::variant<GatherNode, EinsumNode, ScatterAddNode>;

struct PlanGraph {
  EinsumStmt stmt;  // original (inferred) statement
  std::vector<PlanNode> nodes;

  size_t node_count() const { return nodes.size(); }
};

/// One Gather per distinct indirect input access pattern, one DenseEinsum,
/// one ScatterAdd covering all indirect output dims. Direct-only statements
/// lower to a single EinsumNode.
PlanGraph lower_to_plan(const EinsumStmt& stmt);

/// Stable numbered-node listing for golden tests and the dump-plan command.
std::string plan_to_text(const PlanGraph& plan);

struct AccessCounters {
  int64_t gathers = 0;        // index-tensor element reads while gathering inputs
  int64_t scatters = 0;       // output-coordinate index reads
  int64_t atomic_updates = 0; // accumulate-into-output element operations
};

struct IndexRangeError : std::runtime_error {
  explicit IndexRangeError(const std::string& what) : std::runtime_error(what) {}
};

struct BindError : std::runtime_error {
  explicit BindError(const std::string& what) : std::runtime_error(what) {}
};

using TensorMap = std::map<std::string, Tensor>;

struct ExecResult {
  Tensor out;
  AccessCounters counters;
};

/// Reference executor: materializes gathers, evaluates the dense Einsum with
/// deterministic sequential accumulation, then scatter-adds. `=` statements
/// zero the output buffer first; `+=` accumulates into the provided contents.
ExecResult execute_plan(const PlanGraph& plan, const TensorMap& tensors, const Tensor& out);

/// Ground truth: brute-force loops over the full Cartesian product of all
/// variable extents, evaluating every index expression with range checks.
Tensor oracle_einsum(const EinsumStmt& stmt, const TensorMap& tensors, const Tensor& out);

/// Analytic counters for a GroupCOO statement: gathers = G*g (AK reads),
/// scatters = G (AM reads); their sum equals cost_exact at this g. Atomic
/// updates are G times the product of the extents of pointwise vars that do
/// not address the group structure.
AccessCounters count_accesses_model(const GroupCooMatrix& fmt, const EinsumStmt& stmt);

}  // namespace ixsum
