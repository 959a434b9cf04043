#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ixsum/expr.hpp"
#include "ixsum/kernel.hpp"
#include "ixsum/plan.hpp"
#include "ixsum/tensor.hpp"
#include "ixsum/tuner.hpp"

namespace ixsum {

// Exit codes shared by every subcommand.
enum ExitCode {
  kOk = 0,
  kFailure = 1,
  kExitParseError = 2,
  kExitUnboundTensor = 3,
  kExitShapeError = 4,
  kExitVerifyMismatch = 5,
  kExitIndexRange = 6,
};

// Synthetic sparse operand: generated matrix/tensor converted to a format
// whose arrays are bound under prefix+suffix names (AV/AM/AK for prefix "A").
struct SparseSpec {
  std::string name;
  std::vector<int64_t> shape;
  double density = 0.1;               // rank-2 generation
  std::vector<int64_t> gen_block;     // non-empty: block-sparse generation
  double block_density = 0.1;
  int64_t nnz = -1;                   // rank-n generation
  std::string format = "coo";         // coo | groupcoo | blockgroupcoo | auto
  int64_t g = 1;
  int group_dim = 0;
  std::vector<int64_t> format_block;  // [bM, bK] for blockgroupcoo
  std::vector<std::string> suffixes;  // per-dim operand suffixes
};

struct DenseSpec {
  std::string name;
  std::vector<int64_t> shape;
};

// Synthetic int64 index tensor with values uniform in [0, bound).
struct IndexSpec {
  std::string name;
  std::vector<int64_t> shape;
  int64_t bound = 1;
};

struct RunConfig {
  std::string expression;
  std::string mode = "fused-lazy";  // plan | fused-eager | fused-lazy | oracle
  ElemKind elem = ElemKind::Real64;
  uint64_t seed = 0;
  bool verify = false;
  int threads = 1;
  BlockSizeMap block_sizes;
  std::map<std::string, std::string> bindings;  // tensor -> file path
  std::vector<SparseSpec> sparse;
  std::vector<DenseSpec> dense;
  std::vector<IndexSpec> index;
  std::string output_name;
  std::vector<int64_t> output_shape;
  std::string out_path;       // optional result tensor file
  bool tuner_count_empty_rows = false;
};

/// Loads a run spec JSON (see corpus/) into a config; flag overrides are
/// applied by the CLI afterwards.
RunConfig load_run_config(const std::string& json_path);

struct BoundProblem {
  EinsumStmt stmt;  // inferred
  TensorMap tensors;
  Tensor out;
  std::map<std::string, int64_t> format_bytes;
  std::map<std::string, TuneReport> tuner_reports;  // per auto-format operand
};

/// Synthesizes/loads every operand, applies format directives, parses the
/// expression and infers extents.
BoundProblem materialize(const RunConfig& cfg);

struct ModeResult {
  Tensor result;
  AccessCounters counters;
  int64_t kernel_count = 0;
  LayoutOpCounts layout;
  double wall_ms = 0;
};

/// Runs one executor mode (oracle | plan | fused-eager | fused-lazy).
ModeResult execute_mode(const std::string& mode, const BoundProblem& problem, int threads = 1,
                        const BlockSizeMap& block_sizes = {});

int cmd_run(const RunConfig& cfg, std::ostream& out, std::ostream& diag);
int cmd_dump_plan(const RunConfig& cfg, std::ostream& out, std::ostream& diag);
int cmd_dump_kernel(const RunConfig& cfg, const std::string& mode, std::ostream& out,
                    std::ostream& diag);
int cmd_bench(const RunConfig& cfg, int repeats, std::ostream& out, std::ostream& diag);

struct ConvertConfig {
  std::string input;    // .mtx or .ixt
  std::string out_dir;
  std::string format = "coo";  // coo | groupcoo | blockgroupcoo | auto
  int64_t g = 1;
  int group_dim = 0;
  std::vector<int64_t> block;  // [bM, bK]
  std::string prefix = "A";
  bool tuner_count_empty_rows = false;
  // auto only: score candidates by plan-executor wall clock instead of F(g).
  bool measure = false;
  int measure_repeats = 3;
  int64_t measure_bcols = 8;
};

int cmd_convert(const ConvertConfig& cfg, std::ostream& out, std::ostream& diag);

struct SweepConfig {
  std::string input;          // optional matrix file; else synthetic
  int64_t rows = 64, cols = 64;
  double density = 0.1;
  uint64_t seed = 0;
  int64_t bcols = 8;          // N of the timed SpMM
  bool verify = false;
  bool tuner_count_empty_rows = false;
};

int cmd_sweep(const SweepConfig& cfg, std::ostream& out, std::ostream& diag);

/// Maps an exception to the documented exit code, printing the message.
int report_error(std::ostream& diag, const std::exception& e);

}  // namespace ixsum
