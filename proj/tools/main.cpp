#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "ixsum/driver.hpp"

namespace {

using ixsum::RunConfig;

// "A:32x24" / "32x24" shape syntax.
std::vector<int64_t> parse_dims(const std::string& s) {
  std::vector<int64_t> dims;
  size_t pos = 0;
  while (pos < s.size()) {
    size_t next = s.find('x', pos);
    if (next == std::string::npos) next = s.size();
    dims.push_back(std::stoll(s.substr(pos, next - pos)));
    pos = next + 1;
  }
  return dims;
}

std::pair<std::string, std::string> split_once(const std::string& s, char sep) {
  size_t pos = s.find(sep);
  if (pos == std::string::npos) {
    throw CLI::ValidationError("expected '" + std::string(1, sep) + "' in " + s);
  }
  return {s.substr(0, pos), s.substr(pos + 1)};
}

// Shared run-style options (run, dump-plan, dump-kernel, bench).
struct RunFlags {
  std::string spec;
  std::string expr;
  std::string elem;
  std::string mode;
  uint64_t seed = 0;
  bool seed_set = false;
  std::vector<std::string> binds;
  std::vector<std::string> dense;
  std::vector<std::string> sparse;
  std::vector<std::string> formats;
  std::vector<std::string> blocks;
  std::string output;
  std::string out_path;
  int threads = 1;
  bool verify = false;
  bool count_empty_rows = false;
};

void add_run_flags(CLI::App* cmd, RunFlags& f, bool with_mode) {
  cmd->add_option("--spec", f.spec, "run spec JSON (see corpus/)");
  cmd->add_option("--expr", f.expr, "einsum expression string");
  cmd->add_option("--elem", f.elem, "element kind: real64|int64");
  if (with_mode) {
    cmd->add_option("--mode", f.mode, "plan|fused-eager|fused-lazy|oracle");
  }
  cmd->add_option("--seed", f.seed, "rng seed for synthetic inputs")
      ->each([&f](const std::string&) { f.seed_set = true; });
  cmd->add_option("--bind", f.binds, "tensor binding name=path (.ixt or .mtx)");
  cmd->add_option("--synth-dense", f.dense, "dense operand name:AxBxC");
  cmd->add_option("--synth-matrix", f.sparse, "sparse matrix name:RxC:density");
  cmd->add_option("--format", f.formats,
                  "format directive name=coo|groupcoo:g|blockgroupcoo:bMxbK:g|auto");
  cmd->add_option("--block-size", f.blocks, "tile block size axis=size (power of two)");
  cmd->add_option("--output", f.output, "output tensor name:AxB");
  cmd->add_option("--out", f.out_path, "write the result tensor to this path");
  cmd->add_option("--threads", f.threads, "executor threads (deterministic partials)");
  cmd->add_flag("--verify", f.verify, "cross-check the result against the oracle");
  cmd->add_flag("--tuner-count-empty-rows", f.count_empty_rows,
                "literal n (count empty rows) in the group-size cost model");
}

RunConfig build_config(const RunFlags& f) {
  RunConfig cfg;
  if (!f.spec.empty()) cfg = ixsum::load_run_config(f.spec);
  if (!f.expr.empty()) cfg.expression = f.expr;
  if (!f.elem.empty()) cfg.elem = f.elem == "int64" ? ixsum::ElemKind::Int64
                                                    : ixsum::ElemKind::Real64;
  if (!f.mode.empty()) cfg.mode = f.mode;
  if (f.seed_set) cfg.seed = f.seed;
  cfg.verify = f.verify || cfg.verify;
  cfg.threads = f.threads;
  cfg.tuner_count_empty_rows = f.count_empty_rows;
  if (!f.out_path.empty()) cfg.out_path = f.out_path;
  for (const auto& b : f.binds) {
    auto [name, path] = split_once(b, '=');
    cfg.bindings[name] = path;
  }
  for (const auto& d : f.dense) {
    auto [name, dims] = split_once(d, ':');
    cfg.dense.push_back(ixsum::DenseSpec{name, parse_dims(dims)});
  }
  for (const auto& s : f.sparse) {
    auto [name, rest] = split_once(s, ':');
    auto [dims, density] = split_once(rest, ':');
    ixsum::SparseSpec spec;
    spec.name = name;
    spec.shape = parse_dims(dims);
    spec.density = std::stod(density);
    cfg.sparse.push_back(std::move(spec));
  }
  for (const auto& fmt : f.formats) {
    auto [name, directive] = split_once(fmt, '=');
    auto* spec = [&]() -> ixsum::SparseSpec* {
      for (auto& s : cfg.sparse) {
        if (s.name == name) return &s;
      }
      return nullptr;
    }();
    if (!spec) throw CLI::ValidationError("--format names unknown sparse operand " + name);
    if (directive == "coo" || directive == "auto") {
      spec->format = directive;
    } else if (directive.rfind("groupcoo:", 0) == 0) {
      spec->format = "groupcoo";
      spec->g = std::stoll(directive.substr(9));
    } else if (directive.rfind("blockgroupcoo:", 0) == 0) {
      auto [block, g] = split_once(directive.substr(14), ':');
      spec->format = "blockgroupcoo";
      spec->format_block = parse_dims(block);
      spec->g = std::stoll(g);
    } else {
      throw CLI::ValidationError("bad format directive: " + directive);
    }
  }
  for (const auto& b : f.blocks) {
    auto [axis, size] = split_once(b, '=');
    cfg.block_sizes[axis] = std::stoll(size);
  }
  if (!f.output.empty()) {
    auto [name, dims] = split_once(f.output, ':');
    cfg.output_name = name;
    cfg.output_shape = parse_dims(dims);
  }
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"indirect-einsum compiler toolkit"};
  app.require_subcommand(1);

  RunFlags run_flags;
  auto* run = app.add_subcommand("run", "execute an expression and emit metrics JSON");
  add_run_flags(run, run_flags, true);

  RunFlags plan_flags;
  auto* dump_plan = app.add_subcommand("dump-plan", "print the unfused gather/einsum/scatter plan");
  add_run_flags(dump_plan, plan_flags, false);

  RunFlags kernel_flags;
  std::string kernel_mode = "lazy";
  auto* dump_kernel = app.add_subcommand("dump-kernel", "print the fused tiled kernel");
  add_run_flags(dump_kernel, kernel_flags, false);
  dump_kernel->add_option("--broadcast", kernel_mode, "eager|lazy");

  RunFlags bench_flags;
  int repeats = 3;
  auto* bench = app.add_subcommand("bench", "time plan vs fused modes");
  add_run_flags(bench, bench_flags, false);
  bench->add_option("--repeats", repeats, "timing repetitions");

  ixsum::ConvertConfig conv;
  std::string conv_format = "coo";
  std::string conv_block;
  auto* convert = app.add_subcommand("convert", "convert a matrix to a fixed-length format");
  convert->add_option("input", conv.input, "input matrix (.mtx or .ixt)")->required();
  convert->add_option("outdir", conv.out_dir, "output directory")->required();
  convert->add_option("--format", conv_format, "coo|groupcoo|blockgroupcoo|auto");
  convert->add_option("--g", conv.g, "group size");
  convert->add_option("--group-dim", conv.group_dim, "dimension to group along");
  convert->add_option("--block", conv_block, "block dims bMxbK (blockgroupcoo)");
  convert->add_option("--prefix", conv.prefix, "operand name prefix");
  convert->add_flag("--tuner-count-empty-rows", conv.tuner_count_empty_rows,
                    "literal n in the cost model");
  convert->add_flag("--measure", conv.measure,
                    "score auto candidates by plan-executor wall clock");
  convert->add_option("--measure-repeats", conv.measure_repeats, "timing repetitions");
  convert->add_option("--measure-bcols", conv.measure_bcols, "columns of the timed SpMM");

  ixsum::SweepConfig sweep;
  std::string sweep_dims;
  auto* sweep_cmd = app.add_subcommand("sweep-g", "CSV of F(g), relaxed cost, bytes, time per g");
  sweep_cmd->add_option("--input", sweep.input, "matrix file (.mtx or .ixt); else synthetic");
  sweep_cmd->add_option("--shape", sweep_dims, "synthetic matrix RxC");
  sweep_cmd->add_option("--density", sweep.density, "synthetic density");
  sweep_cmd->add_option("--seed", sweep.seed, "synthetic seed");
  sweep_cmd->add_option("--bcols", sweep.bcols, "columns of the timed SpMM");
  sweep_cmd->add_flag("--verify", sweep.verify, "verify each g against the oracle");
  sweep_cmd->add_flag("--tuner-count-empty-rows", sweep.tuner_count_empty_rows,
                      "literal n in the cost model");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      return ixsum::cmd_run(build_config(run_flags), std::cout, std::cerr);
    }
    if (dump_plan->parsed()) {
      return ixsum::cmd_dump_plan(build_config(plan_flags), std::cout, std::cerr);
    }
    if (dump_kernel->parsed()) {
      return ixsum::cmd_dump_kernel(build_config(kernel_flags), kernel_mode, std::cout,
                                    std::cerr);
    }
    if (bench->parsed()) {
      return ixsum::cmd_bench(build_config(bench_flags), repeats, std::cout, std::cerr);
    }
    if (convert->parsed()) {
      conv.format = conv_format;
      if (!conv_block.empty()) conv.block = parse_dims(conv_block);
      return ixsum::cmd_convert(conv, std::cout, std::cerr);
    }
    if (sweep_cmd->parsed()) {
      if (!sweep_dims.empty()) {
        auto dims = parse_dims(sweep_dims);
        sweep.rows = dims.at(0);
        sweep.cols = dims.at(1);
      }
      return ixsum::cmd_sweep(sweep, std::cout, std::cerr);
    }
  } catch (const std::exception& e) {
    return ixsum::report_error(std::cerr, e);
  }
  return ixsum::kFailure;
}
