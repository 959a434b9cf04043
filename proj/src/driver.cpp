#include "ixsum/driver.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <ostream>

#include "json.hpp"

#include "ixsum/matrix_market.hpp"
#include "ixsum/synth.hpp"

namespace ixsum {

namespace {

using Json = nlohmann::ordered_json;
namespace fs = std::filesystem;

ElemKind parse_elem(const std::string& s) {
  if (s == "real64") return ElemKind::Real64;
  if (s == "int64") return ElemKind::Int64;
  throw std::invalid_argument("unknown element kind: " + s);
}

std::vector<int64_t> shape_from_json(const Json& j) {
  std::vector<int64_t> shape;
  for (const auto& d : j) shape.push_back(d.get<int64_t>());
  return shape;
}

std::vector<std::string> default_suffixes(size_t rank) {
  // Matrix convention first (AM/AK), then alphabetic block coordinates.
  if (rank == 2) return {"M", "K"};
  std::vector<std::string> s;
  for (size_t i = 0; i < rank; ++i) s.push_back(std::string(1, static_cast<char>('I' + i)));
  return s;
}

}  // namespace

RunConfig load_run_config(const std::string& json_path) {
  std::ifstream is(json_path);
  if (!is) throw IoError("cannot open spec: " + json_path);
  Json j = Json::parse(is);

  RunConfig cfg;
  cfg.expression = j.at("expression").get<std::string>();
  if (j.contains("elem")) cfg.elem = parse_elem(j["elem"].get<std::string>());
  if (j.contains("seed")) cfg.seed = j["seed"].get<uint64_t>();
  if (j.contains("mode")) cfg.mode = j["mode"].get<std::string>();
  if (j.contains("blockSizes")) {
    for (const auto& [axis, size] : j["blockSizes"].items()) {
      cfg.block_sizes[axis] = size.get<int64_t>();
    }
  }
  if (j.contains("sparse")) {
    for (const auto& sj : j["sparse"]) {
      SparseSpec s;
      s.name = sj.at("name").get<std::string>();
      s.shape = shape_from_json(sj.at("shape"));
      if (sj.contains("density")) s.density = sj["density"].get<double>();
      if (sj.contains("genBlock")) s.gen_block = shape_from_json(sj["genBlock"]);
      if (sj.contains("blockDensity")) s.block_density = sj["blockDensity"].get<double>();
      if (sj.contains("nnz")) s.nnz = sj["nnz"].get<int64_t>();
      if (sj.contains("format")) s.format = sj["format"].get<std::string>();
      if (sj.contains("g")) s.g = sj["g"].get<int64_t>();
      if (sj.contains("groupDim")) s.group_dim = sj["groupDim"].get<int>();
      if (sj.contains("formatBlock")) s.format_block = shape_from_json(sj["formatBlock"]);
      if (sj.contains("suffixes")) {
        for (const auto& x : sj["suffixes"]) s.suffixes.push_back(x.get<std::string>());
      }
      cfg.sparse.push_back(std::move(s));
    }
  }
  if (j.contains("dense")) {
    for (const auto& dj : j["dense"]) {
      cfg.dense.push_back(DenseSpec{dj.at("name").get<std::string>(),
                                    shape_from_json(dj.at("shape"))});
    }
  }
  if (j.contains("index")) {
    for (const auto& ij : j["index"]) {
      cfg.index.push_back(IndexSpec{ij.at("name").get<std::string>(),
                                    shape_from_json(ij.at("shape")),
                                    ij.at("bound").get<int64_t>()});
    }
  }
  const auto& oj = j.at("output");
  cfg.output_name = oj.at("name").get<std::string>();
  cfg.output_shape = shape_from_json(oj.at("shape"));
  return cfg;
}

namespace {

void bind_matrix_format(const SparseSpec& spec, const Tensor& dense, BoundProblem& problem,
                        bool count_empty_rows) {
  const auto suffixes = spec.suffixes.empty() ? default_suffixes(2) : spec.suffixes;
  CooMatrix coo = dense_to_coo(dense);
  std::map<std::string, Tensor> ops;
  if (spec.format == "coo") {
    ops = emit_operands(coo, spec.name, suffixes[0], suffixes[1]);
    problem.format_bytes[spec.name] = format_nbytes(coo);
  } else if (spec.format == "groupcoo" || spec.format == "auto") {
    int64_t g = spec.g;
    if (spec.format == "auto") {
      OccProfile prof = OccProfile::from_coo(coo, spec.group_dim);
      TuneReport report = select(prof, {}, count_empty_rows);
      g = report.chosen;
      problem.tuner_reports[spec.name] = std::move(report);
    }
    GroupCooMatrix gc = coo_to_groupcoo(coo, spec.group_dim, g);
    ops = emit_operands(gc, spec.name, suffixes[0], suffixes[1]);
    problem.format_bytes[spec.name] = format_nbytes(gc);
  } else if (spec.format == "blockgroupcoo") {
    if (spec.format_block.size() != 2) {
      throw std::invalid_argument("blockgroupcoo needs formatBlock [bM, bK] for " + spec.name);
    }
    BlockGroupCooMatrix b = dense_to_blockgroupcoo(dense, spec.format_block[0],
                                                   spec.format_block[1], spec.g, spec.group_dim);
    ops = emit_operands(b, spec.name, suffixes[0], suffixes[1]);
    problem.format_bytes[spec.name] = format_nbytes(b);
  } else {
    throw std::invalid_argument("unknown format directive: " + spec.format);
  }
  for (auto& [name, tensor] : ops) problem.tensors[name] = std::move(tensor);
}

void bind_tensor_format(const SparseSpec& spec, const CooTensor& coo, BoundProblem& problem) {
  const auto suffixes = spec.suffixes.empty() ? default_suffixes(coo.shape.size())
                                              : spec.suffixes;
  if (suffixes.size() != coo.shape.size()) {
    throw std::invalid_argument("suffix count does not match rank for " + spec.name);
  }
  if (spec.format == "coo") {
    for (size_t d = 0; d < coo.coords.size(); ++d) {
      problem.tensors[spec.name + suffixes[d]] =
          Tensor::from_int({coo.nnz()}, coo.coords[d]);
    }
    problem.tensors[spec.name + "V"] = coo.values;
    problem.format_bytes[spec.name] =
        8 * (static_cast<int64_t>(coo.coords.size()) * coo.nnz() + coo.nnz());
  } else if (spec.format == "groupcoo") {
    GroupCooTensor gc = group_coo_tensor(coo, spec.group_dim, spec.g);
    problem.tensors[spec.name + suffixes[static_cast<size_t>(spec.group_dim)]] =
        Tensor::from_int({gc.num_groups()}, gc.group_coord);
    for (size_t m = 0; m < gc.member_coords.size(); ++m) {
      problem.tensors[spec.name + suffixes[static_cast<size_t>(gc.member_dims[m])]] =
          Tensor::from_int({gc.num_groups(), gc.group_size}, gc.member_coords[m]);
    }
    problem.tensors[spec.name + "V"] = gc.values;
    int64_t slots = gc.num_groups() * gc.group_size;
    problem.format_bytes[spec.name] =
        8 * (gc.num_groups() + static_cast<int64_t>(gc.member_coords.size()) * slots + slots);
  } else {
    throw std::invalid_argument("rank-" + std::to_string(coo.shape.size()) +
                                " sparse operand " + spec.name + " supports coo or groupcoo");
  }
}

}  // namespace

BoundProblem materialize(const RunConfig& cfg) {
  BoundProblem problem;
  Rng rng(cfg.seed);

  for (const auto& spec : cfg.dense) {
    problem.tensors[spec.name] = synth_dense(spec.shape, cfg.elem, rng);
  }
  for (const auto& spec : cfg.index) {
    Tensor t = Tensor::zeros(ElemKind::Int64, spec.shape);
    std::uniform_int_distribution<int64_t> dist(0, std::max<int64_t>(spec.bound - 1, 0));
    for (int64_t i = 0; i < t.numel(); ++i) t.int_at(i) = dist(rng);
    problem.tensors[spec.name] = std::move(t);
  }
  for (const auto& spec : cfg.sparse) {
    if (spec.shape.size() == 2) {
      Tensor dense = spec.gen_block.empty()
                         ? synth_sparse_matrix(spec.shape[0], spec.shape[1], spec.density,
                                               cfg.elem, rng)
                         : synth_block_sparse_matrix(spec.shape[0], spec.shape[1],
                                                     spec.gen_block[0], spec.gen_block[1],
                                                     spec.block_density, cfg.elem, rng);
      bind_matrix_format(spec, dense, problem, cfg.tuner_count_empty_rows);
    } else {
      int64_t nnz = spec.nnz;
      if (nnz < 0) {
        int64_t capacity = 1;
        for (int64_t d : spec.shape) capacity *= d;
        nnz = std::max<int64_t>(1, static_cast<int64_t>(spec.density * capacity));
      }
      CooTensor coo = synth_coo_tensor(spec.shape, nnz, cfg.elem, rng);
      bind_tensor_format(spec, coo, problem);
    }
  }
  for (const auto& [name, path] : cfg.bindings) {
    if (path.size() > 4 && path.substr(path.size() - 4) == ".mtx") {
      MatrixMarketData data = load_matrix_market(path);
      if (std::holds_alternative<Tensor>(data)) {
        problem.tensors[name] = std::get<Tensor>(data);
      } else {
        // Coordinate files bind their arrays under the standard suffixes.
        CooMatrix coo = canonicalize(std::get<CooMatrix>(data));
        for (auto& [n, t] : emit_operands(coo, name)) problem.tensors[n] = std::move(t);
        problem.format_bytes[name] = format_nbytes(coo);
      }
    } else {
      problem.tensors[name] = load_tensor(path);
    }
  }

  if (cfg.output_name.empty()) throw BindError("no output tensor configured");
  // A file-bound output primes the accumulation buffer for `+=` statements.
  auto bound_out = problem.tensors.find(cfg.output_name);
  if (bound_out != problem.tensors.end()) {
    if (!cfg.output_shape.empty() && bound_out->second.shape() != cfg.output_shape) {
      throw BindError("bound output " + cfg.output_name +
                      " does not match the configured output shape");
    }
    problem.out = bound_out->second;
    problem.tensors.erase(bound_out);
  } else {
    problem.out = Tensor::zeros(cfg.elem, cfg.output_shape);
  }

  ShapeMap shapes;
  for (const auto& [name, t] : problem.tensors) shapes[name] = t.shape();
  shapes[cfg.output_name] = problem.out.shape();
  problem.stmt = infer_extents(parse(cfg.expression), shapes);
  return problem;
}

ModeResult execute_mode(const std::string& mode, const BoundProblem& problem, int threads,
                        const BlockSizeMap& block_sizes) {
  ModeResult mo;
  auto t0 = std::chrono::steady_clock::now();
  if (mode == "oracle") {
    mo.result = oracle_einsum(problem.stmt, problem.tensors, problem.out);
  } else if (mode == "plan") {
    PlanGraph plan = lower_to_plan(problem.stmt);
    ExecResult r = execute_plan(plan, problem.tensors, problem.out);
    mo.result = std::move(r.out);
    mo.counters = r.counters;
    mo.kernel_count = static_cast<int64_t>(plan.node_count());
  } else if (mode == "fused-eager" || mode == "fused-lazy") {
    PlanGraph plan = lower_to_plan(problem.stmt);
    LoopNest nest = detect_dot(fuse(plan, problem.stmt));
    TiledKernel kernel = tile(nest, block_sizes,
                              mode == "fused-eager" ? BroadcastMode::Eager
                                                    : BroadcastMode::Lazy);
    InterpResult r = interpret_kernel(kernel, problem.tensors, problem.out,
                                      InterpOptions{threads});
    mo.result = std::move(r.out);
    mo.counters = r.counters;
    mo.kernel_count = 1;
    mo.layout = count_layout_ops(kernel);
  } else {
    throw std::invalid_argument("unknown mode: " + mode);
  }
  auto t1 = std::chrono::steady_clock::now();
  mo.wall_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
  return mo;
}

namespace {

bool verify_against_oracle(const BoundProblem& problem, const Tensor& result, double* rel_err) {
  Tensor expect = oracle_einsum(problem.stmt, problem.tensors, problem.out);
  if (result.is_int()) {
    *rel_err = expect.bit_equal(result) ? 0.0 : 1.0;
    return expect.bit_equal(result);
  }
  *rel_err = max_rel_error(expect, result);
  return *rel_err <= 1e-10;
}

char hex_digit(uint64_t v) { return "0123456789abcdef"[v & 0xf]; }

std::string hash_string(uint64_t h) {
  std::string s = "0x";
  for (int i = 15; i >= 0; --i) s += hex_digit(h >> (4 * i));
  return s;
}

Json counters_json(const AccessCounters& c) {
  Json j;
  j["gathers"] = c.gathers;
  j["scatters"] = c.scatters;
  j["atomicUpdates"] = c.atomic_updates;
  return j;
}

}  // namespace

int cmd_run(const RunConfig& cfg, std::ostream& out, std::ostream& diag) {
  BoundProblem problem = materialize(cfg);
  ModeResult mo = execute_mode(cfg.mode, problem, cfg.threads, cfg.block_sizes);

  Json metrics;
  metrics["metricsVersion"] = 1;
  metrics["expression"] = cfg.expression;
  metrics["mode"] = cfg.mode;
  metrics["elem"] = elem_kind_name(cfg.elem);
  metrics["seed"] = cfg.seed;
  metrics["wallMs"] = mo.wall_ms;
  metrics["counters"] = counters_json(mo.counters);
  metrics["kernelCount"] = mo.kernel_count;
  Json layout;
  layout["reshapes"] = mo.layout.reshapes;
  layout["transposes"] = mo.layout.transposes;
  metrics["layoutOps"] = layout;
  Json fmt_bytes = Json::object();
  for (const auto& [name, bytes] : problem.format_bytes) fmt_bytes[name] = bytes;
  metrics["formatBytes"] = fmt_bytes;
  metrics["resultHash"] = hash_string(tensor_hash(mo.result));

  bool ok = true;
  if (cfg.verify) {
    double rel = 0;
    ok = verify_against_oracle(problem, mo.result, &rel);
    metrics["verified"] = ok;
    metrics["verifyRelError"] = rel;
  } else {
    metrics["verified"] = nullptr;
    metrics["verifyRelError"] = nullptr;
  }

  if (!cfg.out_path.empty()) save_tensor(cfg.out_path, mo.result);
  out << metrics.dump(2) << "\n";
  if (!ok) {
    diag << "verification failed against the oracle\n";
    return kExitVerifyMismatch;
  }
  return kOk;
}

int cmd_dump_plan(const RunConfig& cfg, std::ostream& out, std::ostream& diag) {
  (void)diag;
  BoundProblem problem = materialize(cfg);
  out << plan_to_text(lower_to_plan(problem.stmt));
  return kOk;
}

int cmd_dump_kernel(const RunConfig& cfg, const std::string& mode, std::ostream& out,
                    std::ostream& diag) {
  (void)diag;
  BoundProblem problem = materialize(cfg);
  PlanGraph plan = lower_to_plan(problem.stmt);
  LoopNest nest = detect_dot(fuse(plan, problem.stmt));
  TiledKernel kernel = tile(nest, cfg.block_sizes,
                            mode == "eager" ? BroadcastMode::Eager : BroadcastMode::Lazy);
  out << emit_text(kernel);
  return kOk;
}

int cmd_bench(const RunConfig& cfg, int repeats, std::ostream& out, std::ostream& diag) {
  BoundProblem problem = materialize(cfg);
  repeats = std::max(1, repeats);
  std::vector<std::string> modes = {"plan", "fused-eager", "fused-lazy"};

  Json report;
  report["metricsVersion"] = 1;
  report["expression"] = cfg.expression;
  report["repeats"] = repeats;
  Json per_mode = Json::object();
  bool ok = true;
  for (const auto& mode : modes) {
    std::vector<double> times;
    uint64_t hash = 0;
    AccessCounters counters;
    for (int i = 0; i < repeats; ++i) {
      ModeResult mo = execute_mode(mode, problem, cfg.threads, cfg.block_sizes);
      times.push_back(mo.wall_ms);
      uint64_t h = tensor_hash(mo.result);
      if (i == 0) {
        hash = h;
        counters = mo.counters;
        if (cfg.verify) {
          double rel = 0;
          ok = verify_against_oracle(problem, mo.result, &rel) && ok;
        }
      } else if (h != hash) {
        diag << "nondeterministic result in mode " << mode << "\n";
        return kFailure;
      }
    }
    std::sort(times.begin(), times.end());
    Json m;
    m["medianMs"] = times[times.size() / 2];
    m["minMs"] = times.front();
    m["resultHash"] = hash_string(hash);
    m["counters"] = counters_json(counters);
    per_mode[mode] = m;
  }
  report["modes"] = per_mode;
  report["verified"] = cfg.verify ? Json(ok) : Json(nullptr);
  out << report.dump(2) << "\n";
  return ok ? kOk : kExitVerifyMismatch;
}

int cmd_convert(const ConvertConfig& cfg, std::ostream& out, std::ostream& diag) {
  (void)diag;
  CooMatrix coo;
  if (cfg.input.size() > 4 && cfg.input.substr(cfg.input.size() - 4) == ".mtx") {
    MatrixMarketData data = load_matrix_market(cfg.input);
    coo = std::holds_alternative<CooMatrix>(data)
              ? canonicalize(std::get<CooMatrix>(data))
              : dense_to_coo(std::get<Tensor>(data));
  } else {
    coo = dense_to_coo(load_tensor(cfg.input));
  }

  fs::create_directories(cfg.out_dir);
  Json manifest;
  manifest["manifestVersion"] = 1;
  manifest["shape"] = {coo.rows, coo.cols};
  manifest["nnz"] = coo.nnz();
  manifest["groupDim"] = cfg.group_dim;

  std::map<std::string, Tensor> arrays;
  if (cfg.format == "coo") {
    manifest["format"] = "coo";
    manifest["g"] = 1;
    arrays = emit_operands(coo, cfg.prefix);
    manifest["formatBytes"] = format_nbytes(coo);
    manifest["maskBytes"] = 0;
  } else if (cfg.format == "groupcoo" || cfg.format == "auto") {
    int64_t g = cfg.g;
    manifest["format"] = "groupcoo";
    if (cfg.format == "auto") {
      OccProfile prof = OccProfile::from_coo(coo, cfg.group_dim);
      GroupSizeEvaluator evaluator;
      if (cfg.measure) {
        // Score candidates by the wall clock of the GroupCOO SpMM plan.
        Rng rng(1);
        Tensor b = synth_dense({coo.cols, cfg.measure_bcols}, coo.values.kind(), rng);
        Tensor c0 = Tensor::zeros(coo.values.kind(), {coo.rows, cfg.measure_bcols});
        evaluator = [&, b, c0](int64_t cand) {
          GroupCooMatrix gc = coo_to_groupcoo(coo, cfg.group_dim, cand);
          TensorMap tensors = emit_operands(gc);
          tensors["B"] = b;
          ShapeMap shapes;
          for (const auto& [name, t] : tensors) shapes[name] = t.shape();
          shapes["C"] = c0.shape();
          EinsumStmt stmt =
              infer_extents(parse("C[AM[p],n] += AV[p,q] * B[AK[p,q],n]"), shapes);
          PlanGraph plan = lower_to_plan(stmt);
          double best = 0;
          for (int rep = 0; rep < std::max(1, cfg.measure_repeats); ++rep) {
            auto t0 = std::chrono::steady_clock::now();
            execute_plan(plan, tensors, c0);
            auto t1 = std::chrono::steady_clock::now();
            double ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
            best = rep == 0 ? ms : std::min(best, ms);
          }
          return best;
        };
      }
      TuneReport report = select(prof, evaluator, cfg.tuner_count_empty_rows);
      g = report.chosen;
      Json tj;
      tj["gStar"] = report.gstar;
      tj["scoredBy"] = cfg.measure ? "measuredMs" : "costExact";
      Json cands = Json::array();
      for (const auto& [cg, score] : report.candidates) {
        cands.push_back({{"g", cg}, {"score", score}});
      }
      tj["candidates"] = cands;
      manifest["tuner"] = tj;
    }
    GroupCooMatrix gc = coo_to_groupcoo(coo, cfg.group_dim, g);
    manifest["g"] = g;
    manifest["numGroups"] = gc.num_groups();
    arrays = emit_operands(gc, cfg.prefix);
    manifest["formatBytes"] = format_nbytes(gc);
    manifest["maskBytes"] = mask_nbytes(gc);
    std::vector<int64_t> mask(gc.pad_mask.begin(), gc.pad_mask.end());
    arrays[cfg.prefix + "mask"] =
        Tensor::from_int({gc.num_groups(), gc.group_size}, std::move(mask));
  } else if (cfg.format == "blockgroupcoo") {
    if (cfg.block.size() != 2) {
      throw std::invalid_argument("blockgroupcoo conversion needs --block bMxbK");
    }
    Tensor dense = coo_to_dense(coo);
    BlockGroupCooMatrix b =
        dense_to_blockgroupcoo(dense, cfg.block[0], cfg.block[1], cfg.g, cfg.group_dim);
    manifest["format"] = "blockgroupcoo";
    manifest["g"] = cfg.g;
    manifest["block"] = {b.block_rows, b.block_cols};
    manifest["numGroups"] = b.num_groups();
    arrays = emit_operands(b, cfg.prefix);
    manifest["formatBytes"] = format_nbytes(b);
    manifest["maskBytes"] = mask_nbytes(b);
    std::vector<int64_t> mask(b.pad_mask.begin(), b.pad_mask.end());
    arrays[cfg.prefix + "mask"] =
        Tensor::from_int({b.num_groups(), b.group_size}, std::move(mask));
  } else {
    throw std::invalid_argument("unknown format: " + cfg.format);
  }

  Json files = Json::object();
  for (const auto& [name, tensor] : arrays) {
    std::string file = name + ".ixt";
    save_tensor((fs::path(cfg.out_dir) / file).string(), tensor);
    files[name] = file;
  }
  manifest["arrays"] = files;
  std::ofstream ms(fs::path(cfg.out_dir) / "manifest.json");
  ms << manifest.dump(2) << "\n";
  out << manifest.dump(2) << "\n";
  return kOk;
}

int cmd_sweep(const SweepConfig& cfg, std::ostream& out, std::ostream& diag) {
  CooMatrix coo;
  if (!cfg.input.empty()) {
    if (cfg.input.size() > 4 && cfg.input.substr(cfg.input.size() - 4) == ".mtx") {
      MatrixMarketData data = load_matrix_market(cfg.input);
      coo = std::holds_alternative<CooMatrix>(data)
                ? canonicalize(std::get<CooMatrix>(data))
                : dense_to_coo(std::get<Tensor>(data));
    } else {
      coo = dense_to_coo(load_tensor(cfg.input));
    }
  } else {
    Rng rng(cfg.seed);
    coo = dense_to_coo(
        synth_sparse_matrix(cfg.rows, cfg.cols, cfg.density, ElemKind::Real64, rng));
  }

  OccProfile prof = OccProfile::from_coo(coo, 0);
  int64_t max_g = std::max<int64_t>(prof.max_occ(), 1);

  Rng rng(cfg.seed + 1);
  Tensor b = synth_dense({coo.cols, cfg.bcols}, coo.values.kind(), rng);
  Tensor c0 = Tensor::zeros(coo.values.kind(), {coo.rows, cfg.bcols});
  EinsumStmt stmt = parse("C[AM[p],n] += AV[p,q] * B[AK[p,q],n]");

  out << "g,F,F_relaxed,format_nbytes,measured_ms\n";
  for (int64_t g = 1; g <= max_g; ++g) {
    GroupCooMatrix gc = coo_to_groupcoo(coo, 0, g);
    TensorMap tensors = emit_operands(gc);
    tensors["B"] = b;
    ShapeMap shapes;
    for (const auto& [name, t] : tensors) shapes[name] = t.shape();
    shapes["C"] = c0.shape();
    EinsumStmt inferred = infer_extents(stmt, shapes);
    PlanGraph plan = lower_to_plan(inferred);

    auto t0 = std::chrono::steady_clock::now();
    ExecResult r = execute_plan(plan, tensors, c0);
    auto t1 = std::chrono::steady_clock::now();
    double ms = std::chrono::duration<double, std::milli>(t1 - t0).count();

    if (cfg.verify) {
      Tensor expect = oracle_einsum(inferred, tensors, c0);
      if (max_rel_error(expect, r.out) > 1e-10) {
        diag << "verification failed at g=" << g << "\n";
        return kExitVerifyMismatch;
      }
    }
    out << g << "," << cost_exact(prof, g) << ","
        << cost_relaxed(prof, static_cast<double>(g), cfg.tuner_count_empty_rows) << ","
        << format_nbytes(gc) << "," << ms << "\n";
  }
  return kOk;
}

int report_error(std::ostream& diag, const std::exception& e) {
  diag << "error: " << e.what() << "\n";
  if (dynamic_cast<const ParseError*>(&e)) return kExitParseError;
  if (dynamic_cast<const BindError*>(&e)) return kExitUnboundTensor;
  if (dynamic_cast<const IndexRangeError*>(&e)) return kExitIndexRange;
  if (dynamic_cast<const InferenceError*>(&e) || dynamic_cast<const ShapeError*>(&e)) {
    return kExitShapeError;
  }
  return kFailure;
}

}  // namespace ixsum
