#include "ixsum/plan.hpp"

#include <algorithm>
#include <cassert>
#include <numeric>
#include <sstream>

namespace ixsum {

namespace {

std::vector<std::string> access_vars_spliced(const TensorAccess& access) {
  std::vector<std::string> vars;
  for (const IndexExpr& e : access.indices) {
    if (const auto* d = std::get_if<DirectIndex>(&e)) {
      vars.push_back(d->var);
    } else {
      for (const auto& a : std::get<IndirectIndex>(e).args) vars.push_back(a);
    }
  }
  return vars;
}

TensorAccess direct_access(const std::string& tensor, const std::vector<std::string>& vars) {
  TensorAccess a;
  a.tensor = tensor;
  for (const auto& v : vars) a.indices.push_back(DirectIndex{v});
  return a;
}

std::string fresh_name(const std::string& base, const EinsumStmt& stmt,
                       const std::vector<std::string>& taken) {
  auto in_use = [&](const std::string& name) {
    if (name == stmt.output.tensor) return true;
    for (const auto& in : stmt.inputs) {
      if (in.tensor == name) return true;
      for (const IndexExpr& e : in.indices) {
        if (const auto* ind = std::get_if<IndirectIndex>(&e); ind && ind->tensor == name) {
          return true;
        }
      }
    }
    return std::find(taken.begin(), taken.end(), name) != taken.end();
  };
  std::string name = base + "tmp";
  for (int i = 2; in_use(name); ++i) name = base + "tmp" + std::to_string(i);
  return name;
}

}  // namespace

PlanGraph lower_to_plan(const EinsumStmt& stmt) {
  if (!stmt.inferred()) {
    throw InferenceError("lower_to_plan requires inferred extents");
  }
  PlanGraph plan;
  plan.stmt = stmt;

  std::vector<std::string> taken;
  std::map<std::string, GatherNode> gathered;  // access text -> node (dedup)
  std::vector<GatherNode> gathers;

  EinsumStmt dense;
  dense.accumulate = stmt.accumulate;

  for (const TensorAccess& in : stmt.inputs) {
    int indirect_dim = -1;
    for (size_t d = 0; d < in.indices.size(); ++d) {
      if (!is_direct(in.indices[d])) {
        if (indirect_dim >= 0) {
          throw InferenceError("multiple indirections in one access are not supported: " +
                               to_string(in));
        }
        indirect_dim = static_cast<int>(d);
      }
    }
    if (indirect_dim < 0) {
      dense.inputs.push_back(in);
      continue;
    }
    std::string key = to_string(in);
    auto it = gathered.find(key);
    if (it == gathered.end()) {
      const auto& ind = std::get<IndirectIndex>(in.indices[static_cast<size_t>(indirect_dim)]);
      GatherNode node;
      node.source = in.tensor;
      node.dim = indirect_dim;
      node.index_tensor = ind.tensor;
      node.index_args = ind.args;
      node.result = fresh_name(in.tensor, stmt, taken);
      node.result_vars = access_vars_spliced(in);
      taken.push_back(node.result);
      it = gathered.emplace(key, node).first;
      gathers.push_back(node);
    }
    dense.inputs.push_back(direct_access(it->second.result, it->second.result_vars));
  }

  bool output_indirect = false;
  for (const IndexExpr& e : stmt.output.indices) output_indirect |= !is_direct(e);

  std::vector<PlanNode> nodes;
  for (auto& g : gathers) nodes.emplace_back(std::move(g));

  if (output_indirect) {
    ScatterAddNode scatter;
    scatter.dest = stmt.output.tensor;
    for (size_t d = 0; d < stmt.output.indices.size(); ++d) {
      if (const auto* ind = std::get_if<IndirectIndex>(&stmt.output.indices[d])) {
        scatter.dims.push_back(static_cast<int>(d));
        scatter.index_tensors.push_back(ind->tensor);
        scatter.index_args.push_back(ind->args);
      }
    }
    scatter.source = fresh_name(stmt.output.tensor, stmt, taken);
    scatter.source_vars = access_vars_spliced(stmt.output);
    dense.output = direct_access(scatter.source, scatter.source_vars);
    dense.accumulate = false;  // fresh intermediate; the scatter accumulates
    nodes.emplace_back(EinsumNode{});
    nodes.emplace_back(std::move(scatter));
  } else {
    dense.output = stmt.output;
    nodes.emplace_back(EinsumNode{});
  }

  // Fill shared metadata on the dense statement.
  {
    EinsumStmt tmp = dense;
    tmp.vars.clear();
    auto add = [&tmp](const std::string& v) {
      if (std::find(tmp.vars.begin(), tmp.vars.end(), v) == tmp.vars.end()) tmp.vars.push_back(v);
    };
    for (const auto& v : access_vars_spliced(tmp.output)) add(v);
    for (const auto& in : tmp.inputs) {
      for (const auto& v : access_vars_spliced(in)) add(v);
    }
    tmp.extents = stmt.extents;
    dense = std::move(tmp);
  }

  for (auto& n : nodes) {
    if (std::holds_alternative<EinsumNode>(n)) {
      std::get<EinsumNode>(n).stmt = dense;
    }
  }
  plan.nodes = std::move(nodes);
  return plan;
}

std::string plan_to_text(const PlanGraph& plan) {
  std::ostringstream os;
  os << "plan: " << to_string(plan.stmt) << "\n";
  for (size_t i = 0; i < plan.nodes.size(); ++i) {
    os << "%" << i << " = ";
    if (const auto* g = std::get_if<GatherNode>(&plan.nodes[i])) {
      os << "gather " << g->source << " dim=" << g->dim << " index=" << g->index_tensor << "[";
      for (size_t a = 0; a < g->index_args.size(); ++a) {
        if (a) os << ",";
        os << g->index_args[a];
      }
      os << "] -> " << g->result << "[";
      for (size_t v = 0; v < g->result_vars.size(); ++v) {
        if (v) os << ",";
        os << g->result_vars[v];
      }
      os << "]";
    } else if (const auto* e = std::get_if<EinsumNode>(&plan.nodes[i])) {
      os << "einsum " << to_string(e->stmt);
    } else {
      const auto& s = std::get<ScatterAddNode>(plan.nodes[i]);
      os << "scatter_add " << s.dest << " dims=[";
      for (size_t d = 0; d < s.dims.size(); ++d) {
        if (d) os << ",";
        os << s.dims[d];
      }
      os << "] index=[";
      for (size_t d = 0; d < s.index_tensors.size(); ++d) {
        if (d) os << ",";
        os << s.index_tensors[d];
      }
      os << "] src=" << s.source;
    }
    os << "\n";
  }
  return os.str();
}

namespace {

// ---- execution helpers ----

const Tensor& bound(const TensorMap& tensors, const std::string& name) {
  auto it = tensors.find(name);
  if (it == tensors.end()) throw BindError("unbound tensor " + name);
  return it->second;
}

void check_direct_dims(const TensorAccess& access, const Tensor& t, const TensorMap& tensors,
                       const EinsumStmt& stmt) {
  if (t.rank() != static_cast<int>(access.indices.size())) {
    throw BindError("tensor " + access.tensor + " has rank " + std::to_string(t.rank()) +
                    " but is accessed with " + std::to_string(access.indices.size()) +
                    " indices");
  }
  for (size_t d = 0; d < access.indices.size(); ++d) {
    if (const auto* dir = std::get_if<DirectIndex>(&access.indices[d])) {
      if (t.dim(static_cast<int>(d)) != stmt.extent_of(dir->var)) {
        throw BindError("tensor " + access.tensor + " dim " + std::to_string(d) +
                        " has extent " + std::to_string(t.dim(static_cast<int>(d))) +
                        " but variable " + dir->var + " has extent " +
                        std::to_string(stmt.extent_of(dir->var)));
      }
    } else {
      const auto& ind = std::get<IndirectIndex>(access.indices[d]);
      const Tensor& it = bound(tensors, ind.tensor);
      if (!it.is_int()) {
        throw BindError("index tensor " + ind.tensor + " must be int64, got " +
                        elem_kind_name(it.kind()));
      }
      if (it.rank() != static_cast<int>(ind.args.size())) {
        throw BindError("index tensor " + ind.tensor + " has rank " +
                        std::to_string(it.rank()) + " but is accessed with " +
                        std::to_string(ind.args.size()) + " indices");
      }
      for (size_t a = 0; a < ind.args.size(); ++a) {
        if (it.dim(static_cast<int>(a)) != stmt.extent_of(ind.args[a])) {
          throw BindError("index tensor " + ind.tensor + " dim " + std::to_string(a) +
                          " has extent " + std::to_string(it.dim(static_cast<int>(a))) +
                          " but variable " + ind.args[a] + " has extent " +
                          std::to_string(stmt.extent_of(ind.args[a])));
        }
      }
    }
  }
}

void validate_bindings(const EinsumStmt& stmt, const TensorMap& tensors, const Tensor& out) {
  check_direct_dims(stmt.output, out, tensors, stmt);
  for (const auto& in : stmt.inputs) {
    const Tensor& t = bound(tensors, in.tensor);
    check_direct_dims(in, t, tensors, stmt);
    if (t.kind() != out.kind()) {
      throw BindError("tensor " + in.tensor + " is " + elem_kind_name(t.kind()) +
                      " but the output buffer is " + elem_kind_name(out.kind()));
    }
  }
}

int64_t checked_index(const Tensor& itensor, const std::string& iname, int64_t flat,
                      int64_t bound_extent, const std::string& target, int dim) {
  int64_t v = itensor.int_at(flat);
  if (v < 0 || v >= bound_extent) {
    throw IndexRangeError("index tensor " + iname + " value " + std::to_string(v) +
                          " at position [" + std::to_string(flat) + "] out of range for dim " +
                          std::to_string(dim) + " of " + target + " (extent " +
                          std::to_string(bound_extent) + ")");
  }
  return v;
}

struct VarSpace {
  std::vector<std::string> vars;
  std::vector<int64_t> extents;

  int64_t size() const {
    int64_t n = 1;
    for (int64_t e : extents) n *= e;
    return n;
  }
  int index_of(const std::string& v) const {
    auto it = std::find(vars.begin(), vars.end(), v);
    assert(it != vars.end());
    return static_cast<int>(it - vars.begin());
  }
};

VarSpace make_space(const std::vector<std::string>& vars, const EinsumStmt& stmt) {
  VarSpace s;
  s.vars = vars;
  for (const auto& v : vars) s.extents.push_back(stmt.extent_of(v));
  return s;
}

// Odometer over a variable space; `point` holds the current value per var.
template <typename Fn>
void for_each_point(const VarSpace& space, std::vector<int64_t>& point, Fn&& fn) {
  point.assign(space.vars.size(), 0);
  if (space.size() == 0) return;
  while (true) {
    fn(point);
    int i = static_cast<int>(point.size()) - 1;
    for (; i >= 0; --i) {
      if (++point[static_cast<size_t>(i)] < space.extents[static_cast<size_t>(i)]) break;
      point[static_cast<size_t>(i)] = 0;
    }
    if (i < 0) break;
  }
}

// Resolves one tensor access against a variable space: per-dim either a var
// slot or a cached index-tensor lookup.
struct CompiledAccess {
  const Tensor* tensor = nullptr;
  std::string name;
  struct Dim {
    bool direct = true;
    int var_slot = -1;                // direct
    const Tensor* index_tensor = nullptr;  // indirect
    std::string index_name;
    std::vector<int> arg_slots;
    int64_t bound_extent = 0;
  };
  std::vector<Dim> dims;
  std::vector<int64_t> strides;

  int64_t flat_at(const std::vector<int64_t>& point) const {
    int64_t flat = 0;
    for (size_t d = 0; d < dims.size(); ++d) {
      const Dim& dim = dims[d];
      int64_t idx;
      if (dim.direct) {
        idx = point[static_cast<size_t>(dim.var_slot)];
      } else {
        int64_t iflat = 0;
        for (size_t a = 0; a < dim.arg_slots.size(); ++a) {
          iflat = iflat * dim.index_tensor->dim(static_cast<int>(a)) +
                  point[static_cast<size_t>(dim.arg_slots[a])];
        }
        idx = checked_index(*dim.index_tensor, dim.index_name, iflat, dim.bound_extent, name,
                            static_cast<int>(d));
      }
      flat += strides[d] * idx;
    }
    return flat;
  }
};

CompiledAccess compile_access(const TensorAccess& access, const TensorMap& tensors,
                              const VarSpace& space, const Tensor* target = nullptr) {
  CompiledAccess ca;
  ca.tensor = target ? target : &bound(tensors, access.tensor);
  ca.name = access.tensor;
  ca.strides = ca.tensor->strides();
  for (size_t d = 0; d < access.indices.size(); ++d) {
    CompiledAccess::Dim dim;
    if (const auto* dir = std::get_if<DirectIndex>(&access.indices[d])) {
      dim.direct = true;
      dim.var_slot = space.index_of(dir->var);
    } else {
      const auto& ind = std::get<IndirectIndex>(access.indices[d]);
      dim.direct = false;
      dim.index_tensor = &bound(tensors, ind.tensor);
      dim.index_name = ind.tensor;
      for (const auto& a : ind.args) dim.arg_slots.push_back(space.index_of(a));
      dim.bound_extent = ca.tensor->dim(static_cast<int>(d));
    }
    ca.dims.push_back(std::move(dim));
  }
  return ca;
}

template <typename T>
T elem(const Tensor& t, int64_t flat) {
  if constexpr (std::is_same_v<T, double>) {
    return t.real_at(flat);
  } else {
    return t.int_at(flat);
  }
}

template <typename T>
T& elem_ref(Tensor& t, int64_t flat) {
  if constexpr (std::is_same_v<T, double>) {
    return t.real_at(flat);
  } else {
    return t.int_at(flat);
  }
}

// ---- dense (direct) einsum over bound tensors ----

template <typename T>
void run_dense_einsum(const EinsumStmt& stmt, const TensorMap& tensors, Tensor& out) {
  VarClasses classes = classify_vars(stmt);
  VarSpace pw = make_space(classes.pointwise, stmt);
  VarSpace red = make_space(classes.reduction, stmt);

  // Combined space: pointwise slots then reduction slots.
  VarSpace all;
  all.vars = pw.vars;
  all.extents = pw.extents;
  all.vars.insert(all.vars.end(), red.vars.begin(), red.vars.end());
  all.extents.insert(all.extents.end(), red.extents.begin(), red.extents.end());

  CompiledAccess out_access = compile_access(stmt.output, tensors, all, &out);
  std::vector<CompiledAccess> ins;
  for (const auto& in : stmt.inputs) ins.push_back(compile_access(in, tensors, all));

  std::vector<int64_t> point(all.vars.size(), 0);
  std::vector<int64_t> pw_point;
  for_each_point(pw, pw_point, [&](const std::vector<int64_t>& outer) {
    std::copy(outer.begin(), outer.end(), point.begin());
    T acc = 0;
    std::vector<int64_t> red_point;
    if (red.vars.empty()) {
      T prod = 1;
      for (const auto& in : ins) prod *= elem<T>(*in.tensor, in.flat_at(point));
      acc = prod;
    } else {
      for_each_point(red, red_point, [&](const std::vector<int64_t>& inner) {
        std::copy(inner.begin(), inner.end(), point.begin() + static_cast<long>(pw.vars.size()));
        T prod = 1;
        for (const auto& in : ins) prod *= elem<T>(*in.tensor, in.flat_at(point));
        acc += prod;
      });
    }
    elem_ref<T>(out, out_access.flat_at(point)) += acc;
  });
}

// ---- gather ----

template <typename T>
Tensor run_gather(const GatherNode& node, const TensorMap& tensors, const EinsumStmt& stmt,
                  AccessCounters& counters) {
  const Tensor& src = bound(tensors, node.source);
  const Tensor& itensor = bound(tensors, node.index_tensor);

  // One index read per index-tensor element; reused across trailing dims.
  counters.gathers += itensor.numel();
  std::vector<int64_t> idx_cache(static_cast<size_t>(itensor.numel()));
  for (int64_t i = 0; i < itensor.numel(); ++i) {
    idx_cache[static_cast<size_t>(i)] = checked_index(
        itensor, node.index_tensor, i, src.dim(node.dim), node.source, node.dim);
  }

  VarSpace space = make_space(node.result_vars, stmt);
  Tensor result = Tensor::zeros(src.kind(), space.extents);

  // Slot layout of the result: dims before node.dim, then the index args,
  // then dims after. Build per-result-dim source mapping.
  int args_begin = node.dim;
  int args_count = static_cast<int>(node.index_args.size());
  std::vector<int64_t> src_strides = src.strides();

  std::vector<int64_t> point;
  int64_t flat_out = 0;
  for_each_point(space, point, [&](const std::vector<int64_t>& p) {
    int64_t iflat = 0;
    for (int a = 0; a < args_count; ++a) {
      iflat = iflat * itensor.dim(a) + p[static_cast<size_t>(args_begin + a)];
    }
    int64_t src_flat = idx_cache[static_cast<size_t>(iflat)] * src_strides[static_cast<size_t>(node.dim)];
    for (int d = 0; d < src.rank(); ++d) {
      if (d == node.dim) continue;
      int result_slot = d < node.dim ? d : d + args_count - 1;
      src_flat += src_strides[static_cast<size_t>(d)] * p[static_cast<size_t>(result_slot)];
    }
    result.copy_elem_from(flat_out++, src, src_flat);
  });
  return result;
}

// ---- scatter ----

template <typename T>
void run_scatter(const ScatterAddNode& node, const TensorMap& tensors, const EinsumStmt& stmt,
                 const Tensor& src, Tensor& out, AccessCounters& counters) {
  VarSpace space = make_space(node.source_vars, stmt);

  // Cache index-tensor reads: one per element.
  std::vector<const Tensor*> itensors;
  for (const auto& name : node.index_tensors) {
    const Tensor& it = bound(tensors, name);
    counters.scatters += it.numel();
    itensors.push_back(&it);
  }

  // Per-output-dim resolver mirroring the output access.
  const TensorAccess& oaccess = stmt.output;
  std::vector<int64_t> out_strides = out.strides();
  struct OutDim {
    bool direct;
    int var_slot;
    int indirect_pos;  // into node.index_* arrays
  };
  std::vector<OutDim> odims;
  {
    int next_indirect = 0;
    for (size_t d = 0; d < oaccess.indices.size(); ++d) {
      if (const auto* dir = std::get_if<DirectIndex>(&oaccess.indices[d])) {
        int slot = static_cast<int>(std::find(node.source_vars.begin(), node.source_vars.end(),
                                              dir->var) -
                                    node.source_vars.begin());
        odims.push_back({true, slot, -1});
      } else {
        odims.push_back({false, -1, next_indirect++});
      }
    }
  }
  std::vector<std::vector<int>> arg_slots(node.index_args.size());
  for (size_t i = 0; i < node.index_args.size(); ++i) {
    for (const auto& a : node.index_args[i]) {
      arg_slots[i].push_back(static_cast<int>(
          std::find(node.source_vars.begin(), node.source_vars.end(), a) -
          node.source_vars.begin()));
    }
  }

  std::vector<int64_t> point;
  int64_t src_flat = 0;
  for_each_point(space, point, [&](const std::vector<int64_t>& p) {
    int64_t dst = 0;
    for (size_t d = 0; d < odims.size(); ++d) {
      int64_t idx;
      if (odims[d].direct) {
        idx = p[static_cast<size_t>(odims[d].var_slot)];
      } else {
        int pos = odims[d].indirect_pos;
        const Tensor& it = *itensors[static_cast<size_t>(pos)];
        int64_t iflat = 0;
        for (size_t a = 0; a < arg_slots[static_cast<size_t>(pos)].size(); ++a) {
          iflat = iflat * it.dim(static_cast<int>(a)) +
                  p[static_cast<size_t>(arg_slots[static_cast<size_t>(pos)][a])];
        }
        idx = checked_index(it, node.index_tensors[static_cast<size_t>(pos)], iflat,
                            out.dim(static_cast<int>(d)), node.dest, static_cast<int>(d));
      }
      dst += out_strides[d] * idx;
    }
    elem_ref<T>(out, dst) += elem<T>(src, src_flat++);
    counters.atomic_updates += 1;
  });
}

template <typename T>
ExecResult execute_plan_typed(const PlanGraph& plan, const TensorMap& tensors,
                              const Tensor& out) {
  ExecResult result;
  result.out = plan.stmt.accumulate ? out : Tensor::zeros(out.kind(), out.shape());

  TensorMap env = tensors;
  const ScatterAddNode* scatter = nullptr;
  for (const PlanNode& node : plan.nodes) {
    if (const auto* g = std::get_if<GatherNode>(&node)) {
      env[g->result] = run_gather<T>(*g, env, plan.stmt, result.counters);
    } else if (const auto* e = std::get_if<EinsumNode>(&node)) {
      const std::string& target = e->stmt.output.tensor;
      if (target == plan.stmt.output.tensor) {
        run_dense_einsum<T>(e->stmt, env, result.out);
      } else {
        VarSpace space = make_space(access_vars_spliced(e->stmt.output), plan.stmt);
        Tensor intermediate = Tensor::zeros(out.kind(), space.extents);
        run_dense_einsum<T>(e->stmt, env, intermediate);
        env[target] = std::move(intermediate);
      }
    } else {
      scatter = std::get_if<ScatterAddNode>(&node);
      run_scatter<T>(*scatter, env, plan.stmt, env.at(scatter->source), result.out,
                     result.counters);
    }
  }
  return result;
}

}  // namespace

ExecResult execute_plan(const PlanGraph& plan, const TensorMap& tensors, const Tensor& out) {
  validate_bindings(plan.stmt, tensors, out);
  if (out.is_int()) {
    return execute_plan_typed<int64_t>(plan, tensors, out);
  }
  return execute_plan_typed<double>(plan, tensors, out);
}

namespace {

template <typename T>
Tensor oracle_typed(const EinsumStmt& stmt, const TensorMap& tensors, const Tensor& out) {
  Tensor result = stmt.accumulate ? out : Tensor::zeros(out.kind(), out.shape());

  VarSpace space = make_space(stmt.vars, stmt);
  CompiledAccess out_access = compile_access(stmt.output, tensors, space, &result);
  std::vector<CompiledAccess> ins;
  for (const auto& in : stmt.inputs) ins.push_back(compile_access(in, tensors, space));

  std::vector<int64_t> point;
  for_each_point(space, point, [&](const std::vector<int64_t>& p) {
    T prod = 1;
    for (const auto& in : ins) prod *= elem<T>(*in.tensor, in.flat_at(p));
    elem_ref<T>(result, out_access.flat_at(p)) += prod;
  });
  return result;
}

}  // namespace

Tensor oracle_einsum(const EinsumStmt& stmt, const TensorMap& tensors, const Tensor& out) {
  if (!stmt.inferred()) throw InferenceError("oracle_einsum requires inferred extents");
  validate_bindings(stmt, tensors, out);
  if (out.is_int()) {
    return oracle_typed<int64_t>(stmt, tensors, out);
  }
  return oracle_typed<double>(stmt, tensors, out);
}

AccessCounters count_accesses_model(const GroupCooMatrix& fmt, const EinsumStmt& stmt) {
  AccessCounters c;
  int64_t G = fmt.num_groups();
  c.gathers = G * fmt.group_size;
  c.scatters = G;

  // Atomic updates: one per group per point of the pointwise space that does
  // not address the group structure.
  if (stmt.inferred()) {
    std::vector<std::string> group_args;
    for (const IndexExpr& e : stmt.output.indices) {
      if (const auto* ind = std::get_if<IndirectIndex>(&e)) {
        for (const auto& a : ind->args) group_args.push_back(a);
      }
    }
    int64_t n = 1;
    for (const auto& v : classify_vars(stmt).pointwise) {
      if (std::find(group_args.begin(), group_args.end(), v) == group_args.end()) {
        n *= stmt.extent_of(v);
      }
    }
    c.atomic_updates = G * n;
  }
  return c;
}

}  // namespace ixsum
