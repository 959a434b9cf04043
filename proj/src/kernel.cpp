#include "ixsum/kernel.hpp"

#include <algorithm>
#include <cassert>
#include <functional>
#include <numeric>
#include <set>
#include <sstream>
#include <thread>

namespace ixsum {

const char* axis_tag_name(AxisTag t) {
  switch (t) {
    case AxisTag::P: return "P";
    case AxisTag::Y: return "Y";
    case AxisTag::X: return "X";
    case AxisTag::R: return "R";
    case AxisTag::Unit: return "1";
  }
  return "?";
}

namespace {

int tag_rank(AxisTag t) {
  switch (t) {
    case AxisTag::P:
    case AxisTag::Y: return 0;
    case AxisTag::R: return 1;
    case AxisTag::X: return 2;
    case AxisTag::Unit: return 3;
  }
  return 3;
}

std::vector<AxisTag> join_tags(const std::vector<AxisTag>& a, const std::vector<AxisTag>& b) {
  std::vector<AxisTag> out = a;
  for (AxisTag t : b) {
    if (std::find(out.begin(), out.end(), t) == out.end()) out.push_back(t);
  }
  std::sort(out.begin(), out.end(), [](AxisTag l, AxisTag r) { return tag_rank(l) < tag_rank(r); });
  return out;
}

std::string join_names(const std::vector<std::string>& names) {
  std::string s;
  for (const auto& n : names) s += n;
  return s;
}

std::vector<std::string> union_vars(const std::vector<std::string>& a,
                                    const std::vector<std::string>& b) {
  std::vector<std::string> out = a;
  for (const auto& v : b) {
    if (std::find(out.begin(), out.end(), v) == out.end()) out.push_back(v);
  }
  return out;
}

bool contains(const std::vector<std::string>& vs, const std::string& v) {
  return std::find(vs.begin(), vs.end(), v) != vs.end();
}

// Per-dimension display letter of an access: the variable for a direct index,
// the concatenated argument names for an indirection.
std::string access_letters(const TensorAccess& access) {
  std::string s;
  for (const IndexExpr& e : access.indices) {
    if (const auto* d = std::get_if<DirectIndex>(&e)) {
      s += d->var;
    } else {
      s += join_names(std::get<IndirectIndex>(e).args);
    }
  }
  return s;
}

struct DotInfo {
  std::string y, x, r;
  std::vector<std::string> batch;
  bool chain_carries_y = true;  // false: the last factor carries y
};

// ---- nest construction ----

class NestBuilder {
public:
  NestBuilder(const EinsumStmt& stmt, const std::optional<DotInfo>& dot) : stmt_(stmt) {
    VarClasses classes = classify_vars(stmt);
    nest_.stmt = stmt;
    nest_.pointwise = classes.pointwise;
    nest_.reduction = classes.reduction;
    if (dot) {
      nest_.has_dot = true;
      nest_.flattened = false;
      nest_.dot_y = dot->y;
      nest_.dot_x = dot->x;
      nest_.dot_r = dot->r;
      nest_.dot_batch = dot->batch;
    }
    build(dot);
  }

  LoopNest take() { return std::move(nest_); }

private:
  int new_value(std::string name, std::vector<std::string> vars, bool is_index) {
    // Uniquify display names.
    std::string unique = name;
    for (int i = 2; used_names_.count(unique); ++i) unique = name + "_" + std::to_string(i);
    used_names_.insert(unique);
    nest_.values.push_back(NestValue{std::move(unique), std::move(vars), is_index});
    return static_cast<int>(nest_.values.size()) - 1;
  }

  void make_axes(const std::optional<DotInfo>& dot) {
    if (!dot) {
      if (nest_.pointwise.size() == 1) {
        const std::string& v = nest_.pointwise.front();
        int id = new_value(v, {v}, true);
        nest_.axes = {v};
        nest_.axis_value[v] = id;
      } else {
        std::string flat = join_names(nest_.pointwise);
        int flat_id = new_value(flat, nest_.pointwise, true);
        nest_.axes = {flat};
        nest_.axis_value[flat] = flat_id;
        // Recover each component with div/mod. Divisors clamp to 1 so
        // zero-extent corner cases stay well defined (no instances run).
        for (size_t i = 0; i < nest_.pointwise.size(); ++i) {
          const std::string& v = nest_.pointwise[i];
          int64_t divisor = 1;
          for (size_t j = i + 1; j < nest_.pointwise.size(); ++j) {
            divisor *= stmt_.extent_of(nest_.pointwise[j]);
          }
          NestStmt s;
          s.kind = NestStmt::Kind::IotaSplit;
          s.split_src = flat_id;
          s.divisor = std::max<int64_t>(divisor, 1);
          s.modulo = i == 0 ? 0 : stmt_.extent_of(v);
          s.result = new_value(v, {v}, true);
          nest_.axis_value[v] = s.result;
          nest_.body.push_back(s);
        }
      }
    } else {
      // Batch axes first, then y, then x.
      for (const auto& v : dot->batch) nest_.axes.push_back(v);
      nest_.axes.push_back(dot->y);
      nest_.axes.push_back(dot->x);
      for (const auto& v : nest_.axes) {
        nest_.axis_value[v] = new_value(v, {v}, true);
      }
    }
    // Reduction loop variables.
    for (const auto& v : nest_.reduction) {
      nest_.axis_value[v] = new_value(v, {v}, true);
    }
  }

  int index_load(const IndirectIndex& ind) {
    std::string key = ind.tensor + "[" + join_names(ind.args) + "]";
    auto it = index_loads_.find(key);
    if (it != index_loads_.end()) return it->second;
    NestStmt s;
    s.kind = NestStmt::Kind::Load;
    s.tensor = ind.tensor;
    for (const auto& a : ind.args) s.dim_index.push_back(nest_.axis_value.at(a));
    s.result = new_value(ind.tensor + "_" + join_names(ind.args), ind.args, true);
    nest_.body.push_back(s);
    index_loads_[key] = s.result;
    return s.result;
  }

  int access_load(const TensorAccess& access) {
    std::string key = to_string(access);
    auto it = access_loads_.find(key);
    if (it != access_loads_.end()) return it->second;
    NestStmt s;
    s.kind = NestStmt::Kind::Load;
    s.tensor = access.tensor;
    std::vector<std::string> vars;
    for (const IndexExpr& e : access.indices) {
      if (const auto* d = std::get_if<DirectIndex>(&e)) {
        s.dim_index.push_back(nest_.axis_value.at(d->var));
        if (!contains(vars, d->var)) vars.push_back(d->var);
      } else {
        const auto& ind = std::get<IndirectIndex>(e);
        s.dim_index.push_back(index_load(ind));
        for (const auto& a : ind.args) {
          if (!contains(vars, a)) vars.push_back(a);
        }
      }
    }
    s.result = new_value(access.tensor + "_" + access_letters(access), std::move(vars), false);
    nest_.body.push_back(s);
    access_loads_[key] = s.result;
    return s.result;
  }

  int mul(int a, int b) {
    NestStmt s;
    s.kind = NestStmt::Kind::Mul;
    s.a = a;
    s.b = b;
    s.result = new_value("t" + std::to_string(temp_count_++),
                         union_vars(nest_.values[static_cast<size_t>(a)].vars,
                                    nest_.values[static_cast<size_t>(b)].vars),
                         false);
    nest_.body.push_back(s);
    return s.result;
  }

  void build(const std::optional<DotInfo>& dot) {
    make_axes(dot);

    std::vector<int> factors;
    for (const auto& in : stmt_.inputs) factors.push_back(access_load(in));

    int value;
    if (dot) {
      int chain = factors[0];
      for (size_t i = 1; i + 1 < factors.size(); ++i) chain = mul(chain, factors[i]);
      int last = factors.size() > 1 ? factors.back() : chain;
      int lhs = dot->chain_carries_y ? chain : last;
      int rhs = dot->chain_carries_y ? last : chain;
      NestStmt s;
      s.kind = NestStmt::Kind::Dot;
      s.a = lhs;
      s.b = rhs;
      s.reduce_var = dot->r;
      std::vector<std::string> vars =
          union_vars(nest_.values[static_cast<size_t>(lhs)].vars,
                     nest_.values[static_cast<size_t>(rhs)].vars);
      vars.erase(std::remove(vars.begin(), vars.end(), dot->r), vars.end());
      s.result = new_value("acc", std::move(vars), false);
      nest_.body.push_back(s);
      value = s.result;
    } else {
      value = factors[0];
      for (size_t i = 1; i < factors.size(); ++i) value = mul(value, factors[i]);
      // One Sum per reduction variable, innermost (last-appearing) first.
      for (auto it = nest_.reduction.rbegin(); it != nest_.reduction.rend(); ++it) {
        NestStmt s;
        s.kind = NestStmt::Kind::Sum;
        s.a = value;
        s.reduce_var = *it;
        std::vector<std::string> vars = nest_.values[static_cast<size_t>(value)].vars;
        vars.erase(std::remove(vars.begin(), vars.end(), *it), vars.end());
        s.result = new_value("s" + std::to_string(sum_count_++), std::move(vars), false);
        nest_.body.push_back(s);
        value = s.result;
      }
    }

    // Store (or scatter-accumulate) through the output access.
    bool output_indirect = false;
    NestStmt st;
    st.tensor = stmt_.output.tensor;
    for (const IndexExpr& e : stmt_.output.indices) {
      if (const auto* d = std::get_if<DirectIndex>(&e)) {
        st.dim_index.push_back(nest_.axis_value.at(d->var));
      } else {
        output_indirect = true;
        st.dim_index.push_back(index_load(std::get<IndirectIndex>(e)));
      }
    }
    st.kind = (stmt_.accumulate || output_indirect) ? NestStmt::Kind::AtomicAdd
                                                    : NestStmt::Kind::Store;
    st.a = value;
    nest_.body.push_back(st);
  }

  const EinsumStmt& stmt_;
  LoopNest nest_;
  std::map<std::string, int> index_loads_;
  std::map<std::string, int> access_loads_;
  std::set<std::string> used_names_;
  int temp_count_ = 0;
  int sum_count_ = 0;
};

}  // namespace

LoopNest fuse(const PlanGraph& plan, const EinsumStmt& stmt) {
  if (!stmt.inferred()) throw InferenceError("fuse requires inferred extents");
  (void)plan;  // the nest re-derives the gather/scatter structure inline
  return NestBuilder(stmt, std::nullopt).take();
}

LoopNest detect_dot(const LoopNest& nest) {
  if (nest.has_dot) return nest;
  const auto& values = nest.values;
  for (size_t i = 0; i + 1 < nest.body.size(); ++i) {
    const NestStmt& m = nest.body[i];
    const NestStmt& s = nest.body[i + 1];
    if (m.kind != NestStmt::Kind::Mul || s.kind != NestStmt::Kind::Sum || s.a != m.result) {
      continue;
    }
    const auto& av = values[static_cast<size_t>(m.a)].vars;
    const auto& bv = values[static_cast<size_t>(m.b)].vars;
    const std::string& r = s.reduce_var;
    if (!contains(av, r) || !contains(bv, r)) continue;

    std::vector<std::string> shared, only_a, only_b;
    for (const auto& v : av) {
      (contains(bv, v) ? shared : only_a).push_back(v);
    }
    for (const auto& v : bv) {
      if (!contains(av, v)) only_b.push_back(v);
    }
    shared.erase(std::remove(shared.begin(), shared.end(), r), shared.end());

    auto is_pointwise = [&nest](const std::string& v) { return contains(nest.pointwise, v); };
    if (only_a.size() != 1 || only_b.size() != 1) continue;
    if (!is_pointwise(only_a[0]) || !is_pointwise(only_b[0])) continue;
    if (!std::all_of(shared.begin(), shared.end(), is_pointwise)) continue;
    // Exactly one reduction variable may appear in the operands.
    int reductions = 0;
    for (const auto& v : union_vars(av, bv)) {
      reductions += contains(nest.reduction, v) ? 1 : 0;
    }
    if (reductions != 1) continue;

    // y is whichever exclusive variable appears first in the output access.
    DotInfo dot;
    dot.r = r;
    std::vector<std::string> out_vars;
    for (const IndexExpr& e : nest.stmt.output.indices) {
      if (const auto* d = std::get_if<DirectIndex>(&e)) {
        out_vars.push_back(d->var);
      } else {
        for (const auto& arg : std::get<IndirectIndex>(e).args) out_vars.push_back(arg);
      }
    }
    auto pos = [&out_vars](const std::string& v) {
      return std::find(out_vars.begin(), out_vars.end(), v) - out_vars.begin();
    };
    if (pos(only_a[0]) <= pos(only_b[0])) {
      dot.y = only_a[0];
      dot.x = only_b[0];
      dot.chain_carries_y = true;
    } else {
      dot.y = only_b[0];
      dot.x = only_a[0];
      dot.chain_carries_y = false;
    }
    // Every other pointwise variable (operand-shared or broadcast-only)
    // becomes a block-1 grid axis, in source order.
    for (const auto& v : nest.pointwise) {
      if (v != dot.y && v != dot.x) dot.batch.push_back(v);
    }
    return NestBuilder(nest.stmt, dot).take();
  }
  return nest;
}

std::string nest_to_text(const LoopNest& nest) {
  std::ostringstream os;
  os << "nest: " << to_string(nest.stmt) << "\n";
  os << "axes:";
  for (const auto& a : nest.axes) os << " " << a;
  if (!nest.reduction.empty()) {
    os << " | reduce:";
    for (const auto& r : nest.reduction) os << " " << r;
  }
  os << "\n";
  auto name = [&nest](int id) { return nest.values[static_cast<size_t>(id)].name; };
  for (const NestStmt& s : nest.body) {
    switch (s.kind) {
      case NestStmt::Kind::IotaSplit:
        os << name(s.result) << " = " << name(s.split_src);
        if (s.divisor > 1) os << " / " << s.divisor;
        if (s.modulo > 0) os << " % " << s.modulo;
        break;
      case NestStmt::Kind::Load: {
        os << name(s.result) << " = load " << s.tensor << "[";
        for (size_t d = 0; d < s.dim_index.size(); ++d) {
          if (d) os << ",";
          os << name(s.dim_index[d]);
        }
        os << "]";
        break;
      }
      case NestStmt::Kind::Mul:
        os << name(s.result) << " = " << name(s.a) << " * " << name(s.b);
        break;
      case NestStmt::Kind::Sum:
        os << name(s.result) << " = sum(" << name(s.a) << ", " << s.reduce_var << ")";
        break;
      case NestStmt::Kind::Dot:
        os << name(s.result) << " = dot(" << name(s.a) << ", " << name(s.b) << ", "
           << s.reduce_var << ")";
        break;
      case NestStmt::Kind::Store:
      case NestStmt::Kind::AtomicAdd: {
        os << (s.kind == NestStmt::Kind::Store ? "store " : "atomic_add ") << s.tensor << "[";
        for (size_t d = 0; d < s.dim_index.size(); ++d) {
          if (d) os << ",";
          os << name(s.dim_index[d]);
        }
        os << "] <- " << name(s.a);
        break;
      }
    }
    os << "\n";
  }
  return os.str();
}

// ---- tiling ----

namespace {

bool is_pow2(int64_t v) { return v >= 1 && (v & (v - 1)) == 0; }

int64_t lookup_block(const BlockSizeMap& sizes, const std::string& axis, int64_t fallback) {
  auto it = sizes.find(axis);
  int64_t b = it == sizes.end() ? fallback : it->second;
  if (!is_pow2(b)) {
    throw std::invalid_argument("block size for axis " + axis + " must be a power of two, got " +
                                std::to_string(b));
  }
  return b;
}

struct TileBuilder {
  const LoopNest& nest;
  const EinsumStmt& stmt;
  BroadcastMode mode;
  TiledKernel k;
  std::map<int, int> value_map;           // nest value id -> kernel value id
  std::map<std::string, AxisTag> var_tag; // loop var -> block axis tag (absent: scalar)
  std::set<std::string> used_names;
  bool has_reduction = false;

  TileBuilder(const LoopNest& n, const BlockSizeMap& sizes, BroadcastMode m)
      : nest(n), stmt(n.stmt), mode(m) {
    k.name = "fused_" + stmt.output.tensor;
    k.mode = m;
    k.zero_init = !stmt.accumulate;
    k.output = stmt.output.tensor;
    k.stmt = stmt;
    k.has_dot = nest.has_dot;
    has_reduction = !nest.reduction.empty();

    if (nest.has_dot) {
      for (const auto& v : nest.dot_batch) {
        k.grid.push_back(KernelAxis{v, stmt.extent_of(v), 1, {v}});
      }
      k.grid.push_back(KernelAxis{nest.dot_y, stmt.extent_of(nest.dot_y),
                                  lookup_block(sizes, nest.dot_y, 16), {nest.dot_y}});
      k.grid.push_back(KernelAxis{nest.dot_x, stmt.extent_of(nest.dot_x),
                                  lookup_block(sizes, nest.dot_x, 16), {nest.dot_x}});
      k.reduce = KernelAxis{nest.dot_r, stmt.extent_of(nest.dot_r),
                            lookup_block(sizes, nest.dot_r, 16), {nest.dot_r}};
      var_tag[nest.dot_y] = AxisTag::Y;
      var_tag[nest.dot_x] = AxisTag::X;
      var_tag[nest.dot_r] = AxisTag::R;
    } else {
      std::string flat = join_names(nest.pointwise);
      int64_t extent = 1;
      for (const auto& v : nest.pointwise) extent *= stmt.extent_of(v);
      k.grid.push_back(KernelAxis{flat, extent, lookup_block(sizes, flat, 64), nest.pointwise});
      for (const auto& v : nest.pointwise) var_tag[v] = AxisTag::P;
      if (has_reduction) {
        std::string rflat = join_names(nest.reduction);
        int64_t rextent = 1;
        for (const auto& v : nest.reduction) rextent *= stmt.extent_of(v);
        k.reduce = KernelAxis{rflat, rextent, lookup_block(sizes, rflat, 16), nest.reduction};
        for (const auto& v : nest.reduction) var_tag[v] = AxisTag::R;
      }
    }
    build();
  }

  // Canonical semantic tags of a value (sorted, no units).
  std::vector<AxisTag> tags_of_vars(const std::vector<std::string>& vars) const {
    std::vector<AxisTag> tags;
    for (const auto& v : vars) {
      auto it = var_tag.find(v);
      if (it == var_tag.end()) continue;  // batch variable: scalar per instance
      if (std::find(tags.begin(), tags.end(), it->second) == tags.end()) {
        tags.push_back(it->second);
      }
    }
    std::sort(tags.begin(), tags.end(),
              [](AxisTag l, AxisTag r) { return tag_rank(l) < tag_rank(r); });
    return tags;
  }

  // Printed block shape per mode. Eager kernels expand every value to the full
  // axis template up front; lazy kernels keep the reduction axis 1-D and only
  // materialize output axes as 2-D.
  BlockShape printed_shape(const std::vector<AxisTag>& tags) const {
    BlockShape s;
    auto has = [&tags](AxisTag t) { return std::find(tags.begin(), tags.end(), t) != tags.end(); };
    if (tags.empty()) return s;  // scalar
    if (nest.has_dot) {
      if (mode == BroadcastMode::Eager) {
        s.axes = {has(AxisTag::Y) ? AxisTag::Y : AxisTag::Unit,
                  has(AxisTag::X) ? AxisTag::X : AxisTag::Unit,
                  has(AxisTag::R) ? AxisTag::R : AxisTag::Unit};
      } else {
        if (has(AxisTag::Y) && has(AxisTag::X)) {
          s.axes = {AxisTag::Y, AxisTag::X};
        } else if (has(AxisTag::Y) && has(AxisTag::R)) {
          s.axes = {AxisTag::Y, AxisTag::R};
        } else if (has(AxisTag::R) && has(AxisTag::X)) {
          s.axes = {AxisTag::R, AxisTag::X};
        } else if (has(AxisTag::Y)) {
          s.axes = {AxisTag::Y, AxisTag::Unit};
        } else if (has(AxisTag::X)) {
          s.axes = {AxisTag::Unit, AxisTag::X};
        } else {
          s.axes = {AxisTag::R};
        }
      }
    } else {
      if (mode == BroadcastMode::Eager && has_reduction) {
        s.axes = {has(AxisTag::P) ? AxisTag::P : AxisTag::Unit,
                  has(AxisTag::R) ? AxisTag::R : AxisTag::Unit};
      } else {
        s.axes = tags;  // (P,), (R,) or (P,R)
      }
    }
    return s;
  }

  int new_value(const std::string& base, const std::vector<AxisTag>& tags, bool is_index) {
    std::string name = base;
    for (int i = 2; used_names.count(name); ++i) name = base + "_" + std::to_string(i);
    used_names.insert(name);
    KernelValue v;
    v.name = name;
    v.tags = tags;
    v.shape = printed_shape(tags);
    v.is_index = is_index;
    k.values.push_back(std::move(v));
    return static_cast<int>(k.values.size()) - 1;
  }

  // Statements accumulate into staging lists, then get placed.
  struct Pending {
    KernelStmt stmt;
    bool in_loop = false;     // defined value depends on the reduction axis
    bool store_like = false;  // Store/AtomicAdd
  };
  std::vector<Pending> pending;

  void push(KernelStmt s, bool in_loop, bool store_like = false) {
    pending.push_back(Pending{std::move(s), in_loop, store_like});
  }

  void build() {
    // Axis values. In dot kernels the last two grid axes are the tiled y/x
    // pair (whatever their block size); everything before them is a batch
    // axis evaluated as a scalar per program instance.
    for (size_t ai = 0; ai < k.grid.size(); ++ai) {
      KernelAxis& axis = k.grid[ai];
      std::vector<AxisTag> tags;
      if (!nest.has_dot) {
        tags = {AxisTag::P};
      } else if (ai + 2 == k.grid.size()) {
        tags = {AxisTag::Y};
      } else if (ai + 1 == k.grid.size()) {
        tags = {AxisTag::X};
      }
      KernelStmt s;
      s.kind = KernelStmt::Kind::AxisInit;
      s.axis = static_cast<int>(ai);
      s.result = new_value(axis.name, tags, true);
      push(std::move(s), false);
      axis_value_[axis.name] = pending.back().stmt.result;
    }
    if (k.reduce) {
      KernelStmt base;
      base.kind = KernelStmt::Kind::AxisBase;
      base.axis = 0;
      base.result = new_value(k.reduce->name + "_base", {AxisTag::R}, true);
      push(std::move(base), false);
      KernelStmt step;
      step.kind = KernelStmt::Kind::AxisStep;
      step.axis = 0;
      step.a = pending.back().stmt.result;
      step.result = new_value(k.reduce->name, {AxisTag::R}, true);
      push(std::move(step), true);
      axis_value_[k.reduce->name] = pending.back().stmt.result;
    }

    // Recover components of flattened axes with div/mod, in component order.
    auto materialize_components = [this](const KernelAxis& axis, bool in_reduce) {
      if (axis.components.size() <= 1) return;
      for (size_t i = 0; i < axis.components.size(); ++i) {
        const std::string& var = axis.components[i];
        int64_t divisor = 1;
        for (size_t j = i + 1; j < axis.components.size(); ++j) {
          divisor *= stmt.extent_of(axis.components[j]);
        }
        KernelStmt s;
        s.kind = KernelStmt::Kind::IotaSplit;
        s.split_src = axis_value_.at(axis.name);
        s.divisor = std::max<int64_t>(divisor, 1);
        s.modulo = i == 0 ? 0 : stmt.extent_of(var);
        s.result = new_value(var, {in_reduce ? AxisTag::R : AxisTag::P}, true);
        push(std::move(s), in_reduce);
        axis_value_[var] = pending.back().stmt.result;
      }
    };
    for (const auto& axis : k.grid) materialize_components(axis, false);
    if (k.reduce) materialize_components(*k.reduce, true);

    // Translate nest body.
    for (const NestStmt& ns : nest.body) {
      switch (ns.kind) {
        case NestStmt::Kind::IotaSplit:
          break;  // already materialized above
        case NestStmt::Kind::Load: {
          KernelStmt s;
          s.kind = KernelStmt::Kind::Load;
          s.tensor = ns.tensor;
          std::vector<AxisTag> tags;
          bool in_loop = false;
          for (int d : ns.dim_index) {
            int kid = map_value(d);
            s.dim_index.push_back(kid);
            tags = join_tags(tags, k.values[static_cast<size_t>(kid)].tags);
            in_loop |= has_r(kid);
          }
          const NestValue& nv = nest.values[static_cast<size_t>(ns.result)];
          s.result = new_value(nv.name, tags, nv.is_index);
          value_map[ns.result] = s.result;
          push(std::move(s), in_loop);
          break;
        }
        case NestStmt::Kind::Mul: {
          KernelStmt s;
          s.kind = KernelStmt::Kind::Mul;
          s.a = map_value(ns.a);
          s.b = map_value(ns.b);
          std::vector<AxisTag> tags = join_tags(k.values[static_cast<size_t>(s.a)].tags,
                                                k.values[static_cast<size_t>(s.b)].tags);
          bool in_loop = has_r(s.a) || has_r(s.b);
          const NestValue& nv = nest.values[static_cast<size_t>(ns.result)];
          s.result = new_value(nv.name, tags, false);
          value_map[ns.result] = s.result;
          push(std::move(s), in_loop);
          break;
        }
        case NestStmt::Kind::Sum: {
          // First Sum creates the accumulator + the axis reduction; further
          // Sums collapse into the same axis reduction.
          if (acc_value_ < 0) {
            int product = map_value(ns.a);
            std::vector<AxisTag> acc_tags = k.values[static_cast<size_t>(product)].tags;
            KernelStmt full;
            full.kind = KernelStmt::Kind::Full;
            full.result = new_value("acc", acc_tags, false);
            acc_value_ = full.result;
            push(std::move(full), false);
            KernelStmt add;
            add.kind = KernelStmt::Kind::AccAdd;
            add.result = acc_value_;
            add.a = product;
            push(std::move(add), true);
            // The post-loop axis sum.
            std::vector<AxisTag> sum_tags;
            for (AxisTag t : acc_tags) {
              if (t != AxisTag::R) sum_tags.push_back(t);
            }
            KernelStmt sum;
            sum.kind = KernelStmt::Kind::SumAxis;
            sum.a = acc_value_;
            sum.result = new_value("s0", sum_tags, false);
            sum_value_ = sum.result;
            push(std::move(sum), false);
          }
          value_map[ns.result] = sum_value_;
          break;
        }
        case NestStmt::Kind::Dot: {
          int a = map_value(ns.a);
          int b = map_value(ns.b);
          if (mode == BroadcastMode::Eager) {
            a = emit_view(a, {AxisTag::Y, AxisTag::R});
            int bv = emit_view(b, {AxisTag::X, AxisTag::R});
            b = emit_transpose(bv);
          }
          KernelStmt full;
          full.kind = KernelStmt::Kind::Full;
          full.result = new_value("acc", {AxisTag::Y, AxisTag::X}, false);
          // Dot accumulators print 2-D in both modes.
          k.values[static_cast<size_t>(full.result)].shape.axes = {AxisTag::Y, AxisTag::X};
          acc_value_ = full.result;
          push(std::move(full), false);
          KernelStmt dot;
          dot.kind = KernelStmt::Kind::AccDot;
          dot.result = acc_value_;
          dot.a = a;
          dot.b = b;
          push(std::move(dot), true);
          value_map[ns.result] = acc_value_;
          break;
        }
        case NestStmt::Kind::Store:
        case NestStmt::Kind::AtomicAdd: {
          KernelStmt s;
          s.kind = ns.kind == NestStmt::Kind::Store ? KernelStmt::Kind::Store
                                                    : KernelStmt::Kind::AtomicAdd;
          s.tensor = ns.tensor;
          for (int d : ns.dim_index) s.dim_index.push_back(map_value(d));
          s.a = map_value(ns.a);
          push(std::move(s), false, true);
          break;
        }
      }
    }
    place();
  }

  int emit_view(int src, std::vector<AxisTag> target) {
    const KernelValue& v = k.values[static_cast<size_t>(src)];
    KernelStmt s;
    s.kind = KernelStmt::Kind::Reshape;
    s.a = src;
    // Keep semantic tags; only the printed shape changes.
    std::vector<AxisTag> printed;
    for (AxisTag t : target) {
      if (std::find(v.tags.begin(), v.tags.end(), t) != v.tags.end()) printed.push_back(t);
    }
    s.result = new_value(v.name + "_v", v.tags, v.is_index);
    k.values[static_cast<size_t>(s.result)].shape.axes = printed;
    push(std::move(s), has_r(src));
    return s.result;
  }

  int emit_transpose(int src) {
    const KernelValue& v = k.values[static_cast<size_t>(src)];
    KernelStmt s;
    s.kind = KernelStmt::Kind::Transpose;
    s.a = src;
    std::vector<AxisTag> printed = v.shape.axes;
    std::reverse(printed.begin(), printed.end());
    std::string base = v.name;
    if (base.size() > 2 && base.substr(base.size() - 2) == "_v") {
      base = base.substr(0, base.size() - 2);
    }
    s.result = new_value(base + "_t", v.tags, v.is_index);
    k.values[static_cast<size_t>(s.result)].shape.axes = printed;
    push(std::move(s), has_r(src));
    return s.result;
  }

  int map_value(int nest_id) {
    auto it = value_map.find(nest_id);
    if (it != value_map.end()) return it->second;
    // Loop/axis variable values resolve by name.
    const NestValue& nv = nest.values[static_cast<size_t>(nest_id)];
    auto ait = axis_value_.find(nv.name);
    if (ait == axis_value_.end()) {
      throw std::logic_error("unmapped nest value " + nv.name);
    }
    value_map[nest_id] = ait->second;
    return ait->second;
  }

  bool has_r(int kernel_value) const {
    const auto& tags = k.values[static_cast<size_t>(kernel_value)].tags;
    return std::find(tags.begin(), tags.end(), AxisTag::R) != tags.end();
  }

  // Phase assignment: loop statements stay in order; non-loop statements go to
  // the prologue when a loop statement (transitively) needs them, otherwise to
  // the epilogue.
  void place() {
    std::set<int> loop_needs;
    for (const auto& p : pending) {
      if (!p.in_loop) continue;
      for (int d : p.stmt.dim_index) loop_needs.insert(d);
      if (p.stmt.a >= 0) loop_needs.insert(p.stmt.a);
      if (p.stmt.b >= 0) loop_needs.insert(p.stmt.b);
      if (p.stmt.split_src >= 0) loop_needs.insert(p.stmt.split_src);
      if (p.stmt.result >= 0) loop_needs.insert(p.stmt.result);  // acc init
    }
    for (const auto& p : pending) {
      if (p.in_loop) {
        k.loop.push_back(p.stmt);
      } else if (p.store_like) {
        k.epilogue.push_back(p.stmt);
      } else if (p.stmt.result >= 0 && loop_needs.count(p.stmt.result)) {
        k.prologue.push_back(p.stmt);
      } else if (p.stmt.kind == KernelStmt::Kind::SumAxis) {
        k.epilogue.push_back(p.stmt);
      } else if (p.stmt.result >= 0 && !k.loop.empty() && !loop_needs.count(p.stmt.result) &&
                 is_output_side(p.stmt.result)) {
        k.epilogue.push_back(p.stmt);
      } else {
        k.prologue.push_back(p.stmt);
      }
    }
  }

  // Values consumed only by store statements belong after the loop.
  bool is_output_side(int value) const {
    bool used_by_store = false;
    for (const auto& p : pending) {
      bool uses = p.stmt.a == value || p.stmt.b == value ||
                  std::find(p.stmt.dim_index.begin(), p.stmt.dim_index.end(), value) !=
                      p.stmt.dim_index.end();
      if (!uses) continue;
      if (p.store_like) {
        used_by_store = true;
      } else {
        return false;
      }
    }
    return used_by_store;
  }

  std::map<std::string, int> axis_value_;
  int acc_value_ = -1;
  int sum_value_ = -1;
};

}  // namespace

TiledKernel tile(const LoopNest& nest, const BlockSizeMap& block_sizes, BroadcastMode mode) {
  if (!nest.stmt.inferred()) throw InferenceError("tile requires inferred extents");
  if (nest.stmt.shapes.empty()) {
    throw InferenceError("tile requires tensor shapes recorded on the statement");
  }
  TileBuilder builder(nest, block_sizes, mode);
  TiledKernel k = std::move(builder.k);
  validate_kernel(k);
  return k;
}

LayoutOpCounts count_layout_ops(const TiledKernel& k) {
  LayoutOpCounts c;
  auto scan = [&c](const std::vector<KernelStmt>& stmts) {
    for (const auto& s : stmts) {
      if (s.kind == KernelStmt::Kind::Reshape) c.reshapes++;
      if (s.kind == KernelStmt::Kind::Transpose) c.transposes++;
    }
  };
  scan(k.prologue);
  scan(k.loop);
  scan(k.epilogue);
  return c;
}

void validate_kernel(const TiledKernel& k) {
  size_t max_rank = k.mode == BroadcastMode::Eager ? 3 : 2;
  for (const auto& v : k.values) {
    if (v.shape.axes.size() > max_rank) {
      throw std::logic_error("value " + v.name + " exceeds rank " + std::to_string(max_rank));
    }
  }
  auto shape_is = [&k](int value, std::initializer_list<AxisTag> want) {
    const auto& axes = k.values[static_cast<size_t>(value)].shape.axes;
    return std::equal(axes.begin(), axes.end(), want.begin(), want.end()) &&
           axes.size() == want.size();
  };
  auto scan = [&](const std::vector<KernelStmt>& stmts) {
    for (const auto& s : stmts) {
      if (s.kind == KernelStmt::Kind::AccDot) {
        if (!shape_is(s.a, {AxisTag::Y, AxisTag::R}) || !shape_is(s.b, {AxisTag::R, AxisTag::X})) {
          throw std::logic_error("dot operands must be (Y,R) x (R,X); got " +
                                 k.values[static_cast<size_t>(s.a)].name + " and " +
                                 k.values[static_cast<size_t>(s.b)].name);
        }
      }
      if (k.mode == BroadcastMode::Lazy &&
          (s.kind == KernelStmt::Kind::Reshape || s.kind == KernelStmt::Kind::Transpose)) {
        throw std::logic_error("lazy kernels must not contain reshape/transpose statements");
      }
    }
  };
  scan(k.prologue);
  scan(k.loop);
  scan(k.epilogue);
}

// ---- interpreter ----

namespace {

constexpr int kNumTags = 4;  // P/Y share a slot; then R; then X

int tag_slot(AxisTag t) {
  switch (t) {
    case AxisTag::P:
    case AxisTag::Y: return 0;
    case AxisTag::R: return 1;
    case AxisTag::X: return 2;
    case AxisTag::Unit: return 3;
  }
  return 3;
}

// Semantic block in canonical tag order; unit axes are dropped.
struct Block {
  std::vector<AxisTag> tags;
  std::vector<int64_t> sizes;
  bool is_int = false;
  std::vector<double> re;
  std::vector<int64_t> in;

  int64_t lanes() const {
    int64_t n = 1;
    for (int64_t s : sizes) n *= s;
    return n;
  }
  void alloc(bool as_int) {
    is_int = as_int;
    if (as_int) {
      in.assign(static_cast<size_t>(lanes()), 0);
    } else {
      re.assign(static_cast<size_t>(lanes()), 0.0);
    }
  }
  // Lane index from per-slot coordinates (slots for P/Y, R, X).
  int64_t lane(const int64_t* coords) const {
    int64_t idx = 0;
    for (size_t i = 0; i < tags.size(); ++i) {
      idx = idx * sizes[i] + coords[tag_slot(tags[i])];
    }
    return idx;
  }
  double real_lane(const int64_t* coords) const { return re[static_cast<size_t>(lane(coords))]; }
  int64_t int_lane(const int64_t* coords) const { return in[static_cast<size_t>(lane(coords))]; }
};

enum class ValueOrigin { Axis, IndexLoad, Other };

struct AxisRuntime {
  int64_t offset = 0;
  int64_t block = 1;
  int64_t extent = 1;
};

struct Interp {
  const TiledKernel& k;
  const TensorMap& tensors;
  Tensor& out;
  AccessCounters& counters;

  std::vector<Block> values;
  std::vector<ValueOrigin> origin;
  std::vector<bool> counts_as_scatter;  // per value: index load feeding a store
  AxisRuntime axis_rt[kNumTags];        // slot 0: P/Y, 1: R, 2: X
  std::vector<int64_t> out_strides;

  Interp(const TiledKernel& kernel, const TensorMap& ts, Tensor& o, AccessCounters& c)
      : k(kernel), tensors(ts), out(o), counters(c) {
    values.resize(k.values.size());
    origin.assign(k.values.size(), ValueOrigin::Other);
    counts_as_scatter.assign(k.values.size(), false);
    auto classify = [this](const std::vector<KernelStmt>& stmts) {
      for (const auto& s : stmts) {
        switch (s.kind) {
          case KernelStmt::Kind::AxisInit:
          case KernelStmt::Kind::AxisBase:
          case KernelStmt::Kind::AxisStep:
          case KernelStmt::Kind::IotaSplit:
            origin[static_cast<size_t>(s.result)] = ValueOrigin::Axis;
            break;
          case KernelStmt::Kind::Load:
            origin[static_cast<size_t>(s.result)] = ValueOrigin::IndexLoad;
            break;
          default:
            break;
        }
      }
    };
    classify(k.prologue);
    classify(k.loop);
    classify(k.epilogue);
    // Only loads of integer index tensors count as index loads.
    for (size_t i = 0; i < k.values.size(); ++i) {
      if (origin[i] == ValueOrigin::IndexLoad && !k.values[i].is_index) {
        origin[i] = ValueOrigin::Other;
      }
    }
    auto mark_scatter = [this](const std::vector<KernelStmt>& stmts) {
      for (const auto& s : stmts) {
        if (s.kind != KernelStmt::Kind::Store && s.kind != KernelStmt::Kind::AtomicAdd) continue;
        for (int d : s.dim_index) {
          if (origin[static_cast<size_t>(d)] == ValueOrigin::IndexLoad) {
            counts_as_scatter[static_cast<size_t>(d)] = true;
          }
        }
      }
    };
    mark_scatter(k.prologue);
    mark_scatter(k.loop);
    mark_scatter(k.epilogue);
    out_strides = out.strides();
  }

  const Tensor& bound(const std::string& name) const {
    auto it = tensors.find(name);
    if (it == tensors.end()) throw BindError("unbound tensor " + name);
    return it->second;
  }

  bool lane_valid(const std::vector<AxisTag>& tags, const int64_t* coords) const {
    for (AxisTag t : tags) {
      int slot = tag_slot(t);
      const AxisRuntime& rt = axis_rt[slot];
      if (rt.offset + coords[slot] >= rt.extent) return false;
    }
    return true;
  }

  // Odometer over the block lanes of a tag set.
  template <typename Fn>
  void for_lanes(const std::vector<AxisTag>& tags, Fn&& fn) const {
    int64_t coords[kNumTags] = {0, 0, 0, 0};
    if (tags.empty()) {
      fn(coords);
      return;
    }
    while (true) {
      fn(coords);
      int i = static_cast<int>(tags.size()) - 1;
      for (; i >= 0; --i) {
        int slot = tag_slot(tags[static_cast<size_t>(i)]);
        if (++coords[slot] < axis_rt[slot].block) break;
        coords[slot] = 0;
      }
      if (i < 0) break;
    }
  }

  void exec(const KernelStmt& s, int64_t r_off) {
    switch (s.kind) {
      case KernelStmt::Kind::AxisInit: {
        const KernelAxis& axis = k.grid[static_cast<size_t>(s.axis)];
        Block& b = values[static_cast<size_t>(s.result)];
        b.tags = k.values[static_cast<size_t>(s.result)].tags;
        b.sizes.clear();
        for (AxisTag t : b.tags) b.sizes.push_back(axis_rt[tag_slot(t)].block);
        b.alloc(true);
        if (b.tags.empty()) {
          b.in[0] = axis_offsets_.at(axis.name);
        } else {
          int64_t off = axis_offsets_.at(axis.name);
          for (int64_t i = 0; i < b.lanes(); ++i) b.in[static_cast<size_t>(i)] = off + i;
        }
        break;
      }
      case KernelStmt::Kind::AxisBase: {
        Block& b = values[static_cast<size_t>(s.result)];
        b.tags = {AxisTag::R};
        b.sizes = {axis_rt[1].block};
        b.alloc(true);
        for (int64_t i = 0; i < b.lanes(); ++i) b.in[static_cast<size_t>(i)] = i;
        break;
      }
      case KernelStmt::Kind::AxisStep: {
        const Block& base = values[static_cast<size_t>(s.a)];
        Block& b = values[static_cast<size_t>(s.result)];
        b.tags = base.tags;
        b.sizes = base.sizes;
        b.alloc(true);
        for (size_t i = 0; i < base.in.size(); ++i) b.in[i] = r_off + base.in[i];
        break;
      }
      case KernelStmt::Kind::IotaSplit: {
        const Block& src = values[static_cast<size_t>(s.split_src)];
        Block& b = values[static_cast<size_t>(s.result)];
        b.tags = src.tags;
        b.sizes = src.sizes;
        b.alloc(true);
        for (size_t i = 0; i < src.in.size(); ++i) {
          int64_t v = src.in[i] / s.divisor;
          if (s.modulo > 0) v %= s.modulo;
          b.in[i] = v;
        }
        break;
      }
      case KernelStmt::Kind::Full: {
        Block& b = values[static_cast<size_t>(s.result)];
        b.tags = k.values[static_cast<size_t>(s.result)].tags;
        b.sizes.clear();
        for (AxisTag t : b.tags) b.sizes.push_back(axis_rt[tag_slot(t)].block);
        b.alloc(out.is_int());
        break;
      }
      case KernelStmt::Kind::Load:
        exec_load(s);
        break;
      case KernelStmt::Kind::Mul: {
        const Block& a = values[static_cast<size_t>(s.a)];
        const Block& b = values[static_cast<size_t>(s.b)];
        Block& r = values[static_cast<size_t>(s.result)];
        r.tags = k.values[static_cast<size_t>(s.result)].tags;
        r.sizes.clear();
        for (AxisTag t : r.tags) r.sizes.push_back(axis_rt[tag_slot(t)].block);
        r.alloc(out.is_int());
        int64_t i = 0;
        if (out.is_int()) {
          for_lanes(r.tags, [&](const int64_t* c) { r.in[static_cast<size_t>(i++)] = a.int_lane(c) * b.int_lane(c); });
        } else {
          for_lanes(r.tags, [&](const int64_t* c) { r.re[static_cast<size_t>(i++)] = a.real_lane(c) * b.real_lane(c); });
        }
        break;
      }
      case KernelStmt::Kind::AccAdd: {
        const Block& a = values[static_cast<size_t>(s.a)];
        Block& acc = values[static_cast<size_t>(s.result)];
        int64_t i = 0;
        if (out.is_int()) {
          for_lanes(acc.tags, [&](const int64_t* c) { acc.in[static_cast<size_t>(i++)] += a.int_lane(c); });
        } else {
          for_lanes(acc.tags, [&](const int64_t* c) { acc.re[static_cast<size_t>(i++)] += a.real_lane(c); });
        }
        break;
      }
      case KernelStmt::Kind::AccDot: {
        const Block& a = values[static_cast<size_t>(s.a)];
        const Block& b = values[static_cast<size_t>(s.b)];
        Block& acc = values[static_cast<size_t>(s.result)];
        int64_t by = axis_rt[0].block, br = axis_rt[1].block, bx = axis_rt[2].block;
        int64_t coords[kNumTags] = {0, 0, 0, 0};
        for (int64_t y = 0; y < by; ++y) {
          for (int64_t x = 0; x < bx; ++x) {
            coords[0] = y;
            coords[2] = x;
            if (out.is_int()) {
              int64_t sum = 0;
              for (int64_t r = 0; r < br; ++r) {
                coords[1] = r;
                sum += a.int_lane(coords) * b.int_lane(coords);
              }
              coords[1] = 0;
              acc.in[static_cast<size_t>(acc.lane(coords))] += sum;
            } else {
              double sum = 0;
              for (int64_t r = 0; r < br; ++r) {
                coords[1] = r;
                sum += a.real_lane(coords) * b.real_lane(coords);
              }
              coords[1] = 0;
              acc.re[static_cast<size_t>(acc.lane(coords))] += sum;
            }
          }
        }
        break;
      }
      case KernelStmt::Kind::SumAxis: {
        const Block& a = values[static_cast<size_t>(s.a)];
        Block& r = values[static_cast<size_t>(s.result)];
        r.tags = k.values[static_cast<size_t>(s.result)].tags;
        r.sizes.clear();
        for (AxisTag t : r.tags) r.sizes.push_back(axis_rt[tag_slot(t)].block);
        r.alloc(out.is_int());
        int64_t i = 0;
        int64_t br = axis_rt[1].block;
        for_lanes(r.tags, [&](const int64_t* c) {
          int64_t coords[kNumTags] = {c[0], 0, c[2], 0};
          if (out.is_int()) {
            int64_t sum = 0;
            for (int64_t rr = 0; rr < br; ++rr) {
              coords[1] = rr;
              sum += a.int_lane(coords);
            }
            r.in[static_cast<size_t>(i++)] = sum;
          } else {
            double sum = 0;
            for (int64_t rr = 0; rr < br; ++rr) {
              coords[1] = rr;
              sum += a.real_lane(coords);
            }
            r.re[static_cast<size_t>(i++)] = sum;
          }
        });
        break;
      }
      case KernelStmt::Kind::Reshape:
      case KernelStmt::Kind::Transpose:
        // Layout statements only change the printed shape.
        values[static_cast<size_t>(s.result)] = values[static_cast<size_t>(s.a)];
        break;
      case KernelStmt::Kind::Store:
      case KernelStmt::Kind::AtomicAdd:
        exec_store(s);
        break;
    }
  }

  void exec_load(const KernelStmt& s) {
    const Tensor& t = bound(s.tensor);
    const KernelValue& kv = k.values[static_cast<size_t>(s.result)];
    bool as_index = kv.is_index;
    if (as_index && !t.is_int()) {
      throw BindError("index tensor " + s.tensor + " must be int64, got " +
                      elem_kind_name(t.kind()));
    }
    if (!as_index && t.kind() != out.kind()) {
      throw BindError("tensor " + s.tensor + " is " + elem_kind_name(t.kind()) +
                      " but the output buffer is " + elem_kind_name(out.kind()));
    }
    Block& b = values[static_cast<size_t>(s.result)];
    b.tags = kv.tags;
    b.sizes.clear();
    for (AxisTag t2 : b.tags) b.sizes.push_back(axis_rt[tag_slot(t2)].block);
    b.alloc(as_index || out.is_int());

    std::vector<int64_t> strides = t.strides();
    int64_t valid_count = 0;
    int64_t i = 0;
    for_lanes(b.tags, [&](const int64_t* c) {
      int64_t lane_idx = i++;
      if (!lane_valid(b.tags, c)) return;  // masked lanes keep the additive identity
      ++valid_count;
      int64_t flat = 0;
      for (size_t d = 0; d < s.dim_index.size(); ++d) {
        int vid = s.dim_index[d];
        const Block& ib = values[static_cast<size_t>(vid)];
        int64_t idx = ib.int_lane(c);
        if (origin[static_cast<size_t>(vid)] == ValueOrigin::IndexLoad) {
          if (idx < 0 || idx >= t.dim(static_cast<int>(d))) {
            throw IndexRangeError("index tensor " + k.values[static_cast<size_t>(vid)].name +
                                  " value " + std::to_string(idx) + " out of range for dim " +
                                  std::to_string(d) + " of " + s.tensor + " (extent " +
                                  std::to_string(t.dim(static_cast<int>(d))) + ")");
          }
        }
        flat += strides[d] * idx;
      }
      if (b.is_int) {
        b.in[static_cast<size_t>(lane_idx)] = t.int_at(flat);
      } else {
        b.re[static_cast<size_t>(lane_idx)] = t.real_at(flat);
      }
    });
    if (origin[static_cast<size_t>(s.result)] == ValueOrigin::IndexLoad) {
      if (counts_as_scatter[static_cast<size_t>(s.result)]) {
        counters.scatters += valid_count;
      } else {
        counters.gathers += valid_count;
      }
    }
  }

  void exec_store(const KernelStmt& s) {
    const Block& src = values[static_cast<size_t>(s.a)];
    std::vector<AxisTag> space = src.tags;
    for (int d : s.dim_index) {
      space = join_tags(space, values[static_cast<size_t>(d)].tags);
    }
    for_lanes(space, [&](const int64_t* c) {
      if (!lane_valid(space, c)) return;
      int64_t flat = 0;
      for (size_t d = 0; d < s.dim_index.size(); ++d) {
        int vid = s.dim_index[d];
        int64_t idx = values[static_cast<size_t>(vid)].int_lane(c);
        if (origin[static_cast<size_t>(vid)] == ValueOrigin::IndexLoad) {
          if (idx < 0 || idx >= out.dim(static_cast<int>(d))) {
            throw IndexRangeError("index tensor " + k.values[static_cast<size_t>(vid)].name +
                                  " value " + std::to_string(idx) + " out of range for dim " +
                                  std::to_string(d) + " of " + s.tensor + " (extent " +
                                  std::to_string(out.dim(static_cast<int>(d))) + ")");
          }
        }
        flat += out_strides[d] * idx;
      }
      if (s.kind == KernelStmt::Kind::AtomicAdd) {
        if (out.is_int()) {
          out.int_at(flat) += src.int_lane(c);
        } else {
          out.real_at(flat) += src.real_lane(c);
        }
        counters.atomic_updates += 1;
      } else {
        if (out.is_int()) {
          out.int_at(flat) = src.int_lane(c);
        } else {
          out.real_at(flat) = src.real_lane(c);
        }
      }
    });
  }

  void run_instance(const std::vector<int64_t>& instance_coords) {
    for (size_t ai = 0; ai < k.grid.size(); ++ai) {
      const KernelAxis& axis = k.grid[ai];
      axis_offsets_[axis.name] = instance_coords[ai] * axis.block;
      // Block-bearing axes drive a tag runtime; batch axes of a dot do not.
      AxisTag t;
      if (!k.has_dot) {
        t = AxisTag::P;
      } else if (ai + 1 == k.grid.size()) {
        t = AxisTag::X;
      } else if (ai + 2 == k.grid.size()) {
        t = AxisTag::Y;
      } else {
        continue;
      }
      axis_rt[tag_slot(t)] =
          AxisRuntime{instance_coords[ai] * axis.block, axis.block, axis.extent};
    }
    if (k.reduce) {
      axis_rt[1] = AxisRuntime{0, k.reduce->block, k.reduce->extent};
    } else {
      axis_rt[1] = AxisRuntime{0, 1, 1};
    }

    for (const auto& s : k.prologue) exec(s, 0);
    if (k.reduce) {
      for (int64_t r_off = 0; r_off < k.reduce->extent; r_off += k.reduce->block) {
        axis_rt[1].offset = r_off;
        for (const auto& s : k.loop) exec(s, r_off);
      }
    }
    for (const auto& s : k.epilogue) exec(s, 0);
  }

  std::map<std::string, int64_t> axis_offsets_;
};

void validate_kernel_bindings(const TiledKernel& k, const TensorMap& tensors,
                              const Tensor& out) {
  for (const auto& [name, shape] : k.stmt.shapes) {
    if (name == k.output) {
      if (out.shape() != shape) {
        throw BindError("output buffer shape does not match the statement for " + name);
      }
      continue;
    }
    auto it = tensors.find(name);
    if (it == tensors.end()) throw BindError("unbound tensor " + name);
    if (it->second.shape() != shape) {
      throw BindError("tensor " + name + " shape does not match the statement");
    }
  }
}

}  // namespace

InterpResult interpret_kernel(const TiledKernel& k, const TensorMap& tensors, const Tensor& out,
                              const InterpOptions& opts) {
  validate_kernel_bindings(k, tensors, out);
  InterpResult result;
  result.out = k.zero_init ? Tensor::zeros(out.kind(), out.shape()) : out;

  // Zero-extent axes run zero instances, leaving the initialized output.
  int64_t instances = 1;
  std::vector<int64_t> counts;
  for (const auto& axis : k.grid) {
    int64_t n = (axis.extent + axis.block - 1) / axis.block;
    counts.push_back(n);
    instances *= n;
  }
  auto decode = [&counts](int64_t id) {
    std::vector<int64_t> coords(counts.size(), 0);
    for (int i = static_cast<int>(counts.size()) - 1; i >= 0; --i) {
      coords[static_cast<size_t>(i)] = id % counts[static_cast<size_t>(i)];
      id /= counts[static_cast<size_t>(i)];
    }
    return coords;
  };

  int threads = std::max(1, opts.threads);
  if (threads == 1 || instances < 2 * threads) {
    Interp interp(k, tensors, result.out, result.counters);
    for (int64_t id = 0; id < instances; ++id) interp.run_instance(decode(id));
    return result;
  }

  // Deterministic parallel mode: each worker accumulates into a private zero
  // buffer over a contiguous instance range; partials merge in worker order.
  std::vector<Tensor> partials(static_cast<size_t>(threads));
  std::vector<AccessCounters> partial_counters(static_cast<size_t>(threads));
  std::vector<std::thread> workers;
  std::vector<std::exception_ptr> errors(static_cast<size_t>(threads));
  int64_t chunk = (instances + threads - 1) / threads;
  for (int w = 0; w < threads; ++w) {
    partials[static_cast<size_t>(w)] = Tensor::zeros(out.kind(), out.shape());
    workers.emplace_back([&, w]() {
      try {
        Interp interp(k, tensors, partials[static_cast<size_t>(w)],
                      partial_counters[static_cast<size_t>(w)]);
        int64_t begin = w * chunk;
        int64_t end = std::min<int64_t>(instances, begin + chunk);
        for (int64_t id = begin; id < end; ++id) interp.run_instance(decode(id));
      } catch (...) {
        errors[static_cast<size_t>(w)] = std::current_exception();
      }
    });
  }
  for (auto& t : workers) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  for (int w = 0; w < threads; ++w) {
    const Tensor& p = partials[static_cast<size_t>(w)];
    for (int64_t i = 0; i < p.numel(); ++i) {
      if (out.is_int()) {
        result.out.int_at(i) += p.int_at(i);
      } else {
        result.out.real_at(i) += p.real_at(i);
      }
    }
    result.counters.gathers += partial_counters[static_cast<size_t>(w)].gathers;
    result.counters.scatters += partial_counters[static_cast<size_t>(w)].scatters;
    result.counters.atomic_updates += partial_counters[static_cast<size_t>(w)].atomic_updates;
  }
  return result;
}

// ---- text emission ----

namespace {

std::string shape_comment(const BlockShape& shape) {
  if (shape.axes.empty()) return "scalar";
  std::string s = "(";
  for (size_t i = 0; i < shape.axes.size(); ++i) {
    if (i) s += ",";
    s += axis_tag_name(shape.axes[i]);
  }
  if (shape.axes.size() == 1) s += ",";
  return s + ")";
}

class Emitter {
public:
  explicit Emitter(const TiledKernel& k) : k_(k) {
    for (AxisTag t : {AxisTag::P, AxisTag::Y, AxisTag::X, AxisTag::R}) {
      axis_name_[tag_slot_e(t)] = "";
      axis_block_[tag_slot_e(t)] = 1;
      axis_extent_[tag_slot_e(t)] = 1;
    }
    for (size_t ai = 0; ai < k.grid.size(); ++ai) {
      const KernelAxis& axis = k.grid[ai];
      AxisTag t;
      if (!k.has_dot) {
        t = AxisTag::P;
      } else if (ai + 1 == k.grid.size()) {
        t = AxisTag::X;
      } else if (ai + 2 == k.grid.size()) {
        t = AxisTag::Y;
      } else {
        continue;  // batch axes carry no block axis
      }
      axis_name_[tag_slot_e(t)] = axis.name;
      axis_block_[tag_slot_e(t)] = axis.block;
      axis_extent_[tag_slot_e(t)] = axis.extent;
    }
    if (k.reduce) {
      axis_name_[1] = k.reduce->name;
      axis_block_[1] = k.reduce->block;
      axis_extent_[1] = k.reduce->extent;
    }
  }

  std::string run() {
    std::ostringstream os;
    os << "kernel " << k_.name << " mode="
       << (k_.mode == BroadcastMode::Eager ? "eager" : "lazy") << " {\n";
    os << "  grid ";
    for (size_t i = 0; i < k_.grid.size(); ++i) {
      if (i) os << ", ";
      os << k_.grid[i].name << ":" << k_.grid[i].extent << "/" << k_.grid[i].block;
    }
    os << "\n";
    if (k_.reduce) {
      os << "  reduce " << k_.reduce->name << ":" << k_.reduce->extent << "/"
         << k_.reduce->block << "\n";
    }
    for (const auto& s : k_.prologue) os << "  " << line(s) << "\n";
    if (k_.reduce) {
      os << "  for " << k_.reduce->name << "_off in 0.." << k_.reduce->extent << " step "
         << k_.reduce->block << " {\n";
      for (const auto& s : k_.loop) os << "    " << line(s) << "\n";
      os << "  }\n";
    }
    for (const auto& s : k_.epilogue) os << "  " << line(s) << "\n";
    os << "}\n";
    return os.str();
  }

private:
  static int tag_slot_e(AxisTag t) {
    switch (t) {
      case AxisTag::P:
      case AxisTag::Y: return 0;
      case AxisTag::R: return 1;
      case AxisTag::X: return 2;
      case AxisTag::Unit: return 3;
    }
    return 3;
  }

  const KernelValue& val(int id) const { return k_.values[static_cast<size_t>(id)]; }

  // Broadcast annotation aligning an operand into a target printed shape.
  std::string annotation(const BlockShape& op, const BlockShape& target) const {
    if (op.axes.empty() || op.axes.size() == target.axes.size()) return "";
    std::string s = "[";
    size_t oi = 0;
    for (size_t ti = 0; ti < target.axes.size(); ++ti) {
      if (ti) s += ",";
      AxisTag t = target.axes[ti];
      if (t != AxisTag::Unit && oi < op.axes.size() && op.axes[oi] == t) {
        s += ":";
        ++oi;
      } else {
        s += "None";
      }
    }
    return s + "]";
  }

  std::string operand(int id, const BlockShape& target) const {
    return val(id).name + annotation(val(id).shape, target);
  }

  std::string arange_suffix(const BlockShape& shape) const {
    if (shape.axes.size() <= 1) return "";
    std::string s = "[";
    for (size_t i = 0; i < shape.axes.size(); ++i) {
      if (i) s += ",";
      s += shape.axes[i] == AxisTag::Unit ? "None" : ":";
    }
    return s + "]";
  }

  std::string mask_clause(const std::vector<AxisTag>& tags) const {
    std::string s;
    for (AxisTag t : tags) {
      int slot = tag_slot_e(t);
      if (axis_name_[slot].empty()) continue;
      if (axis_extent_[slot] % axis_block_[slot] == 0) continue;
      if (!s.empty()) s += " & ";
      s += axis_name_[slot] + "<" + std::to_string(axis_extent_[slot]);
    }
    return s;
  }

  std::string address(const KernelStmt& s, const BlockShape& target) const {
    const auto& shape = k_.stmt.shape_of(s.tensor);
    std::vector<int64_t> strides(shape.size(), 1);
    for (int i = static_cast<int>(shape.size()) - 2; i >= 0; --i) {
      strides[static_cast<size_t>(i)] =
          strides[static_cast<size_t>(i) + 1] * shape[static_cast<size_t>(i) + 1];
    }
    std::string out = s.tensor;
    for (size_t d = 0; d < s.dim_index.size(); ++d) {
      out += " + ";
      if (strides[d] != 1) out += std::to_string(strides[d]) + "*";
      out += operand(s.dim_index[d], target);
    }
    return out;
  }

  // Printed space of a store: the union of source and index tags, expanded
  // per mode the same way value shapes are.
  BlockShape store_space(const KernelStmt& s) const {
    std::vector<AxisTag> tags = semantic_tags(s);
    BlockShape space;
    auto has = [&tags](AxisTag t) { return std::find(tags.begin(), tags.end(), t) != tags.end(); };
    if (tags.empty()) return space;
    if (k_.has_dot && k_.mode == BroadcastMode::Eager) {
      space.axes = {has(AxisTag::Y) ? AxisTag::Y : AxisTag::Unit,
                    has(AxisTag::X) ? AxisTag::X : AxisTag::Unit,
                    has(AxisTag::R) ? AxisTag::R : AxisTag::Unit};
    } else if (k_.has_dot) {
      if (has(AxisTag::Y) && has(AxisTag::X)) {
        space.axes = {AxisTag::Y, AxisTag::X};
      } else if (has(AxisTag::Y)) {
        space.axes = {AxisTag::Y, AxisTag::Unit};
      } else if (has(AxisTag::X)) {
        space.axes = {AxisTag::Unit, AxisTag::X};
      } else {
        space.axes = tags;
      }
    } else if (k_.mode == BroadcastMode::Eager && k_.reduce) {
      space.axes = {has(AxisTag::P) ? AxisTag::P : AxisTag::Unit,
                    has(AxisTag::R) ? AxisTag::R : AxisTag::Unit};
    } else {
      space.axes = tags;
    }
    return space;
  }

  std::vector<AxisTag> semantic_tags(const KernelStmt& s) const {
    std::vector<AxisTag> tags = val(s.a).tags;
    for (int d : s.dim_index) tags = join_tags(tags, val(d).tags);
    return tags;
  }

  std::string full_dims(const BlockShape& shape) const {
    std::string s = "[";
    bool first = true;
    for (AxisTag t : shape.axes) {
      if (t == AxisTag::Unit) continue;
      if (!first) s += ", ";
      first = false;
      s += std::to_string(axis_block_[tag_slot_e(t)]);
    }
    return s + "]";
  }

  std::string line(const KernelStmt& s) const {
    std::ostringstream os;
    switch (s.kind) {
      case KernelStmt::Kind::AxisInit: {
        const KernelAxis& axis = k_.grid[static_cast<size_t>(s.axis)];
        if (val(s.result).shape.axes.empty()) {
          os << val(s.result).name << " = pid(" << s.axis << ")  # scalar";
        } else {
          os << val(s.result).name << " = pid(" << s.axis << ")*" << axis.block << " + arange("
             << axis.block << ")" << arange_suffix(val(s.result).shape) << "  # "
             << shape_comment(val(s.result).shape);
        }
        break;
      }
      case KernelStmt::Kind::AxisBase:
        os << val(s.result).name << " = arange(" << k_.reduce->block << ")"
           << arange_suffix(val(s.result).shape) << "  # " << shape_comment(val(s.result).shape);
        break;
      case KernelStmt::Kind::AxisStep:
        os << val(s.result).name << " = " << k_.reduce->name << "_off + " << val(s.a).name
           << "  # " << shape_comment(val(s.result).shape);
        break;
      case KernelStmt::Kind::IotaSplit: {
        os << val(s.result).name << " = ";
        bool need_div = s.divisor > 1;
        bool need_mod = s.modulo > 0;
        if (need_div && need_mod) {
          os << "(" << val(s.split_src).name << " / " << s.divisor << ") % " << s.modulo;
        } else if (need_div) {
          os << val(s.split_src).name << " / " << s.divisor;
        } else if (need_mod) {
          os << val(s.split_src).name << " % " << s.modulo;
        } else {
          os << val(s.split_src).name;
        }
        os << "  # " << shape_comment(val(s.result).shape);
        break;
      }
      case KernelStmt::Kind::Full:
        os << val(s.result).name << " = full(" << full_dims(val(s.result).shape) << ", 0)  # "
           << shape_comment(val(s.result).shape);
        break;
      case KernelStmt::Kind::Load: {
        os << val(s.result).name << " = load " << address(s, val(s.result).shape);
        std::string mask = mask_clause(val(s.result).tags);
        if (!mask.empty()) os << ", mask=" << mask;
        os << "  # " << shape_comment(val(s.result).shape);
        break;
      }
      case KernelStmt::Kind::Mul:
        os << val(s.result).name << " = " << operand(s.a, val(s.result).shape) << " * "
           << operand(s.b, val(s.result).shape) << "  # " << shape_comment(val(s.result).shape);
        break;
      case KernelStmt::Kind::AccAdd:
        os << val(s.result).name << " += " << operand(s.a, val(s.result).shape) << "  # "
           << shape_comment(val(s.result).shape);
        break;
      case KernelStmt::Kind::AccDot:
        os << val(s.result).name << " += dot(" << val(s.a).name << ", " << val(s.b).name
           << ")  # " << shape_comment(val(s.result).shape);
        break;
      case KernelStmt::Kind::SumAxis: {
        int axis_pos = 0;
        const auto& axes = val(s.a).shape.axes;
        for (size_t i = 0; i < axes.size(); ++i) {
          if (axes[i] == AxisTag::R) axis_pos = static_cast<int>(i);
        }
        os << val(s.result).name << " = sum(" << val(s.a).name << ", axis=" << axis_pos
           << ")  # " << shape_comment(val(s.result).shape);
        break;
      }
      case KernelStmt::Kind::Reshape:
        os << val(s.result).name << " = view(" << val(s.a).name << ", "
           << full_dims(val(s.result).shape) << ")  # " << shape_comment(val(s.a).shape)
           << " -> " << shape_comment(val(s.result).shape);
        break;
      case KernelStmt::Kind::Transpose:
        os << val(s.result).name << " = trans(" << val(s.a).name << ")  # "
           << shape_comment(val(s.a).shape) << " -> " << shape_comment(val(s.result).shape);
        break;
      case KernelStmt::Kind::Store:
      case KernelStmt::Kind::AtomicAdd: {
        BlockShape space = store_space(s);
        os << (s.kind == KernelStmt::Kind::Store ? "store " : "atomic_add ")
           << address(s, space) << ", " << operand(s.a, space);
        std::string mask = mask_clause(semantic_tags(s));
        if (!mask.empty()) os << ", mask=" << mask;
        os << "  # " << shape_comment(space);
        break;
      }
    }
    return os.str();
  }

  const TiledKernel& k_;
  std::string axis_name_[4];
  int64_t axis_block_[4];
  int64_t axis_extent_[4];
};

}  // namespace

std::string emit_text(const TiledKernel& k) {
  return Emitter(k).run();
}

}  // namespace ixsum
