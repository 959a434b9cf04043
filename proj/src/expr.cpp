#include "ixsum/expr.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

namespace ixsum {

bool is_direct(const IndexExpr& e) {
  return std::holds_alternative<DirectIndex>(e);
}

const std::string* direct_var(const IndexExpr& e) {
  if (const auto* d = std::get_if<DirectIndex>(&e)) return &d->var;
  return nullptr;
}

int64_t EinsumStmt::extent_of(const std::string& var) const {
  auto it = extents.find(var);
  if (it == extents.end()) {
    throw InferenceError("no extent inferred for variable " + var);
  }
  return it->second;
}

const std::vector<int64_t>& EinsumStmt::shape_of(const std::string& tensor) const {
  auto it = shapes.find(tensor);
  if (it == shapes.end()) {
    throw InferenceError("no shape recorded for tensor " + tensor);
  }
  return it->second;
}

namespace {

class Parser {
public:
  explicit Parser(const std::string& text) : text_(text) {}

  EinsumStmt parse_stmt() {
    EinsumStmt stmt;
    stmt.output = parse_access();
    skip_ws();
    if (consume("+=")) {
      stmt.accumulate = true;
    } else if (consume("=")) {
      stmt.accumulate = false;
    } else {
      fail("expected '=' or '+='");
    }
    stmt.inputs.push_back(parse_access());
    skip_ws();
    while (consume("*")) {
      stmt.inputs.push_back(parse_access());
      skip_ws();
    }
    if (pos_ != text_.size()) {
      fail("unexpected trailing input");
    }
    collect_vars(stmt);
    return stmt;
  }

private:
  TensorAccess parse_access() {
    TensorAccess access;
    access.tensor = parse_ident("tensor name");
    expect('[');
    access.indices.push_back(parse_index_expr());
    skip_ws();
    while (consume(",")) {
      access.indices.push_back(parse_index_expr());
      skip_ws();
    }
    expect(']');
    return access;
  }

  IndexExpr parse_index_expr() {
    std::string name = parse_ident("index variable");
    skip_ws();
    if (!peek('[')) {
      return DirectIndex{std::move(name)};
    }
    expect('[');
    IndirectIndex ind;
    ind.tensor = std::move(name);
    ind.args.push_back(parse_indirection_arg());
    skip_ws();
    while (consume(",")) {
      ind.args.push_back(parse_indirection_arg());
      skip_ws();
    }
    expect(']');
    return ind;
  }

  std::string parse_indirection_arg() {
    size_t at = pos_after_ws();
    std::string var = parse_ident("indirection argument");
    skip_ws();
    if (peek('[')) {
      throw ParseError("nested indirection is not supported", at);
    }
    return var;
  }

  std::string parse_ident(const char* what) {
    skip_ws();
    size_t start = pos_;
    if (pos_ < text_.size() && (std::isalpha(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
      ++pos_;
      while (pos_ < text_.size() &&
             (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
        ++pos_;
      }
      return text_.substr(start, pos_ - start);
    }
    fail(std::string("expected ") + what);
    return {};
  }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  size_t pos_after_ws() {
    skip_ws();
    return pos_;
  }

  bool peek(char c) {
    skip_ws();
    return pos_ < text_.size() && text_[pos_] == c;
  }

  bool consume(const std::string& token) {
    skip_ws();
    if (text_.compare(pos_, token.size(), token) == 0) {
      // '=' must not match the front of '+=' handled by ordering at call site;
      // guard '=' against '=='-like input anyway.
      pos_ += token.size();
      return true;
    }
    return false;
  }

  void expect(char c) {
    skip_ws();
    if (pos_ >= text_.size() || text_[pos_] != c) {
      fail(std::string("expected '") + c + "'");
    }
    ++pos_;
  }

  [[noreturn]] void fail(const std::string& msg) {
    throw ParseError(msg, pos_);
  }

  static void collect_vars(EinsumStmt& stmt) {
    auto add = [&stmt](const std::string& v) {
      if (std::find(stmt.vars.begin(), stmt.vars.end(), v) == stmt.vars.end()) {
        stmt.vars.push_back(v);
      }
    };
    auto scan = [&add](const TensorAccess& a) {
      for (const IndexExpr& e : a.indices) {
        if (const auto* d = std::get_if<DirectIndex>(&e)) {
          add(d->var);
        } else {
          for (const auto& v : std::get<IndirectIndex>(e).args) add(v);
        }
      }
    };
    scan(stmt.output);
    for (const auto& in : stmt.inputs) scan(in);
  }

  const std::string& text_;
  size_t pos_ = 0;
};

}  // namespace

EinsumStmt parse(const std::string& expression) {
  return Parser(expression).parse_stmt();
}

std::string to_string(const IndexExpr& e) {
  if (const auto* d = std::get_if<DirectIndex>(&e)) return d->var;
  const auto& ind = std::get<IndirectIndex>(e);
  std::string s = ind.tensor + "[";
  for (size_t i = 0; i < ind.args.size(); ++i) {
    if (i) s += ",";
    s += ind.args[i];
  }
  return s + "]";
}

std::string to_string(const TensorAccess& access) {
  std::string s = access.tensor + "[";
  for (size_t i = 0; i < access.indices.size(); ++i) {
    if (i) s += ",";
    s += to_string(access.indices[i]);
  }
  return s + "]";
}

std::string to_string(const EinsumStmt& stmt) {
  std::string s = to_string(stmt.output);
  s += stmt.accumulate ? " += " : " = ";
  for (size_t i = 0; i < stmt.inputs.size(); ++i) {
    if (i) s += " * ";
    s += to_string(stmt.inputs[i]);
  }
  return s;
}

namespace {

const std::vector<int64_t>& shape_of(const ShapeMap& shapes, const std::string& tensor) {
  auto it = shapes.find(tensor);
  if (it == shapes.end()) {
    throw InferenceError("no shape given for tensor " + tensor);
  }
  return it->second;
}

void note_extent(std::map<std::string, int64_t>& extents, const std::string& var,
                 int64_t extent, const std::string& where) {
  auto [it, inserted] = extents.emplace(var, extent);
  if (!inserted && it->second != extent) {
    throw InferenceError("extent conflict for " + var + ": " + std::to_string(it->second) +
                         " vs " + std::to_string(extent) + " (" + where + ")");
  }
}

void infer_access(const TensorAccess& access, const ShapeMap& shapes, EinsumStmt& out) {
  auto& extents = out.extents;
  const auto& shape = shape_of(shapes, access.tensor);
  out.shapes[access.tensor] = shape;
  if (shape.size() != access.indices.size()) {
    throw InferenceError("rank mismatch: " + access.tensor + " has rank " +
                         std::to_string(shape.size()) + " but is accessed with " +
                         std::to_string(access.indices.size()) + " indices");
  }
  for (size_t d = 0; d < access.indices.size(); ++d) {
    const IndexExpr& e = access.indices[d];
    if (const auto* dir = std::get_if<DirectIndex>(&e)) {
      note_extent(extents, dir->var, shape[d],
                  access.tensor + " dim " + std::to_string(d));
    } else {
      const auto& ind = std::get<IndirectIndex>(e);
      const auto& ishape = shape_of(shapes, ind.tensor);
      out.shapes[ind.tensor] = ishape;
      if (ishape.size() != ind.args.size()) {
        throw InferenceError("rank mismatch: index tensor " + ind.tensor + " has rank " +
                             std::to_string(ishape.size()) + " but is accessed with " +
                             std::to_string(ind.args.size()) + " indices");
      }
      for (size_t a = 0; a < ind.args.size(); ++a) {
        note_extent(extents, ind.args[a], ishape[a],
                    ind.tensor + " dim " + std::to_string(a));
      }
    }
  }
}

}  // namespace

EinsumStmt infer_extents(const EinsumStmt& stmt, const ShapeMap& shapes) {
  EinsumStmt out = stmt;
  out.extents.clear();
  out.shapes.clear();
  infer_access(stmt.output, shapes, out);
  for (const auto& in : stmt.inputs) infer_access(in, shapes, out);
  for (const auto& v : out.vars) {
    if (!out.extents.count(v)) {
      throw InferenceError("variable " + v + " has no direct occurrence; extent not inferable");
    }
  }
  return out;
}

VarClasses classify_vars(const EinsumStmt& stmt) {
  VarClasses c;
  std::vector<std::string> out_vars;
  for (const IndexExpr& e : stmt.output.indices) {
    if (const auto* d = std::get_if<DirectIndex>(&e)) {
      out_vars.push_back(d->var);
    } else {
      for (const auto& v : std::get<IndirectIndex>(e).args) out_vars.push_back(v);
    }
  }
  for (const auto& v : stmt.vars) {
    bool in_out = std::find(out_vars.begin(), out_vars.end(), v) != out_vars.end();
    (in_out ? c.pointwise : c.reduction).push_back(v);
  }
  return c;
}

}  // namespace ixsum
