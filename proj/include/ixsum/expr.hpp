#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace ixsum {

// Index expression inside a tensor access: either a plain loop variable or a
// one-level indirection through an integer tensor, e.g. AK[p,q]. Indirection
// arguments are always plain variables; nesting is rejected by the parser.
struct DirectIndex {
  std::string var;
  bool operator==(const DirectIndex&) const = default;
};

struct IndirectIndex {
  std::string tensor;
  std::vector<std::string> args;
  bool operator==(const IndirectIndex&) const = default;
};

using IndexExpr = std::variant<DirectIndex, IndirectIndex>;

bool is_direct(const IndexExpr& e);
const std::string* direct_var(const IndexExpr& e);  // nullptr if indirect

struct TensorAccess {
  std::string tensor;
  std::vector<IndexExpr> indices;
  bool operator==(const TensorAccess&) const = default;
};

struct EinsumStmt {
  TensorAccess output;
  std::vector<TensorAccess> inputs;
  bool accumulate = false;  // += vs =

  // Index variables in order of first appearance (output first, then inputs).
  std::vector<std::string> vars;
  // Filled by infer_extents.
  std::map<std::string, int64_t> extents;
  // Shapes of every tensor named in the statement, recorded at inference time
  // (extents alone cannot recover the extent of an indirectly indexed dim).
  std::map<std::string, std::vector<int64_t>> shapes;

  bool inferred() const { return !extents.empty(); }
  int64_t extent_of(const std::string& var) const;
  const std::vector<int64_t>& shape_of(const std::string& tensor) const;

  bool operator==(const EinsumStmt&) const = default;
};

struct ParseError : std::runtime_error {
  ParseError(const std::string& what, size_t position)
      : std::runtime_error(what + " (at position " + std::to_string(position) + ")"),
        pos(position) {}
  size_t pos;
};

struct InferenceError : std::runtime_error {
  explicit InferenceError(const std::string& what) : std::runtime_error(what) {}
};

/// Parses `LHS ('='|'+=') factor ('*' factor)*` where each factor and the LHS
/// are accesses `Name[indexExpr, ...]` and an indexExpr is `var` or
/// `Name[var, ...]`. Whitespace is insignificant. See docs/expression-grammar.md.
EinsumStmt parse(const std::string& expression);

/// Canonical text form; parse(to_string(parse(s))) == parse(s).
std::string to_string(const EinsumStmt& stmt);
std::string to_string(const TensorAccess& access);
std::string to_string(const IndexExpr& e);

using ShapeMap = std::map<std::string, std::vector<int64_t>>;

/// Gives every variable one extent read off the shapes of the dimensions it
/// directly indexes (indirection arguments index the dimensions of the index
/// tensor). The *result* of an indirection is only range-checked at runtime.
EinsumStmt infer_extents(const EinsumStmt& stmt, const ShapeMap& shapes);

struct VarClasses {
  std::vector<std::string> pointwise;  // appear in the output access
  std::vector<std::string> reduction;  // everything else
};

VarClasses classify_vars(const EinsumStmt& stmt);

}  // namespace ixsum
