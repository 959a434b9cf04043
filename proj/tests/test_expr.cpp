#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>

#include "helpers.hpp"
#include "ixsum/expr.hpp"
#include "ixsum/formats.hpp"

using namespace ixsum;

TEST_CASE("parses the COO SpMM statement") {
  EinsumStmt s = parse("C[AM[p],n] += AV[p] * B[AK[p],n]");
  CHECK(s.accumulate);
  CHECK(s.output.tensor == "C");
  REQUIRE(s.output.indices.size() == 2);
  const auto& ind = std::get<IndirectIndex>(s.output.indices[0]);
  CHECK(ind.tensor == "AM");
  CHECK(ind.args == std::vector<std::string>{"p"});
  CHECK(std::get<DirectIndex>(s.output.indices[1]).var == "n");
  REQUIRE(s.inputs.size() == 2);
  CHECK(s.inputs[0].tensor == "AV");
  CHECK(s.inputs[1].tensor == "B");
  CHECK(s.vars == std::vector<std::string>{"p", "n"});
}

TEST_CASE("parses a plain elementwise statement") {
  EinsumStmt s = parse("C[i] = A[i] * B[i]");
  CHECK_FALSE(s.accumulate);
  CHECK(s.inputs.size() == 2);
  CHECK(is_direct(s.output.indices[0]));
}

TEST_CASE("parses the three-factor sparse convolution statement") {
  EinsumStmt s = parse("Out[MAPX[p,q],m] += MAPV[p,q] * In[MAPY[p,q],c] * Weight[MAPZ[p],c,m]");
  REQUIRE(s.inputs.size() == 3);
  CHECK(s.inputs[2].tensor == "Weight");
  const auto& z = std::get<IndirectIndex>(s.inputs[2].indices[0]);
  CHECK(z.tensor == "MAPZ");
  CHECK(z.args == std::vector<std::string>{"p"});
  CHECK(s.vars == std::vector<std::string>{"p", "q", "m", "c"});
}

TEST_CASE("syntax errors carry a position") {
  try {
    parse("C[i] = A[i * B[i]");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.pos > 0);
    CHECK(std::string(e.what()).find("position") != std::string::npos);
  }
  CHECK_THROWS_AS(parse("C[i]"), ParseError);
  CHECK_THROWS_AS(parse("C[i] = "), ParseError);
  CHECK_THROWS_AS(parse("[i] = A[i]"), ParseError);
  CHECK_THROWS_AS(parse("C[i] = A[i] + B[i]"), ParseError);
  CHECK_THROWS_AS(parse("C[] = A[i]"), ParseError);
}

TEST_CASE("only multiply-and-sum statements are accepted") {
  // Generalized reducers and other operators fail at parse time.
  CHECK_THROWS_AS(parse("C[i] max= A[i]"), ParseError);
  CHECK_THROWS_AS(parse("C[i] = max(A[i], B[i])"), ParseError);
  CHECK_THROWS_AS(parse("C[i] = A[i] + B[i]"), ParseError);
  CHECK_THROWS_AS(parse("C[i] -= A[i]"), ParseError);
  CHECK_THROWS_AS(parse("C[i] = A[i] / B[i]"), ParseError);
}

TEST_CASE("nested indirection is rejected with a dedicated error") {
  try {
    parse("C[i] = A[B[D[i]]]");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("nested indirection") != std::string::npos);
  }
}

TEST_CASE("parse / print round trip is the identity on the AST") {
  const char* exprs[] = {
      "C[AM[p],n] += AV[p] * B[AK[p],n]",
      "C[i] = A[i] * B[i]",
      "Out[MAPX[p,q],m] += MAPV[p,q] * In[MAPY[p,q],c] * Weight[MAPZ[p],c,m]",
      "Z[b,CGI[p,q],w] += CGV[p,q] * X[b,CGJ[p,q],u] * Y[b,CGK[p,q]] * W[b,CGL[p],u,w]",
      "C[y,x] = A[y,r] * B[r,x]",
  };
  for (const char* e : exprs) {
    EinsumStmt s1 = parse(e);
    EinsumStmt s2 = parse(to_string(s1));
    CHECK(s1 == s2);
  }
}

TEST_CASE("round trip holds for randomly generated statements") {
  std::mt19937_64 rng(20240811);
  const char* names[] = {"A", "Bx", "C2", "map_t", "W"};
  const char* vars[] = {"i", "j", "k", "p", "q"};
  for (int iter = 0; iter < 200; ++iter) {
    auto rand_access = [&](int salt) {
      TensorAccess a;
      a.tensor = std::string(names[(iter + salt) % 5]) + std::to_string(salt);
      int rank = 1 + static_cast<int>(rng() % 3);
      for (int d = 0; d < rank; ++d) {
        if (rng() % 2) {
          a.indices.push_back(DirectIndex{vars[rng() % 5]});
        } else {
          IndirectIndex ind;
          ind.tensor = std::string("I") + std::to_string(rng() % 4);
          int nargs = 1 + static_cast<int>(rng() % 2);
          for (int i = 0; i < nargs; ++i) ind.args.push_back(vars[rng() % 5]);
          a.indices.push_back(std::move(ind));
        }
      }
      return a;
    };
    EinsumStmt s;
    s.output = rand_access(0);
    int nin = 1 + static_cast<int>(rng() % 3);
    for (int i = 0; i < nin; ++i) s.inputs.push_back(rand_access(i + 1));
    s.accumulate = rng() % 2;
    EinsumStmt round = parse(to_string(s));
    // collect_vars fills s.vars only through parse; compare structure.
    CHECK(round.output == s.output);
    CHECK(round.inputs == s.inputs);
    CHECK(round.accumulate == s.accumulate);
    CHECK(parse(to_string(round)) == round);
  }
}

TEST_CASE("whitespace is insignificant") {
  EinsumStmt a = parse("C[AM[p],n]+=AV[p]*B[AK[p],n]");
  EinsumStmt b = parse("  C [ AM [ p ] , n ]  +=  AV [ p ]  *  B [ AK [ p ] , n ]  ");
  CHECK(a == b);
}

TEST_CASE("infers COO SpMM extents from shapes") {
  ShapeMap shapes = {{"AV", {7}}, {"AM", {7}}, {"AK", {7}}, {"B", {4, 2}}, {"C", {4, 2}}};
  EinsumStmt s = infer_extents(parse("C[AM[p],n] += AV[p] * B[AK[p],n]"), shapes);
  CHECK(s.extent_of("p") == 7);
  CHECK(s.extent_of("n") == 2);
}

TEST_CASE("conflicting extents are reported with the variable name") {
  ShapeMap shapes = {{"AV", {7}}, {"AM", {6}}, {"AK", {7}}, {"B", {4, 2}}, {"C", {4, 2}}};
  try {
    infer_extents(parse("C[AM[p],n] += AV[p] * B[AK[p],n]"), shapes);
    FAIL("expected an inference error");
  } catch (const InferenceError& e) {
    CHECK(std::string(e.what()).find("extent conflict for p") != std::string::npos);
  }
}

TEST_CASE("infers GroupCOO SpMM extents from converted shapes") {
  // occ [3,1,1,2] at g=2 yields G=5 groups; emitted operands drive inference.
  CooMatrix coo = dense_to_coo(test::occ3112_matrix());
  GroupCooMatrix gc = coo_to_groupcoo(coo, 0, 2);
  TensorMap ops;
  for (auto& [n, t] : emit_operands(gc)) ops[n] = t;
  CHECK(ops["AV"].shape() == std::vector<int64_t>{5, 2});
  CHECK(ops["AM"].shape() == std::vector<int64_t>{5});
  CHECK(ops["AK"].shape() == std::vector<int64_t>{5, 2});
  ShapeMap shapes = test::shapes_of(ops, "C", {4, 2});
  shapes["B"] = {4, 2};
  EinsumStmt s = infer_extents(parse("C[AM[p],n] += AV[p,q] * B[AK[p,q],n]"), shapes);
  CHECK(s.extent_of("p") == 5);
  CHECK(s.extent_of("q") == 2);
  CHECK(s.extent_of("n") == 2);
}

TEST_CASE("rank mismatches are inference errors") {
  ShapeMap shapes = {{"A", {4, 4}}, {"C", {4}}};
  CHECK_THROWS_AS(infer_extents(parse("C[i] = A[i]"), shapes), InferenceError);
  ShapeMap shapes2 = {{"A", {4}}, {"C", {4}}};
  CHECK_THROWS_AS(infer_extents(parse("C[i] = A[i,j]"), shapes2), InferenceError);
}

TEST_CASE("missing tensors are inference errors") {
  ShapeMap shapes = {{"C", {4}}};
  CHECK_THROWS_AS(infer_extents(parse("C[i] = A[i]"), shapes), InferenceError);
}

TEST_CASE("classify_vars partitions pointwise and reduction variables") {
  {
    EinsumStmt s = parse("C[AM[p],n] += AV[p] * B[AK[p],n]");
    VarClasses c = classify_vars(s);
    CHECK(c.pointwise == std::vector<std::string>{"p", "n"});
    CHECK(c.reduction.empty());
  }
  {
    EinsumStmt s = parse("C[y,x] = A[y,r] * B[r,x]");
    VarClasses c = classify_vars(s);
    CHECK(c.pointwise == std::vector<std::string>{"y", "x"});
    CHECK(c.reduction == std::vector<std::string>{"r"});
  }
  {
    EinsumStmt s = parse("C[i] = A[i] * B[i]");
    VarClasses c = classify_vars(s);
    CHECK(c.pointwise == std::vector<std::string>{"i"});
    CHECK(c.reduction.empty());
  }
}

TEST_CASE("classification always partitions the variable set") {
  const char* exprs[] = {
      "C[AM[p],bm,n] += AV[p,q,bm,bk] * B[AK[p,q],bk,n]",
      "Z[b,CGI[p,q],w] += CGV[p,q] * X[b,CGJ[p,q],u] * Y[b,CGK[p,q]] * W[b,CGL[p],u,w]",
      "Out[MAPX[p],m] += MAPV[p] * In[MAPY[p],c] * Weight[MAPZ[p],c,m]",
  };
  for (const char* e : exprs) {
    EinsumStmt s = parse(e);
    VarClasses c = classify_vars(s);
    std::vector<std::string> joined = c.pointwise;
    joined.insert(joined.end(), c.reduction.begin(), c.reduction.end());
    std::sort(joined.begin(), joined.end());
    std::vector<std::string> vars = s.vars;
    std::sort(vars.begin(), vars.end());
    CHECK(joined == vars);
    for (const auto& v : c.pointwise) {
      CHECK(std::find(c.reduction.begin(), c.reduction.end(), v) == c.reduction.end());
    }
  }
}

TEST_CASE("the four case-study statements parse and infer with documented shapes") {
  struct Case {
    const char* expr;
    ShapeMap shapes;
  };
  const Case cases[] = {
      {"C[AM[p],bm,n] += AV[p,q,bm,bk] * B[AK[p,q],bk,n]",
       {{"AV", {6, 2, 8, 8}}, {"AM", {6}}, {"AK", {6, 2}}, {"B", {8, 8, 8}}, {"C", {8, 8, 8}}}},
      {"C[AM[p],n] += AV[p,q] * B[AK[p,q],n]",
       {{"AV", {10, 4}}, {"AM", {10}}, {"AK", {10, 4}}, {"B", {40, 8}}, {"C", {48, 8}}}},
      {"Out[MAPX[p,q],m] += MAPV[p,q] * In[MAPY[p,q],c] * Weight[MAPZ[p],c,m]",
       {{"MAPV", {9, 4}},
        {"MAPX", {9, 4}},
        {"MAPY", {9, 4}},
        {"MAPZ", {9}},
        {"In", {36, 8}},
        {"Weight", {9, 8, 12}},
        {"Out", {40, 12}}}},
      {"Z[b,CGI[p,q],w] += CGV[p,q] * X[b,CGJ[p,q],u] * Y[b,CGK[p,q]] * W[b,CGL[p],u,w]",
       {{"CGV", {24, 2}},
        {"CGI", {24, 2}},
        {"CGJ", {24, 2}},
        {"CGK", {24, 2}},
        {"CGL", {24}},
        {"X", {6, 8, 8}},
        {"Y", {6, 8}},
        {"W", {6, 6, 8, 8}},
        {"Z", {6, 8, 8}}}},
  };
  for (const auto& c : cases) {
    EinsumStmt s = infer_extents(parse(c.expr), c.shapes);
    CHECK(s.inferred());
    for (const auto& v : s.vars) CHECK(s.extent_of(v) > 0);
  }
}
