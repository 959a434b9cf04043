#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "ixsum/formats.hpp"

namespace ixsum {

// Per-coordinate nonzero counts along the grouping dimension.
// n in the cost formulas counts coordinates with occ > 0 by default; rows
// with no entries produce no groups. The literal all-rows variant is
// available behind count_empty_rows for comparison.
struct OccProfile {
  std::vector<int64_t> occ;

  static OccProfile from_coo(const CooMatrix& c, int dim = 0);

  int64_t total() const;          // S
  int64_t nonzero_count() const;  // rows with occ > 0
  int64_t row_count() const { return static_cast<int64_t>(occ.size()); }
  int64_t max_occ() const;
  bool empty() const { return total() == 0; }
};

/// Exact gather+scatter count at group size g: (g+1) * sum_i ceil(occ_i / g).
int64_t cost_exact(const OccProfile& prof, int64_t g);

/// Relaxed cost S + S/g + n*g + n from ceil(o/g) ~ o/g + 1.
double cost_relaxed(const OccProfile& prof, double g, bool count_empty_rows = false);

/// d/dg of cost_relaxed: -S/g^2 + n.
double cost_relaxed_derivative(const OccProfile& prof, double g,
                               bool count_empty_rows = false);

/// Minimizer of the relaxed cost, sqrt(S/n); 1 for an empty profile.
double g_star(const OccProfile& prof, bool count_empty_rows = false);

/// The power-of-two group sizes bracketing g_star, deduplicated and clamped
/// into [1, max occ] (to the largest power of two <= max occ).
std::vector<int64_t> candidate_group_sizes(const OccProfile& prof,
                                           bool count_empty_rows = false);

/// argmin of cost_exact over g in [1, max occ]; ties break toward smaller g.
/// nullopt for an empty profile.
std::optional<std::pair<int64_t, int64_t>> brute_force_optimal(const OccProfile& prof);

struct TuneReport {
  double gstar = 1.0;
  std::vector<std::pair<int64_t, double>> candidates;  // (g, score used to choose)
  int64_t chosen = 1;
  std::optional<std::pair<int64_t, int64_t>> brute_optimal;  // (g, F(g))
};

using GroupSizeEvaluator = std::function<double(int64_t g)>;

/// Scores the candidates with the evaluator when given (e.g. measured
/// runtime), else with cost_exact; ties break toward smaller g.
TuneReport select(const OccProfile& prof, const GroupSizeEvaluator& evaluator = {},
                  bool count_empty_rows = false);

}  // namespace ixsum
