#include "ixsum/tuner.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ixsum {

OccProfile OccProfile::from_coo(const CooMatrix& c, int dim) {
  return OccProfile{occupancy(c, dim)};
}

int64_t OccProfile::total() const {
  int64_t s = 0;
  for (int64_t o : occ) s += o;
  return s;
}

int64_t OccProfile::nonzero_count() const {
  int64_t n = 0;
  for (int64_t o : occ) n += o > 0 ? 1 : 0;
  return n;
}

int64_t OccProfile::max_occ() const {
  int64_t m = 0;
  for (int64_t o : occ) m = std::max(m, o);
  return m;
}

int64_t cost_exact(const OccProfile& prof, int64_t g) {
  if (g < 1) throw std::invalid_argument("group size must be >= 1, got " + std::to_string(g));
  int64_t groups = 0;
  for (int64_t o : prof.occ) groups += (o + g - 1) / g;
  return (g + 1) * groups;
}

namespace {

int64_t effective_n(const OccProfile& prof, bool count_empty_rows) {
  return count_empty_rows ? prof.row_count() : prof.nonzero_count();
}

}  // namespace

double cost_relaxed(const OccProfile& prof, double g, bool count_empty_rows) {
  if (g <= 0) throw std::invalid_argument("group size must be positive");
  double s = static_cast<double>(prof.total());
  double n = static_cast<double>(effective_n(prof, count_empty_rows));
  return s + s / g + n * g + n;
}

double cost_relaxed_derivative(const OccProfile& prof, double g, bool count_empty_rows) {
  if (g <= 0) throw std::invalid_argument("group size must be positive");
  double s = static_cast<double>(prof.total());
  double n = static_cast<double>(effective_n(prof, count_empty_rows));
  return -s / (g * g) + n;
}

double g_star(const OccProfile& prof, bool count_empty_rows) {
  if (prof.empty()) return 1.0;
  double n = static_cast<double>(effective_n(prof, count_empty_rows));
  if (n <= 0) return 1.0;
  return std::sqrt(static_cast<double>(prof.total()) / n);
}

std::vector<int64_t> candidate_group_sizes(const OccProfile& prof, bool count_empty_rows) {
  if (prof.empty()) return {1};
  double gs = g_star(prof, count_empty_rows);

  int64_t lo = 1;
  while (lo * 2 <= static_cast<int64_t>(gs)) lo *= 2;
  int64_t hi = lo;
  while (static_cast<double>(hi) < gs) hi *= 2;

  // Clamp to the largest power of two that fits in [1, max occ].
  int64_t cap = 1;
  while (cap * 2 <= prof.max_occ()) cap *= 2;
  lo = std::clamp<int64_t>(lo, 1, cap);
  hi = std::clamp<int64_t>(hi, 1, cap);

  if (lo == hi) return {lo};
  return {lo, hi};
}

std::optional<std::pair<int64_t, int64_t>> brute_force_optimal(const OccProfile& prof) {
  if (prof.empty()) return std::nullopt;
  int64_t best_g = 1;
  int64_t best_f = cost_exact(prof, 1);
  for (int64_t g = 2; g <= prof.max_occ(); ++g) {
    int64_t f = cost_exact(prof, g);
    if (f < best_f) {
      best_f = f;
      best_g = g;
    }
  }
  return std::make_pair(best_g, best_f);
}

TuneReport select(const OccProfile& prof, const GroupSizeEvaluator& evaluator,
                  bool count_empty_rows) {
  TuneReport report;
  report.gstar = g_star(prof, count_empty_rows);
  report.brute_optimal = brute_force_optimal(prof);
  for (int64_t g : candidate_group_sizes(prof, count_empty_rows)) {
    double score = evaluator ? evaluator(g) : static_cast<double>(cost_exact(prof, g));
    report.candidates.emplace_back(g, score);
  }
  report.chosen = report.candidates.front().first;
  double best = report.candidates.front().second;
  for (const auto& [g, score] : report.candidates) {
    if (score < best) {
      best = score;
      report.chosen = g;
    }
  }
  return report;
}

}  // namespace ixsum
