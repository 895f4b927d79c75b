#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "stylesync/coordination.hpp"
#include "stylesync/corpus.hpp"
#include "stylesync/lexicon.hpp"
#include "stylesync/roles.hpp"
#include "stylesync/stats.hpp"

namespace stylesync {

// A two-sided group comparison: repliers B1 toward targets A1 under scope1,
// against repliers B2 toward targets A2 under scope2.
struct HypothesisSpec {
  std::string name;
  GroupId b1, a1;
  Scope scope1;
  GroupId b2, a2;
  Scope scope2;
  std::string description;

  std::string side1_label() const { return side_label(b1, a1, scope1); }
  std::string side2_label() const { return side_label(b2, a2, scope2); }

  static std::string side_label(GroupId b, GroupId a, const Scope& scope) {
    std::string s = "C(" + std::string(group_name(b)) + ", " + group_name(a) + ")";
    if (scope.kind != ScopeKind::All) s += " [" + std::string(scope_name(scope.kind)) + "]";
    return s;
  }
};

// The shipped battery. The pre-delta scope binds on the delta-giver target
// side: replies toward a giver count only before that giver's first award.
inline std::vector<HypothesisSpec> shipped_hypotheses() {
  using G = GroupId;
  std::vector<HypothesisSpec> specs;
  specs.push_back({"H1.1", G::Ops, G::U, Scope::all(), G::NonOps, G::U, Scope::all(),
                   "conversation openers coordinate toward others more than "
                   "regular participants do"});
  specs.push_back({"H1.2", G::Ops, G::U, Scope::all(), G::RBar, G::U, Scope::all(),
                   "openers coordinate differently in their own conversations "
                   "than where they participate as regulars"});
  specs.push_back({"H2", G::DeltaReg, G::U, Scope::all(), G::NonDelta, G::U,
                   Scope::all(),
                   "non-OP delta givers coordinate more than users who gave "
                   "no delta"});
  specs.push_back({"H3", G::U, G::U, Scope::delta_branches(), G::U, G::U,
                   Scope::non_delta_branches(),
                   "coordination differs between delta and non-delta branches"});
  specs.push_back({"H4", G::U, G::Delta, Scope::pre_delta("G_delta"), G::U,
                   G::NonDelta, Scope::pre_delta("G_nondelta"),
                   "coordination toward delta givers differs from coordination "
                   "toward non-givers"});
  specs.push_back({"H4.1", G::U, G::DeltaReg, Scope::pre_delta("G_delta_reg"),
                   G::U, G::NonDelta, Scope::pre_delta("G_nondelta"),
                   "coordination toward non-OP delta givers differs from "
                   "coordination toward non-givers"});
  specs.push_back({"H4.2", G::U, G::DeltaOp, Scope::pre_delta("G_delta_op"),
                   G::U, G::OpNonDelta, Scope::pre_delta("G_op_nondelta"),
                   "coordination toward delta-giving OPs differs from "
                   "coordination toward OPs who gave no delta"});
  specs.push_back({"H4.3", G::U, G::Ops, Scope::all(), G::U, G::NonOps,
                   Scope::all(),
                   "coordination toward OPs differs from coordination toward "
                   "non-OPs"});
  return specs;
}

struct RunSettings {
  ScoreConfig score;
  TVariant t_variant = TVariant::Welch;
  bool bonferroni = false;  // stars from p * cell count when set
  unsigned workers = 1;
};

// One marker or aggregate row of a hypothesis result.
struct CellResult {
  std::string label;
  bool is_aggregate = false;
  bool testable = false;
  std::string note;  // "insufficient" / "degenerate" when untestable
  std::optional<double> mean1, mean2;
  int n1 = 0, n2 = 0;
  std::optional<double> se1, se2;
  std::optional<double> t, df, p;
  std::string stars;
  int direction = 0;  // sign of mean1 - mean2
};

struct HypothesisResult {
  std::string name;
  std::string side1, side2;
  std::string description;
  int n_agg1_side1 = 0, n_agg23_side1 = 0;
  int n_agg1_side2 = 0, n_agg23_side2 = 0;
  std::vector<CellResult> cells;  // markers in lexicon order, then AGG1..AGG3
};

namespace detail {

inline void fill_side_stats(CellResult& cell, const std::vector<double>& s1,
                            const std::vector<double>& s2) {
  cell.n1 = static_cast<int>(s1.size());
  cell.n2 = static_cast<int>(s2.size());
  if (!s1.empty()) {
    double m = mean(s1);
    cell.mean1 = m;
    if (s1.size() >= 2) cell.se1 = std::sqrt(variance(s1, m) / s1.size());
  }
  if (!s2.empty()) {
    double m = mean(s2);
    cell.mean2 = m;
    if (s2.size() >= 2) cell.se2 = std::sqrt(variance(s2, m) / s2.size());
  }
  if (cell.mean1 && cell.mean2) {
    double diff = *cell.mean1 - *cell.mean2;
    cell.direction = diff > 0 ? 1 : diff < 0 ? -1 : 0;
  }
}

inline void fill_test(CellResult& cell, const std::vector<double>& s1,
                      const std::vector<double>& s2, const RunSettings& settings,
                      std::size_t cell_count) {
  if (s1.size() < 2 || s2.size() < 2) {
    cell.note = "insufficient";
    return;
  }
  auto r = try_t_test(s1, s2, settings.t_variant);
  if (!r) {
    cell.note = "degenerate";
    return;
  }
  cell.testable = true;
  cell.t = r->t;
  cell.df = r->df;
  double p = r->p;
  if (settings.bonferroni)
    p = std::min(1.0, p * static_cast<double>(cell_count));
  cell.p = p;
  cell.stars = stars_for_p(p);
}

}  // namespace detail

inline HypothesisResult run_hypothesis(const ExchangeIndex& index,
                                       const Lexicon& lexicon,
                                       const RoleTable& roles,
                                       const HypothesisSpec& spec,
                                       const RunSettings& settings = {}) {
  HypothesisResult result;
  result.name = spec.name;
  result.side1 = spec.side1_label();
  result.side2 = spec.side2_label();
  result.description = spec.description;

  ScoreTable t1 = compute_scores(index, roles, spec.b1, spec.a1, spec.scope1,
                                 settings.score, settings.workers);
  ScoreTable t2 = compute_scores(index, roles, spec.b2, spec.a2, spec.scope2,
                                 settings.score, settings.workers);

  const std::size_t m = lexicon.size();
  const std::size_t cell_count = m + 3;

  auto defined_values = [](const ScoreTable& t, std::size_t marker) {
    std::vector<double> vs;
    for (const auto& s : t.scores[marker])
      if (s.defined) vs.push_back(s.value);
    return vs;
  };

  for (std::size_t k = 0; k < m; ++k) {
    CellResult cell;
    cell.label = lexicon.category(k).name;
    std::vector<double> s1 = defined_values(t1, k);
    std::vector<double> s2 = defined_values(t2, k);
    detail::fill_side_stats(cell, s1, s2);
    detail::fill_test(cell, s1, s2, settings, cell_count);
    result.cells.push_back(std::move(cell));
  }

  for (AggregateKind kind :
       {AggregateKind::Agg1, AggregateKind::Agg2, AggregateKind::Agg3}) {
    AggregateScore a1 = aggregate(t1, kind);
    AggregateScore a2 = aggregate(t2, kind);
    std::vector<double> s1, s2;
    s1.reserve(a1.per_speaker.size());
    s2.reserve(a2.per_speaker.size());
    for (const auto& [d, v] : a1.per_speaker) s1.push_back(v);
    for (const auto& [d, v] : a2.per_speaker) s2.push_back(v);
    CellResult cell;
    cell.label = aggregate_name(kind);
    cell.is_aggregate = true;
    detail::fill_side_stats(cell, s1, s2);
    detail::fill_test(cell, s1, s2, settings, cell_count);
    if (kind == AggregateKind::Agg1) {
      result.n_agg1_side1 = a1.n;
      result.n_agg1_side2 = a2.n;
    }
    if (kind == AggregateKind::Agg3) {
      result.n_agg23_side1 = a1.n;
      result.n_agg23_side2 = a2.n;
    }
    result.cells.push_back(std::move(cell));
  }

  return result;
}

inline std::vector<HypothesisResult> run_all(const ExchangeIndex& index,
                                             const Lexicon& lexicon,
                                             const RoleTable& roles,
                                             const RunSettings& settings = {}) {
  std::vector<HypothesisResult> results;
  for (const auto& spec : shipped_hypotheses())
    results.push_back(run_hypothesis(index, lexicon, roles, spec, settings));
  return results;
}

}  // namespace stylesync
