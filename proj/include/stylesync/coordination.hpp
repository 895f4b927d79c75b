#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "stylesync/corpus.hpp"
#include "stylesync/error.hpp"
#include "stylesync/lexicon.hpp"
#include "stylesync/roles.hpp"
#include "stylesync/util.hpp"

namespace stylesync {

// Which pair count gates definedness. Target counts pairs whose target
// utterance carries the marker (the support of the conditional term).
enum class SupportSide { Target, Reply, Total };

inline SupportSide parse_support_side(std::string_view s) {
  if (s == "target") return SupportSide::Target;
  if (s == "reply") return SupportSide::Reply;
  if (s == "total") return SupportSide::Total;
  throw Error(ErrorKind::InvalidConfig,
              "unknown support side '" + std::string(s) + "'");
}

struct ScoreConfig {
  int min_support = 3;  // defined requires support > min_support
  SupportSide support_side = SupportSide::Target;
};

struct CoordinationScore {
  double value = std::numeric_limits<double>::quiet_NaN();
  bool defined = false;
  int support = 0;  // pairs whose target utterance carries the marker
  int n_pairs = 0;
};

struct ExchangePair {
  std::uint64_t target_bits = 0;
  std::uint64_t reply_bits = 0;
};

// The pooled exchanges of one replier toward a target set, reduced to
// per-marker presence bits.
struct ExchangeSet {
  int replier = -1;
  std::vector<ExchangePair> pairs;
};

namespace detail {

struct PairCounts {
  int n_pairs = 0;
  int n_target = 0;  // target carries m
  int n_both = 0;    // both sides carry m
  int n_reply = 0;   // reply carries m
};

// value = P(reply has m | target has m) - P(reply has m), both terms
// maximum-likelihood frequencies. Integer counting, one division per term.
inline CoordinationScore score_from_counts(const PairCounts& c, int min_support,
                                           SupportSide side) {
  CoordinationScore s;
  s.n_pairs = c.n_pairs;
  s.support = c.n_target;
  int gate = c.n_target;
  if (side == SupportSide::Reply) gate = c.n_reply;
  if (side == SupportSide::Total) gate = c.n_pairs;
  if (gate <= min_support || c.n_target == 0 || c.n_pairs == 0) return s;
  s.defined = true;
  s.value = static_cast<double>(c.n_both) / static_cast<double>(c.n_target) -
            static_cast<double>(c.n_reply) / static_cast<double>(c.n_pairs);
  return s;
}

}  // namespace detail

inline CoordinationScore pair_coordination(const ExchangeSet& exchanges,
                                           std::size_t marker,
                                           const ScoreConfig& config = {}) {
  if (exchanges.pairs.empty())
    throw Error(ErrorKind::EmptyExchangeSet, "no exchange pairs");
  detail::PairCounts c;
  const std::uint64_t bit = std::uint64_t{1} << marker;
  for (const auto& p : exchanges.pairs) {
    ++c.n_pairs;
    const bool t = p.target_bits & bit;
    const bool r = p.reply_bits & bit;
    c.n_target += t;
    c.n_both += t && r;
    c.n_reply += r;
  }
  return detail::score_from_counts(c, config.min_support, config.support_side);
}

// One parent->reply exchange between distinct speakers, annotated with
// everything scoring needs.
struct Exchange {
  int replier = -1;  // dummy index
  int target = -1;   // dummy index
  std::uint64_t target_bits = 0;
  std::uint64_t reply_bits = 0;
  std::int64_t reply_ts = 0;
  bool on_delta_branch = false;
};

// Marker presence for every utterance plus all exchanges bucketed by
// replier dummy. Immutable once built; scoring reads it concurrently.
class ExchangeIndex {
 public:
  ExchangeIndex(const Corpus& corpus, const Lexicon& lexicon,
                const RoleTable& roles, unsigned workers = 1)
      : marker_count_(lexicon.size()) {
    masks_.assign(corpus.utterances.size(), 0);
    parallel_for(corpus.utterances.size(), workers, [&](std::size_t i) {
      masks_[i] = lexicon.mark_text(corpus.utterances[i].text);
    });

    DeltaBranchFlags flags = compute_delta_branch_flags(corpus);

    // count per replier, then place; input order is kept within a bucket
    std::vector<int> replier_of(corpus.utterances.size(), -1);
    std::vector<std::size_t> counts(roles.dummies.size() + 1, 0);
    for (std::size_t i = 0; i < corpus.utterances.size(); ++i) {
      const Utterance& u = corpus.utterances[i];
      if (u.parent < 0) continue;
      const Utterance& parent = corpus.utterances[u.parent];
      if (parent.speaker == u.speaker) continue;  // self-replies never count
      replier_of[i] = roles.dummy_index(u.speaker, u.conversation);
      ++counts[replier_of[i] + 1];
    }
    offsets_.assign(counts.size(), 0);
    for (std::size_t d = 1; d < counts.size(); ++d)
      offsets_[d] = offsets_[d - 1] + counts[d];
    exchanges_.resize(offsets_.back());
    std::vector<std::size_t> cursor(offsets_.begin(), offsets_.end() - 1);
    for (std::size_t i = 0; i < corpus.utterances.size(); ++i) {
      if (replier_of[i] < 0) continue;
      const Utterance& u = corpus.utterances[i];
      const Utterance& parent = corpus.utterances[u.parent];
      Exchange e;
      e.replier = replier_of[i];
      e.target = roles.dummy_index(parent.speaker, parent.conversation);
      e.target_bits = masks_[u.parent];
      e.reply_bits = masks_[i];
      e.reply_ts = u.timestamp;
      e.on_delta_branch = flags.edge_on_delta_branch(corpus, static_cast<int>(i));
      exchanges_[cursor[e.replier]++] = e;
    }
  }

  std::size_t marker_count() const { return marker_count_; }
  std::uint64_t utterance_mask(std::size_t i) const { return masks_[i]; }
  std::size_t exchange_count() const { return exchanges_.size(); }

  std::span<const Exchange> exchanges_of(int replier_dummy) const {
    return {exchanges_.data() + offsets_[replier_dummy],
            exchanges_.data() + offsets_[replier_dummy + 1]};
  }

 private:
  std::size_t marker_count_;
  std::vector<std::uint64_t> masks_;
  std::vector<std::size_t> offsets_;  // per dummy
  std::vector<Exchange> exchanges_;
};

namespace detail {

inline bool scope_admits(const Exchange& e, const Scope& scope,
                         const RoleTable& roles) {
  switch (scope.kind) {
    case ScopeKind::All: return true;
    case ScopeKind::DeltaBranches: return e.on_delta_branch;
    case ScopeKind::NonDeltaBranches: return !e.on_delta_branch;
    case ScopeKind::PreDelta:
      // strict "before": ties with the award are excluded
      return e.reply_ts < roles.earliest_award[e.target];
  }
  return false;
}

}  // namespace detail

// Scoped exchange pairs of replier `b` toward targets where target_mask is
// nonzero. Target side of the spec's S_{A,b}.
inline ExchangeSet build_exchange_set(const ExchangeIndex& index,
                                      const RoleTable& roles, int b,
                                      const std::vector<char>& target_mask,
                                      const Scope& scope = Scope::all()) {
  ExchangeSet set;
  set.replier = b;
  for (const Exchange& e : index.exchanges_of(b)) {
    if (!target_mask[e.target]) continue;
    if (!detail::scope_admits(e, scope, roles)) continue;
    set.pairs.push_back({e.target_bits, e.reply_bits});
  }
  return set;
}

inline std::vector<char> group_mask(const RoleTable& roles, GroupId g) {
  std::vector<char> mask(roles.dummies.size(), 0);
  for (std::size_t d = 0; d < roles.dummies.size(); ++d)
    if (roles.in_group(static_cast<int>(d), g)) mask[d] = 1;
  return mask;
}

// C^m(b, A) for every marker at once; one scan of b's exchanges.
inline std::vector<CoordinationScore> speaker_to_group_all_markers(
    const ExchangeIndex& index, const RoleTable& roles, int b,
    const std::vector<char>& target_mask, const Scope& scope,
    const ScoreConfig& config) {
  const std::size_t m = index.marker_count();
  std::vector<detail::PairCounts> counts(m);
  int n_pairs = 0;
  for (const Exchange& e : index.exchanges_of(b)) {
    if (!target_mask[e.target]) continue;
    if (!detail::scope_admits(e, scope, roles)) continue;
    ++n_pairs;
    for (std::size_t k = 0; k < m; ++k) {
      const std::uint64_t bit = std::uint64_t{1} << k;
      const bool t = e.target_bits & bit;
      const bool r = e.reply_bits & bit;
      counts[k].n_target += t;
      counts[k].n_both += t && r;
      counts[k].n_reply += r;
    }
  }
  std::vector<CoordinationScore> scores(m);
  for (std::size_t k = 0; k < m; ++k) {
    counts[k].n_pairs = n_pairs;
    scores[k] = detail::score_from_counts(counts[k], config.min_support,
                                          config.support_side);
  }
  return scores;
}

inline CoordinationScore speaker_to_group(const ExchangeIndex& index,
                                          const RoleTable& roles, int b,
                                          GroupId targets, std::size_t marker,
                                          const Scope& scope = Scope::all(),
                                          const ScoreConfig& config = {}) {
  auto mask = group_mask(roles, targets);
  return speaker_to_group_all_markers(index, roles, b, mask, scope,
                                      config)[marker];
}

// Score table for every replier in B toward targets A: scores[marker][i]
// aligns with members[i]. Members are computed independently, so the worker
// count never changes the result.
struct ScoreTable {
  std::vector<int> members;  // dummy indices, ascending
  std::vector<std::vector<CoordinationScore>> scores;  // [marker][member]

  std::size_t marker_count() const { return scores.size(); }
};

inline ScoreTable compute_scores(const ExchangeIndex& index,
                                 const RoleTable& roles,
                                 const std::vector<int>& members,
                                 const std::vector<char>& target_mask,
                                 const Scope& scope, const ScoreConfig& config,
                                 unsigned workers = 1) {
  ScoreTable table;
  table.members = members;
  table.scores.assign(index.marker_count(),
                      std::vector<CoordinationScore>(members.size()));
  parallel_for(members.size(), workers, [&](std::size_t i) {
    auto scores = speaker_to_group_all_markers(index, roles, members[i],
                                               target_mask, scope, config);
    for (std::size_t k = 0; k < scores.size(); ++k) table.scores[k][i] = scores[k];
  });
  return table;
}

inline ScoreTable compute_scores(const ExchangeIndex& index,
                                 const RoleTable& roles, GroupId repliers,
                                 GroupId targets, const Scope& scope,
                                 const ScoreConfig& config,
                                 unsigned workers = 1) {
  return compute_scores(index, roles, roles.group(repliers).members,
                        group_mask(roles, targets), scope, config, workers);
}

struct GroupScore {
  std::optional<double> mean;  // over defined speakers only
  int defined_count = 0;
  std::vector<std::pair<int, CoordinationScore>> per_speaker;
};

// C^m(B, A): unweighted mean over the members whose score is defined.
inline GroupScore group_to_group(const ScoreTable& table, std::size_t marker) {
  GroupScore g;
  double sum = 0.0;
  for (std::size_t i = 0; i < table.members.size(); ++i) {
    const CoordinationScore& s = table.scores[marker][i];
    g.per_speaker.emplace_back(table.members[i], s);
    if (s.defined) {
      sum += s.value;
      ++g.defined_count;
    }
  }
  if (g.defined_count > 0) g.mean = sum / static_cast<double>(g.defined_count);
  return g;
}

enum class AggregateKind { Agg1, Agg2, Agg3 };

inline const char* aggregate_name(AggregateKind k) {
  switch (k) {
    case AggregateKind::Agg1: return "AGG1";
    case AggregateKind::Agg2: return "AGG2";
    case AggregateKind::Agg3: return "AGG3";
  }
  return "?";
}

struct AggregateScore {
  std::vector<std::pair<int, double>> per_speaker;  // defined speakers only
  std::optional<double> mean;
  int n = 0;
};

// Cross-marker summaries of a speaker's coordination:
//   Agg1: macro average, only speakers defined on every marker.
//   Agg2: missing markers imputed with the group mean of that marker.
//   Agg3: average over the speaker's own defined markers.
inline AggregateScore aggregate(const ScoreTable& table, AggregateKind kind) {
  const std::size_t m = table.marker_count();
  AggregateScore out;
  if (m == 0) return out;

  std::vector<double> group_mean(m, 0.0);
  std::vector<bool> group_mean_defined(m, false);
  if (kind == AggregateKind::Agg2) {
    for (std::size_t k = 0; k < m; ++k) {
      auto g = group_to_group(table, k);
      if (g.mean) {
        group_mean[k] = *g.mean;
        group_mean_defined[k] = true;
      }
    }
  }

  for (std::size_t i = 0; i < table.members.size(); ++i) {
    double sum = 0.0;
    std::size_t defined = 0;
    bool imputable = true;
    for (std::size_t k = 0; k < m; ++k) {
      const CoordinationScore& s = table.scores[k][i];
      if (s.defined) {
        sum += s.value;
        ++defined;
      } else if (kind == AggregateKind::Agg2 && group_mean_defined[k]) {
        sum += group_mean[k];
      } else {
        imputable = false;
      }
    }
    bool ok = false;
    double value = 0.0;
    switch (kind) {
      case AggregateKind::Agg1:
        ok = defined == m;
        if (ok) value = sum / static_cast<double>(m);
        break;
      case AggregateKind::Agg2:
        ok = defined >= 1 && imputable;
        if (ok) value = sum / static_cast<double>(m);
        break;
      case AggregateKind::Agg3:
        ok = defined >= 1;
        if (ok) value = sum / static_cast<double>(defined);
        break;
    }
    if (ok) out.per_speaker.emplace_back(table.members[i], value);
  }

  if (!out.per_speaker.empty()) {
    double sum = 0.0;
    for (const auto& [d, v] : out.per_speaker) sum += v;
    out.mean = sum / static_cast<double>(out.per_speaker.size());
    out.n = static_cast<int>(out.per_speaker.size());
  }
  return out;
}

}  // namespace stylesync
