#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "stylesync/corpus.hpp"
#include "stylesync/error.hpp"

namespace stylesync {

// A speaker's per-conversation instantiation. The same account holds one
// dummy user per conversation it posted in, so its role can differ between
// conversations.
struct DummyUser {
  int speaker = -1;
  int conversation = -1;

  bool operator==(const DummyUser&) const = default;
};

enum class GroupId : std::uint8_t {
  U = 0,          // every dummy user
  Ops,            // conversation openers, in their own conversation
  NonOps,         // everyone else in the conversation
  RBar,           // non-OP dummies whose account opens some other conversation
  NeverOp,        // dummies whose account opens no conversation at all
  Delta,          // awarded at least one delta in the conversation
  DeltaOp,        // delta givers that are the conversation's OP
  DeltaReg,       // delta givers that are not the OP
  NonDelta,       // awarded no delta in the conversation
  OpNonDelta,     // OPs that awarded no delta in their own conversation
};

inline constexpr std::size_t kGroupCount = 10;

inline constexpr std::array<const char*, kGroupCount> kGroupNames = {
    "U",           "G_op",       "G_nonop",     "G_rbar",      "G_neverop",
    "G_delta",     "G_delta_op", "G_delta_reg", "G_nondelta",  "G_op_nondelta",
};

inline const char* group_name(GroupId g) {
  return kGroupNames[static_cast<std::size_t>(g)];
}

inline GroupId parse_group(std::string_view name) {
  for (std::size_t i = 0; i < kGroupCount; ++i)
    if (name == kGroupNames[i]) return static_cast<GroupId>(i);
  throw Error(ErrorKind::InvalidConfig, "unknown speaker group '" +
                                            std::string(name) + "'");
}

struct SpeakerGroup {
  std::string name;
  std::vector<int> members;  // dummy indices, ascending
};

// Dummy-user table plus per-dummy group membership bits and the earliest
// delta-award timestamp (for the pre-delta scope).
class RoleTable {
 public:
  std::vector<DummyUser> dummies;            // ordered by (conversation, speaker)
  std::vector<std::uint16_t> membership;     // bit per GroupId
  std::vector<std::int64_t> earliest_award;  // int64 max when none

  int dummy_index(int speaker, int conversation) const {
    auto it = index_.find(key(speaker, conversation));
    return it == index_.end() ? -1 : it->second;
  }

  bool in_group(int dummy, GroupId g) const {
    return (membership[dummy] >> static_cast<unsigned>(g)) & 1u;
  }

  std::size_t group_size(GroupId g) const {
    return sizes_[static_cast<std::size_t>(g)];
  }

  SpeakerGroup group(GroupId g) const {
    SpeakerGroup out;
    out.name = group_name(g);
    for (std::size_t d = 0; d < dummies.size(); ++d)
      if (in_group(static_cast<int>(d), g)) out.members.push_back(static_cast<int>(d));
    return out;
  }

  friend RoleTable build_groups(const Corpus& corpus);

 private:
  static std::uint64_t key(int speaker, int conversation) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(conversation)) << 32) |
           static_cast<std::uint32_t>(speaker);
  }

  void set(int dummy, GroupId g) {
    if (!in_group(dummy, g)) {
      membership[dummy] |= std::uint16_t{1} << static_cast<unsigned>(g);
      ++sizes_[static_cast<std::size_t>(g)];
    }
  }

  std::unordered_map<std::uint64_t, int> index_;
  std::array<std::size_t, kGroupCount> sizes_{};
};

inline RoleTable build_groups(const Corpus& corpus) {
  if (!corpus.deltas_detected)
    throw Error(ErrorKind::DeltasNotDetected,
                "run delta detection before building groups");

  RoleTable table;

  // one dummy per (speaker, conversation) with at least one utterance
  {
    std::vector<std::pair<int, int>> seen;  // (conversation, speaker)
    std::vector<char> mark;
    for (const auto& conv : corpus.conversations) {
      mark.assign(corpus.speakers.size(), 0);
      for (int ui : conv.utterances) {
        int s = corpus.utterances[ui].speaker;
        if (!mark[s]) {
          mark[s] = 1;
          seen.emplace_back(corpus.utterances[ui].conversation, s);
        }
      }
    }
    std::sort(seen.begin(), seen.end());
    table.dummies.reserve(seen.size());
    for (auto [conv, speaker] : seen) {
      table.index_.emplace(RoleTable::key(speaker, conv),
                           static_cast<int>(table.dummies.size()));
      table.dummies.push_back(DummyUser{speaker, conv});
    }
  }

  const std::size_t n = table.dummies.size();
  table.membership.assign(n, 0);
  table.earliest_award.assign(n, std::numeric_limits<std::int64_t>::max());

  std::vector<char> is_op_somewhere(corpus.speakers.size(), 0);
  for (const auto& conv : corpus.conversations) is_op_somewhere[conv.op_speaker] = 1;

  for (const auto& u : corpus.utterances) {
    if (!u.has_delta()) continue;
    int d = table.dummy_index(u.speaker, u.conversation);
    table.earliest_award[d] = std::min(table.earliest_award[d], u.timestamp);
  }

  for (std::size_t d = 0; d < n; ++d) {
    const DummyUser& dummy = table.dummies[d];
    const Conversation& conv = corpus.conversations[dummy.conversation];
    const bool is_op = dummy.speaker == conv.op_speaker;
    const bool gave_delta =
        table.earliest_award[d] != std::numeric_limits<std::int64_t>::max();

    table.set(static_cast<int>(d), GroupId::U);
    table.set(static_cast<int>(d), is_op ? GroupId::Ops : GroupId::NonOps);
    if (!is_op && is_op_somewhere[dummy.speaker])
      table.set(static_cast<int>(d), GroupId::RBar);
    if (!is_op_somewhere[dummy.speaker])
      table.set(static_cast<int>(d), GroupId::NeverOp);
    if (gave_delta) {
      table.set(static_cast<int>(d), GroupId::Delta);
      table.set(static_cast<int>(d), is_op ? GroupId::DeltaOp : GroupId::DeltaReg);
    } else {
      table.set(static_cast<int>(d), GroupId::NonDelta);
    }
    if (is_op && !gave_delta) table.set(static_cast<int>(d), GroupId::OpNonDelta);
  }

  return table;
}

// Partition identities over the built groups. Violations are returned, not
// thrown; an empty report means the table is consistent.
inline std::vector<std::string> group_algebra_check(const Corpus& corpus,
                                                    const RoleTable& table) {
  std::vector<std::string> violations;
  auto expect = [&](bool ok, const std::string& what) {
    if (!ok) violations.push_back(what);
  };

  const std::size_t n = table.dummies.size();
  for (std::size_t d = 0; d < n; ++d) {
    int dd = static_cast<int>(d);
    expect(table.in_group(dd, GroupId::U), "dummy outside U");
    expect(table.in_group(dd, GroupId::Ops) != table.in_group(dd, GroupId::NonOps),
           "G_op/G_nonop not a partition");
    expect(table.in_group(dd, GroupId::Delta) != table.in_group(dd, GroupId::NonDelta),
           "G_delta/G_nondelta not a partition");
    if (table.in_group(dd, GroupId::Delta))
      expect(table.in_group(dd, GroupId::DeltaOp) !=
                 table.in_group(dd, GroupId::DeltaReg),
             "G_delta not split by G_delta_op/G_delta_reg");
    else
      expect(!table.in_group(dd, GroupId::DeltaOp) &&
                 !table.in_group(dd, GroupId::DeltaReg),
             "delta subgroup member gave no delta");
    if (table.in_group(dd, GroupId::Ops))
      expect(table.in_group(dd, GroupId::DeltaOp) !=
                 table.in_group(dd, GroupId::OpNonDelta),
             "G_op not split by G_delta_op/G_op_nondelta");
    else
      expect(!table.in_group(dd, GroupId::DeltaOp) &&
                 !table.in_group(dd, GroupId::OpNonDelta),
             "OP subgroup member is not an OP");
    if (table.in_group(dd, GroupId::RBar))
      expect(table.in_group(dd, GroupId::NonOps), "G_rbar member outside G_nonop");
    expect(!(table.in_group(dd, GroupId::RBar) &&
             table.in_group(dd, GroupId::NeverOp)),
           "G_rbar and G_neverop overlap");
    if (table.in_group(dd, GroupId::NonOps))
      expect(table.in_group(dd, GroupId::RBar) !=
                 table.in_group(dd, GroupId::NeverOp),
             "G_nonop not split by G_rbar/G_neverop");
  }

  expect(table.group_size(GroupId::U) == n, "U size mismatch");
  expect(table.group_size(GroupId::Ops) + table.group_size(GroupId::NonOps) == n,
         "|G_op| + |G_nonop| != |U|");
  expect(table.group_size(GroupId::Delta) + table.group_size(GroupId::NonDelta) == n,
         "|G_delta| + |G_nondelta| != |U|");
  expect(table.group_size(GroupId::DeltaOp) + table.group_size(GroupId::DeltaReg) ==
             table.group_size(GroupId::Delta),
         "|G_delta_op| + |G_delta_reg| != |G_delta|");
  expect(table.group_size(GroupId::DeltaOp) + table.group_size(GroupId::OpNonDelta) ==
             table.group_size(GroupId::Ops),
         "|G_delta_op| + |G_op_nondelta| != |G_op|");

  // per conversation, OPs and non-OPs partition that conversation's dummies
  {
    std::vector<std::size_t> per_conv(corpus.conversations.size(), 0);
    std::vector<std::size_t> ops_per_conv(corpus.conversations.size(), 0);
    for (std::size_t d = 0; d < n; ++d) {
      ++per_conv[table.dummies[d].conversation];
      if (table.in_group(static_cast<int>(d), GroupId::Ops))
        ++ops_per_conv[table.dummies[d].conversation];
    }
    for (std::size_t c = 0; c < corpus.conversations.size(); ++c) {
      expect(ops_per_conv[c] == 1,
             "conversation '" + corpus.conversations[c].id + "' has " +
                 std::to_string(ops_per_conv[c]) + " OP dummies");
      expect(per_conv[c] >= 1, "conversation without dummy users");
    }
  }

  return violations;
}

// Edge set for any scope, including pre-delta. For pre-delta the target side
// is restricted per recipient: replies toward a delta giver count only when
// made strictly before that giver's earliest award in the conversation.
inline std::vector<std::pair<std::string, std::string>> scoped_edge_set(
    const Corpus& corpus, const RoleTable& table, const Scope& scope) {
  if (scope.kind != ScopeKind::PreDelta)
    return scoped_edge_set(corpus, scope.kind);
  GroupId g = scope.pre_delta_group.empty() ? GroupId::Delta
                                            : parse_group(scope.pre_delta_group);
  std::vector<std::pair<std::string, std::string>> edges;
  for (const auto& u : corpus.utterances) {
    if (u.parent < 0) continue;
    const Utterance& parent = corpus.utterances[u.parent];
    int target = table.dummy_index(parent.speaker, parent.conversation);
    if (target < 0 || !table.in_group(target, g)) continue;
    if (u.timestamp < table.earliest_award[target])
      edges.emplace_back(parent.id, u.id);
  }
  std::sort(edges.begin(), edges.end());
  return edges;
}

}  // namespace stylesync
