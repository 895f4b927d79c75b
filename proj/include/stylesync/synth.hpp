#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "stylesync/coordination.hpp"
#include "stylesync/corpus.hpp"
#include "stylesync/error.hpp"
#include "stylesync/lexicon.hpp"
#include "stylesync/roles.hpp"
#include "stylesync/util.hpp"

namespace stylesync {

struct MarkerBehavior {
  double echo_prob = 0.5;  // P(reply has m | parent has m)
  double base_prob = 0.5;  // P(reply has m | parent lacks m)
};

struct GroupBehavior {
  std::vector<MarkerBehavior> markers;  // broadcast when fewer than lexicon size
  double delta_prob = 0.0;              // chance the dummy awards one delta
};

struct GeneratorConfig {
  int conversations = 10;
  int speakers_per_conversation = 4;
  int speaker_pool = 0;   // 0: fresh speaker accounts per conversation
  double branching = 1.2; // mean children per node, truncated geometric
  int depth_limit = 0;    // 0: unbounded
  int min_utterances = 0; // grow a chain off the last node until reached
  int max_utterances = 0; // hard per-conversation cap, 0: unbounded
  double target_marker_rate = 0.5;  // marker rate of the root utterance
  GroupBehavior op_behavior{{MarkerBehavior{}}, 0.0};
  GroupBehavior regular_behavior{{MarkerBehavior{}}, 0.0};
  // when set, replies to utterances authored by the opener use this behavior
  // instead of the replier's role behavior
  std::optional<GroupBehavior> toward_op_behavior;
  std::uint64_t seed = 1;
};

namespace detail {

// mt19937_64 driven helper with explicit draw rules, so output never depends
// on the standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  double uniform() {  // in [0, 1)
    return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
  }

  bool bernoulli(double p) { return uniform() < p; }

  std::uint64_t below(std::uint64_t n) {  // in [0, n)
    return n <= 1 ? 0 : eng_() % n;
  }

 private:
  std::mt19937_64 eng_;
};

inline void validate(const GeneratorConfig& c, std::size_t marker_count) {
  auto in_unit = [](double p) { return p >= 0.0 && p <= 1.0; };
  if (c.conversations < 1)
    throw Error(ErrorKind::InvalidConfig, "conversations must be >= 1");
  if (c.speakers_per_conversation < 1)
    throw Error(ErrorKind::InvalidConfig, "speakers per conversation must be >= 1");
  if (c.speaker_pool != 0 && c.speaker_pool < c.speakers_per_conversation)
    throw Error(ErrorKind::InvalidConfig, "speaker pool smaller than a conversation");
  if (c.branching < 0.0)
    throw Error(ErrorKind::InvalidConfig, "branching must be >= 0");
  if (c.max_utterances > 0 && c.min_utterances > c.max_utterances)
    throw Error(ErrorKind::InvalidConfig, "min_utterances exceeds max_utterances");
  if (!in_unit(c.target_marker_rate))
    throw Error(ErrorKind::InvalidConfig, "target_marker_rate outside [0,1]");
  std::vector<const GroupBehavior*> behaviors = {&c.op_behavior,
                                                 &c.regular_behavior};
  if (c.toward_op_behavior) behaviors.push_back(&*c.toward_op_behavior);
  for (const GroupBehavior* g : behaviors) {
    if (g->markers.empty())
      throw Error(ErrorKind::InvalidConfig, "behavior needs at least one marker");
    if (!in_unit(g->delta_prob))
      throw Error(ErrorKind::InvalidConfig, "delta_prob outside [0,1]");
    for (const auto& m : g->markers)
      if (!in_unit(m.echo_prob) || !in_unit(m.base_prob))
        throw Error(ErrorKind::InvalidConfig, "marker probability outside [0,1]");
  }
  if (marker_count == 0)
    throw Error(ErrorKind::InvalidConfig, "lexicon has no categories");
}

// Entries usable as unambiguous emission tokens: present in exactly one
// category of the lexicon.
inline std::vector<std::vector<std::string>> unique_entries(const Lexicon& lex) {
  std::vector<std::vector<std::string>> unique(lex.size());
  for (std::size_t k = 0; k < lex.size(); ++k) {
    for (const auto& e : lex.category(k).entries) {
      bool elsewhere = false;
      for (std::size_t j = 0; j < lex.size() && !elsewhere; ++j)
        if (j != k)
          for (const auto& o : lex.category(j).entries)
            if (o == e) { elsewhere = true; break; }
      if (!elsewhere) unique[k].push_back(e);
    }
    if (unique[k].empty())
      throw Error(ErrorKind::InvalidConfig,
                  "category '" + lex.category(k).name +
                      "' has no entry unique to it");
  }
  return unique;
}

}  // namespace detail

// Threaded-conversation generator with known echo behavior: a reply carries
// marker m with probability echo_prob when its parent carries m and
// base_prob otherwise; the root carries m at target_marker_rate. Fully
// determined by the seed.
inline Corpus generate(const GeneratorConfig& config, const Lexicon& lexicon) {
  const std::size_t m = lexicon.size();
  detail::validate(config, m);
  const auto unique = detail::unique_entries(lexicon);

  auto behavior_prob = [&](const GroupBehavior& g, std::size_t marker,
                           bool parent_has) {
    const MarkerBehavior& b = g.markers[marker % g.markers.size()];
    return parent_has ? b.echo_prob : b.base_prob;
  };

  Corpus corpus;
  corpus.deltas_detected = true;

  for (int c = 0; c < config.conversations; ++c) {
    detail::Rng rng(mix64(config.seed ^ mix64(static_cast<std::uint64_t>(c) + 1)));

    // speaker roster; index 0 opens the conversation
    const int k = config.speakers_per_conversation;
    std::vector<std::string> roster(k);
    if (config.speaker_pool > 0) {
      std::vector<char> used(config.speaker_pool, 0);
      for (int j = 0; j < k; ++j) {
        std::uint64_t pick;
        do {
          pick = rng.below(static_cast<std::uint64_t>(config.speaker_pool));
        } while (used[pick]);
        used[pick] = 1;
        roster[j] = "u" + std::to_string(pick);
      }
    } else {
      for (int j = 0; j < k; ++j)
        roster[j] = "u" + std::to_string(static_cast<long long>(c) * k + j);
    }

    struct Node {
      int parent = -1;
      int speaker = 0;  // roster index
      int depth = 0;
      std::uint64_t bits = 0;
    };
    std::vector<Node> nodes;

    auto draw_bits = [&](const Node* parent, int speaker) {
      std::uint64_t bits = 0;
      const bool is_op = speaker == 0;
      const GroupBehavior* g =
          is_op ? &config.op_behavior : &config.regular_behavior;
      if (parent != nullptr && parent->speaker == 0 && config.toward_op_behavior)
        g = &*config.toward_op_behavior;
      for (std::size_t i = 0; i < m; ++i) {
        double p = parent == nullptr
                       ? config.target_marker_rate
                       : behavior_prob(*g, i, (parent->bits >> i) & 1u);
        if (rng.bernoulli(p)) bits |= std::uint64_t{1} << i;
      }
      return bits;
    };

    nodes.push_back({-1, 0, 0, draw_bits(nullptr, 0)});
    const double theta = config.branching / (1.0 + config.branching);

    std::size_t head = 0;
    while (head < nodes.size()) {
      const std::size_t parent_idx = head++;
      if (config.depth_limit > 0 && nodes[parent_idx].depth >= config.depth_limit)
        continue;
      int children = 0;
      if (theta > 0.0) {
        double u = rng.uniform();
        if (u <= 0.0) u = 0x1.0p-53;
        children = static_cast<int>(std::log(u) / std::log(theta));
        if (children > 20) children = 20;  // truncation
      }
      for (int j = 0; j < children; ++j) {
        if (config.max_utterances > 0 &&
            static_cast<int>(nodes.size()) >= config.max_utterances)
          break;
        Node child;
        child.parent = static_cast<int>(parent_idx);
        child.depth = nodes[parent_idx].depth + 1;
        if (k > 1) {
          int pick = static_cast<int>(rng.below(static_cast<std::uint64_t>(k - 1)));
          child.speaker = pick >= nodes[parent_idx].speaker ? pick + 1 : pick;
        }
        child.bits = draw_bits(&nodes[parent_idx], child.speaker);
        nodes.push_back(child);
      }
    }
    // keep growing a chain off the newest node when the tree died too small
    while (static_cast<int>(nodes.size()) < config.min_utterances) {
      const Node& tail = nodes.back();
      Node child;
      child.parent = static_cast<int>(nodes.size()) - 1;
      child.depth = tail.depth + 1;
      if (k > 1) {
        int pick = static_cast<int>(rng.below(static_cast<std::uint64_t>(k - 1)));
        child.speaker = pick >= tail.speaker ? pick + 1 : pick;
      }
      child.bits = draw_bits(&tail, child.speaker);
      nodes.push_back(child);
    }

    // one delta per dummy at most, drawn by role
    std::vector<int> award_node(k, -1);
    {
      std::vector<std::vector<int>> replies_of(k);
      for (std::size_t i = 1; i < nodes.size(); ++i)
        if (nodes[nodes[i].parent].speaker != nodes[i].speaker)
          replies_of[nodes[i].speaker].push_back(static_cast<int>(i));
      for (int j = 0; j < k; ++j) {
        const GroupBehavior& g = j == 0 ? config.op_behavior : config.regular_behavior;
        if (replies_of[j].empty()) continue;
        if (rng.bernoulli(g.delta_prob))
          award_node[j] = replies_of[j][rng.below(replies_of[j].size())];
      }
    }
    std::vector<char> awards(nodes.size(), 0);
    for (int j = 0; j < k; ++j)
      if (award_node[j] >= 0) awards[award_node[j]] = 1;

    // materialize into the corpus, creation order
    const std::string conv_id = "c" + std::to_string(c);
    int conv_idx = corpus.intern_conversation(conv_id);
    Conversation& conv = corpus.conversations[conv_idx];
    const int base = static_cast<int>(corpus.utterances.size());
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      const Node& node = nodes[i];
      Utterance u;
      u.id = conv_id + "_m" + std::to_string(i);
      u.conversation = conv_idx;
      u.parent = node.parent >= 0 ? base + node.parent : -1;
      u.speaker = corpus.intern_speaker(roster[node.speaker]);
      u.timestamp = static_cast<std::int64_t>(i);
      std::string text;
      for (std::size_t bi = 0; bi < m; ++bi) {
        if (!((node.bits >> bi) & 1u)) continue;
        if (!text.empty()) text += ' ';
        text += unique[bi][rng.below(unique[bi].size())];
      }
      for (int f = 0; f < 2; ++f) {
        if (!text.empty()) text += ' ';
        text += "zq" + std::to_string(rng.below(997));
      }
      if (awards[i]) text += " !delta";
      u.text = std::move(text);
      if (awards[i]) u.delta_recipient = corpus.utterances[u.parent].speaker;
      corpus.utterances.push_back(std::move(u));
      conv.utterances.push_back(base + static_cast<int>(i));
    }
    conv.root = base;
    conv.op_speaker = corpus.utterances[base].speaker;
  }

  corpus.rebuild_children();
  return corpus;
}

inline std::string generate_jsonl(const GeneratorConfig& config,
                                  const Lexicon& lexicon) {
  return to_jsonl(generate(config, lexicon));
}

namespace oracle {

// Character-level marker detection, independent of the tokenizer: an entry
// occurs when a case-insensitive copy of it appears delimited by non-word
// characters, ignoring edge apostrophes.
inline bool text_has_marker(std::string_view text, const MarkerCategory& category) {
  auto lower = [](char c) {
    return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
  };
  auto is_word = [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
           (c >= '0' && c <= '9');
  };
  for (const auto& entry : category.entries) {
    if (entry.empty() || entry.size() > text.size()) continue;
    for (std::size_t s = 0; s + entry.size() <= text.size(); ++s) {
      bool match = true;
      for (std::size_t j = 0; j < entry.size(); ++j)
        if (lower(text[s + j]) != entry[j]) { match = false; break; }
      if (!match) continue;
      std::size_t before = s;
      while (before > 0 && text[before - 1] == '\'') --before;
      if (before > 0 && is_word(text[before - 1])) continue;
      std::size_t after = s + entry.size();
      while (after < text.size() && text[after] == '\'') ++after;
      if (after < text.size() && is_word(text[after])) continue;
      return true;
    }
  }
  return false;
}

}  // namespace oracle

inline constexpr std::size_t kOracleUtteranceLimit = 10000;

// Reference recomputation of C^m(b, A) by scanning every utterance pair.
// Shares nothing with the indexed scoring path; meant for verification only.
inline CoordinationScore oracle_coordination(const Corpus& corpus,
                                             const Lexicon& lexicon,
                                             DummyUser b,
                                             const std::vector<DummyUser>& targets,
                                             std::size_t marker,
                                             const ScoreConfig& config = {}) {
  if (corpus.utterances.size() > kOracleUtteranceLimit)
    throw Error(ErrorKind::CorpusTooLarge,
                "oracle limited to " + std::to_string(kOracleUtteranceLimit) +
                    " utterances");
  const MarkerCategory& category = lexicon.category(marker);
  int n_pairs = 0, n_target = 0, n_both = 0, n_reply = 0;
  for (std::size_t i = 0; i < corpus.utterances.size(); ++i) {
    for (std::size_t j = 0; j < corpus.utterances.size(); ++j) {
      const Utterance& u1 = corpus.utterances[i];
      const Utterance& u2 = corpus.utterances[j];
      if (u2.parent != static_cast<int>(i)) continue;
      if (u1.speaker == u2.speaker) continue;
      if (u2.speaker != b.speaker || u2.conversation != b.conversation) continue;
      bool target_in_a = false;
      for (const DummyUser& a : targets)
        if (a.speaker == u1.speaker && a.conversation == u1.conversation) {
          target_in_a = true;
          break;
        }
      if (!target_in_a) continue;
      const bool t = oracle::text_has_marker(u1.text, category);
      const bool r = oracle::text_has_marker(u2.text, category);
      ++n_pairs;
      if (t) ++n_target;
      if (t && r) ++n_both;
      if (r) ++n_reply;
    }
  }
  CoordinationScore s;
  s.n_pairs = n_pairs;
  s.support = n_target;
  int gate = n_target;
  if (config.support_side == SupportSide::Reply) gate = n_reply;
  if (config.support_side == SupportSide::Total) gate = n_pairs;
  if (gate <= config.min_support || n_target == 0 || n_pairs == 0) return s;
  s.defined = true;
  s.value = static_cast<double>(n_both) / n_target -
            static_cast<double>(n_reply) / n_pairs;
  return s;
}

inline CoordinationScore oracle_coordination(const Corpus& corpus,
                                             const Lexicon& lexicon,
                                             const RoleTable& roles, DummyUser b,
                                             GroupId targets, std::size_t marker,
                                             const ScoreConfig& config = {}) {
  std::vector<DummyUser> ts;
  for (std::size_t d = 0; d < roles.dummies.size(); ++d)
    if (roles.in_group(static_cast<int>(d), targets)) ts.push_back(roles.dummies[d]);
  return oracle_coordination(corpus, lexicon, b, ts, marker, config);
}

}  // namespace stylesync
