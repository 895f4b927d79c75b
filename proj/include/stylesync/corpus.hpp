#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include <json.hpp>

#include "stylesync/error.hpp"
#include "stylesync/util.hpp"

namespace stylesync {

enum class DeltaMode { MetadataOnly, TokenScan };

struct IngestOptions {
  std::vector<std::string> exclude_speakers = {"DeltaBot"};
  DeltaMode delta_mode = DeltaMode::MetadataOnly;
  bool lax = false;           // accept replies timestamped before their parent
  bool strip_quotes = false;  // drop "> ..." lines from text at ingest
};

struct Utterance {
  std::string id;
  int conversation = -1;     // index into Corpus::conversations
  int parent = -1;           // global utterance index, -1 for the root
  int speaker = -1;          // index into Corpus::speakers
  std::int64_t timestamp = 0;
  std::string text;
  int delta_recipient = -1;  // speaker index the enclosing utterance awards to

  bool has_delta() const { return delta_recipient >= 0; }
};

struct Conversation {
  std::string id;
  int root = -1;        // global utterance index
  int op_speaker = -1;  // speaker of the root
  std::vector<int> utterances;  // global indices, input order
};

struct Branch {
  int conversation = -1;
  std::vector<int> path;  // global utterance indices, root to leaf
  bool has_delta = false;
};

struct CorpusSummary {
  std::size_t conversations = 0;
  std::size_t utterances = 0;
  std::size_t speakers = 0;
  std::size_t deltas = 0;
  std::size_t non_op_deltas = 0;
};

class Corpus {
 public:
  std::vector<Utterance> utterances;
  std::vector<Conversation> conversations;
  std::vector<std::string> speakers;

  bool deltas_detected = false;

  int speaker_index(std::string_view name) const {
    auto it = speaker_ids_.find(std::string(name));
    return it == speaker_ids_.end() ? -1 : it->second;
  }

  int intern_speaker(const std::string& name) {
    auto it = speaker_ids_.find(name);
    if (it != speaker_ids_.end()) return it->second;
    int idx = static_cast<int>(speakers.size());
    speakers.push_back(name);
    speaker_ids_.emplace(name, idx);
    return idx;
  }

  int conversation_index(std::string_view id) const {
    auto it = conversation_ids_.find(std::string(id));
    return it == conversation_ids_.end() ? -1 : it->second;
  }

  int intern_conversation(const std::string& id) {
    auto it = conversation_ids_.find(id);
    if (it != conversation_ids_.end()) return it->second;
    int idx = static_cast<int>(conversations.size());
    conversations.push_back(Conversation{id, -1, -1, {}});
    conversation_ids_.emplace(id, idx);
    return idx;
  }

  // children of utterance u, in input order
  std::vector<int> children(int u) const {
    return {child_list_.begin() + child_offsets_[u],
            child_list_.begin() + child_offsets_[u + 1]};
  }
  std::size_t child_count(int u) const {
    return child_offsets_[u + 1] - child_offsets_[u];
  }
  const int* children_begin(int u) const { return child_list_.data() + child_offsets_[u]; }
  const int* children_end(int u) const { return child_list_.data() + child_offsets_[u + 1]; }

  void rebuild_children() {
    const std::size_t n = utterances.size();
    child_offsets_.assign(n + 1, 0);
    for (const auto& u : utterances)
      if (u.parent >= 0) ++child_offsets_[u.parent + 1];
    for (std::size_t i = 0; i < n; ++i) child_offsets_[i + 1] += child_offsets_[i];
    child_list_.assign(child_offsets_[n], 0);
    std::vector<std::size_t> cursor(child_offsets_.begin(), child_offsets_.end() - 1);
    for (std::size_t i = 0; i < n; ++i) {
      int p = utterances[i].parent;
      if (p >= 0) child_list_[cursor[p]++] = static_cast<int>(i);
    }
  }

  CorpusSummary summary() const {
    CorpusSummary s;
    s.conversations = conversations.size();
    s.utterances = utterances.size();
    std::vector<char> spoke(speakers.size(), 0);
    for (const auto& u : utterances) {
      spoke[u.speaker] = 1;
      if (u.has_delta()) {
        ++s.deltas;
        if (u.speaker != conversations[u.conversation].op_speaker)
          ++s.non_op_deltas;
      }
    }
    s.speakers = static_cast<std::size_t>(
        std::count(spoke.begin(), spoke.end(), char{1}));
    return s;
  }

 private:
  std::unordered_map<std::string, int> speaker_ids_;
  std::unordered_map<std::string, int> conversation_ids_;
  std::vector<std::size_t> child_offsets_;
  std::vector<int> child_list_;
};

namespace detail {

struct RawRecord {
  std::size_t line = 0;
  std::string id;
  std::string conv_id;
  std::optional<std::string> parent_id;
  std::string speaker;
  std::int64_t timestamp = 0;
  std::string text;
  std::optional<std::string> delta_to;
};

inline std::string require_string(const nlohmann::json& j, const char* key,
                                  std::size_t line) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_string())
    throw Error(ErrorKind::MalformedRecord,
                std::string("missing or non-string field '") + key + "'", line);
  return it->get<std::string>();
}

inline RawRecord parse_record(std::string_view text_line, std::size_t line) {
  nlohmann::json j = nlohmann::json::parse(text_line, nullptr, false);
  if (j.is_discarded() || !j.is_object())
    throw Error(ErrorKind::MalformedRecord, "not a JSON object", line);
  RawRecord r;
  r.line = line;
  r.id = require_string(j, "id", line);
  r.conv_id = require_string(j, "conversation_id", line);
  r.speaker = require_string(j, "speaker", line);
  r.text = require_string(j, "text", line);
  if (r.id.empty() || r.conv_id.empty() || r.speaker.empty())
    throw Error(ErrorKind::MalformedRecord, "empty id/conversation_id/speaker",
                line);
  auto ts = j.find("timestamp");
  if (ts == j.end() || !(ts->is_number_integer() || ts->is_number_unsigned()))
    throw Error(ErrorKind::MalformedRecord,
                "missing or non-integer field 'timestamp'", line);
  r.timestamp = ts->get<std::int64_t>();
  auto pid = j.find("parent_id");
  if (pid == j.end() || (!pid->is_null() && !pid->is_string()))
    throw Error(ErrorKind::MalformedRecord,
                "field 'parent_id' must be a string or null", line);
  if (pid->is_string()) r.parent_id = pid->get<std::string>();
  auto dt = j.find("delta_to");
  if (dt == j.end() || (!dt->is_null() && !dt->is_string()))
    throw Error(ErrorKind::MalformedRecord,
                "field 'delta_to' must be a string or null", line);
  if (dt->is_string()) r.delta_to = dt->get<std::string>();
  return r;
}

inline std::string strip_quoted_lines(const std::string& text) {
  std::string out;
  out.reserve(text.size());
  std::size_t start = 0;
  bool first = true;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    std::string_view ln(text.data() + start, end - start);
    std::string_view body = trim(ln);
    if (body.empty() || body.front() != '>') {
      if (!first) out += '\n';
      out.append(ln.data(), ln.size());
      first = false;
    }
    if (end == text.size()) break;
    start = end + 1;
  }
  return out;
}

}  // namespace detail

// Re-derives delta annotations for one conversation. TokenScan looks for the
// award tokens in the text and credits the parent's author; MetadataOnly is a
// no-op (annotations already carried by the records).
inline void detect_deltas(Corpus& corpus, int conv_index, DeltaMode mode) {
  static const std::string_view kTokens[] = {"Δ", "∆", "&#8710;",
                                             "&amp;#8710;", "!delta"};
  if (mode == DeltaMode::MetadataOnly) return;
  const Conversation& conv = corpus.conversations[conv_index];
  for (int ui : conv.utterances) {
    Utterance& u = corpus.utterances[ui];
    u.delta_recipient = -1;
    if (u.parent < 0) continue;  // no recipient exists for the root
    const Utterance& parent = corpus.utterances[u.parent];
    if (parent.speaker == u.speaker) continue;  // self-delta, skipped
    std::string lowered = u.text;
    for (char& c : lowered)
      if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    for (std::string_view tok : kTokens) {
      if (lowered.find(tok) != std::string::npos) {
        u.delta_recipient = parent.speaker;
        break;
      }
    }
  }
}

inline void detect_deltas(Corpus& corpus, DeltaMode mode) {
  for (std::size_t c = 0; c < corpus.conversations.size(); ++c)
    detect_deltas(corpus, static_cast<int>(c), mode);
  corpus.deltas_detected = true;
}

inline Corpus ingest(std::istream& in, const IngestOptions& options = {}) {
  using detail::RawRecord;

  std::unordered_set<std::string> excluded(options.exclude_speakers.begin(),
                                           options.exclude_speakers.end());

  // pass 1: parse and group by conversation, first-seen order
  std::vector<RawRecord> records;
  std::vector<std::vector<int>> conv_members;  // record indices per conversation
  std::unordered_map<std::string, int> conv_of;
  {
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (trim(line).empty()) continue;
      RawRecord r = detail::parse_record(line, lineno);
      if (options.strip_quotes) r.text = detail::strip_quoted_lines(r.text);
      auto [it, fresh] = conv_of.emplace(r.conv_id, conv_members.size());
      if (fresh) conv_members.emplace_back();
      conv_members[it->second].push_back(static_cast<int>(records.size()));
      records.push_back(std::move(r));
    }
  }

  Corpus corpus;

  for (const auto& members : conv_members) {
    const std::size_t n = members.size();

    // per-conversation id table, duplicate check
    std::unordered_map<std::string_view, int> local;  // id -> position in members
    local.reserve(n * 2);
    for (std::size_t i = 0; i < n; ++i) {
      const RawRecord& r = records[members[i]];
      if (!local.emplace(r.id, static_cast<int>(i)).second)
        throw Error(ErrorKind::DuplicateId, r.id, r.line);
    }

    std::vector<char> is_excluded(n, 0);
    bool any_kept = false;
    for (std::size_t i = 0; i < n; ++i) {
      is_excluded[i] = excluded.count(records[members[i]].speaker) ? 1 : 0;
      any_kept |= !is_excluded[i];
    }
    if (!any_kept) continue;

    // a conversation whose root author is excluded has no OP; drop it whole
    bool root_kept = false, root_seen = false;
    for (std::size_t i = 0; i < n; ++i) {
      const RawRecord& r = records[members[i]];
      if (!r.parent_id) {
        root_seen = true;
        if (!is_excluded[i]) root_kept = true;
      }
    }
    if (root_seen && !root_kept) continue;

    // resolve effective parents, skipping over excluded ancestors
    std::vector<int> eff_parent(n, -1);
    for (std::size_t i = 0; i < n; ++i) {
      if (is_excluded[i]) continue;
      const RawRecord& r = records[members[i]];
      if (!r.parent_id) continue;
      const std::string* cur = &*r.parent_id;
      std::size_t steps = 0;
      int found = -1;
      while (true) {
        if (++steps > n)
          throw Error(ErrorKind::CycleDetected, "parent chain of '" + r.id + "'",
                      r.line);
        auto it = local.find(*cur);
        if (it == local.end())
          throw Error(ErrorKind::OrphanUtterance,
                      "parent '" + *cur + "' of '" + r.id + "' not found",
                      r.line);
        int p = it->second;
        if (!is_excluded[p]) { found = p; break; }
        const RawRecord& pr = records[members[p]];
        if (!pr.parent_id) { found = -1; break; }  // excluded chain hit the root
        cur = &*pr.parent_id;
      }
      eff_parent[i] = found;
    }

    // cycle check over the kept structure (white/gray/black walk)
    {
      std::vector<char> state(n, 0);
      std::vector<int> chain;
      for (std::size_t i = 0; i < n; ++i) {
        if (is_excluded[i] || state[i] == 2) continue;
        chain.clear();
        int cur = static_cast<int>(i);
        while (cur != -1 && state[cur] == 0) {
          state[cur] = 1;
          chain.push_back(cur);
          cur = eff_parent[cur];
        }
        if (cur != -1 && state[cur] == 1)
          throw Error(ErrorKind::CycleDetected,
                      "reply cycle involving '" + records[members[cur]].id + "'",
                      records[members[cur]].line);
        for (int v : chain) state[v] = 2;
      }
    }

    // exactly one effective root among kept records; acyclicity above
    // guarantees at least one
    int root_local = -1;
    for (std::size_t i = 0; i < n; ++i) {
      if (is_excluded[i] || eff_parent[i] != -1) continue;
      const RawRecord& r = records[members[i]];
      if (root_local != -1)
        throw Error(ErrorKind::MalformedRecord,
                    "second root in conversation '" + r.conv_id + "'", r.line);
      root_local = static_cast<int>(i);
    }

    // timestamp monotonicity along effective edges
    if (!options.lax) {
      for (std::size_t i = 0; i < n; ++i) {
        if (is_excluded[i] || eff_parent[i] < 0) continue;
        const RawRecord& r = records[members[i]];
        const RawRecord& p = records[members[eff_parent[i]]];
        if (r.timestamp < p.timestamp)
          throw Error(ErrorKind::TimestampOrder,
                      "reply '" + r.id + "' predates its parent '" + p.id + "'",
                      r.line);
      }
    }

    // append to the corpus
    const RawRecord& root_rec = records[members[root_local]];
    int conv_idx = corpus.intern_conversation(root_rec.conv_id);
    Conversation& conv = corpus.conversations[conv_idx];
    std::vector<int> global_of(n, -1);
    for (std::size_t i = 0; i < n; ++i) {
      if (is_excluded[i]) continue;
      const RawRecord& r = records[members[i]];
      Utterance u;
      u.id = r.id;
      u.conversation = conv_idx;
      u.speaker = corpus.intern_speaker(r.speaker);
      u.timestamp = r.timestamp;
      u.text = r.text;
      global_of[i] = static_cast<int>(corpus.utterances.size());
      corpus.utterances.push_back(std::move(u));
      conv.utterances.push_back(global_of[i]);
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (is_excluded[i]) continue;
      corpus.utterances[global_of[i]].parent =
          eff_parent[i] >= 0 ? global_of[eff_parent[i]] : -1;
    }
    conv.root = global_of[root_local];
    conv.op_speaker = corpus.utterances[conv.root].speaker;

    // delta metadata (validated against the self-award rule)
    for (std::size_t i = 0; i < n; ++i) {
      if (is_excluded[i]) continue;
      const RawRecord& r = records[members[i]];
      if (r.delta_to && *r.delta_to != r.speaker)
        corpus.utterances[global_of[i]].delta_recipient =
            corpus.intern_speaker(*r.delta_to);
    }
  }

  corpus.rebuild_children();
  corpus.deltas_detected = true;
  if (options.delta_mode == DeltaMode::TokenScan)
    detect_deltas(corpus, DeltaMode::TokenScan);
  return corpus;
}

inline Corpus ingest(const std::string& path, const IngestOptions& options = {}) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoError, "cannot open corpus file " + path);
  return ingest(in, options);
}

// Exactly one branch per leaf, root-to-leaf. Iterative so that path-shaped
// conversations of arbitrary depth do not overflow the stack.
inline std::vector<Branch> branches(const Corpus& corpus, int conv_index) {
  const Conversation& conv = corpus.conversations[conv_index];
  std::vector<Branch> result;
  if (conv.root < 0) return result;

  std::vector<int> path;
  std::vector<std::size_t> next_child;  // per path depth
  path.push_back(conv.root);
  next_child.push_back(0);
  while (!path.empty()) {
    int node = path.back();
    std::size_t& cursor = next_child.back();
    if (cursor == 0 && corpus.child_count(node) == 0) {
      Branch b;
      b.conversation = conv_index;
      b.path = path;
      for (int u : path)
        if (corpus.utterances[u].has_delta()) { b.has_delta = true; break; }
      result.push_back(std::move(b));
    }
    if (cursor < corpus.child_count(node)) {
      int child = corpus.children_begin(node)[cursor++];
      path.push_back(child);
      next_child.push_back(0);
    } else {
      path.pop_back();
      next_child.pop_back();
    }
  }
  return result;
}

inline std::vector<Branch> branches(const Corpus& corpus) {
  std::vector<Branch> all;
  for (std::size_t c = 0; c < corpus.conversations.size(); ++c) {
    auto bs = branches(corpus, static_cast<int>(c));
    all.insert(all.end(), std::make_move_iterator(bs.begin()),
               std::make_move_iterator(bs.end()));
  }
  return all;
}

// Per-utterance flags equivalent to branch membership, computed in O(n):
// an edge parent->reply lies on a delta branch iff a delta occurs on the
// root path ending at the parent or anywhere in the reply's subtree.
struct DeltaBranchFlags {
  std::vector<char> ancestor_delta;  // delta at node or any ancestor
  std::vector<char> subtree_delta;   // delta at node or any descendant

  bool edge_on_delta_branch(const Corpus& corpus, int reply) const {
    int parent = corpus.utterances[reply].parent;
    return parent >= 0 && (ancestor_delta[parent] || subtree_delta[reply]);
  }
};

inline DeltaBranchFlags compute_delta_branch_flags(const Corpus& corpus) {
  const std::size_t n = corpus.utterances.size();
  DeltaBranchFlags f;
  f.ancestor_delta.assign(n, 0);
  f.subtree_delta.assign(n, 0);
  std::vector<int> order;  // BFS, parents before children
  order.reserve(n);
  for (const auto& conv : corpus.conversations) {
    if (conv.root < 0) continue;
    std::size_t head = order.size();
    order.push_back(conv.root);
    while (head < order.size()) {
      int u = order[head++];
      f.ancestor_delta[u] =
          corpus.utterances[u].has_delta() ||
          (corpus.utterances[u].parent >= 0 &&
           f.ancestor_delta[corpus.utterances[u].parent]);
      for (const int* c = corpus.children_begin(u); c != corpus.children_end(u); ++c)
        order.push_back(*c);
    }
  }
  for (std::size_t i = order.size(); i-- > 0;) {
    int u = order[i];
    f.subtree_delta[u] = static_cast<char>(f.subtree_delta[u] |
                                           (corpus.utterances[u].has_delta() ? 1 : 0));
    int p = corpus.utterances[u].parent;
    if (p >= 0)
      f.subtree_delta[p] = static_cast<char>(f.subtree_delta[p] | f.subtree_delta[u]);
  }
  return f;
}

enum class ScopeKind { All, DeltaBranches, NonDeltaBranches, PreDelta };

struct Scope {
  ScopeKind kind = ScopeKind::All;
  std::string pre_delta_group;  // target group name, PreDelta only

  static Scope all() { return {ScopeKind::All, {}}; }
  static Scope delta_branches() { return {ScopeKind::DeltaBranches, {}}; }
  static Scope non_delta_branches() { return {ScopeKind::NonDeltaBranches, {}}; }
  static Scope pre_delta(std::string group = {}) {
    return {ScopeKind::PreDelta, std::move(group)};
  }
};

inline Scope parse_scope(std::string_view s) {
  if (s == "all") return Scope::all();
  if (s == "delta-branches" || s == "delta_branches") return Scope::delta_branches();
  if (s == "non-delta-branches" || s == "non_delta_branches")
    return Scope::non_delta_branches();
  if (s.rfind("pre-delta", 0) == 0 || s.rfind("pre_delta", 0) == 0) {
    std::string group;
    auto colon = s.find(':');
    if (colon != std::string_view::npos) group = std::string(s.substr(colon + 1));
    return Scope::pre_delta(std::move(group));
  }
  throw Error(ErrorKind::UnknownScope, std::string(s));
}

inline const char* scope_name(ScopeKind k) {
  switch (k) {
    case ScopeKind::All: return "all";
    case ScopeKind::DeltaBranches: return "delta-branches";
    case ScopeKind::NonDeltaBranches: return "non-delta-branches";
    case ScopeKind::PreDelta: return "pre-delta";
  }
  return "?";
}

// Deduplicated (parent_id, reply_id) pairs for the branch-level scopes. The
// PreDelta scope needs role information and lives in roles.hpp.
inline std::vector<std::pair<std::string, std::string>> scoped_edge_set(
    const Corpus& corpus, ScopeKind kind) {
  if (kind == ScopeKind::PreDelta)
    throw Error(ErrorKind::UnknownScope,
                "pre-delta edge sets require speaker groups");
  std::vector<std::pair<std::string, std::string>> edges;
  DeltaBranchFlags flags;
  if (kind != ScopeKind::All) flags = compute_delta_branch_flags(corpus);
  for (std::size_t i = 0; i < corpus.utterances.size(); ++i) {
    const Utterance& u = corpus.utterances[i];
    if (u.parent < 0) continue;
    bool on_delta = kind == ScopeKind::All
                        ? false
                        : flags.edge_on_delta_branch(corpus, static_cast<int>(i));
    bool keep = kind == ScopeKind::All ||
                (kind == ScopeKind::DeltaBranches && on_delta) ||
                (kind == ScopeKind::NonDeltaBranches && !on_delta);
    if (keep)
      edges.emplace_back(corpus.utterances[u.parent].id, u.id);
  }
  std::sort(edges.begin(), edges.end());
  return edges;
}

// Canonical one-record-per-line serialization; fixed key order so that
// repeated ingests of the same input are byte-identical.
inline void to_jsonl(const Corpus& corpus, std::ostream& out) {
  for (const auto& conv : corpus.conversations) {
    for (int ui : conv.utterances) {
      const Utterance& u = corpus.utterances[ui];
      nlohmann::ordered_json j;
      j["id"] = u.id;
      j["conversation_id"] = conv.id;
      if (u.parent >= 0)
        j["parent_id"] = corpus.utterances[u.parent].id;
      else
        j["parent_id"] = nullptr;
      j["speaker"] = corpus.speakers[u.speaker];
      j["timestamp"] = u.timestamp;
      j["text"] = u.text;
      if (u.delta_recipient >= 0)
        j["delta_to"] = corpus.speakers[u.delta_recipient];
      else
        j["delta_to"] = nullptr;
      out << j.dump() << '\n';
    }
  }
}

inline std::string to_jsonl(const Corpus& corpus) {
  std::ostringstream out;
  to_jsonl(corpus, out);
  return out.str();
}

}  // namespace stylesync
