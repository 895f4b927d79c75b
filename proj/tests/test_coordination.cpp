#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstring>
#include <optional>
#include <random>
#include <sstream>

#include <json.hpp>

#include "oracles.hpp"
#include "stylesync/coordination.hpp"
#include "stylesync/synth.hpp"

using namespace stylesync;

namespace {

ExchangeSet make_set(std::initializer_list<std::pair<int, int>> bits) {
  ExchangeSet s;
  for (auto [t, r] : bits)
    s.pairs.push_back({static_cast<std::uint64_t>(t), static_cast<std::uint64_t>(r)});
  return s;
}

ScoreConfig loose() {
  ScoreConfig c;
  c.min_support = 0;
  return c;
}

std::string record(const std::string& id, const std::string& conv,
                   std::optional<std::string> parent, const std::string& speaker,
                   std::int64_t ts, const std::string& text) {
  nlohmann::ordered_json j;
  j["id"] = id;
  j["conversation_id"] = conv;
  if (parent) j["parent_id"] = *parent; else j["parent_id"] = nullptr;
  j["speaker"] = speaker;
  j["timestamp"] = ts;
  j["text"] = text;
  j["delta_to"] = nullptr;
  return j.dump() + "\n";
}

Corpus ingest_text(const std::string& text) {
  std::istringstream in(text);
  return ingest(in);
}

GeneratorConfig small_random(std::uint64_t seed) {
  GeneratorConfig g;
  g.conversations = 3;
  g.speakers_per_conversation = 3 + static_cast<int>(seed % 5);  // up to 8
  g.branching = 1.2;
  g.min_utterances = 30;
  g.max_utterances = 60;
  g.depth_limit = 10;
  g.target_marker_rate = 0.5;
  g.op_behavior = {{MarkerBehavior{0.8, 0.3}}, 0.4};
  g.regular_behavior = {{MarkerBehavior{0.5, 0.4}}, 0.15};
  g.seed = seed;
  return g;
}

}  // namespace

TEST_CASE("hand-counted score") {
  auto s = pair_coordination(make_set({{1, 1}, {1, 0}, {0, 0}, {0, 0}}), 0, loose());
  REQUIRE(s.defined);
  CHECK(s.value == 1.0 / 2.0 - 1.0 / 4.0);
  CHECK(s.support == 2);
  CHECK(s.n_pairs == 4);
}

TEST_CASE("replying with the marker every time scores zero") {
  auto s = pair_coordination(make_set({{1, 1}, {0, 1}}), 0, loose());
  REQUIRE(s.defined);
  CHECK(s.value == 0.0);
}

TEST_CASE("target using the marker every time scores zero") {
  auto s = pair_coordination(make_set({{1, 1}, {1, 0}, {1, 1}}), 0, loose());
  REQUIRE(s.defined);
  CHECK(s.value == 0.0);
}

TEST_CASE("perfect echo approaches one as non-marker pairs grow") {
  auto echo_set = [](int j, int k) {
    ExchangeSet s;
    for (int i = 0; i < j; ++i) s.pairs.push_back({1, 1});
    for (int i = 0; i < k; ++i) s.pairs.push_back({0, 0});
    return s;
  };
  CHECK(pair_coordination(echo_set(1, 1), 0, loose()).value == 1.0 - 1.0 / 2.0);
  CHECK(pair_coordination(echo_set(2, 6), 0, loose()).value == 1.0 - 2.0 / 8.0);
  CHECK(pair_coordination(echo_set(1, 99), 0, loose()).value == 1.0 - 1.0 / 100.0);
  double prev = 0.0;
  for (int k = 1; k <= 256; k *= 2) {
    double v = pair_coordination(echo_set(2, k), 0, loose()).value;
    CHECK(v > prev);
    prev = v;
  }
}

TEST_CASE("support gating controls definedness") {
  ExchangeSet s = make_set({{1, 1}, {1, 0}, {1, 1}, {1, 0}, {0, 1}});
  ScoreConfig c;
  c.min_support = 3;
  CHECK(pair_coordination(s, 0, c).defined);  // support 4 > 3
  c.min_support = 4;
  auto undef = pair_coordination(s, 0, c);
  CHECK(!undef.defined);
  CHECK(std::isnan(undef.value));
  CHECK(undef.support == 4);

  SECTION("alternative support sides") {
    ScoreConfig reply_side;
    reply_side.min_support = 2;
    reply_side.support_side = SupportSide::Reply;
    CHECK(pair_coordination(s, 0, reply_side).defined);  // 3 replies with m
    reply_side.min_support = 3;
    CHECK(!pair_coordination(s, 0, reply_side).defined);
    ScoreConfig total_side;
    total_side.min_support = 4;
    total_side.support_side = SupportSide::Total;
    CHECK(pair_coordination(s, 0, total_side).defined);  // 5 pairs
    // no conditional support at all stays undefined on every side
    ExchangeSet no_target = make_set({{0, 1}, {0, 0}, {0, 1}, {0, 1}, {0, 1}});
    CHECK(!pair_coordination(no_target, 0, total_side).defined);
  }
}

TEST_CASE("empty exchange sets are an error at the pair level") {
  ExchangeSet empty;
  CHECK_THROWS_AS(pair_coordination(empty, 0, loose()), Error);
}

TEST_CASE("defined scores stay within [-1, 1] and definedness follows support") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 20000; ++trial) {
    ExchangeSet s;
    int n = 1 + static_cast<int>(rng() % 12);
    for (int i = 0; i < n; ++i)
      s.pairs.push_back({rng() & 1u, rng() & 1u});
    ScoreConfig c;
    c.min_support = static_cast<int>(rng() % 4);
    auto score = pair_coordination(s, 0, c);
    CHECK(score.defined == (score.support > c.min_support));
    if (score.defined) {
      CHECK(score.value >= -1.0);
      CHECK(score.value <= 1.0);
    }
  }
}

TEST_CASE("coordination is asymmetric between two speakers") {
  // a and b alternate; a echoes b perfectly, b ignores a
  std::string text;
  text += record("u0", "cv", std::nullopt, "a", 0, "the start");     // a: marker
  text += record("u1", "cv", "u0", "b", 1, "the echo");              // b: marker
  text += record("u2", "cv", "u1", "a", 2, "the again");             // a: marker
  text += record("u3", "cv", "u2", "b", 3, "silence");               // b: none
  text += record("u4", "cv", "u3", "a", 4, "nothing here");          // a: none
  text += record("u5", "cv", "u4", "b", 5, "quiet");                 // b: none
  text += record("u6", "cv", "u5", "a", 6, "still quiet");           // a: none
  Corpus corpus = ingest_text(text);
  RoleTable roles = build_groups(corpus);
  const Lexicon& lex = default_lexicon();
  ExchangeIndex index(corpus, lex, roles, 1);
  const std::size_t articles = static_cast<std::size_t>(lex.category_index("articles"));

  int a = roles.dummy_index(corpus.speaker_index("a"), 0);
  int b = roles.dummy_index(corpus.speaker_index("b"), 0);
  ScoreConfig c = loose();
  auto c_ab = speaker_to_group(index, roles, a, GroupId::U, articles, Scope::all(), c);
  auto c_ba = speaker_to_group(index, roles, b, GroupId::U, articles, Scope::all(), c);
  REQUIRE(c_ab.defined);
  REQUIRE(c_ba.defined);
  // a replies to b at u2 (echo of marker), u4, u6; b replies at u1, u3, u5
  CHECK(c_ab.value != c_ba.value);
  CHECK(c_ab.value == 1.0 / 1.0 - 1.0 / 3.0);
  CHECK(c_ba.value == 1.0 / 2.0 - 1.0 / 3.0);
}

TEST_CASE("singleton target group reduces to the pairwise score") {
  Corpus corpus = ingest_text(
      record("p1", "cv", std::nullopt, "a", 0, "the one") +
      record("r1", "cv", "p1", "b", 1, "the yes") +
      record("p2", "cv", "r1", "a", 2, "the two") +
      record("r2", "cv", "p2", "b", 3, "plain") +
      record("p3", "cv", "r2", "a", 4, "word") +
      record("r3", "cv", "p3", "b", 5, "word"));
  RoleTable roles = build_groups(corpus);
  const Lexicon& lex = default_lexicon();
  ExchangeIndex index(corpus, lex, roles, 1);
  int b = roles.dummy_index(corpus.speaker_index("b"), 0);
  int a = roles.dummy_index(corpus.speaker_index("a"), 0);

  std::vector<char> only_a(roles.dummies.size(), 0);
  only_a[a] = 1;
  ExchangeSet via_engine = build_exchange_set(index, roles, b, only_a);
  const std::size_t articles = static_cast<std::size_t>(lex.category_index("articles"));
  auto direct = pair_coordination(via_engine, articles, loose());
  auto grouped = speaker_to_group_all_markers(index, roles, b, only_a,
                                              Scope::all(), loose())[articles];
  CHECK(direct.defined == grouped.defined);
  CHECK(direct.value == grouped.value);
  CHECK(direct.n_pairs == 3);
}

TEST_CASE("pooled group scoring equals scoring the concatenated pairs") {
  // b replies twice to a1 and twice to a2
  std::string text;
  text += record("r", "cv", std::nullopt, "a1", 0, "the root");
  text += record("x1", "cv", "r", "b", 1, "the first");
  text += record("y1", "cv", "x1", "a2", 2, "without marker");
  text += record("x2", "cv", "y1", "b", 3, "plain");
  text += record("y2", "cv", "x2", "a1", 4, "the more");
  text += record("x3", "cv", "y2", "b", 5, "the third");
  text += record("y3", "cv", "x3", "a2", 6, "the last");
  text += record("x4", "cv", "y3", "b", 7, "done");
  Corpus corpus = ingest_text(text);
  RoleTable roles = build_groups(corpus);
  const Lexicon& lex = default_lexicon();
  ExchangeIndex index(corpus, lex, roles, 1);
  const std::size_t articles = static_cast<std::size_t>(lex.category_index("articles"));

  int b = roles.dummy_index(corpus.speaker_index("b"), 0);
  int a1 = roles.dummy_index(corpus.speaker_index("a1"), 0);
  int a2 = roles.dummy_index(corpus.speaker_index("a2"), 0);

  std::vector<char> both(roles.dummies.size(), 0);
  both[a1] = both[a2] = 1;
  auto pooled = speaker_to_group_all_markers(index, roles, b, both, Scope::all(),
                                             loose())[articles];

  std::vector<char> m1(roles.dummies.size(), 0), m2(roles.dummies.size(), 0);
  m1[a1] = 1;
  m2[a2] = 1;
  ExchangeSet s1 = build_exchange_set(index, roles, b, m1);
  ExchangeSet s2 = build_exchange_set(index, roles, b, m2);
  ExchangeSet concat;
  concat.pairs = s1.pairs;
  concat.pairs.insert(concat.pairs.end(), s2.pairs.begin(), s2.pairs.end());
  auto direct = pair_coordination(concat, articles, loose());
  CHECK(pooled.defined == direct.defined);
  CHECK(pooled.value == direct.value);
  CHECK(pooled.n_pairs == 4);
}

TEST_CASE("speakers with no scoped exchanges come back undefined with zero pairs") {
  Corpus corpus = ingest_text(record("r", "cv", std::nullopt, "a", 0, "the root") +
                              record("x", "cv", "r", "b", 1, "reply"));
  RoleTable roles = build_groups(corpus);
  const Lexicon& lex = default_lexicon();
  ExchangeIndex index(corpus, lex, roles, 1);
  int a = roles.dummy_index(corpus.speaker_index("a"), 0);
  auto score = speaker_to_group(index, roles, a, GroupId::U, 0, Scope::all(), loose());
  CHECK(!score.defined);
  CHECK(score.n_pairs == 0);
}

namespace {

ScoreTable hand_table(std::vector<std::vector<std::optional<double>>> by_marker) {
  ScoreTable t;
  const std::size_t members = by_marker.at(0).size();
  for (std::size_t i = 0; i < members; ++i) t.members.push_back(static_cast<int>(i));
  for (const auto& row : by_marker) {
    std::vector<CoordinationScore> scores;
    for (const auto& v : row) {
      CoordinationScore s;
      if (v) {
        s.defined = true;
        s.value = *v;
        s.support = 10;
        s.n_pairs = 20;
      }
      scores.push_back(s);
    }
    t.scores.push_back(std::move(scores));
  }
  return t;
}

}  // namespace

TEST_CASE("group means skip undefined speakers") {
  ScoreTable t = hand_table({{0.2, 0.4}});
  auto g = group_to_group(t, 0);
  REQUIRE(g.mean);
  CHECK(*g.mean == (0.2 + 0.4) / 2.0);
  CHECK(g.defined_count == 2);

  ScoreTable t2 = hand_table({{0.2, std::nullopt}});
  auto g2 = group_to_group(t2, 0);
  REQUIRE(g2.mean);
  CHECK(*g2.mean == 0.2);
  CHECK(g2.defined_count == 1);
  CHECK(g2.per_speaker.size() == 2);  // undefined speakers are listed

  ScoreTable t3 = hand_table({{std::nullopt, std::nullopt}});
  CHECK(!group_to_group(t3, 0).mean);
}

TEST_CASE("the three aggregates implement their substitution rules") {
  // markers m1, m2; b1 = (0.2, 0.4); b2 = (0.1, undefined)
  ScoreTable t = hand_table({{0.2, 0.1}, {0.4, std::nullopt}});

  auto a1 = aggregate(t, AggregateKind::Agg1);
  REQUIRE(a1.mean);
  CHECK(a1.n == 1);
  CHECK(*a1.mean == (0.2 + 0.4) / 2.0);

  auto a2 = aggregate(t, AggregateKind::Agg2);
  REQUIRE(a2.mean);
  CHECK(a2.n == 2);
  CHECK(a2.per_speaker[0].second == (0.2 + 0.4) / 2.0);
  CHECK(a2.per_speaker[1].second == (0.1 + 0.4) / 2.0);
  CHECK(*a2.mean == ((0.2 + 0.4) / 2.0 + (0.1 + 0.4) / 2.0) / 2.0);

  auto a3 = aggregate(t, AggregateKind::Agg3);
  REQUIRE(a3.mean);
  CHECK(a3.n == 2);
  CHECK(a3.per_speaker[0].second == (0.2 + 0.4) / 2.0);
  CHECK(a3.per_speaker[1].second == 0.1);
  CHECK(*a3.mean == ((0.2 + 0.4) / 2.0 + 0.1) / 2.0);
}

TEST_CASE("fully defined tables make the aggregates coincide") {
  std::mt19937_64 rng(5);
  auto u = [&] { return static_cast<double>(rng() >> 11) * 0x1.0p-53 * 2.0 - 1.0; };
  for (int trial = 0; trial < 50; ++trial) {
    std::size_t markers = 1 + rng() % 6, members = 1 + rng() % 8;
    std::vector<std::vector<std::optional<double>>> rows(
        markers, std::vector<std::optional<double>>(members));
    for (auto& row : rows)
      for (auto& v : row) v = u();
    ScoreTable t = hand_table(rows);
    auto a1 = aggregate(t, AggregateKind::Agg1);
    auto a2 = aggregate(t, AggregateKind::Agg2);
    auto a3 = aggregate(t, AggregateKind::Agg3);
    REQUIRE(a1.per_speaker.size() == members);
    REQUIRE(a2.per_speaker.size() == members);
    REQUIRE(a3.per_speaker.size() == members);
    for (std::size_t i = 0; i < members; ++i) {
      CHECK(a1.per_speaker[i].second == a2.per_speaker[i].second);
      CHECK(a1.per_speaker[i].second == a3.per_speaker[i].second);
    }
    CHECK(*a1.mean == *a2.mean);
    CHECK(*a1.mean == *a3.mean);
  }
}

TEST_CASE("the self-imputing aggregate equals the mean over defined markers") {
  std::mt19937_64 rng(6);
  auto u = [&] { return static_cast<double>(rng() >> 11) * 0x1.0p-53 * 2.0 - 1.0; };
  for (int trial = 0; trial < 50; ++trial) {
    std::size_t markers = 2 + rng() % 5, members = 1 + rng() % 6;
    std::vector<std::vector<std::optional<double>>> rows(
        markers, std::vector<std::optional<double>>(members));
    for (auto& row : rows)
      for (auto& v : row)
        if (rng() % 3 != 0) v = u();
    ScoreTable t = hand_table(rows);
    auto a3 = aggregate(t, AggregateKind::Agg3);
    for (const auto& [member, value] : a3.per_speaker) {
      double sum = 0.0;
      int n = 0;
      for (std::size_t k = 0; k < markers; ++k)
        if (rows[k][member]) {
          sum += *rows[k][member];
          ++n;
        }
      REQUIRE(n >= 1);
      CHECK(value == sum / n);
    }
  }
}

TEST_CASE("a marker with no defined speakers blocks group imputation") {
  ScoreTable t = hand_table({{0.2, 0.3}, {std::nullopt, std::nullopt}});
  auto a2 = aggregate(t, AggregateKind::Agg2);
  CHECK(a2.per_speaker.empty());
  CHECK(!a2.mean);
  // the self-imputing aggregate still works
  auto a3 = aggregate(t, AggregateKind::Agg3);
  CHECK(a3.n == 2);
}

TEST_CASE("single marker, single speaker: all aggregates equal the score") {
  ScoreTable t = hand_table({{0.37}});
  for (auto kind : {AggregateKind::Agg1, AggregateKind::Agg2, AggregateKind::Agg3}) {
    auto a = aggregate(t, kind);
    REQUIRE(a.mean);
    CHECK(*a.mean == 0.37);
    CHECK(a.n == 1);
  }
}

TEST_CASE("engine scores equal the quadratic oracle on random corpora") {
  const Lexicon& lex = default_lexicon();
  ScoreConfig c;
  c.min_support = 1;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    Corpus corpus = generate(small_random(seed), lex);
    REQUIRE(corpus.utterances.size() <= 200);
    RoleTable roles = build_groups(corpus);
    ExchangeIndex index(corpus, lex, roles, 1);
    for (GroupId targets : {GroupId::U, GroupId::Ops}) {
      auto mask = group_mask(roles, targets);
      for (std::size_t d = 0; d < roles.dummies.size(); ++d) {
        auto scores = speaker_to_group_all_markers(index, roles,
                                                   static_cast<int>(d), mask,
                                                   Scope::all(), c);
        for (std::size_t m = 0; m < lex.size(); ++m) {
          auto expect = oracle_coordination(corpus, lex, roles, roles.dummies[d],
                                            targets, m, c);
          INFO("seed=" << seed << " dummy=" << d << " marker=" << m);
          REQUIRE(scores[m].defined == expect.defined);
          CHECK(scores[m].n_pairs == expect.n_pairs);
          CHECK(scores[m].support == expect.support);
          if (expect.defined)
            CHECK(std::fabs(scores[m].value - expect.value) <= 1e-12);
        }
      }
    }
  }
}

TEST_CASE("branch scopes agree with per-branch recomputation") {
  const Lexicon& lex = default_lexicon();
  for (std::uint64_t seed : {11u, 12u, 13u}) {
    GeneratorConfig g = small_random(seed);
    g.op_behavior.delta_prob = 0.5;
    g.regular_behavior.delta_prob = 0.3;
    Corpus corpus = generate(g, lex);
    RoleTable roles = build_groups(corpus);
    ExchangeIndex index(corpus, lex, roles, 1);

    for (bool want_delta : {true, false}) {
      auto edges = testsupport::branch_edges(corpus, want_delta);
      Scope scope = want_delta ? Scope::delta_branches() : Scope::non_delta_branches();
      auto mask = group_mask(roles, GroupId::U);
      for (std::size_t d = 0; d < roles.dummies.size(); ++d) {
        ExchangeSet via_scope =
            build_exchange_set(index, roles, static_cast<int>(d), mask, scope);
        // recompute the pair count from branch membership
        std::size_t expected_pairs = 0;
        for (const auto& u : corpus.utterances) {
          if (u.parent < 0) continue;
          const Utterance& parent = corpus.utterances[u.parent];
          if (parent.speaker == u.speaker) continue;
          if (roles.dummy_index(u.speaker, u.conversation) != static_cast<int>(d))
            continue;
          if (edges.count({parent.id, u.id})) ++expected_pairs;
        }
        CHECK(via_scope.pairs.size() == expected_pairs);
      }
    }
  }
}

TEST_CASE("worker count never changes scores") {
  const Lexicon& lex = default_lexicon();
  Corpus corpus = generate(small_random(21), lex);
  RoleTable roles = build_groups(corpus);
  ScoreConfig c;
  c.min_support = 2;
  std::vector<ScoreTable> tables;
  for (unsigned workers : {1u, 4u, 16u}) {
    ExchangeIndex index(corpus, lex, roles, workers);
    tables.push_back(compute_scores(index, roles, GroupId::U, GroupId::U,
                                    Scope::all(), c, workers));
  }
  for (std::size_t i = 1; i < tables.size(); ++i) {
    REQUIRE(tables[i].members == tables[0].members);
    for (std::size_t m = 0; m < tables[0].scores.size(); ++m)
      for (std::size_t j = 0; j < tables[0].scores[m].size(); ++j) {
        const auto& a = tables[0].scores[m][j];
        const auto& b = tables[i].scores[m][j];
        CHECK(a.defined == b.defined);
        CHECK(std::memcmp(&a.value, &b.value, sizeof(double)) == 0);
      }
  }
}

TEST_CASE("a single-category lexicon works end to end") {
  std::istringstream in("#custom\nzebra\nxylo\n");
  Lexicon lex = load_lexicon(in);
  Corpus corpus = ingest_text(
      record("r", "cv", std::nullopt, "a", 0, "zebra here") +
      record("x", "cv", "r", "b", 1, "zebra back") +
      record("y", "cv", "x", "a", 2, "nothing") +
      record("z", "cv", "y", "b", 3, "still nothing"));
  RoleTable roles = build_groups(corpus);
  ExchangeIndex index(corpus, lex, roles, 1);
  REQUIRE(index.marker_count() == 1);
  int b = roles.dummy_index(corpus.speaker_index("b"), 0);
  auto score = speaker_to_group(index, roles, b, GroupId::U, 0, Scope::all(), loose());
  REQUIRE(score.defined);
  CHECK(score.value == 1.0 - 1.0 / 2.0);  // perfect echo, one marker pair of two
}
