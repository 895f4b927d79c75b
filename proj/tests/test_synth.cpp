#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sstream>

#include "stylesync/synth.hpp"

using namespace stylesync;

namespace {

// one long two-speaker path: every second utterance is a reply by u1 to u0
GeneratorConfig path_config(int pairs, double echo, double base, double rate,
                            std::uint64_t seed) {
  GeneratorConfig g;
  g.conversations = 1;
  g.speakers_per_conversation = 2;
  g.branching = 0.0;
  g.min_utterances = 2 * pairs + 1;
  g.target_marker_rate = rate;
  g.op_behavior = {{MarkerBehavior{echo, base}}, 0.0};
  g.regular_behavior = {{MarkerBehavior{echo, base}}, 0.0};
  g.seed = seed;
  return g;
}

double measured_coordination(const Corpus& corpus, const Lexicon& lex,
                             std::size_t marker) {
  RoleTable roles = build_groups(corpus);
  ExchangeIndex index(corpus, lex, roles, 1);
  int replier = roles.dummy_index(corpus.speaker_index("u1"), 0);
  REQUIRE(replier >= 0);
  ScoreConfig c;
  c.min_support = 3;
  auto s = speaker_to_group(index, roles, replier, GroupId::U, marker,
                            Scope::all(), c);
  REQUIRE(s.defined);
  return s.value;
}

}  // namespace

TEST_CASE("identical seeds reproduce the corpus byte for byte") {
  GeneratorConfig g;
  g.conversations = 4;
  g.speakers_per_conversation = 4;
  g.branching = 1.3;
  g.min_utterances = 15;
  g.max_utterances = 40;
  g.regular_behavior.delta_prob = 0.3;
  g.seed = 77;
  std::string a = generate_jsonl(g, default_lexicon());
  std::string b = generate_jsonl(g, default_lexicon());
  CHECK(a == b);
  g.seed = 78;
  CHECK(generate_jsonl(g, default_lexicon()) != a);
}

TEST_CASE("generated corpora survive their own serialization") {
  GeneratorConfig g;
  g.conversations = 3;
  g.speakers_per_conversation = 3;
  g.branching = 1.1;
  g.min_utterances = 12;
  g.max_utterances = 30;
  g.op_behavior.delta_prob = 0.5;
  g.regular_behavior.delta_prob = 0.25;
  g.seed = 5;
  Corpus direct = generate(g, default_lexicon());
  std::istringstream in(to_jsonl(direct));
  Corpus reread = ingest(in);
  CHECK(to_jsonl(reread) == to_jsonl(direct));
  CHECK(reread.summary().deltas == direct.summary().deltas);
}

TEST_CASE("token-scan detection recovers the generated awards") {
  GeneratorConfig g;
  g.conversations = 5;
  g.speakers_per_conversation = 4;
  g.branching = 1.4;
  g.min_utterances = 15;
  g.max_utterances = 40;
  g.op_behavior.delta_prob = 0.6;
  g.regular_behavior.delta_prob = 0.4;
  g.seed = 9;
  std::string jsonl = generate_jsonl(g, default_lexicon());
  std::istringstream in1(jsonl), in2(jsonl);
  IngestOptions metadata;
  IngestOptions scan;
  scan.delta_mode = DeltaMode::TokenScan;
  Corpus via_metadata = ingest(in1, metadata);
  Corpus via_scan = ingest(in2, scan);
  REQUIRE(via_metadata.summary().deltas > 0);
  CHECK(to_jsonl(via_metadata) == to_jsonl(via_scan));
}

TEST_CASE("independent marker draws make coordination vanish") {
  Corpus corpus = generate(path_config(5000, 0.5, 0.5, 0.5, 1234),
                           default_lexicon());
  for (std::size_t m = 0; m < default_lexicon().size(); ++m) {
    double c = measured_coordination(corpus, default_lexicon(), m);
    INFO("marker " << m);
    CHECK(std::fabs(c) < 0.05);
  }
}

TEST_CASE("echoing generators hit the expected coordination level") {
  // echo 0.8, base 0.2, target rate 0.5: expected level 0.30
  Corpus corpus = generate(path_config(5000, 0.8, 0.2, 0.5, 99), default_lexicon());
  for (std::size_t m = 0; m < default_lexicon().size(); ++m) {
    double c = measured_coordination(corpus, default_lexicon(), m);
    INFO("marker " << m);
    CHECK(std::fabs(c - 0.30) < 0.05);
  }
}

TEST_CASE("perfect echo over rare markers pushes coordination toward one") {
  // targets draw markers independently at a small rate; the replier echoes
  // them exactly, so the score approaches 1 as non-marker pairs dominate
  GeneratorConfig g = path_config(4000, 1.0, 0.0, 0.02, 321);
  g.op_behavior = {{MarkerBehavior{0.02, 0.02}}, 0.0};
  Corpus corpus = generate(g, default_lexicon());
  double c = measured_coordination(corpus, default_lexicon(), 0);
  CHECK(c > 0.95);
}

TEST_CASE("estimator error shrinks with the pair count") {
  const Lexicon& lex = default_lexicon();
  double small_err = 0.0, large_err = 0.0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Corpus small = generate(path_config(500, 0.8, 0.2, 0.5, seed), lex);
    Corpus large = generate(path_config(50000, 0.8, 0.2, 0.5, seed), lex);
    small_err += std::fabs(measured_coordination(small, lex, 0) - 0.30);
    large_err += std::fabs(measured_coordination(large, lex, 0) - 0.30);
  }
  CHECK(large_err / 20.0 < small_err / 20.0);
}

TEST_CASE("invalid generator configurations are rejected") {
  const Lexicon& lex = default_lexicon();
  GeneratorConfig g;
  g.target_marker_rate = 1.5;
  CHECK_THROWS_AS(generate(g, lex), Error);
  g = GeneratorConfig{};
  g.regular_behavior.markers[0].echo_prob = -0.1;
  CHECK_THROWS_AS(generate(g, lex), Error);
  g = GeneratorConfig{};
  g.speaker_pool = 2;
  g.speakers_per_conversation = 5;
  CHECK_THROWS_AS(generate(g, lex), Error);
  g = GeneratorConfig{};
  g.conversations = 0;
  CHECK_THROWS_AS(generate(g, lex), Error);
  g = GeneratorConfig{};
  g.min_utterances = 50;
  g.max_utterances = 10;
  CHECK_THROWS_AS(generate(g, lex), Error);
}

TEST_CASE("the quadratic oracle refuses oversized corpora") {
  GeneratorConfig g;
  g.conversations = 2;
  g.speakers_per_conversation = 2;
  g.branching = 0.0;
  g.min_utterances = 6000;
  g.seed = 3;
  const Lexicon& lex = default_lexicon();
  Corpus corpus = generate(g, lex);
  REQUIRE(corpus.utterances.size() > kOracleUtteranceLimit);
  RoleTable roles = build_groups(corpus);
  CHECK_THROWS_AS(
      oracle_coordination(corpus, lex, roles, roles.dummies[0], GroupId::U, 0),
      Error);
}

TEST_CASE("oracle reproduces hand-counted fixtures") {
  // four exchanges of b toward a with article bits (1,1), (1,0), (0,0), (0,0)
  std::ostringstream s;
  auto rec = [&](const char* id, const char* parent, const char* speaker,
                 int ts, const char* text) {
    s << "{\"id\":\"" << id << "\",\"conversation_id\":\"cv\",\"parent_id\":"
      << (parent ? std::string("\"") + parent + "\"" : "null")
      << ",\"speaker\":\"" << speaker << "\",\"timestamp\":" << ts
      << ",\"text\":\"" << text << "\",\"delta_to\":null}\n";
  };
  rec("a1", nullptr, "a", 0, "the opener");
  rec("b1", "a1", "b", 1, "the echo");
  rec("a2", "b1", "a", 2, "the second");
  rec("b2", "a2", "b", 3, "no marker");
  rec("a3", "b2", "a", 4, "plain");
  rec("b3", "a3", "b", 5, "plain");
  rec("a4", "b3", "a", 6, "plain");
  rec("b4", "a4", "b", 7, "plain");
  std::istringstream in(s.str());
  Corpus corpus = ingest(in);
  const Lexicon& lex = default_lexicon();
  RoleTable roles = build_groups(corpus);
  ScoreConfig c;
  c.min_support = 0;
  const std::size_t articles = static_cast<std::size_t>(lex.category_index("articles"));
  DummyUser b{corpus.speaker_index("b"), 0};
  auto score = oracle_coordination(corpus, lex, roles, b, GroupId::U, articles, c);
  REQUIRE(score.defined);
  CHECK(score.value == 1.0 / 2.0 - 1.0 / 4.0);
  CHECK(score.n_pairs == 4);

  // zero law through the oracle: b always uses the marker
  std::ostringstream z;
  s.swap(z);
  rec("a1", nullptr, "a", 0, "the opener");
  rec("b1", "a1", "b", 1, "the echo");
  rec("a2", "b1", "a", 2, "quiet");
  rec("b2", "a2", "b", 3, "the reply");
  std::istringstream zin(s.str());
  Corpus zc = ingest(zin);
  RoleTable zroles = build_groups(zc);
  auto zscore = oracle_coordination(zc, lex, zroles,
                                    DummyUser{zc.speaker_index("b"), 0},
                                    GroupId::U, articles, c);
  REQUIRE(zscore.defined);
  CHECK(zscore.value == 0.0);
}
