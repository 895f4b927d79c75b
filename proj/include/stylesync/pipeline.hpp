#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "stylesync/coordination.hpp"
#include "stylesync/corpus.hpp"
#include "stylesync/hypotheses.hpp"
#include "stylesync/lexicon.hpp"
#include "stylesync/report.hpp"
#include "stylesync/roles.hpp"
#include "stylesync/stats.hpp"
#include "stylesync/synth.hpp"
#include "stylesync/util.hpp"

namespace stylesync {

struct RunConfig {
  std::string corpus_path;
  std::string lexicon_path;  // empty: embedded default lexicon
  IngestOptions ingest;
  ScoreConfig score;
  TVariant t_variant = TVariant::Welch;
  bool bonferroni = false;
  ErrorBarKind error_bars = ErrorBarKind::StandardError;
  std::vector<std::string> hypotheses;  // names to run; empty means all
  std::string out_dir;                  // empty: nothing written to disk
  unsigned workers = 1;
  bool write_figures = true;
};

struct PipelineOutput {
  CorpusSummary summary;
  std::vector<HypothesisResult> results;
  // filename -> content; written under out_dir when one is configured
  std::map<std::string, std::string> files;
};

inline std::string sanitize_filename(std::string_view name) {
  std::string out;
  for (char c : name) {
    if ((c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
        (c >= '0' && c <= '9'))
      out += static_cast<char>(c >= 'A' && c <= 'Z' ? c - 'A' + 'a' : c);
    else
      out += '_';
  }
  return out;
}

inline Lexicon load_configured_lexicon(const RunConfig& config) {
  if (config.lexicon_path.empty()) return default_lexicon();
  return load_lexicon(config.lexicon_path);
}

inline PipelineOutput run_pipeline_on(const Corpus& corpus, const Lexicon& lexicon,
                                      const RunConfig& config) {
  PipelineOutput out;
  out.summary = corpus.summary();

  RoleTable roles = build_groups(corpus);
  ExchangeIndex index(corpus, lexicon, roles, config.workers);

  RunSettings settings;
  settings.score = config.score;
  settings.t_variant = config.t_variant;
  settings.bonferroni = config.bonferroni;
  settings.workers = config.workers;

  for (const auto& spec : shipped_hypotheses()) {
    if (!config.hypotheses.empty()) {
      bool wanted = false;
      for (const auto& name : config.hypotheses)
        if (name == spec.name) { wanted = true; break; }
      if (!wanted) continue;
    }
    out.results.push_back(run_hypothesis(index, lexicon, roles, spec, settings));
  }

  {
    std::string counts;
    counts += "conversations " + std::to_string(out.summary.conversations) + "\n";
    counts += "utterances " + std::to_string(out.summary.utterances) + "\n";
    counts += "speakers " + std::to_string(out.summary.speakers) + "\n";
    counts += "deltas " + std::to_string(out.summary.deltas) + "\n";
    counts += "non_op_deltas " + std::to_string(out.summary.non_op_deltas) + "\n";
    out.files["counts.txt"] = std::move(counts);
  }
  out.files["summary.json"] = summary_to_json(out.summary, out.results);
  for (const auto& r : out.results) {
    const std::string base = sanitize_filename(r.name);
    out.files[base + ".csv"] = render_result_csv(r);
    out.files[base + ".txt"] = render_text_table(r);
    if (config.write_figures)
      out.files[base + ".svg"] =
          render_figure_svg(figure_from_result(r, config.error_bars));
  }

  if (!config.out_dir.empty()) {
    std::filesystem::create_directories(config.out_dir);
    for (const auto& [name, content] : out.files) {
      std::ofstream f(std::filesystem::path(config.out_dir) / name,
                      std::ios::binary);
      f << content;
    }
  }
  return out;
}

inline PipelineOutput run_pipeline(const RunConfig& config) {
  Corpus corpus = ingest(config.corpus_path, config.ingest);
  Lexicon lexicon = load_configured_lexicon(config);
  return run_pipeline_on(corpus, lexicon, config);
}

// Compact self-check: oracle equivalence on seeded corpora plus the exact
// laws of the score and the test statistics. Returns true when clean.
inline bool selftest(std::ostream& log) {
  const Lexicon& lex = default_lexicon();
  bool ok = true;
  auto check = [&](bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      log << "selftest FAIL: " << what << "\n";
    }
  };

  // engine vs quadratic oracle on small random corpora
  {
    int compared = 0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      GeneratorConfig g;
      g.conversations = 3;
      g.speakers_per_conversation = 4;
      g.branching = 1.4;
      g.min_utterances = 30;
      g.depth_limit = 12;
      g.target_marker_rate = 0.5;
      g.op_behavior = {{MarkerBehavior{0.7, 0.3}}, 0.3};
      g.regular_behavior = {{MarkerBehavior{0.5, 0.4}}, 0.1};
      g.seed = seed;
      Corpus corpus = generate(g, lex);
      RoleTable roles = build_groups(corpus);
      ExchangeIndex index(corpus, lex, roles, 1);
      ScoreConfig sc;
      sc.min_support = 1;
      auto mask = group_mask(roles, GroupId::U);
      for (std::size_t d = 0; d < roles.dummies.size(); ++d) {
        auto scores = speaker_to_group_all_markers(index, roles,
                                                   static_cast<int>(d), mask,
                                                   Scope::all(), sc);
        for (std::size_t m = 0; m < lex.size(); ++m) {
          auto oracle = oracle_coordination(corpus, lex, roles, roles.dummies[d],
                                            GroupId::U, m, sc);
          check(scores[m].defined == oracle.defined &&
                    scores[m].n_pairs == oracle.n_pairs &&
                    scores[m].support == oracle.support,
                "oracle support mismatch");
          if (scores[m].defined && oracle.defined)
            check(std::fabs(scores[m].value - oracle.value) <= 1e-12,
                  "oracle value mismatch");
          ++compared;
        }
      }
    }
    log << "selftest: oracle equivalence on " << compared << " scores\n";
  }

  // exact score laws
  {
    ExchangeSet s;
    s.pairs = {{1, 1}, {1, 0}, {0, 0}, {0, 0}};
    ScoreConfig sc;
    sc.min_support = 0;
    check(pair_coordination(s, 0, sc).value == 0.25, "hand-counted score");
    ExchangeSet echo;
    for (int i = 0; i < 2; ++i) echo.pairs.push_back({1, 1});
    for (int i = 0; i < 6; ++i) echo.pairs.push_back({0, 0});
    check(pair_coordination(echo, 0, sc).value == 1.0 - 2.0 / 8.0,
          "perfect echo closed form");
    ExchangeSet always;
    always.pairs = {{1, 1}, {0, 1}};
    check(pair_coordination(always, 0, sc).value == 0.0, "zero law");
    log << "selftest: score laws hold\n";
  }

  // statistics
  {
    std::vector<double> same = {0.1, 0.2, 0.3};
    auto r = t_test(same, same);
    check(r.t == 0.0 && r.p == 1.0, "identical samples");
    std::vector<double> a = {1, 2, 3, 4, 5}, b = {2, 3, 4, 5, 6};
    auto w = t_test(a, b, TVariant::Welch);
    check(std::fabs(w.t + 1.0) < 1e-12 && std::fabs(w.df - 8.0) < 1e-9,
          "welch t and df");
    check(std::string(stars_for_p(0.05)).empty() &&
              std::string(stars_for_p(0.01)) == "*" &&
              std::string(stars_for_p(0.001)) == "**" &&
              std::string(stars_for_p(0.0009)) == "***",
          "star thresholds");
    log << "selftest: statistics laws hold\n";
  }

  log << (ok ? "selftest: OK\n" : "selftest: FAILED\n");
  return ok;
}

}  // namespace stylesync
