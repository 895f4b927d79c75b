// stylesync: directed linguistic-style coordination over threaded
// discussion corpora, with role-based group comparisons and reports.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "stylesync/stylesync.hpp"

namespace {

using namespace stylesync;

struct CommonOptions {
  std::string corpus_path;
  std::string lexicon_path;
  std::string exclude = "DeltaBot";
  std::string delta_mode = "metadata";
  bool lax = false;
  bool strip_quotes = false;

  IngestOptions ingest_options() const {
    IngestOptions opts;
    opts.exclude_speakers.clear();
    for (auto& s : split(exclude, ','))
      if (!trim(s).empty()) opts.exclude_speakers.emplace_back(trim(s));
    if (delta_mode == "metadata")
      opts.delta_mode = DeltaMode::MetadataOnly;
    else if (delta_mode == "scan")
      opts.delta_mode = DeltaMode::TokenScan;
    else
      throw Error(ErrorKind::InvalidConfig,
                  "unknown delta mode '" + delta_mode + "'");
    opts.lax = lax;
    opts.strip_quotes = strip_quotes;
    return opts;
  }

  Lexicon lexicon() const {
    return lexicon_path.empty() ? default_lexicon() : load_lexicon(lexicon_path);
  }
};

void add_common(CLI::App* cmd, CommonOptions& common, bool with_lexicon = true) {
  cmd->add_option("--corpus", common.corpus_path, "corpus file (JSON lines)")
      ->required();
  if (with_lexicon)
    cmd->add_option("--lexicon", common.lexicon_path,
                    "marker lexicon file (default: built-in eight categories)");
  cmd->add_option("--exclude-speakers", common.exclude,
                  "comma separated speakers dropped with subtree re-parenting");
  cmd->add_option("--delta-mode", common.delta_mode, "metadata|scan")
      ->check(CLI::IsMember({"metadata", "scan"}));
  cmd->add_flag("--lax", common.lax, "accept replies timestamped before their parent");
  cmd->add_flag("--strip-quotes", common.strip_quotes,
                "drop quoted lines (starting with '>') before marker counting");
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorKind::IoError, "cannot write " + path);
  f << content;
}

std::string summary_lines(const CorpusSummary& s) {
  std::string out;
  out += "conversations " + std::to_string(s.conversations) + "\n";
  out += "utterances " + std::to_string(s.utterances) + "\n";
  out += "speakers " + std::to_string(s.speakers) + "\n";
  out += "deltas " + std::to_string(s.deltas) + "\n";
  out += "non_op_deltas " + std::to_string(s.non_op_deltas) + "\n";
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"directed linguistic-style coordination for threaded discussions"};
  app.require_subcommand(1);
  app.set_config("--config", "", "key=value config file; flags override");

  unsigned workers = default_workers();
  app.add_option("--workers", workers, "worker thread count")
      ->envname("STYLESYNC_WORKERS")
      ->check(CLI::PositiveNumber);

  // ingest
  CommonOptions ingest_common;
  std::string ingest_out;
  auto* cmd_ingest = app.add_subcommand("ingest", "validate a corpus and print counts");
  add_common(cmd_ingest, ingest_common, false);
  cmd_ingest->add_option("--out", ingest_out, "write the canonical serialization here");

  // groups
  CommonOptions groups_common;
  std::string groups_out;
  bool groups_check = false;
  auto* cmd_groups = app.add_subcommand("groups", "emit speaker-group membership CSV");
  add_common(cmd_groups, groups_common, false);
  cmd_groups->add_option("--out", groups_out, "output CSV path (default stdout)");
  cmd_groups->add_flag("--check", groups_check, "verify the group partition identities");

  // coord
  CommonOptions coord_common;
  std::string coord_replier = "U", coord_target = "U", coord_scope = "all";
  std::string coord_marker = "all", coord_out;
  int coord_min_support = 3;
  std::string coord_support_side = "target";
  auto* cmd_coord = app.add_subcommand("coord", "dump per-speaker coordination scores");
  add_common(cmd_coord, coord_common);
  cmd_coord->add_option("--replier-group", coord_replier, "group B (repliers)");
  cmd_coord->add_option("--target-group", coord_target, "group A (targets)");
  cmd_coord->add_option("--scope", coord_scope,
                        "all|delta-branches|non-delta-branches|pre-delta");
  cmd_coord->add_option("--marker", coord_marker, "category name or 'all'");
  cmd_coord->add_option("--min-support", coord_min_support,
                        "defined requires support > this");
  cmd_coord->add_option("--support-side", coord_support_side, "target|reply|total")
      ->check(CLI::IsMember({"target", "reply", "total"}));
  cmd_coord->add_option("--out", coord_out, "output CSV path (default stdout)");

  // hypotheses
  CommonOptions hyp_common;
  std::string hyp_out_dir = "out";
  std::string hyp_only;
  std::string hyp_variant = "welch";
  std::string hyp_error_bars = "se";
  int hyp_min_support = 3;
  std::string hyp_support_side = "target";
  bool hyp_bonferroni = false;
  bool hyp_no_figures = false;
  auto* cmd_hyp = app.add_subcommand("hypotheses", "run the shipped comparison battery");
  add_common(cmd_hyp, hyp_common);
  cmd_hyp->add_option("--out-dir", hyp_out_dir, "directory for CSVs, figures and summary");
  cmd_hyp->add_option("--only", hyp_only, "comma separated hypothesis names");
  cmd_hyp->add_option("--t-variant", hyp_variant, "welch|student")
      ->check(CLI::IsMember({"welch", "student"}));
  cmd_hyp->add_option("--min-support", hyp_min_support, "defined requires support > this");
  cmd_hyp->add_option("--support-side", hyp_support_side, "target|reply|total")
      ->check(CLI::IsMember({"target", "reply", "total"}));
  cmd_hyp->add_flag("--bonferroni", hyp_bonferroni,
                    "adjust p by the per-hypothesis cell count");
  cmd_hyp->add_option("--error-bars", hyp_error_bars, "se|ci95")
      ->check(CLI::IsMember({"se", "ci95"}));
  cmd_hyp->add_flag("--no-figures", hyp_no_figures, "skip SVG rendering");

  // synth
  GeneratorConfig gen;
  std::string synth_out;
  std::string synth_lexicon;
  double synth_echo = 0.5, synth_base = 0.5, synth_delta = 0.0;
  double synth_op_echo = -1, synth_op_base = -1, synth_op_delta = -1;
  auto* cmd_synth = app.add_subcommand("synth", "generate a synthetic corpus");
  cmd_synth->add_option("--out", synth_out, "output corpus path")->required();
  cmd_synth->add_option("--lexicon", synth_lexicon, "marker lexicon file");
  cmd_synth->add_option("--seed", gen.seed, "generator seed");
  cmd_synth->add_option("--conversations", gen.conversations, "conversation count");
  cmd_synth->add_option("--speakers-per-conversation", gen.speakers_per_conversation,
                        "speakers per conversation (first opens it)");
  cmd_synth->add_option("--speaker-pool", gen.speaker_pool,
                        "global account pool; 0 means fresh accounts per conversation");
  cmd_synth->add_option("--branching", gen.branching, "mean children per node");
  cmd_synth->add_option("--depth-limit", gen.depth_limit, "maximum reply depth, 0 = none");
  cmd_synth->add_option("--min-utterances", gen.min_utterances,
                        "grow each conversation to at least this size");
  cmd_synth->add_option("--max-utterances", gen.max_utterances,
                        "per-conversation size cap, 0 = none");
  cmd_synth->add_option("--target-marker-rate", gen.target_marker_rate,
                        "marker rate of root utterances");
  cmd_synth->add_option("--echo-prob", synth_echo, "reply marker prob when parent has it");
  cmd_synth->add_option("--base-prob", synth_base, "reply marker prob otherwise");
  cmd_synth->add_option("--delta-prob", synth_delta, "per-dummy delta award prob");
  cmd_synth->add_option("--op-echo-prob", synth_op_echo, "override for conversation openers");
  cmd_synth->add_option("--op-base-prob", synth_op_base, "override for conversation openers");
  cmd_synth->add_option("--op-delta-prob", synth_op_delta, "override for conversation openers");

  // report
  std::string report_summary, report_format = "svg", report_out_dir = ".";
  std::string report_error_bars = "se";
  auto* cmd_report = app.add_subcommand("report", "re-render tables/figures from a summary");
  cmd_report->add_option("--summary", report_summary, "summary.json from a hypotheses run")
      ->required();
  cmd_report->add_option("--format", report_format, "csv|txt|svg")
      ->check(CLI::IsMember({"csv", "txt", "svg"}));
  cmd_report->add_option("--out-dir", report_out_dir, "output directory");
  cmd_report->add_option("--error-bars", report_error_bars, "se|ci95")
      ->check(CLI::IsMember({"se", "ci95"}));

  auto* cmd_selftest =
      app.add_subcommand("selftest", "run the built-in oracle and property checks");
  (void)cmd_selftest;

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;  // 0 for --help, 1 for usage errors
  }

  try {
    if (*cmd_ingest) {
      Corpus corpus = ingest(ingest_common.corpus_path, ingest_common.ingest_options());
      std::cout << summary_lines(corpus.summary());
      if (!ingest_out.empty()) write_file(ingest_out, to_jsonl(corpus));
    } else if (*cmd_groups) {
      Corpus corpus = ingest(groups_common.corpus_path, groups_common.ingest_options());
      RoleTable roles = build_groups(corpus);
      if (groups_check) {
        auto violations = group_algebra_check(corpus, roles);
        for (const auto& v : violations) std::cerr << "violation: " << v << "\n";
        if (!violations.empty()) return 2;
        std::cout << "group algebra: OK (" << roles.dummies.size() << " dummy users)\n";
      }
      std::string csv = "group_name,speaker_id,conversation_id\n";
      for (std::size_t g = 0; g < kGroupCount; ++g) {
        auto sg = roles.group(static_cast<GroupId>(g));
        for (int d : sg.members) {
          const DummyUser& dummy = roles.dummies[d];
          csv += csv_escape(sg.name) + ',' +
                 csv_escape(corpus.speakers[dummy.speaker]) + ',' +
                 csv_escape(corpus.conversations[dummy.conversation].id) + '\n';
        }
      }
      if (groups_out.empty())
        std::cout << csv;
      else
        write_file(groups_out, csv);
    } else if (*cmd_coord) {
      Corpus corpus = ingest(coord_common.corpus_path, coord_common.ingest_options());
      Lexicon lexicon = coord_common.lexicon();
      RoleTable roles = build_groups(corpus);
      ExchangeIndex index(corpus, lexicon, roles, workers);
      GroupId b = parse_group(coord_replier);
      GroupId a = parse_group(coord_target);
      Scope scope = parse_scope(coord_scope);
      if (scope.kind == ScopeKind::PreDelta && scope.pre_delta_group.empty())
        scope.pre_delta_group = coord_target;
      ScoreConfig sc;
      sc.min_support = coord_min_support;
      sc.support_side = parse_support_side(coord_support_side);
      ScoreTable table = compute_scores(index, roles, b, a, scope, sc, workers);

      std::vector<std::size_t> markers;
      if (coord_marker == "all") {
        for (std::size_t m = 0; m < lexicon.size(); ++m) markers.push_back(m);
      } else {
        int m = lexicon.category_index(coord_marker);
        if (m < 0)
          throw Error(ErrorKind::InvalidConfig,
                      "unknown marker '" + coord_marker + "'");
        markers.push_back(static_cast<std::size_t>(m));
      }

      std::string csv =
          "scope,group_B,group_A,marker_or_aggregate,speaker,value,delta_support,n_pairs\n";
      auto speaker_field = [&](int dummy) {
        return csv_escape(corpus.speakers[roles.dummies[dummy].speaker] + "@" +
                          corpus.conversations[roles.dummies[dummy].conversation].id);
      };
      const std::string scope_field = coord_scope;
      for (std::size_t m : markers) {
        for (std::size_t i = 0; i < table.members.size(); ++i) {
          const CoordinationScore& s = table.scores[m][i];
          csv += scope_field + ',' + group_name(b) + ',' + group_name(a) + ',' +
                 csv_escape(lexicon.category(m).name) + ',' +
                 speaker_field(table.members[i]) + ',' +
                 (s.defined ? format_double(s.value) : std::string()) + ',' +
                 std::to_string(s.support) + ',' + std::to_string(s.n_pairs) + '\n';
        }
      }
      for (AggregateKind kind :
           {AggregateKind::Agg1, AggregateKind::Agg2, AggregateKind::Agg3}) {
        AggregateScore agg = aggregate(table, kind);
        for (const auto& [d, v] : agg.per_speaker)
          csv += scope_field + ',' + group_name(b) + ',' + group_name(a) + ',' +
                 aggregate_name(kind) + ',' + speaker_field(d) + ',' +
                 format_double(v) + ",,\n";
      }
      if (coord_out.empty())
        std::cout << csv;
      else
        write_file(coord_out, csv);
    } else if (*cmd_hyp) {
      RunConfig config;
      config.corpus_path = hyp_common.corpus_path;
      config.lexicon_path = hyp_common.lexicon_path;
      config.ingest = hyp_common.ingest_options();
      config.score.min_support = hyp_min_support;
      config.score.support_side = parse_support_side(hyp_support_side);
      config.t_variant = parse_t_variant(hyp_variant);
      config.bonferroni = hyp_bonferroni;
      config.error_bars = hyp_error_bars == "ci95" ? ErrorBarKind::Ci95
                                                   : ErrorBarKind::StandardError;
      config.out_dir = hyp_out_dir;
      config.workers = workers;
      config.write_figures = !hyp_no_figures;
      if (!hyp_only.empty())
        for (auto& name : split(hyp_only, ','))
          if (!trim(name).empty()) config.hypotheses.emplace_back(trim(name));
      PipelineOutput out = run_pipeline(config);
      std::cout << summary_lines(out.summary);
      for (const auto& r : out.results)
        std::cout << r.name << ": written to " << hyp_out_dir << "/"
                  << sanitize_filename(r.name) << ".{csv,txt"
                  << (config.write_figures ? ",svg" : "") << "}\n";
      std::cout << "summary: " << hyp_out_dir << "/summary.json\n";
    } else if (*cmd_synth) {
      Lexicon lexicon =
          synth_lexicon.empty() ? default_lexicon() : load_lexicon(synth_lexicon);
      gen.regular_behavior = {{MarkerBehavior{synth_echo, synth_base}}, synth_delta};
      gen.op_behavior = {{MarkerBehavior{synth_op_echo >= 0 ? synth_op_echo : synth_echo,
                                         synth_op_base >= 0 ? synth_op_base : synth_base}},
                         synth_op_delta >= 0 ? synth_op_delta : synth_delta};
      Corpus corpus = generate(gen, lexicon);
      write_file(synth_out, to_jsonl(corpus));
      std::cout << summary_lines(corpus.summary());
    } else if (*cmd_report) {
      std::ifstream f(report_summary);
      if (!f) throw Error(ErrorKind::IoError, "cannot open " + report_summary);
      std::stringstream buf;
      buf << f.rdbuf();
      auto results = results_from_summary_json(buf.str());
      std::filesystem::create_directories(report_out_dir);
      ErrorBarKind bars = report_error_bars == "ci95" ? ErrorBarKind::Ci95
                                                      : ErrorBarKind::StandardError;
      for (const auto& r : results) {
        std::string base =
            (std::filesystem::path(report_out_dir) / sanitize_filename(r.name)).string();
        if (report_format == "csv") write_file(base + ".csv", render_result_csv(r));
        if (report_format == "txt") write_file(base + ".txt", render_text_table(r));
        if (report_format == "svg")
          write_file(base + ".svg", render_figure_svg(figure_from_result(r, bars)));
        std::cout << r.name << " -> " << base << "." << report_format << "\n";
      }
    } else if (*cmd_selftest) {
      if (!selftest(std::cout)) return 2;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
