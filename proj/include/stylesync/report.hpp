#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "stylesync/corpus.hpp"
#include "stylesync/coordination.hpp"
#include "stylesync/error.hpp"
#include "stylesync/hypotheses.hpp"
#include "stylesync/util.hpp"

namespace stylesync {

inline const char* kResultCsvHeader =
    "marker_or_aggregate,mean1,mean2,n1,n2,t,df,p,stars,direction,note";

namespace detail {

inline std::string opt_field(const std::optional<double>& v) {
  return v ? format_double(*v) : std::string();
}

inline std::string direction_field(const CellResult& c) {
  if (!c.mean1 || !c.mean2) return "";
  if (c.direction > 0) return "+";
  if (c.direction < 0) return "-";
  return "0";
}

}  // namespace detail

// Lossless tabulation of one hypothesis result; parse_result_csv inverts it.
inline std::string render_result_csv(const HypothesisResult& result) {
  std::string out = kResultCsvHeader;
  out += '\n';
  for (const auto& c : result.cells) {
    out += csv_escape(c.label);
    out += ',' + detail::opt_field(c.mean1);
    out += ',' + detail::opt_field(c.mean2);
    out += ',' + std::to_string(c.n1);
    out += ',' + std::to_string(c.n2);
    out += ',' + detail::opt_field(c.t);
    out += ',' + detail::opt_field(c.df);
    out += ',' + detail::opt_field(c.p);
    out += ',' + c.stars;
    out += ',' + detail::direction_field(c);
    out += ',' + c.note;
    out += '\n';
  }
  return out;
}

inline std::vector<CellResult> parse_result_csv(const std::string& csv) {
  std::vector<CellResult> cells;
  std::istringstream in(csv);
  std::string line;
  bool header = true;
  auto opt_of = [](const std::string& s) -> std::optional<double> {
    if (s.empty()) return std::nullopt;
    return std::strtod(s.c_str(), nullptr);
  };
  while (std::getline(in, line)) {
    if (header) { header = false; continue; }
    if (trim(line).empty()) continue;
    auto f = split_csv_line(line);
    if (f.size() != 11)
      throw Error(ErrorKind::MalformedRecord, "expected 11 CSV fields");
    CellResult c;
    c.label = f[0];
    c.mean1 = opt_of(f[1]);
    c.mean2 = opt_of(f[2]);
    c.n1 = static_cast<int>(std::strtol(f[3].c_str(), nullptr, 10));
    c.n2 = static_cast<int>(std::strtol(f[4].c_str(), nullptr, 10));
    c.t = opt_of(f[5]);
    c.df = opt_of(f[6]);
    c.p = opt_of(f[7]);
    c.stars = f[8];
    c.direction = f[9] == "+" ? 1 : f[9] == "-" ? -1 : 0;
    c.note = f[10];
    c.testable = c.t.has_value();
    c.is_aggregate = c.label.rfind("AGG", 0) == 0;
    cells.push_back(std::move(c));
  }
  return cells;
}

inline std::string render_text_table(const HypothesisResult& result) {
  std::ostringstream out;
  out << result.name << ": " << result.side1 << "  vs  " << result.side2 << '\n';
  if (!result.description.empty()) out << "  " << result.description << '\n';
  out << "  speakers: side1 (" << result.n_agg1_side1 << ", "
      << result.n_agg23_side1 << "), side2 (" << result.n_agg1_side2 << ", "
      << result.n_agg23_side2 << ")\n";
  char buf[256];
  std::snprintf(buf, sizeof(buf), "  %-20s %10s %10s %7s %7s %9s %9s %11s %-4s %s\n",
                "cell", "mean1", "mean2", "n1", "n2", "t", "df", "p", "sig",
                "note");
  out << buf;
  auto num = [](const std::optional<double>& v, const char* fmt) {
    char b[64];
    if (!v) return std::string("-");
    std::snprintf(b, sizeof(b), fmt, *v);
    return std::string(b);
  };
  for (const auto& c : result.cells) {
    std::snprintf(buf, sizeof(buf), "  %-20s %10s %10s %7d %7d %9s %9s %11s %-4s %s\n",
                  c.label.c_str(), num(c.mean1, "%.4f").c_str(),
                  num(c.mean2, "%.4f").c_str(), c.n1, c.n2,
                  num(c.t, "%.3f").c_str(), num(c.df, "%.1f").c_str(),
                  num(c.p, "%.3g").c_str(), c.stars.empty() ? "" : c.stars.c_str(),
                  c.note.c_str());
    out << buf;
  }
  return out.str();
}

// ---- machine readable summary ----------------------------------------------

inline nlohmann::ordered_json result_to_json(const HypothesisResult& r) {
  nlohmann::ordered_json j;
  j["name"] = r.name;
  j["side1"] = r.side1;
  j["side2"] = r.side2;
  j["description"] = r.description;
  j["n_agg1"] = {r.n_agg1_side1, r.n_agg1_side2};
  j["n_agg23"] = {r.n_agg23_side1, r.n_agg23_side2};
  j["cells"] = nlohmann::ordered_json::array();
  for (const auto& c : r.cells) {
    nlohmann::ordered_json cj;
    cj["label"] = c.label;
    cj["aggregate"] = c.is_aggregate;
    cj["testable"] = c.testable;
    if (!c.note.empty()) cj["note"] = c.note;
    auto put = [&](const char* key, const std::optional<double>& v) {
      if (v) cj[key] = *v; else cj[key] = nullptr;
    };
    put("mean1", c.mean1);
    put("mean2", c.mean2);
    cj["n1"] = c.n1;
    cj["n2"] = c.n2;
    put("se1", c.se1);
    put("se2", c.se2);
    put("t", c.t);
    put("df", c.df);
    put("p", c.p);
    cj["stars"] = c.stars;
    cj["direction"] = c.direction;
    j["cells"].push_back(std::move(cj));
  }
  return j;
}

inline HypothesisResult result_from_json(const nlohmann::json& j) {
  HypothesisResult r;
  r.name = j.at("name").get<std::string>();
  r.side1 = j.at("side1").get<std::string>();
  r.side2 = j.at("side2").get<std::string>();
  r.description = j.value("description", std::string());
  r.n_agg1_side1 = j.at("n_agg1")[0].get<int>();
  r.n_agg1_side2 = j.at("n_agg1")[1].get<int>();
  r.n_agg23_side1 = j.at("n_agg23")[0].get<int>();
  r.n_agg23_side2 = j.at("n_agg23")[1].get<int>();
  for (const auto& cj : j.at("cells")) {
    CellResult c;
    c.label = cj.at("label").get<std::string>();
    c.is_aggregate = cj.at("aggregate").get<bool>();
    c.testable = cj.at("testable").get<bool>();
    c.note = cj.value("note", std::string());
    auto get = [&](const char* key) -> std::optional<double> {
      if (!cj.contains(key) || cj.at(key).is_null()) return std::nullopt;
      return cj.at(key).get<double>();
    };
    c.mean1 = get("mean1");
    c.mean2 = get("mean2");
    c.n1 = cj.at("n1").get<int>();
    c.n2 = cj.at("n2").get<int>();
    c.se1 = get("se1");
    c.se2 = get("se2");
    c.t = get("t");
    c.df = get("df");
    c.p = get("p");
    c.stars = cj.at("stars").get<std::string>();
    c.direction = cj.at("direction").get<int>();
    r.cells.push_back(std::move(c));
  }
  return r;
}

inline std::string summary_to_json(const CorpusSummary& summary,
                                   const std::vector<HypothesisResult>& results) {
  nlohmann::ordered_json j;
  j["corpus"] = {{"conversations", summary.conversations},
                 {"utterances", summary.utterances},
                 {"speakers", summary.speakers},
                 {"deltas", summary.deltas},
                 {"non_op_deltas", summary.non_op_deltas}};
  j["hypotheses"] = nlohmann::ordered_json::array();
  for (const auto& r : results) j["hypotheses"].push_back(result_to_json(r));
  return j.dump(2) + "\n";
}

inline std::vector<HypothesisResult> results_from_summary_json(
    const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  std::vector<HypothesisResult> rs;
  for (const auto& rj : j.at("hypotheses")) rs.push_back(result_from_json(rj));
  return rs;
}

// ---- figures ----------------------------------------------------------------

enum class ErrorBarKind { StandardError, Ci95 };

struct FigureCategory {
  std::string label;
  std::optional<double> mean1, mean2;
  std::optional<double> err1, err2;  // half length of the error bar
  std::string stars;
};

struct FigureSpec {
  std::string title;
  std::string series1, series2;  // legend labels with speaker counts
  std::vector<FigureCategory> categories;
};

inline FigureSpec figure_from_result(const HypothesisResult& r,
                                     ErrorBarKind error_bars = ErrorBarKind::StandardError) {
  FigureSpec spec;
  spec.title = r.name + ": " + r.side1 + " vs " + r.side2;
  auto legend = [&](const std::string& side, int n1, int n23) {
    return side + " (" + std::to_string(n1) + ", " + std::to_string(n23) + ")";
  };
  spec.series1 = legend(r.side1, r.n_agg1_side1, r.n_agg23_side1);
  spec.series2 = legend(r.side2, r.n_agg1_side2, r.n_agg23_side2);
  const double scale = error_bars == ErrorBarKind::Ci95 ? 1.959963984540054 : 1.0;
  for (const auto& c : r.cells) {
    FigureCategory cat;
    cat.label = c.label;
    cat.mean1 = c.mean1;
    cat.mean2 = c.mean2;
    if (c.se1) cat.err1 = *c.se1 * scale;
    if (c.se2) cat.err2 = *c.se2 * scale;
    cat.stars = c.stars;
    spec.categories.push_back(std::move(cat));
  }
  return spec;
}

namespace detail {

inline std::string svg_num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

inline std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

inline double nice_step(double span) {
  if (span <= 0.0) return 1.0;
  double raw = span / 6.0;
  double mag = std::pow(10.0, std::floor(std::log10(raw)));
  for (double mult : {1.0, 2.0, 2.5, 5.0, 10.0})
    if (raw <= mult * mag) return mult * mag;
  return 10.0 * mag;
}

}  // namespace detail

// Grouped bar chart: two bars per category, error whiskers, significance
// stars above significant pairs. A pure function of the spec; identical
// specs render byte-identical documents.
inline std::string render_figure_svg(const FigureSpec& spec) {
  using detail::svg_num;
  using detail::xml_escape;

  const std::size_t ncat = spec.categories.size();
  const double margin_l = 64, margin_r = 24, margin_top = 56, margin_bot = 96;
  const double group_w = 58, bar_w = 22, bar_gap = 3;
  const double plot_w = std::max<double>(1, static_cast<double>(ncat)) * group_w;
  const double plot_h = 300;
  const double legend_h = 44;
  const double width = margin_l + plot_w + margin_r;
  const double height = margin_top + plot_h + margin_bot + legend_h;

  double lo = 0.0, hi = 0.0;
  for (const auto& c : spec.categories) {
    auto stretch = [&](const std::optional<double>& m, const std::optional<double>& e) {
      if (!m) return;
      double err = e.value_or(0.0);
      lo = std::min(lo, *m - err);
      hi = std::max(hi, *m + err);
    };
    stretch(c.mean1, c.err1);
    stretch(c.mean2, c.err2);
  }
  if (hi == lo) hi = lo + 1.0;
  double pad = (hi - lo) * 0.12;
  lo -= pad;
  hi += pad;
  const double step = detail::nice_step(hi - lo);

  auto y_of = [&](double v) {
    return margin_top + plot_h * (hi - v) / (hi - lo);
  };

  std::string s;
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + svg_num(width) +
       "\" height=\"" + svg_num(height) + "\" viewBox=\"0 0 " + svg_num(width) +
       " " + svg_num(height) + "\">\n";
  s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s += "<text x=\"" + svg_num(width / 2) + "\" y=\"24\" text-anchor=\"middle\" "
       "font-family=\"sans-serif\" font-size=\"14\" font-weight=\"bold\">" +
       xml_escape(spec.title) + "</text>\n";

  // y axis with ticks and gridlines
  double tick = std::ceil(lo / step) * step;
  for (; tick <= hi + 1e-12; tick += step) {
    double y = y_of(tick);
    s += "<line x1=\"" + svg_num(margin_l) + "\" y1=\"" + svg_num(y) + "\" x2=\"" +
         svg_num(margin_l + plot_w) + "\" y2=\"" + svg_num(y) +
         "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
    s += "<text x=\"" + svg_num(margin_l - 6) + "\" y=\"" + svg_num(y + 3) +
         "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">" +
         svg_num(tick) + "</text>\n";
  }
  // zero baseline and frame
  if (lo < 0.0 && hi > 0.0) {
    double y0 = y_of(0.0);
    s += "<line x1=\"" + svg_num(margin_l) + "\" y1=\"" + svg_num(y0) + "\" x2=\"" +
         svg_num(margin_l + plot_w) + "\" y2=\"" + svg_num(y0) +
         "\" stroke=\"#555555\" stroke-width=\"1\"/>\n";
  }
  s += "<line x1=\"" + svg_num(margin_l) + "\" y1=\"" + svg_num(margin_top) +
       "\" x2=\"" + svg_num(margin_l) + "\" y2=\"" + svg_num(margin_top + plot_h) +
       "\" stroke=\"#333333\" stroke-width=\"1\"/>\n";

  const char* fill1 = "#4878a8";
  const char* fill2 = "#d9822b";
  const double y_base = y_of(std::max(0.0, lo));

  for (std::size_t i = 0; i < ncat; ++i) {
    const FigureCategory& c = spec.categories[i];
    const double gx = margin_l + static_cast<double>(i) * group_w;
    const double x1 = gx + (group_w - 2 * bar_w - bar_gap) / 2;
    const double x2 = x1 + bar_w + bar_gap;

    auto bar = [&](double x, const std::optional<double>& m,
                   const std::optional<double>& e, const char* fill) {
      if (!m) return;
      double yv = y_of(*m);
      double top = std::min(yv, y_base);
      double h = std::fabs(yv - y_base);
      s += "<rect x=\"" + svg_num(x) + "\" y=\"" + svg_num(top) + "\" width=\"" +
           svg_num(bar_w) + "\" height=\"" + svg_num(h) + "\" fill=\"" + fill +
           "\" data-value=\"" + format_double(*m) + "\"";
      if (e) s += " data-err=\"" + format_double(*e) + "\"";
      s += "/>\n";
      if (e) {
        double cx = x + bar_w / 2;
        double ylo = y_of(*m - *e), yhi = y_of(*m + *e);
        s += "<line x1=\"" + svg_num(cx) + "\" y1=\"" + svg_num(yhi) + "\" x2=\"" +
             svg_num(cx) + "\" y2=\"" + svg_num(ylo) +
             "\" stroke=\"#222222\" stroke-width=\"1\"/>\n";
        for (double yy : {yhi, ylo})
          s += "<line x1=\"" + svg_num(cx - 4) + "\" y1=\"" + svg_num(yy) +
               "\" x2=\"" + svg_num(cx + 4) + "\" y2=\"" + svg_num(yy) +
               "\" stroke=\"#222222\" stroke-width=\"1\"/>\n";
      }
    };
    bar(x1, c.mean1, c.err1, fill1);
    bar(x2, c.mean2, c.err2, fill2);

    if (!c.stars.empty()) {
      double top = margin_top + plot_h;
      auto consider = [&](const std::optional<double>& m, const std::optional<double>& e) {
        if (!m) return;
        top = std::min(top, y_of(*m + e.value_or(0.0)));
        top = std::min(top, y_of(std::max(0.0, *m)));
      };
      consider(c.mean1, c.err1);
      consider(c.mean2, c.err2);
      s += "<text x=\"" + svg_num(gx + group_w / 2) + "\" y=\"" +
           svg_num(top - 6) + "\" text-anchor=\"middle\" "
           "font-family=\"sans-serif\" font-size=\"12\">" + c.stars +
           "</text>\n";
    }

    s += "<text x=\"" + svg_num(gx + group_w / 2) + "\" y=\"" +
         svg_num(margin_top + plot_h + 14) + "\" text-anchor=\"end\" "
         "font-family=\"sans-serif\" font-size=\"10\" transform=\"rotate(-35 " +
         svg_num(gx + group_w / 2) + " " + svg_num(margin_top + plot_h + 14) +
         ")\">" + xml_escape(c.label) + "</text>\n";
  }

  // legend
  const double ly = margin_top + plot_h + margin_bot - 10;
  auto legend_row = [&](double y, const char* fill, const std::string& label) {
    s += "<rect x=\"" + svg_num(margin_l) + "\" y=\"" + svg_num(y - 10) +
         "\" width=\"14\" height=\"14\" fill=\"" + fill + "\"/>\n";
    s += "<text x=\"" + svg_num(margin_l + 20) + "\" y=\"" + svg_num(y + 1) +
         "\" font-family=\"sans-serif\" font-size=\"11\">" + xml_escape(label) +
         "</text>\n";
  };
  legend_row(ly, fill1, spec.series1);
  legend_row(ly + 20, fill2, spec.series2);

  s += "</svg>\n";
  return s;
}

}  // namespace stylesync
