#pragma once

#include <cstdint>
#include <fstream>
#include <istream>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "stylesync/error.hpp"
#include "stylesync/lexicon_data.hpp"
#include "stylesync/util.hpp"

namespace stylesync {

struct MarkerCategory {
  std::string name;
  std::vector<std::string> entries;  // lowercase, deduplicated, file order
};

// One presence bit per category, matching the category order of the lexicon.
struct MarkerPresence {
  std::string utterance_id;
  std::uint64_t bits = 0;

  bool has(std::size_t category) const { return (bits >> category) & 1u; }
};

// Category sets are capped at 64 so presence fits in one word.
inline constexpr std::size_t kMaxCategories = 64;

namespace detail {

inline bool is_token_char(unsigned char c) {
  // ASCII letters/digits and the apostrophe form tokens; everything else,
  // including multi-byte UTF-8 sequences, separates.
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
         (c >= '0' && c <= '9') || c == '\'';
}

inline char ascii_lower(char c) {
  return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
}

}  // namespace detail

// Lowercases and splits on any character that is neither ASCII alphanumeric
// nor an apostrophe. Apostrophes are kept word-internally ("don't") and
// trimmed from token edges.
inline std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string cur;
  auto flush = [&] {
    std::size_t b = 0, e = cur.size();
    while (b < e && cur[b] == '\'') ++b;
    while (e > b && cur[e - 1] == '\'') --e;
    if (e > b) tokens.emplace_back(cur.substr(b, e - b));
    cur.clear();
  };
  for (char c : text) {
    if (detail::is_token_char(static_cast<unsigned char>(c)))
      cur += detail::ascii_lower(c);
    else
      flush();
  }
  flush();
  return tokens;
}

class Lexicon {
 public:
  Lexicon() = default;

  explicit Lexicon(std::vector<MarkerCategory> categories)
      : categories_(std::move(categories)) {
    rebuild_index();
  }

  const std::vector<MarkerCategory>& categories() const { return categories_; }
  std::size_t size() const { return categories_.size(); }

  const MarkerCategory& category(std::size_t i) const { return categories_[i]; }

  int category_index(std::string_view name) const {
    for (std::size_t i = 0; i < categories_.size(); ++i)
      if (categories_[i].name == name) return static_cast<int>(i);
    return -1;
  }

  // Bitmask of categories with at least one token occurring in `text`.
  std::uint64_t mark_text(std::string_view text) const {
    std::uint64_t bits = 0;
    const std::uint64_t all = full_mask();
    std::string cur;  // reused buffer, trimmed in place
    auto lookup = [&] {
      while (!cur.empty() && cur.back() == '\'') cur.pop_back();
      std::size_t b = 0;
      while (b < cur.size() && cur[b] == '\'') ++b;
      if (b > 0) cur.erase(0, b);
      if (!cur.empty()) {
        auto it = token_bits_.find(cur);
        if (it != token_bits_.end()) bits |= it->second;
      }
      cur.clear();
    };
    for (char c : text) {
      if (detail::is_token_char(static_cast<unsigned char>(c))) {
        cur += detail::ascii_lower(c);
      } else {
        lookup();
        if (bits == all) return bits;
      }
    }
    lookup();
    return bits;
  }

  std::uint64_t full_mask() const {
    return size() == 64 ? ~std::uint64_t{0} : ((std::uint64_t{1} << size()) - 1);
  }

 private:
  void rebuild_index() {
    if (categories_.size() > kMaxCategories)
      throw Error(ErrorKind::TooManyCategories,
                  "lexicon has " + std::to_string(categories_.size()) +
                      " categories, limit is " + std::to_string(kMaxCategories));
    token_bits_.clear();
    for (std::size_t i = 0; i < categories_.size(); ++i)
      for (const auto& e : categories_[i].entries)
        token_bits_[e] |= std::uint64_t{1} << i;
  }

  std::vector<MarkerCategory> categories_;
  std::unordered_map<std::string, std::uint64_t> token_bits_;
};

// Lexicon file format: lines "#<name>" start a category, "%" starts a
// comment, any other non-empty line is one entry.
inline Lexicon load_lexicon(std::istream& in) {
  std::vector<MarkerCategory> categories;
  std::string line;
  std::size_t lineno = 0;
  auto check_last_nonempty = [&] {
    if (!categories.empty() && categories.back().entries.empty())
      throw Error(ErrorKind::EmptyCategory, categories.back().name, lineno);
  };
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view sv = trim(line);
    if (sv.empty() || sv.front() == '%') continue;
    if (sv.front() == '#') {
      check_last_nonempty();
      std::string name(trim(sv.substr(1)));
      if (name.empty())
        throw Error(ErrorKind::InvalidEntry, "category header without a name",
                    lineno);
      for (const auto& c : categories)
        if (c.name == name)
          throw Error(ErrorKind::DuplicateCategoryName, name, lineno);
      categories.push_back({std::move(name), {}});
      continue;
    }
    if (categories.empty())
      throw Error(ErrorKind::InvalidEntry, "entry before any category header",
                  lineno);
    std::string entry;
    entry.reserve(sv.size());
    for (char c : sv) {
      if (c == ' ' || c == '\t')
        throw Error(ErrorKind::InvalidEntry,
                    "multi-word entry '" + std::string(sv) + "'", lineno);
      entry += detail::ascii_lower(c);
    }
    auto& entries = categories.back().entries;
    bool dup = false;
    for (const auto& e : entries)
      if (e == entry) { dup = true; break; }
    if (!dup) entries.push_back(std::move(entry));
  }
  check_last_nonempty();
  if (categories.empty())
    throw Error(ErrorKind::EmptyCategory, "lexicon file defines no categories");
  return Lexicon(std::move(categories));
}

inline Lexicon load_lexicon(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoError, "cannot open lexicon file " + path);
  return load_lexicon(in);
}

// The embedded eight-category default, parsed once.
inline const Lexicon& default_lexicon() {
  static const Lexicon lex = [] {
    std::istringstream in(kDefaultLexiconText);
    return load_lexicon(in);
  }();
  return lex;
}

}  // namespace stylesync
