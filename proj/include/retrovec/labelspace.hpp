#pragma once

// Standardized, language-tagged term labels. Raw surface strings from every
// source are folded into the "/c/<lang>/<text>" form so that vocabularies of
// unrelated resources line up row for row.

#include <algorithm>
#include <cstddef>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>

#include "retrovec/detail/lemma_data.hpp"
#include "retrovec/error.hpp"

namespace retrovec {

class LanguageTag {
 public:
  explicit LanguageTag(std::string_view code) : code_(code) {
    if (!valid(code)) fail(ErrorCode::InvalidLanguage, "bad language tag '" + code_ + "'");
  }

  static bool valid(std::string_view code) {
    if (code.size() < 2 || code.size() > 3) return false;
    return std::all_of(code.begin(), code.end(), [](char c) { return c >= 'a' && c <= 'z'; });
  }

  const std::string& code() const noexcept { return code_; }
  bool is_english() const noexcept { return code_ == "en"; }

  friend bool operator==(const LanguageTag&, const LanguageTag&) = default;
  friend auto operator<=>(const LanguageTag&, const LanguageTag&) = default;

 private:
  std::string code_;
};

inline const LanguageTag& english() {
  static const LanguageTag tag("en");
  return tag;
}

class StandardLabel {
 public:
  StandardLabel(LanguageTag language, std::string text)
      : language_(std::move(language)), text_(std::move(text)) {
    if (!valid_text(text_)) fail(ErrorCode::InvalidLabel, "bad label text '" + text_ + "'");
  }

  /// Parses "/c/<lang>/<text>[/...]"; trailing segments (part of speech,
  /// sense) are discarded.
  static StandardLabel from_uri(std::string_view uri) {
    auto [lang, text] = split_uri(uri);
    return StandardLabel(LanguageTag(lang), std::string(text));
  }

  /// (language, text) of a term URI without validating the text.
  static std::pair<std::string_view, std::string_view> split_uri(std::string_view uri) {
    if (uri.substr(0, 3) != "/c/") fail(ErrorCode::InvalidLabel, "not a term URI: '" + std::string(uri) + "'");
    uri.remove_prefix(3);
    auto slash = uri.find('/');
    if (slash == std::string_view::npos) fail(ErrorCode::InvalidLabel, "term URI without text");
    auto rest = uri.substr(slash + 1);
    return {uri.substr(0, slash), rest.substr(0, rest.find('/'))};
  }

  static bool looks_like_uri(std::string_view s) { return s.substr(0, 3) == "/c/"; }

  const LanguageTag& language() const noexcept { return language_; }
  const std::string& text() const noexcept { return text_; }
  std::string uri() const { return "/c/" + language_.code() + "/" + text_; }

  /// Number of underscore-joined words.
  std::size_t word_count() const {
    return static_cast<std::size_t>(std::count(text_.begin(), text_.end(), '_')) + 1;
  }

  friend bool operator==(const StandardLabel&, const StandardLabel&) = default;
  friend auto operator<=>(const StandardLabel&, const StandardLabel&) = default;

 private:
  static bool valid_text(const std::string& text) {
    if (text.empty() || text.front() == '_' || text.back() == '_') return false;
    if (text.find("__") != std::string::npos) return false;
    if (text.find('/') != std::string::npos) return false;
    icu::UnicodeString u = icu::UnicodeString::fromUTF8(text);
    for (int32_t i = 0; i < u.length(); i = u.moveIndex32(i, 1)) {
      UChar32 c = u.char32At(i);
      if (u_isUWhiteSpace(c) || u_iscntrl(c) || u_isupper(c)) return false;
    }
    return true;
  }

  LanguageTag language_;
  std::string text_;
};

struct LemmaRule {
  std::string pos;
  std::string suffix;
  std::string replacement;
};

/// Morphy-style suffix detachment plus an irregular-form table. Exceptions
/// win over rules.
class LemmaRuleSet {
 public:
  LemmaRuleSet() = default;
  LemmaRuleSet(std::vector<LemmaRule> rules, std::unordered_map<std::string, std::string> exceptions)
      : rules_(std::move(rules)), exceptions_(std::move(exceptions)) {
    for (const auto& rule : rules_) {
      if (rule.suffix.empty() || rule.replacement.size() > rule.suffix.size() + 1)
        fail(ErrorCode::InvalidArgument, "lemma rule -" + rule.suffix + " -> -" + rule.replacement +
                                              " would not terminate");
    }
    for (const auto& [form, lemma] : exceptions_) {
      if (form.empty() || lemma.empty()) fail(ErrorCode::InvalidArgument, "empty lemma exception");
    }
  }

  static LemmaRuleSet english_default();

  const std::vector<LemmaRule>& rules() const noexcept { return rules_; }
  const std::unordered_map<std::string, std::string>& exceptions() const noexcept { return exceptions_; }

  void add_exceptions(const std::unordered_map<std::string, std::string>& extra) {
    for (const auto& [form, lemma] : extra) exceptions_[form] = lemma;
  }

 private:
  std::vector<LemmaRule> rules_;
  std::unordered_map<std::string, std::string> exceptions_;
};

using TokenSet = std::unordered_set<std::string>;

namespace detail {

inline void for_each_data_line(std::string_view text, auto&& fn) {
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    auto line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() : nl + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    while (!line.empty() && line.front() == ' ') line.remove_prefix(1);
    while (!line.empty() && line.back() == ' ') line.remove_suffix(1);
    if (line.empty() || line.front() == '#') continue;
    fn(line);
  }
}

inline std::string read_whole_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot open '" + path + "'");
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

inline std::unordered_map<std::string, std::string> parse_exceptions(std::string_view text) {
  std::unordered_map<std::string, std::string> out;
  std::size_t line_no = 0;
  for_each_data_line(text, [&](std::string_view line) {
    ++line_no;
    auto tab = line.find('\t');
    if (tab == std::string_view::npos || tab == 0 || tab + 1 == line.size())
      fail(ErrorCode::ParseError, "exception entry " + std::to_string(line_no) + ": expected form<TAB>lemma");
    out.emplace(std::string(line.substr(0, tab)), std::string(line.substr(tab + 1)));
  });
  return out;
}

inline std::size_t count_code_points(std::string_view s) {
  return static_cast<std::size_t>(
      std::count_if(s.begin(), s.end(), [](char c) { return (static_cast<unsigned char>(c) & 0xC0) != 0x80; }));
}

inline bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

inline const icu::Normalizer2& nfc() {
  static const icu::Normalizer2* instance = [] {
    UErrorCode status = U_ZERO_ERROR;
    const icu::Normalizer2* n = icu::Normalizer2::getNFCInstance(status);
    if (U_FAILURE(status)) fail(ErrorCode::InvalidArgument, "ICU NFC normalizer unavailable");
    return n;
  }();
  return *instance;
}

inline bool is_separator(UChar32 c) { return c == '_' || c == '/' || u_isUWhiteSpace(c) || u_iscntrl(c); }

// '#' stands in for digit runs and is kept as a word character.
inline bool is_detachable_punct(UChar32 c) { return c != '#' && u_ispunct(c); }

/// NFC, full case folding, then split on whitespace/underscores with
/// leading/trailing punctuation detached and dropped.
inline std::vector<std::string> fold_and_tokenize(std::string_view text) {
  UErrorCode status = U_ZERO_ERROR;
  icu::UnicodeString u = icu::UnicodeString::fromUTF8(icu::StringPiece(text.data(), static_cast<int32_t>(text.size())));
  u = nfc().normalize(u, status);
  u.foldCase(U_FOLD_CASE_DEFAULT);
  u = nfc().normalize(u, status);
  if (U_FAILURE(status)) fail(ErrorCode::InvalidArgument, "Unicode normalization failed");

  std::vector<std::string> tokens;
  auto emit = [&](int32_t begin, int32_t end) {
    while (begin < end && is_detachable_punct(u.char32At(begin))) begin = u.moveIndex32(begin, 1);
    while (end > begin) {
      int32_t prev = u.moveIndex32(end, -1);
      if (!is_detachable_punct(u.char32At(prev))) break;
      end = prev;
    }
    if (begin >= end) return;
    std::string token;
    u.tempSubStringBetween(begin, end).toUTF8String(token);
    tokens.push_back(std::move(token));
  };
  int32_t start = 0;
  for (int32_t i = 0; i < u.length(); i = u.moveIndex32(i, 1)) {
    if (is_separator(u.char32At(i))) {
      emit(start, i);
      start = u.moveIndex32(i, 1);
    }
  }
  emit(start, u.length());
  return tokens;
}

inline std::string join(const std::vector<std::string>& tokens, char sep) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += sep;
    out += tokens[i];
  }
  return out;
}

}  // namespace detail

inline LemmaRuleSet LemmaRuleSet::english_default() {
  std::vector<LemmaRule> rules = {
      {"noun", "s", ""},    {"noun", "ses", "s"}, {"noun", "xes", "x"},  {"noun", "zes", "z"},
      {"noun", "ches", "ch"}, {"noun", "shes", "sh"}, {"noun", "ies", "y"}, {"noun", "men", "man"},
      {"verb", "s", ""},    {"verb", "ies", "y"}, {"verb", "es", "e"},   {"verb", "es", ""},
      {"verb", "ed", "e"},  {"verb", "ed", ""},   {"verb", "ing", "e"},  {"verb", "ing", ""},
      {"adj", "er", ""},    {"adj", "est", ""},   {"adj", "er", "e"},    {"adj", "est", "e"},
  };
  return LemmaRuleSet(std::move(rules), detail::parse_exceptions(detail::kDefaultExceptions));
}

inline std::unordered_map<std::string, std::string> load_exceptions(const std::string& path) {
  return detail::parse_exceptions(detail::read_whole_file(path));
}

inline TokenSet parse_stopwords(std::string_view text) {
  TokenSet out;
  detail::for_each_data_line(text, [&](std::string_view line) {
    while (!line.empty() && (line.back() == ' ' || line.back() == '\t')) line.remove_suffix(1);
    if (!line.empty()) out.emplace(line);
  });
  return out;
}

inline TokenSet default_stopwords() { return parse_stopwords(detail::kDefaultStopwords); }

inline TokenSet load_stopwords(const std::string& path) {
  return parse_stopwords(detail::read_whole_file(path));
}

namespace detail {

inline std::optional<std::string> lemmatize_once(const std::string& token, const LemmaRuleSet& rules,
                                                 const TokenSet* vocab) {
  if (auto it = rules.exceptions().find(token); it != rules.exceptions().end()) return it->second;
  for (const auto& rule : rules.rules()) {
    if (!ends_with(token, rule.suffix)) continue;
    std::string candidate = token.substr(0, token.size() - rule.suffix.size()) + rule.replacement;
    if (candidate.empty()) continue;
    bool ok = vocab ? vocab->contains(candidate) : count_code_points(candidate) >= 2;
    if (ok) return candidate;
  }
  return std::nullopt;
}

}  // namespace detail

/// Root form of a lowercase token. A single detachment step (exception
/// lookup, else the first rule whose candidate is acceptable) is repeated
/// until nothing changes, which makes the result a fixed point of itself.
inline std::string lemmatize(const std::string& token, const LemmaRuleSet& rules, const TokenSet* vocab = nullptr) {
  std::string current = token;
  std::unordered_set<std::string> seen{current};
  while (auto next = detail::lemmatize_once(current, rules, vocab)) {
    if (*next == current || !seen.insert(*next).second) break;
    current = std::move(*next);
  }
  return current;
}

enum class DigitStyle { collapse_runs, per_digit };

/// Lookup-side rewrite for rows that came from word2vec, whose vocabulary
/// has digits replaced by '#'.
inline std::string hash_digits(std::string_view text, DigitStyle style = DigitStyle::collapse_runs) {
  std::string out;
  out.reserve(text.size());
  bool in_run = false;
  for (char c : text) {
    bool digit = c >= '0' && c <= '9';
    if (!digit) {
      out += c;
    } else if (style == DigitStyle::per_digit || !in_run) {
      out += '#';
    }
    in_run = digit;
  }
  return out;
}

/// Tokenize, fold, drop stopwords, lemmatize, join.
class Standardizer {
 public:
  Standardizer() : rules_(LemmaRuleSet::english_default()), stopwords_(default_stopwords()) {}
  Standardizer(LemmaRuleSet rules, TokenSet stopwords) : rules_(std::move(rules)), stopwords_(std::move(stopwords)) {}

  const LemmaRuleSet& rules() const noexcept { return rules_; }
  const TokenSet& stopwords() const noexcept { return stopwords_; }

  StandardLabel standardize(std::string_view text, const LanguageTag& language, const TokenSet* vocab = nullptr) const {
    std::vector<std::string> tokens = detail::fold_and_tokenize(text);
    if (tokens.empty()) fail(ErrorCode::EmptyAfterNormalization, "no tokens in '" + std::string(text) + "'");
    // Lemmatizing can turn a token into a stopword ("ands" -> "and") or
    // expose trailing punctuation, so the passes repeat until nothing changes.
    for (;;) {
      std::vector<std::string> next = drop_stopwords(tokens);
      if (language.is_english()) {
        for (auto& t : next) t = lemmatize(t, rules_, vocab);
        next = detail::fold_and_tokenize(detail::join(next, '_'));
        if (next.empty()) fail(ErrorCode::EmptyAfterNormalization, "no tokens left in '" + std::string(text) + "'");
      }
      if (next == tokens) break;
      tokens = std::move(next);
    }
    return StandardLabel(language, detail::join(tokens, '_'));
  }

  std::optional<StandardLabel> try_standardize(std::string_view text, const LanguageTag& language,
                                               const TokenSet* vocab = nullptr) const {
    try {
      return standardize(text, language, vocab);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::EmptyAfterNormalization || e.code() == ErrorCode::InvalidLabel) return std::nullopt;
      throw;
    }
  }

  /// Re-standardizes an existing "/c/<lang>/<text>" label; the text's
  /// underscores act as word boundaries.
  StandardLabel standardize_uri(std::string_view uri, const TokenSet* vocab = nullptr) const {
    auto [lang, text] = StandardLabel::split_uri(uri);
    return standardize(text, LanguageTag(lang), vocab);
  }

 private:
  std::vector<std::string> drop_stopwords(const std::vector<std::string>& tokens) const {
    if (tokens.size() < 2) return tokens;
    std::vector<std::string> kept;
    for (const auto& t : tokens)
      if (!stopwords_.contains(t)) kept.push_back(t);
    return kept.empty() ? tokens : kept;
  }

  LemmaRuleSet rules_;
  TokenSet stopwords_;
};

inline StandardLabel standardize(std::string_view text, const LanguageTag& language,
                                 const Standardizer& standardizer = Standardizer(), const TokenSet* vocab = nullptr) {
  return standardizer.standardize(text, language, vocab);
}

/// Lowercase single-token texts, the lemma validity set for a vocabulary.
inline TokenSet single_token_set(const std::vector<std::string>& raw_labels) {
  TokenSet out;
  for (const auto& label : raw_labels) {
    auto tokens = detail::fold_and_tokenize(label);
    if (tokens.size() == 1) out.insert(std::move(tokens.front()));
  }
  return out;
}

}  // namespace retrovec
