#pragma once

// Word-similarity evaluation: gold-standard loading, dev/test splits,
// cosine lookup through standardized labels, Spearman rho and Fisher
// confidence intervals.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "retrovec/error.hpp"
#include "retrovec/labeled_matrix.hpp"
#include "retrovec/labelspace.hpp"

namespace retrovec {

struct GoldPair {
  std::string word1;
  std::string word2;
  double score;
  LanguageTag language;
};

enum class GoldFormat {
  plain,
  /// MEN lemma-form files: each word carries a "-<pos letter>" tag.
  men,
};

struct GoldOptions {
  GoldFormat format = GoldFormat::plain;
  LanguageTag language = english();
  /// First non-comment line is a column header.
  bool skip_header = false;
};

namespace detail {

inline std::string strip_pos_tag(std::string word) {
  if (word.size() >= 3 && word[word.size() - 2] == '-' && std::isalpha(static_cast<unsigned char>(word.back())))
    word.resize(word.size() - 2);
  return word;
}

}  // namespace detail

/// "word1 word2 score ..." per line, whitespace or tab separated. The score
/// is the third field; later fields (individual ratings) are ignored.
inline std::vector<GoldPair> load_gold(const std::string& path, const GoldOptions& options = {}) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot open '" + path + "'");
  std::vector<GoldPair> out;
  std::string line;
  std::size_t line_no = 0;
  bool header_pending = options.skip_header;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos || line.front() == '#') continue;
    if (header_pending) {
      header_pending = false;
      continue;
    }
    std::istringstream fields(line);
    std::string w1, w2, score_text;
    fields >> w1 >> w2 >> score_text;
    auto where = path + ":" + std::to_string(line_no) + ": ";
    if (score_text.empty()) fail(ErrorCode::ParseError, where + "expected 'word1 word2 score'");
    double score = 0;
    auto [ptr, ec] = std::from_chars(score_text.data(), score_text.data() + score_text.size(), score);
    if (ec != std::errc() || ptr != score_text.data() + score_text.size() || !std::isfinite(score))
      fail(ErrorCode::ParseError, where + "bad score '" + score_text + "'");
    if (options.format == GoldFormat::men) {
      w1 = detail::strip_pos_tag(std::move(w1));
      w2 = detail::strip_pos_tag(std::move(w2));
    }
    out.push_back({std::move(w1), std::move(w2), score, options.language});
  }
  return out;
}

/// Items at 1-based positions p with p = chunk_index (mod num_chunks), the
/// assignment made by `split -n r/<chunk_index>/<num_chunks>`.
template <typename T>
std::vector<T> round_robin_split(std::span<const T> items, std::size_t num_chunks, std::size_t chunk_index) {
  if (num_chunks < 1 || chunk_index < 1 || chunk_index > num_chunks)
    fail(ErrorCode::InvalidChunk, "chunk " + std::to_string(chunk_index) + " of " + std::to_string(num_chunks));
  std::vector<T> out;
  for (std::size_t i = chunk_index - 1; i < items.size(); i += num_chunks) out.push_back(items[i]);
  return out;
}

/// The other chunks concatenated in chunk order.
template <typename T>
std::vector<T> round_robin_complement(std::span<const T> items, std::size_t num_chunks, std::size_t held_out) {
  if (held_out < 1 || held_out > num_chunks) fail(ErrorCode::InvalidChunk, "held-out chunk out of range");
  std::vector<T> out;
  for (std::size_t c = 1; c <= num_chunks; ++c) {
    if (c == held_out) continue;
    auto part = round_robin_split(items, num_chunks, c);
    out.insert(out.end(), part.begin(), part.end());
  }
  return out;
}

enum class Split { dev, test, all };

constexpr std::string_view to_string(Split s) {
  switch (s) {
    case Split::dev: return "dev";
    case Split::test: return "test";
    case Split::all: return "all";
  }
  return "all";
}

inline Split parse_split(std::string_view s) {
  if (s == "dev") return Split::dev;
  if (s == "test") return Split::test;
  if (s == "all") return Split::all;
  fail(ErrorCode::ConfigError, "unknown split '" + std::string(s) + "'");
}

enum class SplitScheme {
  none,
  round_robin,
  /// Separate published dev and test files.
  files,
};

struct Dataset {
  std::string name;
  std::vector<GoldPair> pairs;
  SplitScheme scheme = SplitScheme::none;
  std::size_t chunks = 3;
  std::size_t test_chunk = 3;
  std::vector<GoldPair> dev_pairs;
  std::vector<GoldPair> test_pairs;
};

inline std::vector<GoldPair> select_split(const Dataset& data, Split split) {
  std::span<const GoldPair> all(data.pairs);
  switch (data.scheme) {
    case SplitScheme::none:
      if (split != Split::all) fail(ErrorCode::ConfigError, "dataset '" + data.name + "' has no dev/test split");
      return data.pairs;
    case SplitScheme::round_robin:
      if (split == Split::test) return round_robin_split(all, data.chunks, data.test_chunk);
      if (split == Split::dev) return round_robin_complement(all, data.chunks, data.test_chunk);
      return data.pairs;
    case SplitScheme::files:
      if (split == Split::test) return data.test_pairs;
      if (split == Split::dev) return data.dev_pairs;
      if (!data.pairs.empty()) return data.pairs;
      {
        std::vector<GoldPair> out = data.dev_pairs;
        out.insert(out.end(), data.test_pairs.begin(), data.test_pairs.end());
        return out;
      }
  }
  return data.pairs;
}

enum class LookupMode {
  standardized,
  /// Raw labels, exact string match only.
  exact,
};

/// Maps evaluation words to rows of a matrix the same way the matrix's own
/// labels were produced. Lemmatization checks candidates against the
/// single-word labels present in the matrix for that language.
class TermLookup {
 public:
  TermLookup(const LabeledMatrix& matrix, Standardizer standardizer = Standardizer(),
             LookupMode mode = LookupMode::standardized, bool digit_fallback = false)
      : matrix_(&matrix), standardizer_(std::move(standardizer)), mode_(mode), digit_fallback_(digit_fallback) {
    if (mode_ != LookupMode::standardized) return;
    for (const auto& label : matrix.labels()) {
      if (!StandardLabel::looks_like_uri(label)) continue;
      auto rest = std::string_view(label).substr(3);
      auto slash = rest.find('/');
      if (slash == std::string_view::npos) continue;
      auto text = rest.substr(slash + 1);
      if (text.find('_') == std::string_view::npos) vocab_[std::string(rest.substr(0, slash))].emplace(text);
    }
  }

  const LabeledMatrix& matrix() const noexcept { return *matrix_; }

  std::optional<std::size_t> find(const std::string& word, const LanguageTag& language) const {
    if (mode_ == LookupMode::exact) {
      if (auto r = matrix_->find(word)) return r;
      if (digit_fallback_) return matrix_->find(hash_digits(word));
      return std::nullopt;
    }
    auto it = vocab_.find(language.code());
    const TokenSet* vocab = it == vocab_.end() ? nullptr : &it->second;
    auto label = standardizer_.try_standardize(word, language, vocab);
    if (!label) return std::nullopt;
    std::string uri = label->uri();
    if (auto r = matrix_->find(uri)) return r;
    if (digit_fallback_) return matrix_->find(hash_digits(uri));
    return std::nullopt;
  }

 private:
  const LabeledMatrix* matrix_;
  Standardizer standardizer_;
  LookupMode mode_;
  bool digit_fallback_;
  std::map<std::string, TokenSet> vocab_;
};

inline double cosine(std::span<const float> a, std::span<const float> b) {
  double dot = 0, na = 0, nb = 0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    dot += static_cast<double>(a[k]) * b[k];
    na += static_cast<double>(a[k]) * a[k];
    nb += static_cast<double>(b[k]) * b[k];
  }
  if (na <= 0 || nb <= 0) return 0.0;
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

/// Cosine similarity of two words; a word with no row counts as the zero
/// vector, and any cosine involving a zero vector is 0.
inline double similarity(const TermLookup& lookup, const std::string& w1, const std::string& w2,
                         const LanguageTag& language) {
  auto r1 = lookup.find(w1, language);
  auto r2 = lookup.find(w2, language);
  if (!r1 || !r2) return 0.0;
  return cosine(lookup.matrix().row(*r1), lookup.matrix().row(*r2));
}

/// Ranks 1..n with tied values sharing the mean of their rank range.
inline std::vector<double> average_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    double rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = rank;
    i = j + 1;
  }
  return ranks;
}

inline double pearson(std::span<const double> x, std::span<const double> y) {
  const double n = static_cast<double>(x.size());
  double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

inline double spearman(std::span<const double> gold, std::span<const double> predicted) {
  if (gold.size() != predicted.size()) fail(ErrorCode::InvalidArgument, "spearman inputs differ in length");
  if (gold.size() < 2) fail(ErrorCode::DegenerateInput, "spearman needs at least 2 pairs");
  auto constant = [](std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); });
  };
  if (constant(gold) || constant(predicted)) fail(ErrorCode::DegenerateInput, "one side of the correlation is constant");
  auto rg = average_ranks(gold);
  auto rp = average_ranks(predicted);
  return std::clamp(pearson(rg, rp), -1.0, 1.0);
}

inline double z_critical(double level) {
  if (std::abs(level - 0.95) < 1e-12) return 1.959964;
  if (std::abs(level - 0.90) < 1e-12) return 1.644854;
  if (std::abs(level - 0.99) < 1e-12) return 2.575829;
  fail(ErrorCode::InvalidArgument, "unsupported confidence level " + std::to_string(level));
}

struct Interval {
  double low;
  double high;
};

/// Interval from the Fisher transform: tanh(atanh(rho) -/+ z / sqrt(n - 3)).
inline Interval fisher_ci(double rho, std::size_t n, double level = 0.95) {
  if (!(std::abs(rho) < 1.0) || n < 4)
    fail(ErrorCode::DegenerateCorrelation, "no Fisher interval for rho=" + std::to_string(rho) + ", n=" + std::to_string(n));
  const double z = std::atanh(rho);
  const double half = z_critical(level) / std::sqrt(static_cast<double>(n) - 3.0);
  return {std::tanh(z - half), std::tanh(z + half)};
}

enum class OovPolicy {
  /// Missing words score 0.
  zero,
  /// Pairs with a missing word are left out of rho.
  drop,
};

struct EvalReport {
  std::string dataset;
  Split split = Split::all;
  double rho = 0;
  double ci_low = 0;
  double ci_high = 0;
  std::size_t n = 0;
  double oov_fraction = 0;
};

struct EvalOptions {
  OovPolicy oov = OovPolicy::zero;
  double level = 0.95;
};

/// n counts the pairs that entered rho; oov_fraction is relative to the
/// whole split.
inline EvalReport evaluate(const TermLookup& lookup, const Dataset& data, Split split, const EvalOptions& options = {}) {
  std::vector<GoldPair> pairs = select_split(data, split);
  if (pairs.empty()) fail(ErrorCode::DegenerateInput, "dataset '" + data.name + "' split is empty");
  std::vector<double> gold, predicted;
  std::size_t oov = 0;
  for (const auto& p : pairs) {
    auto r1 = lookup.find(p.word1, p.language);
    auto r2 = lookup.find(p.word2, p.language);
    bool missing = !r1 || !r2;
    oov += missing;
    if (missing && options.oov == OovPolicy::drop) continue;
    gold.push_back(p.score);
    predicted.push_back(missing ? 0.0 : cosine(lookup.matrix().row(*r1), lookup.matrix().row(*r2)));
  }
  EvalReport report;
  report.dataset = data.name;
  report.split = split;
  report.n = gold.size();
  report.oov_fraction = static_cast<double>(oov) / static_cast<double>(pairs.size());
  report.rho = spearman(gold, predicted);
  if (report.n < 4) {
    report.ci_low = -1.0;
    report.ci_high = 1.0;
  } else if (std::abs(report.rho) >= 1.0) {
    report.ci_low = report.ci_high = report.rho;
  } else {
    auto ci = fisher_ci(report.rho, report.n, options.level);
    report.ci_low = ci.low;
    report.ci_high = ci.high;
  }
  return report;
}

inline void write_report_tsv(std::ostream& out, const std::vector<EvalReport>& reports, bool header = true) {
  if (header) out << "dataset\tsplit\tn\trho\tci_low\tci_high\toov_fraction\n";
  char buf[160];
  for (const auto& r : reports) {
    std::snprintf(buf, sizeof buf, "\t%zu\t%.6f\t%.6f\t%.6f\t%.6f\n", r.n, r.rho, r.ci_low, r.ci_high, r.oov_fraction);
    out << r.dataset << '\t' << to_string(r.split) << buf;
  }
}

inline void write_report_table(std::ostream& out, const std::vector<EvalReport>& reports) {
  std::size_t width = 7;
  for (const auto& r : reports) width = std::max(width, r.dataset.size());
  char buf[200];
  std::snprintf(buf, sizeof buf, "%-*s  %-5s  %6s  %7s  %17s  %6s\n", static_cast<int>(width), "dataset", "split", "n",
                "rho", "95% interval", "oov");
  out << buf;
  for (const auto& r : reports) {
    std::snprintf(buf, sizeof buf, "%-*s  %-5s  %6zu  %7.3f  [%6.3f, %6.3f]  %5.1f%%\n", static_cast<int>(width),
                  r.dataset.c_str(), std::string(to_string(r.split)).c_str(), r.n, r.rho, r.ci_low, r.ci_high,
                  100.0 * r.oov_fraction);
    out << buf;
  }
}

}  // namespace retrovec
