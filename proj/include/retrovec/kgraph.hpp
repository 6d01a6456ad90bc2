#pragma once

// Edge-list ingestion and the sparse association matrix used by
// retrofitting. Relation labels are not part of the model: every assertion
// is an undirected weighted link between two standardized terms.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "retrovec/error.hpp"
#include "retrovec/labelspace.hpp"

namespace retrovec {

struct Assertion {
  StandardLabel start;
  StandardLabel end;
  double weight;
  std::string source;
};

struct LoadStats {
  std::size_t lines = 0;
  std::size_t self_edges = 0;
  std::size_t unlabelable = 0;
};

namespace detail {

inline std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  for (;;) {
    auto tab = line.find('\t', pos);
    out.push_back(line.substr(pos, tab == std::string_view::npos ? std::string_view::npos : tab - pos));
    if (tab == std::string_view::npos) break;
    pos = tab + 1;
  }
  return out;
}

}  // namespace detail

/// Reads the 4-column edge TSV: start_uri, end_uri, weight (blank means 1),
/// source. Both endpoints are re-standardized; assertions whose endpoints
/// collapse to the same term are dropped.
inline std::vector<Assertion> load_assertions(const std::string& path, const Standardizer& standardizer = Standardizer(),
                                              const TokenSet* vocab = nullptr, LoadStats* stats = nullptr) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot open '" + path + "'");
  std::vector<Assertion> out;
  LoadStats local;
  std::string line;
  std::size_t line_no = 0;
  auto where = [&] { return path + ":" + std::to_string(line_no) + ": "; };
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    ++local.lines;
    auto cols = detail::split_tabs(line);
    if (cols.size() != 4) fail(ErrorCode::ParseError, where() + "expected 4 tab-separated columns");
    if (!StandardLabel::looks_like_uri(cols[0]) || !StandardLabel::looks_like_uri(cols[1]))
      fail(ErrorCode::ParseError, where() + "endpoints must be /c/<lang>/<text> URIs");
    double weight = 1.0;
    if (!cols[2].empty()) {
      auto [ptr, ec] = std::from_chars(cols[2].data(), cols[2].data() + cols[2].size(), weight);
      if (ec != std::errc() || ptr != cols[2].data() + cols[2].size() || !std::isfinite(weight))
        fail(ErrorCode::ParseError, where() + "bad weight '" + std::string(cols[2]) + "'");
    }
    if (!(weight > 0)) fail(ErrorCode::NonPositiveWeight, where() + "weight " + std::string(cols[2]) + " <= 0");
    std::optional<StandardLabel> start, end;
    try {
      start = standardizer.standardize_uri(cols[0], vocab);
      end = standardizer.standardize_uri(cols[1], vocab);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::EmptyAfterNormalization || e.code() == ErrorCode::InvalidLabel) {
        ++local.unlabelable;
        continue;
      }
      if (e.code() == ErrorCode::InvalidLanguage) fail(ErrorCode::ParseError, where() + e.what());
      throw;
    }
    if (*start == *end) {
      ++local.self_edges;
      continue;
    }
    out.push_back({std::move(*start), std::move(*end), weight, std::string(cols[3])});
  }
  if (stats) *stats = local;
  return out;
}

/// Writes assertions back out in the edge TSV format; weights keep full
/// precision so a reload reproduces them exactly.
inline void write_assertions(const std::vector<Assertion>& assertions, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::IoError, "cannot write '" + path + "'");
  char buf[32];
  for (const auto& a : assertions) {
    std::snprintf(buf, sizeof buf, "%.17g", a.weight);
    out << a.start.uri() << '\t' << a.end.uri() << '\t' << buf << '\t' << a.source << '\n';
  }
  if (!out) fail(ErrorCode::IoError, "short write to '" + path + "'");
}

inline std::vector<Assertion> exclude_sources(std::vector<Assertion> assertions, const std::set<std::string>& excluded) {
  std::erase_if(assertions, [&](const Assertion& a) { return excluded.contains(a.source); });
  return assertions;
}

/// Divides every weight by its source's mean weight.
inline std::vector<Assertion> rescale_by_source(std::vector<Assertion> assertions) {
  std::map<std::string, std::pair<double, std::size_t>> totals;
  for (const auto& a : assertions) {
    auto& [sum, count] = totals[a.source];
    sum += a.weight;
    ++count;
  }
  for (auto& a : assertions) {
    const auto& [sum, count] = totals[a.source];
    a.weight /= sum / static_cast<double>(count);
  }
  return assertions;
}

struct TermFilter {
  /// Minimum occurrence count per language; `other` applies to languages
  /// without an entry.
  std::map<std::string, std::size_t> min_count = {{"en", 4}};
  std::size_t other_min_count = 3;
  std::size_t max_words = 3;

  std::size_t threshold(const LanguageTag& lang) const {
    auto it = min_count.find(lang.code());
    return it == min_count.end() ? other_min_count : it->second;
  }
};

/// Drops every assertion touching a term that is too rare for its language
/// or longer than max_words. Counts come from the input only (one pass).
inline std::vector<Assertion> filter_terms(const std::vector<Assertion>& assertions, const TermFilter& filter = {}) {
  std::unordered_map<std::string, std::size_t> occurrences;
  for (const auto& a : assertions) {
    ++occurrences[a.start.uri()];
    ++occurrences[a.end.uri()];
  }
  auto keep = [&](const StandardLabel& term) {
    return term.word_count() <= filter.max_words && occurrences[term.uri()] >= filter.threshold(term.language());
  };
  std::vector<Assertion> out;
  for (const auto& a : assertions)
    if (keep(a.start) && keep(a.end)) out.push_back(a);
  return out;
}

/// Row-compressed sparse matrix with entries sorted by column in each row.
struct SparseRows {
  std::vector<std::size_t> offsets{0};
  std::vector<std::size_t> cols;
  std::vector<double> values;

  std::size_t rows() const { return offsets.size() - 1; }
  std::size_t nonzeros() const { return cols.size(); }
  std::span<const std::size_t> row_cols(std::size_t i) const {
    return {cols.data() + offsets[i], offsets[i + 1] - offsets[i]};
  }
  std::span<const double> row_values(std::size_t i) const {
    return {values.data() + offsets[i], offsets[i + 1] - offsets[i]};
  }
  double get(std::size_t i, std::size_t j) const {
    auto c = row_cols(i);
    auto it = std::lower_bound(c.begin(), c.end(), j);
    if (it == c.end() || *it != j) return 0.0;
    return values[offsets[i] + static_cast<std::size_t>(it - c.begin())];
  }
};

/// Square association matrix over `vocab`: nonnegative, unit diagonal, each
/// row's off-diagonal entries summing to 1 (or 0 for isolated terms).
class AssociationMatrix {
 public:
  AssociationMatrix() = default;

  AssociationMatrix(std::vector<std::string> vocab, SparseRows entries)
      : vocab_(std::move(vocab)), entries_(std::move(entries)) {
    if (entries_.rows() != vocab_.size()) fail(ErrorCode::DimensionMismatch, "association rows differ from vocab size");
    for (std::size_t i = 0; i < vocab_.size(); ++i)
      if (!index_.emplace(vocab_[i], i).second) fail(ErrorCode::DuplicateLabel, "duplicate term '" + vocab_[i] + "'");
  }

  /// vocab with no edges: S = I.
  static AssociationMatrix identity(std::vector<std::string> vocab) {
    SparseRows s;
    for (std::size_t i = 0; i < vocab.size(); ++i) {
      s.cols.push_back(i);
      s.values.push_back(1.0);
      s.offsets.push_back(s.cols.size());
    }
    return AssociationMatrix(std::move(vocab), std::move(s));
  }

  std::size_t size() const noexcept { return vocab_.size(); }
  const std::vector<std::string>& vocab() const noexcept { return vocab_; }
  const SparseRows& entries() const noexcept { return entries_; }
  std::optional<std::size_t> find(const std::string& term) const {
    auto it = index_.find(term);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }
  double get(std::size_t i, std::size_t j) const { return entries_.get(i, j); }

  /// Checks the stated row invariants within `tol`; returns a description
  /// of the first violation or an empty string.
  std::string check_invariants(double tol = 1e-12) const {
    for (std::size_t i = 0; i < size(); ++i) {
      auto cols = entries_.row_cols(i);
      auto vals = entries_.row_values(i);
      double off = 0;
      bool diag = false;
      for (std::size_t e = 0; e < cols.size(); ++e) {
        if (vals[e] < 0) return "negative entry in row " + std::to_string(i);
        if (e && cols[e] <= cols[e - 1]) return "unsorted row " + std::to_string(i);
        if (cols[e] == i) {
          if (vals[e] != 1.0) return "diagonal != 1 in row " + std::to_string(i);
          diag = true;
        } else {
          off += vals[e];
        }
      }
      if (!diag) return "missing diagonal in row " + std::to_string(i);
      if (cols.size() > 1 && std::abs(off - 1.0) > tol) return "row " + std::to_string(i) + " sums to " + std::to_string(off);
    }
    return {};
  }

 private:
  std::vector<std::string> vocab_;
  SparseRows entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

namespace detail {

struct Triplet {
  std::size_t row, col;
  double value;
};

inline SparseRows compress(std::vector<Triplet> triplets, std::size_t n) {
  std::stable_sort(triplets.begin(), triplets.end(),
                   [](const Triplet& a, const Triplet& b) { return a.row != b.row ? a.row < b.row : a.col < b.col; });
  SparseRows s;
  s.offsets.assign(1, 0);
  std::size_t t = 0;
  for (std::size_t i = 0; i < n; ++i) {
    while (t < triplets.size() && triplets[t].row == i) {
      std::size_t col = triplets[t].col;
      double sum = 0;
      for (; t < triplets.size() && triplets[t].row == i && triplets[t].col == col; ++t) sum += triplets[t].value;
      s.cols.push_back(col);
      s.values.push_back(sum);
    }
    s.offsets.push_back(s.cols.size());
  }
  return s;
}

}  // namespace detail

/// Vocabulary for a set of assertions: extra_vocab in its own order, then
/// graph-only terms lexicographically.
inline std::vector<std::string> association_vocab(const std::vector<Assertion>& assertions,
                                                  const std::vector<std::string>& extra_vocab) {
  std::vector<std::string> vocab;
  std::unordered_set<std::string> seen;
  for (const auto& t : extra_vocab)
    if (seen.insert(t).second) vocab.push_back(t);
  std::set<std::string> graph_only;
  for (const auto& a : assertions) {
    for (const auto* term : {&a.start, &a.end}) {
      auto uri = term->uri();
      if (!seen.contains(uri)) graph_only.insert(std::move(uri));
    }
  }
  vocab.insert(vocab.end(), graph_only.begin(), graph_only.end());
  return vocab;
}

/// Symmetric weight accumulation: each assertion adds its weight to S[i][j]
/// and S[j][i]. No normalization, no diagonal.
inline SparseRows accumulate_edges(const std::vector<Assertion>& assertions,
                                   const std::unordered_map<std::string, std::size_t>& index, std::size_t n) {
  std::vector<detail::Triplet> triplets;
  triplets.reserve(assertions.size() * 2);
  for (const auto& a : assertions) {
    std::size_t i = index.at(a.start.uri());
    std::size_t j = index.at(a.end.uri());
    if (i == j) continue;
    triplets.push_back({i, j, a.weight});
    triplets.push_back({j, i, a.weight});
  }
  return detail::compress(std::move(triplets), n);
}

inline AssociationMatrix build_association(const std::vector<Assertion>& assertions,
                                           const std::vector<std::string>& extra_vocab = {}) {
  std::vector<std::string> vocab = association_vocab(assertions, extra_vocab);
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < vocab.size(); ++i) index.emplace(vocab[i], i);
  SparseRows raw = accumulate_edges(assertions, index, vocab.size());

  std::vector<detail::Triplet> triplets;
  triplets.reserve(raw.nonzeros() + vocab.size());
  for (std::size_t i = 0; i < vocab.size(); ++i) {
    auto cols = raw.row_cols(i);
    auto vals = raw.row_values(i);
    double sum = 0;
    for (double v : vals) sum += v;
    for (std::size_t e = 0; e < cols.size(); ++e) triplets.push_back({i, cols[e], vals[e] / sum});
    triplets.push_back({i, i, 1.0});
  }
  return AssociationMatrix(std::move(vocab), detail::compress(std::move(triplets), index.size()));
}

}  // namespace retrovec
