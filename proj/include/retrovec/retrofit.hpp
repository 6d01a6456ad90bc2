#pragma once

// Expanded retrofitting. All rows update simultaneously:
//
//   W[k+1] = normalize((S W[k] + A W0) (I + A)^-1)
//
// where S carries a unit diagonal (self-loops), A marks terms that have an
// original embedding, and W0 is zero for graph-only terms.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "retrovec/detail/parallel.hpp"
#include "retrovec/error.hpp"
#include "retrovec/kgraph.hpp"
#include "retrovec/labeled_matrix.hpp"
#include "retrovec/rowmerge.hpp"

namespace retrovec {

struct RetrofitOptions {
  int iterations = 10;
  /// false drops the unit diagonal of S (ablation).
  bool self_loops = true;
  unsigned threads = 1;
};

class RetrofitProblem {
 public:
  RetrofitProblem(AssociationMatrix assoc, std::size_t dims, std::vector<float> w0, std::vector<std::uint8_t> anchored)
      : assoc_(std::move(assoc)), dims_(dims), w0_(std::move(w0)), anchored_(std::move(anchored)) {
    const std::size_t m = assoc_.size();
    if (w0_.size() != m * dims_ || anchored_.size() != m)
      fail(ErrorCode::DimensionMismatch, "W0/A shape does not match the association matrix");
    for (std::size_t i = 0; i < m; ++i) {
      if (anchored_[i]) continue;
      for (std::size_t k = 0; k < dims_; ++k)
        if (w0_[i * dims_ + k] != 0.0f)
          fail(ErrorCode::InvalidArgument, "graph-only term '" + assoc_.vocab()[i] + "' has a nonzero W0 row");
    }
    // Each row is reduced in order of its neighbours' labels, which depends
    // only on the terms and not on how the vocabulary is enumerated.
    const auto& s = assoc_.entries();
    order_.resize(s.nonzeros());
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    for (std::size_t i = 0; i < m; ++i) {
      auto first = order_.begin() + static_cast<std::ptrdiff_t>(s.offsets[i]);
      auto last = order_.begin() + static_cast<std::ptrdiff_t>(s.offsets[i + 1]);
      std::sort(first, last, [&](std::size_t a, std::size_t b) { return vocab()[s.cols[a]] < vocab()[s.cols[b]]; });
    }
  }

  std::size_t size() const noexcept { return assoc_.size(); }
  std::size_t dims() const noexcept { return dims_; }
  const std::vector<std::string>& vocab() const noexcept { return assoc_.vocab(); }
  const AssociationMatrix& association() const noexcept { return assoc_; }
  std::span<const float> w0() const noexcept { return w0_; }
  std::span<const float> w0_row(std::size_t i) const { return {w0_.data() + i * dims_, dims_}; }
  const std::vector<std::uint8_t>& anchored() const noexcept { return anchored_; }

  /// Sparse entry indices of row i in reduction order.
  std::span<const std::size_t> reduction_order(std::size_t i) const {
    const auto& s = assoc_.entries();
    return {order_.data() + s.offsets[i], s.offsets[i + 1] - s.offsets[i]};
  }

 private:
  AssociationMatrix assoc_;
  std::size_t dims_;
  std::vector<float> w0_;
  std::vector<std::uint8_t> anchored_;
  std::vector<std::size_t> order_;
};

/// Aligns embeddings with the graph: embedding terms first in their own
/// order, then graph-only terms lexicographically. Embedding-only terms get
/// a bare unit diagonal; W0 rows are the L2-normalized embeddings.
inline RetrofitProblem assemble_problem(const LabeledMatrix& embeddings, const AssociationMatrix& assoc) {
  if (embeddings.empty() || embeddings.dims() == 0)
    fail(ErrorCode::DimensionMismatch, "retrofitting needs a nonempty embedding matrix");
  std::vector<std::string> vocab = embeddings.labels();
  std::vector<std::string> graph_only;
  for (const auto& term : assoc.vocab())
    if (!embeddings.contains(term)) graph_only.push_back(term);
  std::sort(graph_only.begin(), graph_only.end());
  vocab.insert(vocab.end(), graph_only.begin(), graph_only.end());

  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < vocab.size(); ++i) index.emplace(vocab[i], i);
  std::vector<std::size_t> remap(assoc.size());
  for (std::size_t i = 0; i < assoc.size(); ++i) remap[i] = index.at(assoc.vocab()[i]);
  std::vector<std::optional<std::size_t>> source_row(vocab.size());
  for (std::size_t i = 0; i < assoc.size(); ++i) source_row[remap[i]] = i;

  SparseRows s;
  const auto& src = assoc.entries();
  std::vector<std::pair<std::size_t, double>> row;
  for (std::size_t i = 0; i < vocab.size(); ++i) {
    row.clear();
    if (source_row[i]) {
      auto cols = src.row_cols(*source_row[i]);
      auto vals = src.row_values(*source_row[i]);
      for (std::size_t e = 0; e < cols.size(); ++e) row.emplace_back(remap[cols[e]], vals[e]);
      std::sort(row.begin(), row.end());
    } else {
      row.emplace_back(i, 1.0);
    }
    for (auto [c, v] : row) {
      s.cols.push_back(c);
      s.values.push_back(v);
    }
    s.offsets.push_back(s.cols.size());
  }

  const std::size_t dims = embeddings.dims();
  std::vector<float> w0(vocab.size() * dims, 0.0f);
  std::copy(embeddings.data().begin(), embeddings.data().end(), w0.begin());
  l2_normalize_rows_inplace<float>(std::span<float>(w0.data(), embeddings.rows() * dims), dims);
  std::vector<std::uint8_t> anchored(vocab.size(), 0);
  std::fill_n(anchored.begin(), embeddings.rows(), std::uint8_t{1});
  return RetrofitProblem(AssociationMatrix(std::move(vocab), std::move(s)), dims, std::move(w0), std::move(anchored));
}

/// One simultaneous update of every row. Output rows are either zero or
/// unit length. Each row accumulates in double in a fixed order, so the
/// result is bit-identical for any thread count.
inline std::vector<float> retrofit_step(const RetrofitProblem& problem, std::span<const float> current,
                                        const RetrofitOptions& options = {}) {
  const std::size_t n = problem.dims();
  if (current.size() != problem.size() * n) fail(ErrorCode::DimensionMismatch, "iterate has the wrong shape");
  std::vector<float> next(current.size());
  const auto& s = problem.association().entries();
  detail::parallel_for(problem.size(), options.threads, [&](std::size_t begin, std::size_t end) {
    std::vector<double> acc(n);
    for (std::size_t i = begin; i < end; ++i) {
      std::fill(acc.begin(), acc.end(), 0.0);
      for (std::size_t e : problem.reduction_order(i)) {
        const std::size_t j = s.cols[e];
        if (j == i && !options.self_loops) continue;
        const double w = s.values[e];
        const float* src = current.data() + j * n;
        for (std::size_t k = 0; k < n; ++k) acc[k] += w * static_cast<double>(src[k]);
      }
      if (problem.anchored()[i]) {
        auto orig = problem.w0_row(i);
        for (std::size_t k = 0; k < n; ++k) acc[k] = (acc[k] + static_cast<double>(orig[k])) / 2.0;
      }
      detail::write_scaled<double, float>(acc, detail::l2_norm<double>(acc), std::span<float>(next.data() + i * n, n));
    }
  });
  return next;
}

/// Largest row-wise Euclidean distance between two iterates.
inline double max_row_displacement(std::span<const float> a, std::span<const float> b, std::size_t dims) {
  double worst = 0;
  for (std::size_t off = 0; off + dims <= a.size(); off += dims) {
    double sum = 0;
    for (std::size_t k = 0; k < dims; ++k) {
      double d = static_cast<double>(a[off + k]) - static_cast<double>(b[off + k]);
      sum += d * d;
    }
    worst = std::max(worst, std::sqrt(sum));
  }
  return worst;
}

/// Called after every step with (step number from 1, new iterate).
using StepObserver = std::function<void(int, std::span<const float>)>;

inline std::vector<float> retrofit_from(const RetrofitProblem& problem, std::vector<float> seed,
                                        const RetrofitOptions& options = {}, const StepObserver& observer = {}) {
  if (options.iterations < 1) fail(ErrorCode::InvalidArgument, "iterations must be >= 1");
  for (int step = 1; step <= options.iterations; ++step) {
    seed = retrofit_step(problem, seed, options);
    if (observer) observer(step, seed);
  }
  return seed;
}

inline LabeledMatrix retrofit(const RetrofitProblem& problem, const RetrofitOptions& options = {},
                              const StepObserver& observer = {}) {
  std::vector<float> w0(problem.w0().begin(), problem.w0().end());
  return LabeledMatrix(problem.vocab(), problem.dims(), retrofit_from(problem, std::move(w0), options, observer));
}

}  // namespace retrovec
