#pragma once

// Joining two embedding spaces with partially overlapping vocabularies:
// missing vectors are inferred from the nearest shared terms, the two sides
// are concatenated, and the concatenation is re-expressed as U * Sigma^1/2.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "retrovec/detail/parallel.hpp"
#include "retrovec/error.hpp"
#include "retrovec/labeled_matrix.hpp"

namespace retrovec {

/// Unit-normalized copies of the shared rows of one space, for cosine search.
struct SharedSpace {
  const LabeledMatrix* matrix = nullptr;
  std::vector<std::size_t> rows;  // row in *matrix for each shared label
  std::vector<double> unit;       // shared.size() x dims, row-major
  std::size_t dims = 0;
};

/// Shared / exclusive vocabulary of two spaces plus neighbour tables. Holds
/// pointers to both matrices; they must outlive the index.
class OverlapIndex {
 public:
  OverlapIndex(const LabeledMatrix& a, const LabeledMatrix& b) {
    for (const auto& label : a.labels()) (b.contains(label) ? shared_ : only_a_).push_back(label);
    for (const auto& label : b.labels())
      if (!a.contains(label)) only_b_.push_back(label);
    space_a_ = make_space(a);
    space_b_ = make_space(b);
  }

  const std::vector<std::string>& shared() const noexcept { return shared_; }
  const std::vector<std::string>& only_a() const noexcept { return only_a_; }
  const std::vector<std::string>& only_b() const noexcept { return only_b_; }

  const SharedSpace& space_of(const LabeledMatrix& m) const {
    if (&m == space_a_.matrix) return space_a_;
    if (&m == space_b_.matrix) return space_b_;
    fail(ErrorCode::InvalidArgument, "matrix is not one of the indexed spaces");
  }

 private:
  SharedSpace make_space(const LabeledMatrix& m) const {
    SharedSpace s;
    s.matrix = &m;
    s.dims = m.dims();
    s.rows.reserve(shared_.size());
    s.unit.resize(shared_.size() * m.dims());
    for (std::size_t i = 0; i < shared_.size(); ++i) {
      std::size_t r = *m.find(shared_[i]);
      s.rows.push_back(r);
      auto row = m.row(r);
      double norm = 0;
      for (float x : row) norm += static_cast<double>(x) * x;
      norm = std::sqrt(norm);
      for (std::size_t k = 0; k < m.dims(); ++k)
        s.unit[i * m.dims() + k] = norm > 0 ? static_cast<double>(row[k]) / norm : 0.0;
    }
    return s;
  }

  std::vector<std::string> shared_, only_a_, only_b_;
  SharedSpace space_a_, space_b_;
};

/// want-space vector for a term known only in `have`: the average of the k
/// most cosine-similar shared terms' want-vectors, weighted by their
/// (clamped) similarity; unweighted if no similarity is positive.
inline std::vector<double> infer_missing(const std::string& term, const LabeledMatrix& have, const LabeledMatrix& want,
                                         const OverlapIndex& index, std::size_t k) {
  if (index.shared().empty()) fail(ErrorCode::EmptyOverlap, "no shared vocabulary to interpolate from");
  if (k < 1) fail(ErrorCode::InvalidArgument, "k must be >= 1");
  auto row_index = have.find(term);
  if (!row_index) fail(ErrorCode::InvalidArgument, "'" + term + "' is not in the source space");
  const SharedSpace& hs = index.space_of(have);
  const SharedSpace& ws = index.space_of(want);

  auto query = have.row(*row_index);
  double qnorm = 0;
  for (float x : query) qnorm += static_cast<double>(x) * x;
  qnorm = std::sqrt(qnorm);

  const std::size_t n = index.shared().size();
  std::vector<double> sim(n, 0.0);
  if (qnorm > 0) {
    for (std::size_t i = 0; i < n; ++i) {
      double dot = 0;
      const double* u = hs.unit.data() + i * hs.dims;
      for (std::size_t d = 0; d < hs.dims; ++d) dot += u[d] * static_cast<double>(query[d]);
      sim[i] = dot / qnorm;
    }
  }
  k = std::min(k, n);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                    [&](std::size_t a, std::size_t b) { return sim[a] != sim[b] ? sim[a] > sim[b] : a < b; });

  double total = 0;
  for (std::size_t i = 0; i < k; ++i) total += std::max(sim[order[i]], 0.0);
  std::vector<double> out(want.dims(), 0.0);
  for (std::size_t i = 0; i < k; ++i) {
    double w = total > 0 ? std::max(sim[order[i]], 0.0) / total : 1.0 / static_cast<double>(k);
    auto v = want.row(ws.rows[order[i]]);
    for (std::size_t d = 0; d < out.size(); ++d) out[d] += w * static_cast<double>(v[d]);
  }
  return out;
}

struct SvdResult {
  Eigen::MatrixXd u;  // r x p
  Eigen::VectorXd sigma;  // p, non-increasing
  Eigen::MatrixXd v;  // c x p
};

/// Thin SVD with a deterministic sign: the largest-magnitude entry of each
/// U column is nonnegative.
inline SvdResult thin_svd(const Eigen::MatrixXd& m) {
  Eigen::BDCSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.info() != Eigen::Success) fail(ErrorCode::ConvergenceFailure, "SVD did not converge");
  SvdResult r{svd.matrixU(), svd.singularValues(), svd.matrixV()};
  if (!r.u.allFinite() || !r.sigma.allFinite()) fail(ErrorCode::ConvergenceFailure, "SVD produced non-finite values");
  for (Eigen::Index j = 0; j < r.u.cols(); ++j) {
    Eigen::Index arg = 0;
    r.u.col(j).cwiseAbs().maxCoeff(&arg);
    if (r.u(arg, j) < 0) {
      r.u.col(j) *= -1.0;
      r.v.col(j) *= -1.0;
    }
  }
  return r;
}

struct DiscountedFeatures {
  Eigen::MatrixXd features;  // r x out_dims
  std::vector<double> singular_values;
};

/// First out_dims columns of U * Sigma^1/2.
inline DiscountedFeatures svd_discount(const Eigen::MatrixXd& m, std::size_t out_dims) {
  const auto p = static_cast<std::size_t>(std::min(m.rows(), m.cols()));
  if (out_dims < 1 || out_dims > p)
    fail(ErrorCode::InvalidArgument, "out_dims " + std::to_string(out_dims) + " not in [1, " + std::to_string(p) + "]");
  SvdResult svd = thin_svd(m);
  const auto keep = static_cast<Eigen::Index>(out_dims);
  DiscountedFeatures out;
  out.features = svd.u.leftCols(keep) * svd.sigma.head(keep).cwiseSqrt().asDiagonal();
  out.singular_values.assign(svd.sigma.data(), svd.sigma.data() + svd.sigma.size());
  return out;
}

struct FusionResult {
  LabeledMatrix matrix;
  std::vector<double> singular_values;  // empty when discount is off
};

struct FuseOptions {
  std::size_t k = 10;
  std::size_t out_dims = 300;
  bool discount = true;
  unsigned threads = 1;
};

/// Union of both vocabularies (shared in a-order, then a-only, then b-only),
/// each row the concatenation [a-part, b-part] with missing parts inferred.
inline Eigen::MatrixXd concatenate_aligned(const LabeledMatrix& a, const LabeledMatrix& b, const OverlapIndex& index,
                                           std::size_t k, unsigned threads, std::vector<std::string>* labels_out) {
  const std::size_t da = a.dims(), db = b.dims();
  const std::size_t ns = index.shared().size(), na = index.only_a().size(), nb = index.only_b().size();
  if (ns == 0 && na + nb > 0)
    fail(ErrorCode::EmptyOverlap, "the two spaces share no terms");
  Eigen::MatrixXd m(static_cast<Eigen::Index>(ns + na + nb), static_cast<Eigen::Index>(da + db));
  auto put = [&](std::size_t r, std::size_t offset, auto&& values) {
    for (std::size_t d = 0; d < values.size(); ++d)
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(offset + d)) = static_cast<double>(values[d]);
  };
  for (std::size_t i = 0; i < ns; ++i) {
    put(i, 0, a.row(*a.find(index.shared()[i])));
    put(i, da, b.row(*b.find(index.shared()[i])));
  }
  detail::parallel_for(na, threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const auto& term = index.only_a()[i];
      put(ns + i, 0, a.row(*a.find(term)));
      put(ns + i, da, infer_missing(term, a, b, index, k));
    }
  });
  detail::parallel_for(nb, threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const auto& term = index.only_b()[i];
      put(ns + na + i, 0, infer_missing(term, b, a, index, k));
      put(ns + na + i, da, b.row(*b.find(term)));
    }
  });
  if (labels_out) {
    labels_out->clear();
    labels_out->reserve(ns + na + nb);
    for (const auto* part : {&index.shared(), &index.only_a(), &index.only_b()})
      labels_out->insert(labels_out->end(), part->begin(), part->end());
  }
  return m;
}

inline FusionResult fuse(const LabeledMatrix& a, const LabeledMatrix& b, const FuseOptions& options = {}) {
  OverlapIndex index(a, b);
  if (index.shared().empty()) fail(ErrorCode::EmptyOverlap, "the two spaces share no terms");
  std::vector<std::string> labels;
  Eigen::MatrixXd m = concatenate_aligned(a, b, index, options.k, options.threads, &labels);
  FusionResult result;
  if (!options.discount) {
    std::vector<float> data(static_cast<std::size_t>(m.size()));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = 0; j < m.cols(); ++j)
        data[static_cast<std::size_t>(i * m.cols() + j)] = static_cast<float>(m(i, j));
    result.matrix = LabeledMatrix(std::move(labels), static_cast<std::size_t>(m.cols()), std::move(data));
    return result;
  }
  DiscountedFeatures f = svd_discount(m, options.out_dims);
  std::vector<float> data(static_cast<std::size_t>(f.features.size()));
  for (Eigen::Index i = 0; i < f.features.rows(); ++i)
    for (Eigen::Index j = 0; j < f.features.cols(); ++j)
      data[static_cast<std::size_t>(i * f.features.cols() + j)] = static_cast<float>(f.features(i, j));
  result.matrix = LabeledMatrix(std::move(labels), options.out_dims, std::move(data));
  result.singular_values = std::move(f.singular_values);
  return result;
}

inline void write_singular_values(const std::vector<double>& values, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorCode::IoError, "cannot write '" + path + "'");
  out.precision(17);
  for (double v : values) out << v << '\n';
}

}  // namespace retrovec
