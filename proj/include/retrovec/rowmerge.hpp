#pragma once

// Collapsing rows that standardize to the same label, and the column/row
// rescalings applied to each prepared source.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "retrovec/error.hpp"
#include "retrovec/labeled_matrix.hpp"

namespace retrovec {

/// Norms below this count as zero.
inline constexpr double kZeroNorm = 1e-12;

namespace detail {

template <typename Scalar>
using accum_t = std::conditional_t<std::is_same_v<Scalar, float>, double, long double>;

// Vectors whose norm is already this close to 1 are left bit-for-bit as they
// are, so renormalizing a normalized vector is the identity.
template <typename Scalar>
constexpr double unit_tolerance() {
  return 4.0 * static_cast<double>(std::numeric_limits<Scalar>::epsilon());
}

template <typename Acc, typename Scalar>
void write_scaled(std::span<const Acc> acc, Acc norm, std::span<Scalar> out) {
  const bool keep = norm < kZeroNorm || std::abs(static_cast<double>(norm) - 1.0) <= unit_tolerance<Scalar>();
  for (std::size_t k = 0; k < acc.size(); ++k)
    out[k] = keep ? static_cast<Scalar>(acc[k]) : static_cast<Scalar>(acc[k] / norm);
}

template <typename Acc>
Acc l2_norm(std::span<const Acc> v) {
  Acc sum = 0;
  for (Acc x : v) sum += x * x;
  return std::sqrt(sum);
}

}  // namespace detail

inline double zipf_weight(std::int64_t rank) {
  if (rank < 1) fail(ErrorCode::InvalidRank, "rank " + std::to_string(rank) + " < 1");
  return 1.0 / static_cast<double>(rank);
}

enum class MergeStrategy { zipf, first, unweighted };

struct MergeMember {
  std::size_t row;
  std::uint32_t rank;
};

struct MergeGroup {
  std::string label;
  std::vector<MergeMember> members;  // ascending rank

  std::uint32_t min_rank() const { return members.front().rank; }
};

/// Which raw rows collapse into which label. Groups are ordered most
/// frequent first (ascending minimum rank, ties by label).
class MergePlan {
 public:
  MergePlan() = default;

  /// target[i] is the label raw row i maps to; rank[i] its 1-based source rank.
  MergePlan(std::span<const std::string> target, std::span<const std::uint32_t> rank) {
    if (target.size() != rank.size()) fail(ErrorCode::PlanMismatch, "label and rank lists differ in length");
    std::map<std::string, std::vector<MergeMember>> by_label;
    for (std::size_t i = 0; i < target.size(); ++i) {
      if (rank[i] == 0) fail(ErrorCode::InvalidRank, "rank 0 for row " + std::to_string(i));
      by_label[target[i]].push_back({i, rank[i]});
    }
    groups_.reserve(by_label.size());
    for (auto& [label, members] : by_label) {
      std::stable_sort(members.begin(), members.end(), [](const MergeMember& a, const MergeMember& b) {
        return a.rank != b.rank ? a.rank < b.rank : a.row < b.row;
      });
      groups_.push_back({label, std::move(members)});
    }
    std::stable_sort(groups_.begin(), groups_.end(), [](const MergeGroup& a, const MergeGroup& b) {
      return a.min_rank() != b.min_rank() ? a.min_rank() < b.min_rank() : a.label < b.label;
    });
    covered_ = target.size();
  }

  const std::vector<MergeGroup>& groups() const noexcept { return groups_; }
  std::size_t covered_rows() const noexcept { return covered_; }

 private:
  std::vector<MergeGroup> groups_;
  std::size_t covered_ = 0;
};

template <typename Scalar>
std::vector<std::uint32_t> ranks_or_order(const BasicLabeledMatrix<Scalar>& m) {
  if (m.source_rank()) return *m.source_rank();
  std::vector<std::uint32_t> r(m.rows());
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = static_cast<std::uint32_t>(i + 1);
  return r;
}

/// One output row per plan group: the Zipf-weighted (or first / unweighted)
/// average of the group's rows. Each group reduces in ascending-rank order.
template <typename Scalar>
BasicLabeledMatrix<Scalar> merge_standardized(const BasicLabeledMatrix<Scalar>& matrix, const MergePlan& plan,
                                              MergeStrategy strategy = MergeStrategy::zipf) {
  using Acc = detail::accum_t<Scalar>;
  if (plan.covered_rows() != matrix.rows())
    fail(ErrorCode::PlanMismatch, "plan covers " + std::to_string(plan.covered_rows()) + " rows, matrix has " +
                                      std::to_string(matrix.rows()));
  const std::size_t dims = matrix.dims();
  std::vector<std::string> labels;
  std::vector<std::uint32_t> ranks;
  std::vector<Scalar> data(plan.groups().size() * dims);
  std::vector<Acc> acc(dims);
  std::vector<bool> used(matrix.rows(), false);
  labels.reserve(plan.groups().size());
  ranks.reserve(plan.groups().size());

  for (std::size_t g = 0; g < plan.groups().size(); ++g) {
    const auto& group = plan.groups()[g];
    for (const auto& m : group.members) {
      if (m.row >= matrix.rows() || used[m.row])
        fail(ErrorCode::PlanMismatch, "plan row " + std::to_string(m.row) + " is out of range or repeated");
      used[m.row] = true;
    }
    std::fill(acc.begin(), acc.end(), Acc(0));
    Acc total = 0;
    const std::size_t count = strategy == MergeStrategy::first ? 1 : group.members.size();
    for (std::size_t i = 0; i < count; ++i) {
      const auto& m = group.members[i];
      Acc w = strategy == MergeStrategy::zipf ? Acc(1) / static_cast<Acc>(m.rank) : Acc(1);
      total += w;
      auto row = matrix.row(m.row);
      for (std::size_t k = 0; k < dims; ++k) acc[k] += w * static_cast<Acc>(row[k]);
    }
    for (std::size_t k = 0; k < dims; ++k) data[g * dims + k] = static_cast<Scalar>(acc[k] / total);
    labels.push_back(group.label);
    ranks.push_back(group.min_rank());
  }
  return BasicLabeledMatrix<Scalar>(std::move(labels), dims, std::move(data), std::move(ranks));
}

/// Relabels every row through `relabel` (returning std::nullopt drops the
/// row) and merges rows that land on the same label.
template <typename Scalar, typename Relabel>
BasicLabeledMatrix<Scalar> standardize_rows(const BasicLabeledMatrix<Scalar>& matrix, Relabel&& relabel,
                                            MergeStrategy strategy = MergeStrategy::zipf) {
  const auto all_ranks = ranks_or_order(matrix);
  std::vector<std::string> kept_labels;
  std::vector<std::uint32_t> kept_ranks;
  std::vector<Scalar> kept_data;
  std::vector<std::string> targets;
  for (std::size_t i = 0; i < matrix.rows(); ++i) {
    std::optional<std::string> target = relabel(matrix.label(i));
    if (!target) continue;
    targets.push_back(std::move(*target));
    kept_labels.push_back(matrix.label(i));
    kept_ranks.push_back(all_ranks[i]);
    auto row = matrix.row(i);
    kept_data.insert(kept_data.end(), row.begin(), row.end());
  }
  BasicLabeledMatrix<Scalar> kept(std::move(kept_labels), matrix.dims(), std::move(kept_data), kept_ranks);
  return merge_standardized(kept, MergePlan(targets, kept_ranks), strategy);
}

/// Divides each column by its L1 norm; zero columns are left alone.
template <typename Scalar>
BasicLabeledMatrix<Scalar> l1_normalize_columns(const BasicLabeledMatrix<Scalar>& matrix) {
  using Acc = detail::accum_t<Scalar>;
  const std::size_t dims = matrix.dims();
  std::vector<Acc> norms(dims, Acc(0));
  for (std::size_t i = 0; i < matrix.rows(); ++i) {
    auto row = matrix.row(i);
    for (std::size_t k = 0; k < dims; ++k) norms[k] += std::abs(static_cast<Acc>(row[k]));
  }
  std::vector<Scalar> data(matrix.data().begin(), matrix.data().end());
  for (std::size_t k = 0; k < dims; ++k) {
    const Acc n = norms[k];
    if (n < kZeroNorm || std::abs(static_cast<double>(n) - 1.0) <= detail::unit_tolerance<Scalar>()) continue;
    for (std::size_t i = 0; i < matrix.rows(); ++i)
      data[i * dims + k] = static_cast<Scalar>(static_cast<Acc>(data[i * dims + k]) / n);
  }
  return matrix.with_data(std::move(data));
}

/// L2-normalizes each column; used for sources run without L1 scaling.
template <typename Scalar>
BasicLabeledMatrix<Scalar> l2_normalize_columns(const BasicLabeledMatrix<Scalar>& matrix) {
  using Acc = detail::accum_t<Scalar>;
  const std::size_t dims = matrix.dims();
  std::vector<Acc> norms(dims, Acc(0));
  for (std::size_t i = 0; i < matrix.rows(); ++i) {
    auto row = matrix.row(i);
    for (std::size_t k = 0; k < dims; ++k) norms[k] += static_cast<Acc>(row[k]) * static_cast<Acc>(row[k]);
  }
  std::vector<Scalar> data(matrix.data().begin(), matrix.data().end());
  for (std::size_t k = 0; k < dims; ++k) {
    const Acc n = std::sqrt(norms[k]);
    if (n < kZeroNorm || std::abs(static_cast<double>(n) - 1.0) <= detail::unit_tolerance<Scalar>()) continue;
    for (std::size_t i = 0; i < matrix.rows(); ++i)
      data[i * dims + k] = static_cast<Scalar>(static_cast<Acc>(data[i * dims + k]) / n);
  }
  return matrix.with_data(std::move(data));
}

template <typename Scalar>
void l2_normalize_rows_inplace(std::span<Scalar> data, std::size_t dims) {
  using Acc = detail::accum_t<Scalar>;
  if (dims == 0) return;
  std::vector<Acc> acc(dims);
  for (std::size_t off = 0; off + dims <= data.size(); off += dims) {
    for (std::size_t k = 0; k < dims; ++k) acc[k] = static_cast<Acc>(data[off + k]);
    Acc n = detail::l2_norm<Acc>(acc);
    detail::write_scaled<Acc, Scalar>(acc, n, data.subspan(off, dims));
  }
}

/// Scales every nonzero row to unit Euclidean norm.
template <typename Scalar>
BasicLabeledMatrix<Scalar> l2_normalize_rows(const BasicLabeledMatrix<Scalar>& matrix) {
  std::vector<Scalar> data(matrix.data().begin(), matrix.data().end());
  l2_normalize_rows_inplace<Scalar>(data, matrix.dims());
  return matrix.with_data(std::move(data));
}

}  // namespace retrovec
