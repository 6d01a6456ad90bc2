#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "retrovec/error.hpp"

namespace retrovec {

/// Unique row labels paired with a dense row-major matrix. Immutable once
/// built; every constructor validates the label/row/dims invariants.
template <typename Scalar>
class BasicLabeledMatrix {
 public:
  using value_type = Scalar;

  BasicLabeledMatrix() = default;

  explicit BasicLabeledMatrix(std::size_t dims) : dims_(dims) {}

  BasicLabeledMatrix(std::vector<std::string> labels, std::size_t dims, std::vector<Scalar> data,
                     std::optional<std::vector<std::uint32_t>> source_rank = std::nullopt)
      : labels_(std::move(labels)), dims_(dims), data_(std::move(data)), source_rank_(std::move(source_rank)) {
    if (data_.size() != labels_.size() * dims_)
      fail(ErrorCode::DimensionMismatch, std::to_string(data_.size()) + " values for " +
                                             std::to_string(labels_.size()) + " rows of " + std::to_string(dims_));
    if (source_rank_) {
      if (source_rank_->size() != labels_.size())
        fail(ErrorCode::DimensionMismatch, "source_rank length differs from row count");
      for (auto r : *source_rank_)
        if (r == 0) fail(ErrorCode::InvalidRank, "source_rank must be positive");
    }
    index_.reserve(labels_.size());
    for (std::size_t i = 0; i < labels_.size(); ++i) {
      if (!index_.emplace(labels_[i], i).second) fail(ErrorCode::DuplicateLabel, "duplicate label '" + labels_[i] + "'");
    }
  }

  std::size_t rows() const noexcept { return labels_.size(); }
  std::size_t dims() const noexcept { return dims_; }
  bool empty() const noexcept { return labels_.empty(); }

  const std::vector<std::string>& labels() const noexcept { return labels_; }
  const std::string& label(std::size_t row) const { return labels_.at(row); }
  std::span<const Scalar> data() const noexcept { return data_; }
  const std::optional<std::vector<std::uint32_t>>& source_rank() const noexcept { return source_rank_; }

  std::span<const Scalar> row(std::size_t i) const { return {data_.data() + i * dims_, dims_}; }
  Scalar at(std::size_t i, std::size_t j) const { return data_[i * dims_ + j]; }

  std::optional<std::size_t> find(const std::string& label) const {
    auto it = index_.find(label);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }
  bool contains(const std::string& label) const { return index_.contains(label); }

  /// Same labels and ranks, new values of the same shape.
  BasicLabeledMatrix with_data(std::vector<Scalar> data) const {
    return BasicLabeledMatrix(labels_, dims_, std::move(data), source_rank_);
  }

  /// Moves the payload out; the matrix is left empty.
  std::vector<Scalar> release_data() && { return std::move(data_); }

  friend bool operator==(const BasicLabeledMatrix& a, const BasicLabeledMatrix& b) {
    return a.labels_ == b.labels_ && a.dims_ == b.dims_ && a.data_ == b.data_;
  }

 private:
  std::vector<std::string> labels_;
  std::size_t dims_ = 0;
  std::vector<Scalar> data_;
  std::optional<std::vector<std::uint32_t>> source_rank_;
  std::unordered_map<std::string, std::size_t> index_;
};

using LabeledMatrix = BasicLabeledMatrix<float>;

}  // namespace retrovec
