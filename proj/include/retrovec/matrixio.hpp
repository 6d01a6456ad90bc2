#pragma once

// Readers for the GloVe / word2vec distribution formats and the native
// "EMB1" matrix + label-list pair.

#include <array>
#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "retrovec/error.hpp"
#include "retrovec/labeled_matrix.hpp"

namespace retrovec {

struct ReadOptions {
  /// Skip repeated tokens instead of failing with DuplicateLabel.
  bool keep_first = false;
};

namespace detail {

inline float parse_float(std::string_view field, std::size_t line_no) {
  float value = 0;
  const char* begin = field.data();
  const char* end = field.data() + field.size();
  if (!field.empty() && *begin == '+') ++begin;
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec == std::errc::result_out_of_range) {
    // Denormal or overflowing literal: fall back to strtod rounding.
    value = static_cast<float>(std::strtod(std::string(field).c_str(), nullptr));
  } else if (ec != std::errc() || ptr != end || begin == end) {
    fail(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": not a number '" + std::string(field) + "'");
  }
  return value;
}

inline std::uint64_t parse_count(std::string_view field, const std::string& what) {
  std::uint64_t value = 0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size() || field.empty())
    fail(ErrorCode::ParseError, "malformed " + what + " '" + std::string(field) + "'");
  return value;
}

inline std::vector<std::string_view> split_spaces(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (pos < s.size()) {
    auto next = s.find(' ', pos);
    if (next == std::string_view::npos) next = s.size();
    if (next > pos) out.push_back(s.substr(pos, next - pos));
    pos = next + 1;
  }
  return out;
}

template <typename T>
void put_le(std::ostream& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  std::array<char, sizeof(T)> bytes;
  std::memcpy(bytes.data(), &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  out.write(bytes.data(), bytes.size());
}

template <typename T>
T get_le(const char* bytes) {
  std::array<char, sizeof(T)> buf;
  std::memcpy(buf.data(), bytes, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(buf.begin(), buf.end());
  T value;
  std::memcpy(&value, buf.data(), sizeof(T));
  return value;
}

class MatrixBuilder {
 public:
  explicit MatrixBuilder(ReadOptions options) : options_(options) {}

  bool has_dims() const { return dims_known_; }
  void set_dims(std::size_t dims) {
    dims_ = dims;
    dims_known_ = true;
  }
  std::size_t dims() const { return dims_; }

  // rank is the 1-based position of the entry in the file.
  template <typename Fill>
  void add(std::string token, std::uint32_t rank, Fill&& fill) {
    if (!seen_.insert(token).second) {
      if (options_.keep_first) return;
      fail(ErrorCode::DuplicateLabel, "duplicate token '" + token + "' at entry " + std::to_string(rank));
    }
    std::size_t offset = data_.size();
    data_.resize(offset + dims_);
    fill(std::span<float>(data_.data() + offset, dims_));
    labels_.push_back(std::move(token));
    ranks_.push_back(rank);
  }

  LabeledMatrix finish() && {
    return LabeledMatrix(std::move(labels_), dims_, std::move(data_), std::move(ranks_));
  }

 private:
  ReadOptions options_;
  std::size_t dims_ = 0;
  bool dims_known_ = false;
  std::vector<std::string> labels_;
  std::vector<float> data_;
  std::vector<std::uint32_t> ranks_;
  std::unordered_set<std::string> seen_;
};

}  // namespace detail

/// GloVe-style (header=false) or word2vec text (header=true) embeddings.
/// Fields are separated by U+0020 only; the token is everything before the
/// first space and is kept verbatim.
inline LabeledMatrix read_text_embeddings(const std::string& path, bool header, ReadOptions options = {}) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot open '" + path + "'");
  detail::MatrixBuilder builder(options);
  std::string line;
  std::size_t line_no = 0;
  std::uint32_t rank = 0;
  std::uint64_t declared_rows = 0;
  if (header) {
    if (!std::getline(in, line)) fail(ErrorCode::ParseError, "missing header line");
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto fields = detail::split_spaces(line);
    if (fields.size() != 2) fail(ErrorCode::ParseError, "header must be '<rows> <dims>'");
    declared_rows = detail::parse_count(fields[0], "row count");
    builder.set_dims(detail::parse_count(fields[1], "dimension count"));
  }
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto space = line.find(' ');
    if (space == std::string::npos || space == 0)
      fail(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": expected '<token> <values>'");
    auto fields = detail::split_spaces(std::string_view(line).substr(space + 1));
    if (!builder.has_dims()) builder.set_dims(fields.size());
    if (fields.size() != builder.dims())
      fail(ErrorCode::DimensionMismatch, "line " + std::to_string(line_no) + ": " + std::to_string(fields.size()) +
                                             " values, expected " + std::to_string(builder.dims()));
    ++rank;
    builder.add(line.substr(0, space), rank, [&](std::span<float> row) {
      for (std::size_t j = 0; j < fields.size(); ++j) row[j] = detail::parse_float(fields[j], line_no);
    });
  }
  if (header && rank != declared_rows)
    fail(ErrorCode::DimensionMismatch, "header declares " + std::to_string(declared_rows) + " rows, file has " +
                                           std::to_string(rank));
  return std::move(builder).finish();
}

/// word2vec binary: "<rows> <dims>\n", then per entry the token up to a
/// space followed by dims little-endian float32 values.
inline LabeledMatrix read_word2vec_binary(const std::string& path, ReadOptions options = {}) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot open '" + path + "'");
  std::string header;
  if (!std::getline(in, header)) fail(ErrorCode::ParseError, "missing header line");
  if (!header.empty() && header.back() == '\r') header.pop_back();
  auto fields = detail::split_spaces(header);
  if (fields.size() != 2) fail(ErrorCode::ParseError, "header must be '<rows> <dims>'");
  std::uint64_t rows = detail::parse_count(fields[0], "row count");
  std::size_t dims = detail::parse_count(fields[1], "dimension count");

  detail::MatrixBuilder builder(options);
  builder.set_dims(dims);
  std::vector<char> buf(dims * sizeof(float));
  for (std::uint64_t r = 0; r < rows; ++r) {
    std::string token;
    int c;
    while ((c = in.get()) == '\n' || c == '\r') {
    }
    while (c != EOF && c != ' ') {
      token.push_back(static_cast<char>(c));
      c = in.get();
    }
    if (c == EOF) fail(ErrorCode::TruncatedFile, "file ends inside entry " + std::to_string(r + 1));
    if (!in.read(buf.data(), static_cast<std::streamsize>(buf.size())))
      fail(ErrorCode::TruncatedFile, "file ends inside the vector of entry " + std::to_string(r + 1));
    builder.add(std::move(token), static_cast<std::uint32_t>(r + 1), [&](std::span<float> row) {
      for (std::size_t j = 0; j < dims; ++j) row[j] = detail::get_le<float>(buf.data() + j * sizeof(float));
    });
  }
  return std::move(builder).finish();
}

inline constexpr std::array<char, 4> kNativeMagic = {'E', 'M', 'B', '1'};

/// Writes the native pair: "EMB1", u32 rows, u32 dims, row-major f32 (all
/// little-endian) to matrix_path; one label per line to labels_path.
inline void write_native(const LabeledMatrix& matrix, const std::string& matrix_path, const std::string& labels_path) {
  if (matrix.rows() > UINT32_MAX || matrix.dims() > UINT32_MAX)
    fail(ErrorCode::InvalidArgument, "matrix too large for the native format");
  for (const auto& label : matrix.labels())
    if (label.find('\n') != std::string::npos) fail(ErrorCode::InvalidLabel, "label contains a newline");
  {
    std::ofstream out(matrix_path, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::IoError, "cannot write '" + matrix_path + "'");
    out.write(kNativeMagic.data(), kNativeMagic.size());
    detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(matrix.rows()));
    detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(matrix.dims()));
    if constexpr (std::endian::native == std::endian::little) {
      auto data = matrix.data();
      out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size_bytes()));
    } else {
      for (float v : matrix.data()) detail::put_le(out, v);
    }
    if (!out) fail(ErrorCode::IoError, "short write to '" + matrix_path + "'");
  }
  std::ofstream labels(labels_path, std::ios::binary | std::ios::trunc);
  if (!labels) fail(ErrorCode::IoError, "cannot write '" + labels_path + "'");
  for (const auto& label : matrix.labels()) labels << label << '\n';
  if (!labels) fail(ErrorCode::IoError, "short write to '" + labels_path + "'");
}

inline LabeledMatrix read_native(const std::string& matrix_path, const std::string& labels_path) {
  std::ifstream in(matrix_path, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot open '" + matrix_path + "'");
  std::array<char, 12> head{};
  in.read(head.data(), head.size());
  if (in.gcount() < 4 || std::memcmp(head.data(), kNativeMagic.data(), 4) != 0)
    fail(ErrorCode::BadMagic, "'" + matrix_path + "' is not a native matrix file");
  if (in.gcount() < 12) fail(ErrorCode::ChecksumOrLengthMismatch, "truncated header in '" + matrix_path + "'");
  std::uint64_t rows = detail::get_le<std::uint32_t>(head.data() + 4);
  std::uint64_t dims = detail::get_le<std::uint32_t>(head.data() + 8);

  in.seekg(0, std::ios::end);
  std::uint64_t payload = static_cast<std::uint64_t>(in.tellg()) - head.size();
  if (payload != rows * dims * sizeof(float))
    fail(ErrorCode::ChecksumOrLengthMismatch, "payload is " + std::to_string(payload) + " bytes, header implies " +
                                                  std::to_string(rows * dims * sizeof(float)));
  in.seekg(static_cast<std::streamoff>(head.size()));
  std::vector<float> data(rows * dims);
  if constexpr (std::endian::native == std::endian::little) {
    in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(payload));
  } else {
    std::vector<char> raw(payload);
    in.read(raw.data(), static_cast<std::streamsize>(payload));
    for (std::size_t i = 0; i < data.size(); ++i) data[i] = detail::get_le<float>(raw.data() + i * 4);
  }
  if (!in) fail(ErrorCode::IoError, "read failed on '" + matrix_path + "'");

  std::ifstream lin(labels_path, std::ios::binary);
  if (!lin) fail(ErrorCode::IoError, "cannot open '" + labels_path + "'");
  std::vector<std::string> labels;
  labels.reserve(rows);
  std::string line;
  while (std::getline(lin, line)) labels.push_back(std::move(line));
  if (labels.size() != rows)
    fail(ErrorCode::ChecksumOrLengthMismatch, std::to_string(labels.size()) + " labels for " + std::to_string(rows) +
                                                  " rows");
  return LabeledMatrix(std::move(labels), dims, std::move(data));
}

}  // namespace retrovec
