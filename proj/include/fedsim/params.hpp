// Copyright 2026 The fedsim Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// =============================================================================

#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace fedsim {

/// Raised when two parameter containers that must line up do not.
class shape_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Dense row-major matrix of doubles. Bias vectors are stored as 1 x d.
class Matrix {
 public:
  Matrix() = default;

  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), values_(rows * cols, fill) {
    if (rows == 0 || cols == 0) {
      throw shape_error("Matrix dimensions must be positive");
    }
  }

  Matrix(std::size_t rows, std::size_t cols, std::vector<double> values)
      : rows_(rows), cols_(cols), values_(std::move(values)) {
    if (rows == 0 || cols == 0) {
      throw shape_error("Matrix dimensions must be positive");
    }
    if (values_.size() != rows * cols) {
      throw shape_error("Matrix value count " + std::to_string(values_.size()) +
                        " does not match " + std::to_string(rows) + "x" +
                        std::to_string(cols));
    }
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return values_.size(); }

  double& operator()(std::size_t r, std::size_t c) { return values_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }

  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }

  std::span<const double> row(std::size_t r) const {
    return std::span<const double>(values_).subspan(r * cols_, cols_);
  }

  bool same_shape(const Matrix& other) const noexcept {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }

  bool all_finite() const noexcept {
    return std::all_of(values_.begin(), values_.end(),
                       [](double v) { return std::isfinite(v); });
  }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

struct Layer {
  std::string name;
  Matrix matrix;

  friend bool operator==(const Layer&, const Layer&) = default;
};

/// Ordered, uniquely named collection of layer matrices making up one model.
class ParamSet {
 public:
  ParamSet() = default;

  void add_layer(std::string name, Matrix matrix) {
    for (const auto& layer : layers_) {
      if (layer.name == name) {
        throw std::invalid_argument("duplicate layer name '" + name + "'");
      }
    }
    layers_.push_back(Layer{std::move(name), std::move(matrix)});
  }

  std::size_t num_layers() const noexcept { return layers_.size(); }
  bool empty() const noexcept { return layers_.empty(); }

  std::span<Layer> layers() noexcept { return layers_; }
  std::span<const Layer> layers() const noexcept { return layers_; }

  Layer& layer(std::size_t i) { return layers_.at(i); }
  const Layer& layer(std::size_t i) const { return layers_.at(i); }

  const Matrix& at(const std::string& name) const {
    for (const auto& layer : layers_) {
      if (layer.name == name) return layer.matrix;
    }
    throw std::out_of_range("no layer named '" + name + "'");
  }

  Matrix& at(const std::string& name) {
    return const_cast<Matrix&>(std::as_const(*this).at(name));
  }

  bool all_finite() const noexcept {
    return std::all_of(layers_.begin(), layers_.end(),
                       [](const Layer& l) { return l.matrix.all_finite(); });
  }

  friend bool operator==(const ParamSet&, const ParamSet&) = default;

 private:
  std::vector<Layer> layers_;
};

inline std::size_t numel(const ParamSet& p) noexcept {
  std::size_t total = 0;
  for (const auto& layer : p.layers()) total += layer.matrix.size();
  return total;
}

inline bool shape_compatible(const ParamSet& a, const ParamSet& b) noexcept {
  if (a.num_layers() != b.num_layers()) return false;
  for (std::size_t i = 0; i < a.num_layers(); ++i) {
    const auto& la = a.layer(i);
    const auto& lb = b.layer(i);
    if (la.name != lb.name || !la.matrix.same_shape(lb.matrix)) return false;
  }
  return true;
}

/// Throws shape_error naming the first layer at which `a` and `b` diverge.
inline void require_compatible(const ParamSet& a, const ParamSet& b) {
  if (a.num_layers() != b.num_layers()) {
    throw shape_error("layer count mismatch: " + std::to_string(a.num_layers()) +
                      " vs " + std::to_string(b.num_layers()));
  }
  for (std::size_t i = 0; i < a.num_layers(); ++i) {
    const auto& la = a.layer(i);
    const auto& lb = b.layer(i);
    if (la.name != lb.name) {
      throw shape_error("layer " + std::to_string(i) + " name mismatch: '" + la.name +
                        "' vs '" + lb.name + "'");
    }
    if (!la.matrix.same_shape(lb.matrix)) {
      throw shape_error("layer '" + la.name + "' shape mismatch: " +
                        std::to_string(la.matrix.rows()) + "x" +
                        std::to_string(la.matrix.cols()) + " vs " +
                        std::to_string(lb.matrix.rows()) + "x" +
                        std::to_string(lb.matrix.cols()));
    }
  }
}

enum class combine_op { add, sub, scale_add };

/// add: a + b, sub: a - b, scale_add: a + alpha * b.
inline ParamSet elementwise_combine(const ParamSet& a, const ParamSet& b, combine_op op,
                                    double alpha = 1.0) {
  require_compatible(a, b);
  ParamSet out = a;
  for (std::size_t i = 0; i < out.num_layers(); ++i) {
    auto dst = out.layer(i).matrix.values();
    auto src = b.layer(i).matrix.values();
    switch (op) {
      case combine_op::add:
        for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += src[j];
        break;
      case combine_op::sub:
        for (std::size_t j = 0; j < dst.size(); ++j) dst[j] -= src[j];
        break;
      case combine_op::scale_add:
        for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += alpha * src[j];
        break;
    }
  }
  return out;
}

inline ParamSet add(const ParamSet& a, const ParamSet& b) {
  return elementwise_combine(a, b, combine_op::add);
}

inline ParamSet sub(const ParamSet& a, const ParamSet& b) {
  return elementwise_combine(a, b, combine_op::sub);
}

inline ParamSet scale_add(const ParamSet& a, const ParamSet& b, double alpha) {
  return elementwise_combine(a, b, combine_op::scale_add, alpha);
}

/// Same layer names and shapes as `p`, every value zero.
inline ParamSet zeros_like(const ParamSet& p) {
  ParamSet out;
  for (const auto& layer : p.layers()) {
    out.add_layer(layer.name, Matrix(layer.matrix.rows(), layer.matrix.cols()));
  }
  return out;
}

// Checkpoint format, all integers little-endian:
//   magic "FSPS" | u32 version (1) | u64 layer count
//   per layer: u32 name length | name bytes | u64 rows | u64 cols |
//              rows*cols IEEE-754 binary64 values, row-major
namespace detail {

template <typename T>
void write_le(std::ostream& os, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) {
    std::reverse(std::begin(bytes), std::end(bytes));
  }
  os.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T read_le(std::istream& is) {
  unsigned char bytes[sizeof(T)];
  if (!is.read(reinterpret_cast<char*>(bytes), sizeof(T))) {
    throw std::runtime_error("truncated checkpoint");
  }
  if constexpr (std::endian::native == std::endian::big) {
    std::reverse(std::begin(bytes), std::end(bytes));
  }
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

inline constexpr char kCheckpointMagic[4] = {'F', 'S', 'P', 'S'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

}  // namespace detail

inline void write_params(std::ostream& os, const ParamSet& p) {
  os.write(detail::kCheckpointMagic, 4);
  detail::write_le<std::uint32_t>(os, detail::kCheckpointVersion);
  detail::write_le<std::uint64_t>(os, p.num_layers());
  for (const auto& layer : p.layers()) {
    detail::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(layer.name.size()));
    os.write(layer.name.data(), static_cast<std::streamsize>(layer.name.size()));
    detail::write_le<std::uint64_t>(os, layer.matrix.rows());
    detail::write_le<std::uint64_t>(os, layer.matrix.cols());
    for (double v : layer.matrix.values()) detail::write_le<double>(os, v);
  }
}

inline ParamSet read_params(std::istream& is) {
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, detail::kCheckpointMagic, 4) != 0) {
    throw std::runtime_error("not a fedsim checkpoint");
  }
  const auto version = detail::read_le<std::uint32_t>(is);
  if (version != detail::kCheckpointVersion) {
    throw std::runtime_error("unsupported checkpoint version " + std::to_string(version));
  }
  const auto count = detail::read_le<std::uint64_t>(is);
  ParamSet p;
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto name_len = detail::read_le<std::uint32_t>(is);
    std::string name(name_len, '\0');
    if (!is.read(name.data(), name_len)) throw std::runtime_error("truncated checkpoint");
    const auto rows = detail::read_le<std::uint64_t>(is);
    const auto cols = detail::read_le<std::uint64_t>(is);
    std::vector<double> values(rows * cols);
    for (auto& v : values) v = detail::read_le<double>(is);
    p.add_layer(std::move(name), Matrix(rows, cols, std::move(values)));
  }
  return p;
}

inline void save_params(const std::string& path, const ParamSet& p) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open '" + path + "' for writing");
  write_params(os, p);
}

inline ParamSet load_params(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open '" + path + "'");
  return read_params(is);
}

}  // namespace fedsim
