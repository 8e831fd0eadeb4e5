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

#include <zlib.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "fedsim/params.hpp"
#include "fedsim/rng.hpp"

namespace fedsim {

/// Raised for malformed dataset files. The message carries the line number.
class data_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// n x d features with one integer class label per row.
struct Dataset {
  Matrix features;
  std::vector<int> labels;
  int num_classes = 0;

  std::size_t size() const noexcept { return labels.size(); }
  std::size_t dim() const noexcept { return features.cols(); }

  void validate() const {
    if (features.rows() != labels.size()) {
      throw data_error("feature rows (" + std::to_string(features.rows()) +
                       ") != label count (" + std::to_string(labels.size()) + ")");
    }
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] < 0 || labels[i] >= num_classes) {
        throw data_error("label " + std::to_string(labels[i]) + " at row " +
                         std::to_string(i) + " outside [0, " + std::to_string(num_classes) +
                         ")");
      }
    }
  }

  /// Rows at `indices`, in that order. num_classes is kept.
  Dataset subset(std::span<const std::size_t> indices) const {
    if (indices.empty()) throw data_error("empty subset");
    Matrix f(indices.size(), dim());
    std::vector<int> y(indices.size());
    for (std::size_t i = 0; i < indices.size(); ++i) {
      const auto src = features.row(indices[i]);
      std::copy(src.begin(), src.end(), f.values().begin() + i * dim());
      y[i] = labels.at(indices[i]);
    }
    return Dataset{std::move(f), std::move(y), num_classes};
  }

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

/// One index list per client.
struct Partition {
  std::vector<std::vector<std::size_t>> shards;

  std::size_t num_shards() const noexcept { return shards.size(); }
};

/// Class-balanced Gaussian blobs. Class c has mean mu_c ~ N(0, 9 I) and
/// rows mu_c + spread * N(0, I). Row i carries label i mod classes, so class
/// counts differ by at most one.
inline Dataset generate_blobs(std::size_t n, std::size_t d, int classes, double spread,
                              std::uint64_t seed) {
  if (classes < 1) throw std::invalid_argument("generate_blobs: classes must be >= 1");
  if (n < static_cast<std::size_t>(classes)) {
    throw std::invalid_argument("generate_blobs: n (" + std::to_string(n) +
                                ") < classes (" + std::to_string(classes) + ")");
  }
  if (d < 1) throw std::invalid_argument("generate_blobs: d must be >= 1");
  if (!(spread >= 0.0)) throw std::invalid_argument("generate_blobs: spread must be >= 0");

  Rng rng(seed);
  constexpr double kMeanScale = 3.0;
  Matrix means(static_cast<std::size_t>(classes), d);
  for (auto& v : means.values()) v = kMeanScale * standard_normal(rng);

  Dataset ds{Matrix(n, d), std::vector<int>(n), classes};
  for (std::size_t i = 0; i < n; ++i) {
    const int label = static_cast<int>(i % static_cast<std::size_t>(classes));
    ds.labels[i] = label;
    for (std::size_t j = 0; j < d; ++j) {
      ds.features(i, j) = means(static_cast<std::size_t>(label), j) + spread * standard_normal(rng);
    }
  }
  return ds;
}

/// Seeded shuffle of {0..n-1} cut into M shards; shard i gets
/// floor(n/M) + (i < n mod M) rows.
inline Partition partition_iid(std::size_t n, std::size_t num_clients, std::uint64_t seed) {
  if (num_clients < 1) throw std::invalid_argument("partition_iid: client count must be >= 1");
  if (num_clients > n) {
    throw std::invalid_argument("partition_iid: more clients (" + std::to_string(num_clients) +
                                ") than rows (" + std::to_string(n) + ")");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  shuffle(std::span<std::size_t>(order), rng);

  Partition part;
  part.shards.resize(num_clients);
  const std::size_t base = n / num_clients;
  const std::size_t extra = n % num_clients;
  std::size_t offset = 0;
  for (std::size_t i = 0; i < num_clients; ++i) {
    const std::size_t len = base + (i < extra ? 1 : 0);
    part.shards[i].assign(order.begin() + static_cast<std::ptrdiff_t>(offset),
                          order.begin() + static_cast<std::ptrdiff_t>(offset + len));
    offset += len;
  }
  return part;
}

inline Partition partition_iid(const Dataset& ds, std::size_t num_clients, std::uint64_t seed) {
  return partition_iid(ds.size(), num_clients, seed);
}

/// Seeded holdout: the first round(test_fraction * n) rows of a shuffled order
/// become the test set. Both halves must be non-empty.
inline std::pair<Dataset, Dataset> split_holdout(const Dataset& ds, double test_fraction,
                                                 std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw std::invalid_argument("split_holdout: test fraction must be in (0, 1)");
  }
  const std::size_t n = ds.size();
  const auto n_test = static_cast<std::size_t>(std::floor(test_fraction * static_cast<double>(n) + 0.5));
  if (n_test == 0 || n_test >= n) {
    throw std::invalid_argument("split_holdout: split leaves an empty side");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  shuffle(std::span<std::size_t>(order), rng);
  std::span<const std::size_t> all(order);
  return {ds.subset(all.subspan(n_test)), ds.subset(all.first(n_test))};
}

namespace detail {

inline bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

inline std::vector<std::string> read_lines(const std::string& path) {
  std::vector<std::string> lines;
  if (ends_with(path, ".gz")) {
    gzFile f = gzopen(path.c_str(), "rb");
    if (!f) throw data_error("cannot open '" + path + "'");
    std::string current;
    char buf[8192];
    int got;
    while ((got = gzread(f, buf, sizeof(buf))) > 0) {
      for (int i = 0; i < got; ++i) {
        if (buf[i] == '\n') {
          lines.push_back(std::move(current));
          current.clear();
        } else {
          current.push_back(buf[i]);
        }
      }
    }
    const bool failed = got < 0;
    gzclose(f);
    if (failed) throw data_error("gzip read error in '" + path + "'");
    if (!current.empty()) lines.push_back(std::move(current));
  } else {
    std::ifstream is(path);
    if (!is) throw data_error("cannot open '" + path + "'");
    std::string line;
    while (std::getline(is, line)) lines.push_back(line);
  }
  for (auto& l : lines) {
    if (!l.empty() && l.back() == '\r') l.pop_back();
  }
  return lines;
}

inline double parse_double(std::string_view field, std::size_t line_no) {
  while (!field.empty() && field.front() == ' ') field.remove_prefix(1);
  while (!field.empty() && field.back() == ' ') field.remove_suffix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size() || !std::isfinite(v)) {
    throw data_error("line " + std::to_string(line_no) + ": non-numeric field '" +
                     std::string(field) + "'");
  }
  return v;
}

inline std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace detail

/// Reads `label,f1,...,fd` rows (gzip when the path ends in .gz). Blank lines
/// are skipped; num_classes = max label + 1.
inline Dataset load_csv(const std::string& path) {
  const auto lines = detail::read_lines(path);
  std::vector<int> labels;
  std::vector<double> values;
  std::size_t dim = 0;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::size_t line_no = i + 1;
    const std::string_view line = lines[i];
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;

    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
      const auto comma = line.find(',', start);
      fields.push_back(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (fields.size() < 2) {
      throw data_error("line " + std::to_string(line_no) + ": expected label and at least one feature");
    }
    if (dim == 0) {
      dim = fields.size() - 1;
    } else if (fields.size() - 1 != dim) {
      throw data_error("line " + std::to_string(line_no) + ": expected " + std::to_string(dim + 1) +
                       " fields, found " + std::to_string(fields.size()));
    }
    const double label = detail::parse_double(fields[0], line_no);
    if (label < 0.0) {
      throw data_error("line " + std::to_string(line_no) + ": negative label");
    }
    if (label != std::floor(label) || label > 1e9) {
      throw data_error("line " + std::to_string(line_no) + ": label is not an integer");
    }
    labels.push_back(static_cast<int>(label));
    for (std::size_t j = 1; j < fields.size(); ++j) {
      values.push_back(detail::parse_double(fields[j], line_no));
    }
  }
  if (labels.empty()) throw data_error("empty dataset");
  const int classes = *std::max_element(labels.begin(), labels.end()) + 1;
  Dataset ds{Matrix(labels.size(), dim, std::move(values)), std::move(labels), classes};
  ds.validate();
  return ds;
}

/// Writes shortest round-trip decimal, so load_csv(save_csv(x)) == x.
inline void save_csv(const std::string& path, const Dataset& ds) {
  std::ostringstream out;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    out << ds.labels[i];
    for (double v : ds.features.row(i)) out << ',' << detail::format_double(v);
    out << '\n';
  }
  const std::string text = out.str();
  if (detail::ends_with(path, ".gz")) {
    gzFile f = gzopen(path.c_str(), "wb");
    if (!f) throw data_error("cannot open '" + path + "' for writing");
    const int wrote = text.empty() ? 0 : gzwrite(f, text.data(), static_cast<unsigned>(text.size()));
    gzclose(f);
    if (wrote != static_cast<int>(text.size())) throw data_error("gzip write error in '" + path + "'");
  } else {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw data_error("cannot open '" + path + "' for writing");
    os << text;
  }
}

/// Per-class row counts.
inline std::vector<std::size_t> class_histogram(const Dataset& ds,
                                                std::span<const std::size_t> indices) {
  std::vector<std::size_t> counts(static_cast<std::size_t>(ds.num_classes), 0);
  for (auto i : indices) ++counts[static_cast<std::size_t>(ds.labels.at(i))];
  return counts;
}

}  // namespace fedsim
