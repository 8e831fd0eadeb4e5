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
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "fedsim/params.hpp"
#include "fedsim/rng.hpp"
#include "fedsim/sampling.hpp"

// Upload masking. gamma is the fraction of each layer's entries that a
// client transmits; the rest are filled in on the server side either with
// zero or with the global model value the client started from.

namespace fedsim {

enum class mask_kind { none, random, selective };
enum class fill_mode { zero, server_fill };

struct MaskingPolicy {
  mask_kind kind = mask_kind::none;
  double keep_fraction = 1.0;  // gamma
  fill_mode fill = fill_mode::zero;

  void validate() const {
    if (!(keep_fraction >= 0.0 && keep_fraction <= 1.0)) {
      throw std::invalid_argument("masking gamma must be in [0, 1]");
    }
  }
};

/// Kept entries of one layer as ascending row-major indices.
struct LayerMask {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::size_t> kept;

  std::size_t numel() const noexcept { return rows * cols; }
  std::size_t k() const noexcept { return kept.size(); }

  std::vector<bool> dense() const {
    std::vector<bool> out(numel(), false);
    for (auto i : kept) out[i] = true;
    return out;
  }
};

/// k = round_half_up(gamma * numel), clamped to [0, numel].
inline std::size_t kept_count(double keep_fraction, std::size_t numel) {
  if (!(keep_fraction >= 0.0 && keep_fraction <= 1.0)) {
    throw std::invalid_argument("masking gamma must be in [0, 1]");
  }
  return std::min(round_half_up(keep_fraction * static_cast<double>(numel)), numel);
}

/// Exactly k indices chosen uniformly without replacement.
inline LayerMask random_mask(std::size_t rows, std::size_t cols, double keep_fraction,
                             std::uint64_t seed) {
  const std::size_t n = rows * cols;
  const std::size_t k = kept_count(keep_fraction, n);
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Rng rng(seed);
  for (std::size_t i = 0; i < k; ++i) {
    const auto j = i + static_cast<std::size_t>(uniform_index(rng, n - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return LayerMask{rows, cols, std::move(idx)};
}

/// Keeps the k entries with the largest |w_new - w_old|. Equal magnitudes
/// are ordered by row-major index, lowest first.
inline LayerMask selective_mask(const Matrix& w_old, const Matrix& w_new, double keep_fraction) {
  if (!w_old.same_shape(w_new)) {
    throw shape_error("selective_mask: shape mismatch " + std::to_string(w_old.rows()) + "x" +
                      std::to_string(w_old.cols()) + " vs " + std::to_string(w_new.rows()) + "x" +
                      std::to_string(w_new.cols()));
  }
  const std::size_t n = w_old.size();
  const std::size_t k = kept_count(keep_fraction, n);
  std::vector<double> diff(n);
  for (std::size_t i = 0; i < n; ++i) diff[i] = std::abs(w_new[i] - w_old[i]);

  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  auto before = [&diff](std::size_t a, std::size_t b) {
    return diff[a] > diff[b] || (diff[a] == diff[b] && a < b);
  };
  if (k < n) {
    std::nth_element(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(), before);
  }
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return LayerMask{w_old.rows(), w_old.cols(), std::move(idx)};
}

/// Zero fill: dropped entries become 0. Server fill: dropped entries take
/// the value from `w_global`, which must then be non-null.
inline Matrix apply_mask(const Matrix& w_new, const LayerMask& mask, fill_mode fill,
                         const Matrix* w_global = nullptr) {
  if (w_new.rows() != mask.rows || w_new.cols() != mask.cols) {
    throw shape_error("apply_mask: mask shape does not match matrix");
  }
  Matrix out;
  if (fill == fill_mode::zero) {
    out = Matrix(w_new.rows(), w_new.cols());
  } else {
    if (w_global == nullptr) {
      throw std::invalid_argument("apply_mask: server fill requires the global matrix");
    }
    if (!w_global->same_shape(w_new)) {
      throw shape_error("apply_mask: global matrix shape does not match");
    }
    out = *w_global;
  }
  for (auto i : mask.kept) out[i] = w_new[i];
  return out;
}

struct MaskedUpload {
  ParamSet params;
  std::uint64_t transmitted_scalars = 0;
};

/// Masks every layer of `updated` against `global` (the model the client
/// downloaded). Random masks draw one sub-seed per layer from `seed`.
inline MaskedUpload mask_model(const ParamSet& global, const ParamSet& updated,
                               const MaskingPolicy& policy, std::uint64_t seed) {
  policy.validate();
  require_compatible(global, updated);
  if (policy.kind == mask_kind::none) return {updated, numel(updated)};

  MaskedUpload out;
  for (std::size_t l = 0; l < updated.num_layers(); ++l) {
    const Layer& old_layer = global.layer(l);
    const Layer& new_layer = updated.layer(l);
    const LayerMask mask =
        policy.kind == mask_kind::random
            ? random_mask(new_layer.matrix.rows(), new_layer.matrix.cols(), policy.keep_fraction,
                          mix64(seed ^ mix64(l)))
            : selective_mask(old_layer.matrix, new_layer.matrix, policy.keep_fraction);
    out.params.add_layer(new_layer.name,
                         apply_mask(new_layer.matrix, mask, policy.fill, &old_layer.matrix));
    out.transmitted_scalars += mask.k();
  }
  return out;
}

}  // namespace fedsim
