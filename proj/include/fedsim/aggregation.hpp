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
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "fedsim/params.hpp"

namespace fedsim {

struct ClientUpdate {
  std::size_t client_id = 0;
  ParamSet params;
  std::size_t num_samples = 0;  // n_i
  std::uint64_t transmitted_scalars = 0;
};

/// Client weight w_i:
///   weighted       n_i / n
///   uniform        1 / m
///   paper_literal  n_i / (n * m), the 1/m and n_i/n factors both applied
/// with n the sample total over the listed clients.
enum class aggregation_mode { weighted, uniform, paper_literal };

/// Federated average sum_i w_i * params_i, accumulated in ascending
/// client_id order regardless of input order.
inline ParamSet fedavg(std::span<const ClientUpdate> updates,
                       aggregation_mode mode = aggregation_mode::weighted) {
  if (updates.empty()) throw std::invalid_argument("fedavg: no client updates");

  std::vector<const ClientUpdate*> ordered;
  ordered.reserve(updates.size());
  std::size_t total = 0;
  for (const auto& u : updates) {
    if (u.num_samples == 0) throw std::invalid_argument("fedavg: client with zero samples");
    require_compatible(updates.front().params, u.params);
    ordered.push_back(&u);
    total += u.num_samples;
  }
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const ClientUpdate* a, const ClientUpdate* b) { return a->client_id < b->client_id; });

  const double m = static_cast<double>(updates.size());
  const double n = static_cast<double>(total);
  ParamSet out = zeros_like(updates.front().params);
  for (const ClientUpdate* u : ordered) {
    const double n_i = static_cast<double>(u->num_samples);
    double w = 0.0;
    switch (mode) {
      case aggregation_mode::weighted: w = n_i / n; break;
      case aggregation_mode::uniform: w = 1.0 / m; break;
      case aggregation_mode::paper_literal: w = n_i / (n * m); break;
    }
    for (std::size_t l = 0; l < out.num_layers(); ++l) {
      auto dst = out.layer(l).matrix.values();
      const auto src = u->params.layer(l).matrix.values();
      for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += w * src[j];
    }
  }
  return out;
}

}  // namespace fedsim
