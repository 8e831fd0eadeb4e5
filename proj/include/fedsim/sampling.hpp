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

#include "fedsim/rng.hpp"

namespace fedsim {

/// floor(x + 0.5), the rounding used for client counts and mask sizes.
inline std::size_t round_half_up(double x) {
  if (!(x > 0.0)) return 0;
  return static_cast<std::size_t>(std::floor(x + 0.5));
}

enum class sampling_kind { static_rate, dynamic };

/// Client sampling schedule.
///
/// A static schedule samples a fraction `initial_rate` of clients every round.
/// A dynamic schedule decays it as initial_rate * exp(-decay * t), where t is
/// the round index when `round_origin` is 0 and round + 1 when it is 1.
struct SamplingSchedule {
  sampling_kind kind = sampling_kind::static_rate;
  double initial_rate = 1.0;   // C
  double decay = 0.0;          // beta
  std::size_t min_clients = 2;
  int round_origin = 0;        // t0

  void validate() const {
    if (!(initial_rate > 0.0 && initial_rate <= 1.0)) {
      throw std::invalid_argument("sampling rate C must be in (0, 1]");
    }
    if (!(decay >= 0.0) || !std::isfinite(decay)) {
      throw std::invalid_argument("sampling decay beta must be >= 0");
    }
    if (min_clients < 1) throw std::invalid_argument("min_clients must be >= 1");
    if (round_origin != 0 && round_origin != 1) {
      throw std::invalid_argument("round origin t0 must be 0 or 1");
    }
  }

  /// Throws when the client population cannot satisfy the clamp.
  void validate_population(std::size_t num_clients) const {
    validate();
    if (num_clients < min_clients) {
      throw std::invalid_argument("client count " + std::to_string(num_clients) +
                                  " is below min_clients " + std::to_string(min_clients));
    }
  }
};

inline SamplingSchedule static_schedule(double rate, std::size_t min_clients = 2) {
  return SamplingSchedule{sampling_kind::static_rate, rate, 0.0, min_clients, 0};
}

inline SamplingSchedule dynamic_schedule(double rate, double decay, std::size_t min_clients = 2,
                                         int round_origin = 0) {
  return SamplingSchedule{sampling_kind::dynamic, rate, decay, min_clients, round_origin};
}

inline double rate_at(const SamplingSchedule& s, std::size_t round) {
  if (s.kind == sampling_kind::static_rate) return s.initial_rate;
  const double t = static_cast<double>(round) + static_cast<double>(s.round_origin);
  return s.initial_rate * std::exp(-s.decay * t);
}

/// m = clamp(round_half_up(rate * M), min_clients, M).
inline std::size_t clients_at(const SamplingSchedule& s, std::size_t round, std::size_t num_clients) {
  s.validate_population(num_clients);
  const std::size_t raw = round_half_up(rate_at(s, round) * static_cast<double>(num_clients));
  return std::clamp(raw, s.min_clients, num_clients);
}

/// m distinct ids drawn uniformly from [0, M), returned in ascending order.
inline std::vector<std::size_t> select_clients(std::size_t m, std::size_t num_clients,
                                               std::uint64_t seed) {
  if (m < 1 || m > num_clients) {
    throw std::invalid_argument("select_clients: need 1 <= m <= M, got m=" + std::to_string(m) +
                                ", M=" + std::to_string(num_clients));
  }
  std::vector<std::size_t> ids(num_clients);
  std::iota(ids.begin(), ids.end(), std::size_t{0});
  Rng rng(seed);
  // Partial Fisher-Yates: the first m slots become the sample.
  for (std::size_t i = 0; i < m; ++i) {
    const auto j = i + static_cast<std::size_t>(uniform_index(rng, num_clients - i));
    std::swap(ids[i], ids[j]);
  }
  ids.resize(m);
  std::sort(ids.begin(), ids.end());
  return ids;
}

}  // namespace fedsim
