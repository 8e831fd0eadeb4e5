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

#include <cmath>
#include <cstdint>
#include <stdexcept>

// Transport cost. The unit is one full-model transmission between one client
// and the server; costs are reported as a fraction of "every client uploads
// the full model" per round.

namespace fedsim {

/// (gamma / R) * sum over R rounds of C * exp(-beta * t), with t running
/// over 0..R-1 when t0 = 0 and 1..R when t0 = 1.
inline double analytic_cost(double initial_rate, double decay, double keep_fraction,
                            std::size_t rounds, int round_origin = 0) {
  if (rounds < 1) throw std::invalid_argument("analytic_cost: rounds must be >= 1");
  if (round_origin != 0 && round_origin != 1) {
    throw std::invalid_argument("analytic_cost: t0 must be 0 or 1");
  }
  double sum = 0.0;
  for (std::size_t r = 0; r < rounds; ++r) {
    const double t = static_cast<double>(r) + static_cast<double>(round_origin);
    sum += std::exp(-decay * t);
  }
  // Mean of the decay factors first, so beta = 0 gives exactly C * gamma.
  return keep_fraction * initial_rate * (sum / static_cast<double>(rounds));
}

/// Scalar counters accumulated by the engine. Counters only grow.
class CostLedger {
 public:
  CostLedger(std::size_t model_numel, std::size_t num_clients)
      : model_numel_(model_numel), num_clients_(num_clients) {
    if (model_numel == 0) throw std::invalid_argument("CostLedger: model_numel must be positive");
    if (num_clients == 0) throw std::invalid_argument("CostLedger: client count must be positive");
  }

  void record_upload(std::uint64_t scalars) noexcept { uploaded_ += scalars; }
  void record_download(std::uint64_t scalars) noexcept { downloaded_ += scalars; }

  std::uint64_t uploaded_scalars() const noexcept { return uploaded_; }
  std::uint64_t downloaded_scalars() const noexcept { return downloaded_; }
  std::size_t model_numel() const noexcept { return model_numel_; }
  std::size_t num_clients() const noexcept { return num_clients_; }

  /// Uploads so far in full-cohort units: uploaded / (numel * M).
  double cumulative_upload_units() const noexcept {
    return static_cast<double>(uploaded_) /
           (static_cast<double>(model_numel_) * static_cast<double>(num_clients_));
  }

 private:
  std::uint64_t uploaded_ = 0;
  std::uint64_t downloaded_ = 0;
  std::size_t model_numel_;
  std::size_t num_clients_;
};

/// Measured counterpart of analytic_cost: uploaded / (numel * M * R).
inline double normalized_upload_cost(const CostLedger& ledger, std::size_t rounds) {
  if (rounds < 1) throw std::invalid_argument("normalized_upload_cost: rounds must be >= 1");
  return static_cast<double>(ledger.uploaded_scalars()) /
         (static_cast<double>(ledger.model_numel()) * static_cast<double>(ledger.num_clients()) *
          static_cast<double>(rounds));
}

}  // namespace fedsim
