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

#include <gtest/gtest.h>

#include "fedsim/cost.hpp"
#include "fedsim/engine.hpp"

namespace fedsim {
namespace {

TEST(AnalyticCost, NoMaskingNoDecayIsC) {
  for (std::size_t r : {1u, 7u, 100u}) {
    EXPECT_DOUBLE_EQ(analytic_cost(0.3, 0.0, 1.0, r, 0), 0.3);
    EXPECT_DOUBLE_EQ(analytic_cost(0.3, 0.0, 1.0, r, 1), 0.3);
  }
}

TEST(AnalyticCost, DecayedSum) {
  // 0.05 * sum_{t=1}^{10} e^{-0.1 t} = 0.30052060512293155 (direct summation)
  EXPECT_NEAR(analytic_cost(1.0, 0.1, 0.5, 10, 1), 0.30052060512293155, 1e-14);
  // sum_{t=0}^{30} e^{-0.1 t} / 31 = 0.32370774103794153
  EXPECT_NEAR(analytic_cost(1.0, 0.1, 1.0, 31, 0), 0.32370774103794153, 1e-14);
}

TEST(AnalyticCost, NothingTransmitted) {
  EXPECT_EQ(analytic_cost(1.0, 0.1, 0.0, 10, 0), 0.0);
}

TEST(AnalyticCost, Validation) {
  EXPECT_THROW(analytic_cost(1.0, 0.1, 1.0, 0, 0), std::invalid_argument);
  EXPECT_THROW(analytic_cost(1.0, 0.1, 1.0, 3, 2), std::invalid_argument);
}

TEST(CostLedger, FullUploadsGiveSampleFraction) {
  const std::size_t numel = 30, clients = 20, m = 5, rounds = 4;
  CostLedger ledger(numel, clients);
  for (std::size_t r = 0; r < rounds; ++r) ledger.record_upload(m * numel);
  EXPECT_DOUBLE_EQ(normalized_upload_cost(ledger, rounds), 0.25);
  EXPECT_DOUBLE_EQ(ledger.cumulative_upload_units(), 1.0);
}

TEST(CostLedger, MonotoneCounters) {
  CostLedger ledger(10, 2);
  std::uint64_t last_up = 0, last_down = 0;
  for (std::uint64_t i = 0; i < 20; ++i) {
    ledger.record_upload(i % 3);
    ledger.record_download(i % 2);
    EXPECT_GE(ledger.uploaded_scalars(), last_up);
    EXPECT_GE(ledger.downloaded_scalars(), last_down);
    last_up = ledger.uploaded_scalars();
    last_down = ledger.downloaded_scalars();
  }
  EXPECT_THROW(CostLedger(0, 1), std::invalid_argument);
}

RunConfig cost_config() {
  RunConfig cfg;
  cfg.data.n = 500;
  cfg.data.dim = 4;
  cfg.data.classes = 2;
  cfg.num_clients = 10;
  cfg.rounds = 10;
  cfg.train = TrainConfig{1, 20, 0.05};
  cfg.sampling = dynamic_schedule(1.0, 0.0);
  cfg.seed = 3;
  return cfg;
}

TEST(MeasuredCost, HalvedByHalfMasking) {
  RunConfig full = cost_config();
  RunConfig half = cost_config();
  half.masking = MaskingPolicy{mask_kind::selective, 0.5, fill_mode::server_fill};
  const double c_full = normalized_upload_cost(run(full).ledger, full.rounds);
  const double c_half = normalized_upload_cost(run(half).ledger, half.rounds);
  EXPECT_DOUBLE_EQ(c_full, 1.0);
  // logreg 4x2 + 1x2: per-layer k = 4 + 1 = 5 of 10.
  EXPECT_DOUBLE_EQ(c_half, 0.5);
}

// Paired run vs formula with decay on: the per-round client count is rounded
// half-up, so each round can differ from C e^{-beta t} M by at most 1/2
// client, and per-layer k rounding can move each upload by at most 1/2 per
// layer.
TEST(MeasuredCost, TracksAnalyticWithinRoundingBound) {
  RunConfig cfg = cost_config();
  cfg.num_clients = 40;
  cfg.data.n = 1200;
  cfg.sampling = dynamic_schedule(1.0, 0.1, 1);
  cfg.masking = MaskingPolicy{mask_kind::selective, 0.5, fill_mode::server_fill};
  const RunResult res = run(cfg);
  const double measured = normalized_upload_cost(res.ledger, cfg.rounds);
  const double analytic = analytic_cost(1.0, 0.1, 0.5, cfg.rounds, 0);
  const double numel = static_cast<double>(res.ledger.model_numel());
  const double layers = 2.0;
  const double m_bound = 0.5 / 40.0 * 0.5;                      // half a client at gamma = 0.5
  const double k_bound = 0.5 * layers / numel;                  // per-upload k rounding, all clients
  EXPECT_LE(std::abs(measured - analytic), m_bound + k_bound + 1e-12);
}

}  // namespace
}  // namespace fedsim
