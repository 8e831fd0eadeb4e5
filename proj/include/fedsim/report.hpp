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
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <span>
#include <string>

#include <json.hpp>

#include "fedsim/config.hpp"
#include "fedsim/engine.hpp"

// Run outputs. A run directory holds
//   metrics.csv      one row per round (header kMetricsHeader)
//   run.json         resolved config, selected clients per round, totals
//   config.resolved  key = value text that reproduces the run
// Reals are written in shortest round-trip form; skipped evaluations and
// rounds with no uploads leave their cells empty.

namespace fedsim {

inline constexpr std::string_view kMetricsHeader =
    "round,sample_rate,m,train_loss,test_loss,test_acc,uploaded,downloaded,cum_cost";

namespace detail {

inline std::string cell(double v) {
  return std::isfinite(v) ? real_to_string(v) : std::string();
}

inline std::string cell(const std::optional<double>& v) {
  return v ? cell(*v) : std::string();
}

inline std::string metrics_row(const RoundRecord& r) {
  return std::to_string(r.round) + ',' + cell(r.sample_rate) + ',' + std::to_string(r.m) + ',' +
         cell(r.train_loss) + ',' + cell(r.test_loss) + ',' + cell(r.test_acc) + ',' +
         std::to_string(r.uploaded) + ',' + std::to_string(r.downloaded) + ',' + cell(r.cum_cost);
}

inline std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write '" + path.string() + "'");
  return os;
}

}  // namespace detail

inline void write_metrics_csv(std::ostream& os, std::span<const RoundRecord> records) {
  os << kMetricsHeader << '\n';
  for (const auto& r : records) os << detail::metrics_row(r) << '\n';
}

inline nlohmann::ordered_json sidecar_json(const RunConfig& cfg, const RunResult& result) {
  nlohmann::ordered_json j;
  nlohmann::ordered_json config = nlohmann::ordered_json::object();
  for (const auto& [k, v] : to_key_values(cfg)) config[k] = v;
  j["config"] = std::move(config);
  nlohmann::ordered_json rounds = nlohmann::ordered_json::array();
  for (const auto& r : result.records) {
    rounds.push_back({{"round", r.round}, {"m", r.m}, {"selected", r.selected}});
  }
  j["rounds"] = std::move(rounds);
  j["totals"] = {{"model_numel", result.ledger.model_numel()},
                 {"clients", result.ledger.num_clients()},
                 {"uploaded_scalars", result.ledger.uploaded_scalars()},
                 {"downloaded_scalars", result.ledger.downloaded_scalars()},
                 {"normalized_upload_cost",
                  normalized_upload_cost(result.ledger, result.records.size())}};
  return j;
}

inline void write_sidecar_json(std::ostream& os, const RunConfig& cfg, const RunResult& result) {
  os << sidecar_json(cfg, result).dump(2) << '\n';
}

/// Writes metrics.csv, run.json and config.resolved into `dir`.
inline void write_run_outputs(const std::filesystem::path& dir, const RunConfig& cfg,
                              const RunResult& result) {
  std::filesystem::create_directories(dir);
  {
    auto os = detail::open_output(dir / "metrics.csv");
    write_metrics_csv(os, result.records);
  }
  {
    auto os = detail::open_output(dir / "run.json");
    write_sidecar_json(os, cfg, result);
  }
  {
    auto os = detail::open_output(dir / "config.resolved");
    os << to_config_text(cfg);
  }
}

/// One row per swept value: the value followed by its final round's metrics.
inline void write_sweep_summary(std::ostream& os, sweep_axis axis, std::span<const SweepRow> rows) {
  os << sweep_axis_name(axis) << ',' << kMetricsHeader << '\n';
  for (const auto& row : rows) {
    os << detail::real_to_string(row.value) << ',' << detail::metrics_row(row.final_record()) << '\n';
  }
}

/// Directory name for one sweep value, e.g. "gamma=0.5".
inline std::string sweep_dir_name(sweep_axis axis, double value) {
  return std::string(sweep_axis_name(axis)) + "=" + detail::real_to_string(value);
}

}  // namespace fedsim
