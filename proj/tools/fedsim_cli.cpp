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

// fedsim command line.
//
//   fedsim run   --config FILE [--set key=value]... [--seed N] [--out DIR] [--workers N]
//   fedsim sweep --config FILE --axis beta|gamma|C --values v1,v2,... [same options]
//   fedsim cost  C BETA GAMMA ROUNDS T0
//
// Exit status: 0 success, 2 invalid input or config, 3 numeric failure
// during training, 1 anything else.

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fedsim/fedsim.hpp"

namespace {

constexpr int kExitInvalid = 2;
constexpr int kExitNumeric = 3;

struct CommonOptions {
  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::string out_dir = "out";
  std::size_t workers = 1;
};

void add_common(CLI::App* cmd, CommonOptions& opts) {
  cmd->add_option("-c,--config", opts.config_path, "key = value run configuration")
      ->required();
  cmd->add_option("--set", opts.overrides, "override a config key (key=value), repeatable");
  cmd->add_option("--seed", opts.seed, "override the global seed");
  cmd->add_option("-o,--out", opts.out_dir, "output directory")->capture_default_str();
  cmd->add_option("-j,--workers", opts.workers, "concurrent client workers")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
}

fedsim::RunConfig load_config(const CommonOptions& opts) {
  fedsim::ConfigValues values = fedsim::load_config_file(opts.config_path);
  for (const auto& o : opts.overrides) fedsim::apply_override(values, o);
  if (opts.seed) fedsim::apply_override(values, "seed=" + std::to_string(*opts.seed));
  return fedsim::resolve_config(values);
}

std::vector<double> parse_values(const std::string& text) {
  std::vector<double> values;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const std::string item =
        text.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    if (!item.empty()) {
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
      if (ec != std::errc() || ptr != item.data() + item.size()) {
        throw fedsim::config_error("values", "not a number: '" + item + "'");
      }
      values.push_back(v);
    }
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  if (values.empty()) throw fedsim::config_error("values", "empty value list");
  return values;
}

int cmd_run(const CommonOptions& opts) {
  const fedsim::RunConfig cfg = load_config(opts);
  fedsim::RunOptions run_opts;
  run_opts.workers = opts.workers;
  const fedsim::RunResult result = fedsim::run(cfg, run_opts);
  fedsim::write_run_outputs(opts.out_dir, cfg, result);
  const auto& last = result.records.back();
  std::cout << "rounds=" << result.records.size()
            << " test_acc=" << (last.test_acc ? *last.test_acc : 0.0)
            << " cum_cost=" << last.cum_cost << " out=" << opts.out_dir << '\n';
  return 0;
}

int cmd_sweep(const CommonOptions& opts, const std::string& axis_name, const std::string& values_text) {
  const fedsim::sweep_axis axis = fedsim::parse_sweep_axis(axis_name);
  const std::vector<double> values = parse_values(values_text);
  const fedsim::RunConfig base = load_config(opts);
  // Validate every point before doing any work.
  for (double v : values) {
    fedsim::ConfigValues kv;
    for (const auto& [k, val] : fedsim::to_key_values(fedsim::with_axis(base, axis, v))) kv[k] = val;
    fedsim::resolve_config(kv);
  }
  fedsim::RunOptions run_opts;
  run_opts.workers = opts.workers;
  const auto rows = fedsim::sweep(base, axis, values, run_opts);

  const std::filesystem::path out(opts.out_dir);
  for (const auto& row : rows) {
    fedsim::write_run_outputs(out / fedsim::sweep_dir_name(axis, row.value), row.config, row.result);
  }
  std::filesystem::create_directories(out);
  std::ofstream summary(out / "summary.csv", std::ios::binary);
  if (!summary) throw std::runtime_error("cannot write summary.csv");
  fedsim::write_sweep_summary(summary, axis, rows);
  fedsim::write_sweep_summary(std::cout, axis, rows);
  return 0;
}

int cmd_cost(double rate, double decay, double keep, std::size_t rounds, int t0) {
  if (!(rate > 0.0 && rate <= 1.0)) throw fedsim::config_error("C", "must be in (0, 1]");
  if (!(decay >= 0.0)) throw fedsim::config_error("beta", "must be >= 0");
  if (!(keep >= 0.0 && keep <= 1.0)) throw fedsim::config_error("gamma", "must be in [0, 1]");
  if (rounds < 1) throw fedsim::config_error("rounds", "must be >= 1");
  if (t0 != 0 && t0 != 1) throw fedsim::config_error("t0", "must be 0 or 1");
  std::printf("%.6f\n", fedsim::analytic_cost(rate, decay, keep, rounds, t0));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Federated averaging simulator with dynamic sampling and update masking"};
  app.require_subcommand(1);

  CommonOptions run_opts;
  auto* run = app.add_subcommand("run", "train one configuration");
  add_common(run, run_opts);

  CommonOptions sweep_opts;
  std::string axis;
  std::string values;
  auto* sweep = app.add_subcommand("sweep", "run one configuration per value of an axis");
  add_common(sweep, sweep_opts);
  sweep->add_option("--axis", axis, "beta | gamma | C")->required();
  sweep->add_option("--values", values, "comma-separated values")->required();

  double rate = 0.0, decay = 0.0, keep = 0.0;
  std::size_t rounds = 0;
  int t0 = 0;
  auto* cost = app.add_subcommand("cost", "print the analytic per-round upload cost");
  cost->add_option("C", rate, "initial sampling rate")->required();
  cost->add_option("beta", decay, "decay coefficient")->required();
  cost->add_option("gamma", keep, "kept fraction")->required();
  cost->add_option("rounds", rounds, "communication rounds")->required();
  cost->add_option("t0", t0, "round origin, 0 or 1")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInvalid;
  }

  try {
    if (run->parsed()) return cmd_run(run_opts);
    if (sweep->parsed()) return cmd_sweep(sweep_opts, axis, values);
    if (cost->parsed()) return cmd_cost(rate, decay, keep, rounds, t0);
  } catch (const fedsim::config_error& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const fedsim::data_error& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const fedsim::numeric_error& e) {
    std::cerr << "numeric failure: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
