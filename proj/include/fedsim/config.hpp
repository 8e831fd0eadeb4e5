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

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "fedsim/engine.hpp"

// Flat key=value run configuration.
//
//   # comment
//   rounds = 30
//   sampling.kind = dynamic
//
// Unknown and duplicate keys are rejected. Every key except `rounds` has a
// default; the resolved form (all keys, defaults filled in) is what gets
// echoed next to run outputs.

namespace fedsim {

/// Invalid configuration; key() names the offending key (empty for syntax
/// errors not tied to one).
class config_error : public std::invalid_argument {
 public:
  config_error(std::string key, const std::string& what)
      : std::invalid_argument(key.empty() ? what : key + ": " + what), key_(std::move(key)) {}

  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

struct ConfigKey {
  std::string_view name;
  std::optional<std::string_view> default_value;  // nullopt: required
  std::string_view help;
};

inline constexpr std::array<ConfigKey, 28> kConfigKeys{{
    {"data.source", "blobs", "blobs | csv"},
    {"data.n", "2000", "blobs: total rows before the test holdout"},
    {"data.dim", "10", "blobs: feature dimension"},
    {"data.classes", "4", "blobs: number of classes"},
    {"data.spread", "1", "blobs: per-feature noise std around class means"},
    {"data.test_fraction", "0.2", "held-out fraction when no test file is given"},
    {"data.path", "", "csv: training file (label,f1,...,fd; .gz allowed)"},
    {"data.test_path", "", "csv: optional test file"},
    {"clients", "20", "total client population M"},
    {"model.kind", "logreg", "logreg | mlp"},
    {"model.hidden", "16", "mlp hidden width"},
    {"model.activation", "relu", "relu | tanh"},
    {"train.epochs", "1", "local epochs E"},
    {"train.batch_size", "10", "local mini-batch size B"},
    {"train.lr", "0.05", "local learning rate"},
    {"sampling.kind", "static", "static | dynamic"},
    {"sampling.C", "1", "initial sampling rate C in (0, 1]"},
    {"sampling.beta", "0", "decay coefficient (dynamic)"},
    {"sampling.min_clients", "2", "lower clamp on sampled clients"},
    {"sampling.t0", "0", "decay round origin, 0 or 1"},
    {"masking.kind", "none", "none | random | selective"},
    {"masking.gamma", "1", "fraction of each layer uploaded"},
    {"masking.fill", "zero", "zero | server"},
    {"agg.mode", "weighted", "weighted | uniform | paper-literal"},
    {"rounds", std::nullopt, "communication rounds R (required)"},
    {"eval_every", "1", "evaluate every k rounds (last round always)"},
    {"seed", "0", "global seed"},
    {"engine.dropout", "0", "probability a selected client fails to upload"},
}};

inline const ConfigKey* find_config_key(std::string_view name) {
  for (const auto& k : kConfigKeys) {
    if (k.name == name) return &k;
  }
  return nullptr;
}

/// Raw key -> value strings.
using ConfigValues = std::map<std::string, std::string>;

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline void set_value(ConfigValues& values, std::string_view key, std::string_view value,
                      bool allow_replace) {
  if (!find_config_key(key)) throw config_error(std::string(key), "unknown key");
  auto [it, inserted] = values.emplace(std::string(key), std::string(value));
  if (!inserted) {
    if (!allow_replace) throw config_error(std::string(key), "duplicate key");
    it->second = std::string(value);
  }
}

template <typename T>
T parse_integer(const std::string& key, const std::string& text) {
  T v{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
    throw config_error(key, "expected an integer, got '" + text + "'");
  }
  return v;
}

inline double parse_real(const std::string& key, const std::string& text) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty() || !std::isfinite(v)) {
    throw config_error(key, "expected a number, got '" + text + "'");
  }
  return v;
}

inline std::string real_to_string(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

template <typename Enum, std::size_t N>
Enum parse_choice(const std::string& key, const std::string& text,
                  const std::array<std::pair<std::string_view, Enum>, N>& choices) {
  for (const auto& [name, value] : choices) {
    if (name == text) return value;
  }
  std::string allowed;
  for (const auto& [name, value] : choices) {
    if (!allowed.empty()) allowed += " | ";
    allowed += name;
  }
  throw config_error(key, "expected one of " + allowed + ", got '" + text + "'");
}

template <typename Enum, std::size_t N>
std::string_view choice_name(Enum value, const std::array<std::pair<std::string_view, Enum>, N>& choices) {
  for (const auto& [name, v] : choices) {
    if (v == value) return name;
  }
  return "?";
}

inline constexpr std::array<std::pair<std::string_view, data_source>, 2> kDataSources{
    {{"blobs", data_source::blobs}, {"csv", data_source::csv}}};
inline constexpr std::array<std::pair<std::string_view, model_kind>, 2> kModelKinds{
    {{"logreg", model_kind::logreg}, {"mlp", model_kind::mlp}}};
inline constexpr std::array<std::pair<std::string_view, activation>, 2> kActivations{
    {{"relu", activation::relu}, {"tanh", activation::tanh}}};
inline constexpr std::array<std::pair<std::string_view, sampling_kind>, 2> kSamplingKinds{
    {{"static", sampling_kind::static_rate}, {"dynamic", sampling_kind::dynamic}}};
inline constexpr std::array<std::pair<std::string_view, mask_kind>, 3> kMaskKinds{
    {{"none", mask_kind::none}, {"random", mask_kind::random}, {"selective", mask_kind::selective}}};
inline constexpr std::array<std::pair<std::string_view, fill_mode>, 2> kFillModes{
    {{"zero", fill_mode::zero}, {"server", fill_mode::server_fill}}};
inline constexpr std::array<std::pair<std::string_view, aggregation_mode>, 3> kAggModes{
    {{"weighted", aggregation_mode::weighted},
     {"uniform", aggregation_mode::uniform},
     {"paper-literal", aggregation_mode::paper_literal}}};
inline constexpr std::array<std::pair<std::string_view, sweep_axis>, 3> kSweepAxes{
    {{"beta", sweep_axis::beta}, {"gamma", sweep_axis::gamma}, {"C", sweep_axis::rate}}};

}  // namespace detail

/// Parses config text. Errors carry the line number or the key.
inline ConfigValues parse_config_text(std::string_view text) {
  ConfigValues values;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? text.npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw config_error("", "line " + std::to_string(line_no) + ": expected key = value");
    }
    const auto key = detail::trim(line.substr(0, eq));
    const auto value = detail::trim(line.substr(eq + 1));
    if (key.empty()) throw config_error("", "line " + std::to_string(line_no) + ": empty key");
    detail::set_value(values, key, value, false);
  }
  return values;
}

inline ConfigValues load_config_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw config_error("", "cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_config_text(ss.str());
}

/// Applies one `key=value` override on top of parsed values.
inline void apply_override(ConfigValues& values, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) {
    throw config_error("", "override '" + std::string(assignment) + "' is not key=value");
  }
  detail::set_value(values, detail::trim(assignment.substr(0, eq)),
                    detail::trim(assignment.substr(eq + 1)), true);
}

/// Fills defaults and builds a validated RunConfig. Every error names a key.
inline RunConfig resolve_config(const ConfigValues& raw) {
  auto get = [&raw](std::string_view name) -> std::string {
    const std::string key(name);
    if (auto it = raw.find(key); it != raw.end()) return it->second;
    const ConfigKey* spec = find_config_key(name);
    if (!spec || !spec->default_value) throw config_error(key, "missing required key");
    return std::string(*spec->default_value);
  };
  using detail::parse_integer;
  using detail::parse_real;
  using detail::parse_choice;

  RunConfig cfg;
  cfg.data.source = parse_choice("data.source", get("data.source"), detail::kDataSources);
  cfg.data.n = parse_integer<std::size_t>("data.n", get("data.n"));
  cfg.data.dim = parse_integer<std::size_t>("data.dim", get("data.dim"));
  cfg.data.classes = parse_integer<int>("data.classes", get("data.classes"));
  cfg.data.spread = parse_real("data.spread", get("data.spread"));
  cfg.data.test_fraction = parse_real("data.test_fraction", get("data.test_fraction"));
  cfg.data.path = get("data.path");
  cfg.data.test_path = get("data.test_path");
  cfg.num_clients = parse_integer<std::size_t>("clients", get("clients"));
  cfg.model = parse_choice("model.kind", get("model.kind"), detail::kModelKinds);
  cfg.hidden_dim = parse_integer<std::size_t>("model.hidden", get("model.hidden"));
  cfg.act = parse_choice("model.activation", get("model.activation"), detail::kActivations);
  cfg.train.local_epochs = parse_integer<std::size_t>("train.epochs", get("train.epochs"));
  cfg.train.batch_size = parse_integer<std::size_t>("train.batch_size", get("train.batch_size"));
  cfg.train.learning_rate = parse_real("train.lr", get("train.lr"));
  cfg.sampling.kind = parse_choice("sampling.kind", get("sampling.kind"), detail::kSamplingKinds);
  cfg.sampling.initial_rate = parse_real("sampling.C", get("sampling.C"));
  cfg.sampling.decay = parse_real("sampling.beta", get("sampling.beta"));
  cfg.sampling.min_clients = parse_integer<std::size_t>("sampling.min_clients", get("sampling.min_clients"));
  cfg.sampling.round_origin = parse_integer<int>("sampling.t0", get("sampling.t0"));
  cfg.masking.kind = parse_choice("masking.kind", get("masking.kind"), detail::kMaskKinds);
  cfg.masking.keep_fraction = parse_real("masking.gamma", get("masking.gamma"));
  cfg.masking.fill = parse_choice("masking.fill", get("masking.fill"), detail::kFillModes);
  cfg.aggregation = parse_choice("agg.mode", get("agg.mode"), detail::kAggModes);
  cfg.rounds = parse_integer<std::size_t>("rounds", get("rounds"));
  cfg.eval_every = parse_integer<std::size_t>("eval_every", get("eval_every"));
  cfg.seed = parse_integer<std::uint64_t>("seed", get("seed"));
  cfg.dropout = parse_real("engine.dropout", get("engine.dropout"));

  // Range checks, each tied to its key.
  auto require = [](bool ok, const char* key, const char* what) {
    if (!ok) throw config_error(key, what);
  };
  if (cfg.data.source == data_source::blobs) {
    require(cfg.data.dim >= 1, "data.dim", "must be >= 1");
    require(cfg.data.classes >= 1, "data.classes", "must be >= 1");
    require(cfg.data.n >= static_cast<std::size_t>(std::max(cfg.data.classes, 1)), "data.n",
            "must be >= data.classes");
    require(cfg.data.spread >= 0.0, "data.spread", "must be >= 0");
  } else {
    require(!cfg.data.path.empty(), "data.path", "required when data.source = csv");
  }
  require(cfg.data.test_fraction > 0.0 && cfg.data.test_fraction < 1.0, "data.test_fraction",
          "must be in (0, 1)");
  require(cfg.num_clients >= 1, "clients", "must be >= 1");
  require(cfg.model != model_kind::mlp || cfg.hidden_dim >= 1, "model.hidden", "must be >= 1");
  require(cfg.train.local_epochs >= 1, "train.epochs", "must be >= 1");
  require(cfg.train.batch_size >= 1, "train.batch_size", "must be >= 1");
  require(cfg.train.learning_rate > 0.0, "train.lr", "must be > 0");
  require(cfg.sampling.initial_rate > 0.0 && cfg.sampling.initial_rate <= 1.0, "sampling.C",
          "must be in (0, 1]");
  require(cfg.sampling.decay >= 0.0, "sampling.beta", "must be >= 0");
  require(cfg.sampling.min_clients >= 1, "sampling.min_clients", "must be >= 1");
  require(cfg.sampling.min_clients <= cfg.num_clients, "sampling.min_clients", "exceeds clients");
  require(cfg.sampling.round_origin == 0 || cfg.sampling.round_origin == 1, "sampling.t0",
          "must be 0 or 1");
  require(cfg.masking.keep_fraction >= 0.0 && cfg.masking.keep_fraction <= 1.0, "masking.gamma",
          "must be in [0, 1]");
  require(cfg.rounds >= 1, "rounds", "must be >= 1");
  require(cfg.eval_every >= 1, "eval_every", "must be >= 1");
  require(cfg.dropout >= 0.0 && cfg.dropout <= 1.0, "engine.dropout", "must be in [0, 1]");
  cfg.validate();
  return cfg;
}

/// Every key with its resolved value, in documented key order.
inline std::vector<std::pair<std::string, std::string>> to_key_values(const RunConfig& cfg) {
  using detail::choice_name;
  using detail::real_to_string;
  const std::map<std::string_view, std::string> resolved{
      {"data.source", std::string(choice_name(cfg.data.source, detail::kDataSources))},
      {"data.n", std::to_string(cfg.data.n)},
      {"data.dim", std::to_string(cfg.data.dim)},
      {"data.classes", std::to_string(cfg.data.classes)},
      {"data.spread", real_to_string(cfg.data.spread)},
      {"data.test_fraction", real_to_string(cfg.data.test_fraction)},
      {"data.path", cfg.data.path},
      {"data.test_path", cfg.data.test_path},
      {"clients", std::to_string(cfg.num_clients)},
      {"model.kind", std::string(choice_name(cfg.model, detail::kModelKinds))},
      {"model.hidden", std::to_string(cfg.hidden_dim)},
      {"model.activation", std::string(choice_name(cfg.act, detail::kActivations))},
      {"train.epochs", std::to_string(cfg.train.local_epochs)},
      {"train.batch_size", std::to_string(cfg.train.batch_size)},
      {"train.lr", real_to_string(cfg.train.learning_rate)},
      {"sampling.kind", std::string(choice_name(cfg.sampling.kind, detail::kSamplingKinds))},
      {"sampling.C", real_to_string(cfg.sampling.initial_rate)},
      {"sampling.beta", real_to_string(cfg.sampling.decay)},
      {"sampling.min_clients", std::to_string(cfg.sampling.min_clients)},
      {"sampling.t0", std::to_string(cfg.sampling.round_origin)},
      {"masking.kind", std::string(choice_name(cfg.masking.kind, detail::kMaskKinds))},
      {"masking.gamma", real_to_string(cfg.masking.keep_fraction)},
      {"masking.fill", std::string(choice_name(cfg.masking.fill, detail::kFillModes))},
      {"agg.mode", std::string(choice_name(cfg.aggregation, detail::kAggModes))},
      {"rounds", std::to_string(cfg.rounds)},
      {"eval_every", std::to_string(cfg.eval_every)},
      {"seed", std::to_string(cfg.seed)},
      {"engine.dropout", real_to_string(cfg.dropout)},
  };
  std::vector<std::pair<std::string, std::string>> out;
  out.reserve(kConfigKeys.size());
  for (const auto& k : kConfigKeys) out.emplace_back(std::string(k.name), resolved.at(k.name));
  return out;
}

/// Resolved config as parseable text; parse + resolve gives back `cfg`.
inline std::string to_config_text(const RunConfig& cfg) {
  std::string out;
  for (const auto& [k, v] : to_key_values(cfg)) out += k + " = " + v + "\n";
  return out;
}

inline sweep_axis parse_sweep_axis(const std::string& text) {
  return detail::parse_choice("axis", text, detail::kSweepAxes);
}

inline std::string_view sweep_axis_name(sweep_axis axis) {
  return detail::choice_name(axis, detail::kSweepAxes);
}

}  // namespace fedsim
