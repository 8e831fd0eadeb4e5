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
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "fedsim/aggregation.hpp"
#include "fedsim/cost.hpp"
#include "fedsim/data.hpp"
#include "fedsim/masking.hpp"
#include "fedsim/model.hpp"
#include "fedsim/params.hpp"
#include "fedsim/rng.hpp"
#include "fedsim/sampling.hpp"

namespace fedsim {

/// A training run produced a NaN or infinity.
class numeric_error : public std::runtime_error {
 public:
  numeric_error(const std::string& what, std::size_t round)
      : std::runtime_error(what + " at round " + std::to_string(round)), round_(round) {}

  std::size_t round() const noexcept { return round_; }

 private:
  std::size_t round_;
};

enum class data_source { blobs, csv };

struct DataConfig {
  data_source source = data_source::blobs;
  std::size_t n = 2000;
  std::size_t dim = 10;
  int classes = 4;
  double spread = 1.0;
  double test_fraction = 0.2;
  std::string path;       // csv only
  std::string test_path;  // csv only; empty means hold out test_fraction of `path`
};

/// Everything that determines a run. Two equal configs give byte-identical
/// outputs.
struct RunConfig {
  DataConfig data;
  std::size_t num_clients = 20;
  model_kind model = model_kind::logreg;
  std::size_t hidden_dim = 16;  // mlp only
  activation act = activation::relu;
  TrainConfig train;
  SamplingSchedule sampling;
  MaskingPolicy masking;
  aggregation_mode aggregation = aggregation_mode::weighted;
  std::size_t rounds = 1;
  std::size_t eval_every = 1;
  std::uint64_t seed = 0;
  double dropout = 0.0;  // probability a selected client never uploads

  void validate() const {
    if (rounds < 1) throw std::invalid_argument("rounds must be >= 1");
    if (eval_every < 1) throw std::invalid_argument("eval_every must be >= 1");
    if (num_clients < 1) throw std::invalid_argument("clients must be >= 1");
    if (!(dropout >= 0.0 && dropout <= 1.0)) throw std::invalid_argument("dropout must be in [0, 1]");
    if (model == model_kind::mlp && hidden_dim == 0) {
      throw std::invalid_argument("mlp requires a positive hidden width");
    }
    train.validate();
    sampling.validate_population(num_clients);
    masking.validate();
  }
};

/// Train/test data as the engine sees it.
struct RunData {
  Dataset train;
  Dataset test;
};

inline RunData load_run_data(const RunConfig& cfg) {
  const auto& dc = cfg.data;
  if (dc.source == data_source::blobs) {
    Dataset all = generate_blobs(dc.n, dc.dim, dc.classes, dc.spread,
                                 derive_seed(cfg.seed, stream::data));
    auto [train, test] = split_holdout(all, dc.test_fraction, derive_seed(cfg.seed, stream::holdout));
    return RunData{std::move(train), std::move(test)};
  }
  Dataset all = load_csv(dc.path);
  if (!dc.test_path.empty()) {
    Dataset test = load_csv(dc.test_path);
    if (test.dim() != all.dim()) {
      throw data_error("test file has " + std::to_string(test.dim()) + " features, train has " +
                       std::to_string(all.dim()));
    }
    const int classes = std::max(all.num_classes, test.num_classes);
    all.num_classes = classes;
    test.num_classes = classes;
    return RunData{std::move(all), std::move(test)};
  }
  auto [train, test] = split_holdout(all, dc.test_fraction, derive_seed(cfg.seed, stream::holdout));
  return RunData{std::move(train), std::move(test)};
}

inline ModelSpec model_spec_for(const RunConfig& cfg, const Dataset& train) {
  ModelSpec spec;
  spec.kind = cfg.model;
  spec.input_dim = train.dim();
  spec.num_classes = static_cast<std::size_t>(train.num_classes);
  spec.hidden_dim = cfg.model == model_kind::mlp ? cfg.hidden_dim : 0;
  spec.act = cfg.act;
  return spec;
}

/// One row of run metrics.
struct RoundRecord {
  std::size_t round = 0;
  double sample_rate = 0.0;
  std::size_t m = 0;
  std::vector<std::size_t> selected;
  double train_loss = 0.0;  // mean over clients that uploaded
  std::optional<double> test_loss;
  std::optional<double> test_acc;
  std::uint64_t uploaded = 0;    // this round
  std::uint64_t downloaded = 0;  // this round
  double cum_cost = 0.0;         // uploads so far in full-cohort units

  friend bool operator==(const RoundRecord&, const RoundRecord&) = default;
};

/// Knobs that must not change results.
struct RunOptions {
  std::size_t workers = 1;
  /// Called once per client task with the rows it trains on. May be invoked
  /// from worker threads.
  std::function<void(std::size_t round, std::size_t client, std::span<const std::size_t> rows)>
      on_client_train;
};

struct RunResult {
  std::vector<RoundRecord> records;
  CostLedger ledger{1, 1};
  ParamSet final_params;
};

namespace detail {

/// Runs task(i) for i in [0, count) on up to `workers` threads and rethrows
/// the exception of the lowest failing index.
template <typename Task>
void parallel_for(std::size_t count, std::size_t workers, Task&& task) {
  if (workers <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) task(i);
    return;
  }
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  {
    std::vector<std::jthread> pool;
    const std::size_t n_threads = std::min(workers, count);
    pool.reserve(n_threads);
    for (std::size_t w = 0; w < n_threads; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
          try {
            task(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace detail

/// Server loop. Per round t: compute the sampling rate and client count,
/// select clients, send each the global model, train locally on its shard,
/// mask the upload, average, and evaluate every eval_every rounds (and
/// always on the last round).
inline RunResult run(const RunConfig& cfg, const RunData& data, const RunOptions& opts = {}) {
  cfg.validate();
  const ModelSpec spec = model_spec_for(cfg, data.train);
  spec.validate();
  if (data.test.dim() != spec.input_dim) throw data_error("test set width differs from train set");
  if (data.test.num_classes > data.train.num_classes) {
    throw data_error("test set has classes the model cannot output");
  }

  const Partition partition =
      partition_iid(data.train, cfg.num_clients, derive_seed(cfg.seed, stream::partition));
  ParamSet global = init_model(spec, derive_seed(cfg.seed, stream::init));
  const std::size_t model_numel = numel(global);

  RunResult result;
  result.ledger = CostLedger(model_numel, cfg.num_clients);
  result.records.reserve(cfg.rounds);

  struct Slot {
    ClientUpdate update;
    double train_loss = 0.0;
    bool dropped = false;
  };

  for (std::size_t t = 0; t < cfg.rounds; ++t) {
    RoundRecord rec;
    rec.round = t;
    rec.sample_rate = rate_at(cfg.sampling, t);
    rec.m = clients_at(cfg.sampling, t, cfg.num_clients);
    rec.selected = select_clients(rec.m, cfg.num_clients, derive_seed(cfg.seed, stream::selection, t));

    rec.downloaded = static_cast<std::uint64_t>(rec.m) * model_numel;
    result.ledger.record_download(rec.downloaded);

    std::vector<Slot> slots(rec.m);
    detail::parallel_for(rec.m, opts.workers, [&](std::size_t i) {
      const std::size_t client = rec.selected[i];
      Slot& slot = slots[i];
      if (cfg.dropout > 0.0) {
        Rng drop_rng(derive_seed(cfg.seed, stream::dropout, client, t));
        if (uniform01(drop_rng) < cfg.dropout) {
          slot.dropped = true;
          return;
        }
      }
      const auto& shard = partition.shards[client];
      if (opts.on_client_train) opts.on_client_train(t, client, shard);
      LocalTrainResult trained = local_train_with_stats(
          spec, global, data.train, shard, cfg.train, derive_seed(cfg.seed, stream::train, client, t));
      MaskedUpload upload =
          mask_model(global, trained.params, cfg.masking, derive_seed(cfg.seed, stream::mask, client, t));
      slot.train_loss = trained.last_epoch_loss;
      slot.update = ClientUpdate{client, std::move(upload.params), shard.size(),
                                 upload.transmitted_scalars};
    });

    std::vector<ClientUpdate> updates;
    double loss_sum = 0.0;
    for (auto& slot : slots) {
      if (slot.dropped) continue;
      rec.uploaded += slot.update.transmitted_scalars;
      loss_sum += slot.train_loss;
      updates.push_back(std::move(slot.update));
    }
    result.ledger.record_upload(rec.uploaded);
    rec.cum_cost = result.ledger.cumulative_upload_units();

    if (!updates.empty()) {
      rec.train_loss = loss_sum / static_cast<double>(updates.size());
      if (!std::isfinite(rec.train_loss)) throw numeric_error("non-finite client training loss", t);
      global = fedavg(updates, cfg.aggregation);
      if (!global.all_finite()) throw numeric_error("non-finite global parameters", t);
    } else {
      rec.train_loss = std::numeric_limits<double>::quiet_NaN();
    }

    if ((t + 1) % cfg.eval_every == 0 || t + 1 == cfg.rounds) {
      const Evaluation ev = evaluate(spec, global, data.test);
      if (!std::isfinite(ev.loss)) throw numeric_error("non-finite test loss", t);
      rec.test_loss = ev.loss;
      rec.test_acc = ev.accuracy;
    }
    result.records.push_back(std::move(rec));
  }
  result.final_params = std::move(global);
  return result;
}

inline RunResult run(const RunConfig& cfg, const RunOptions& opts = {}) {
  cfg.validate();
  return run(cfg, load_run_data(cfg), opts);
}

enum class sweep_axis { beta, gamma, rate };

/// Returns `base` with one knob replaced. Sweeping beta switches the
/// schedule to dynamic so the value takes effect.
inline RunConfig with_axis(RunConfig base, sweep_axis axis, double value) {
  switch (axis) {
    case sweep_axis::beta:
      base.sampling.kind = sampling_kind::dynamic;
      base.sampling.decay = value;
      break;
    case sweep_axis::gamma:
      base.masking.keep_fraction = value;
      break;
    case sweep_axis::rate:
      base.sampling.initial_rate = value;
      break;
  }
  return base;
}

struct SweepRow {
  double value = 0.0;
  RunConfig config;
  RunResult result;

  const RoundRecord& final_record() const { return result.records.back(); }
};

/// One run per value. Every run shares the base seed, so data, partition
/// and initial model are identical across rows.
inline std::vector<SweepRow> sweep(const RunConfig& base, sweep_axis axis,
                                   std::span<const double> values, const RunOptions& opts = {}) {
  if (values.empty()) throw std::invalid_argument("sweep: no values given");
  std::vector<RunConfig> configs;
  for (double v : values) {
    configs.push_back(with_axis(base, axis, v));
    configs.back().validate();
  }
  const RunData data = load_run_data(base);
  std::vector<SweepRow> rows;
  for (std::size_t i = 0; i < configs.size(); ++i) {
    rows.push_back(SweepRow{values[i], configs[i], run(configs[i], data, opts)});
  }
  return rows;
}

}  // namespace fedsim
