/*
 * Copyright 2026 The Shapalign Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "shapalign/harness/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <string>

#include "shapalign/coalition_game.hpp"
#include "shapalign/errors.hpp"
#include "shapalign/harness/infonce.hpp"
#include "shapalign/harness/parallel.hpp"
#include "shapalign/rng.hpp"

namespace shapalign::harness {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct ErrorStats {
  double mean = 0.0;
  double max = 0.0;
};

// Mean and max absolute error over every (estimate, player) pair.
ErrorStats error_stats(const std::vector<std::vector<double>>& estimates,
                       const std::vector<double>& exact) {
  ErrorStats s;
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& est : estimates) {
    for (std::size_t i = 0; i < exact.size(); ++i) {
      const double e = std::abs(est[i] - exact[i]);
      sum += e;
      s.max = std::max(s.max, e);
      ++n;
    }
  }
  s.mean = n ? sum / static_cast<double>(n) : 0.0;
  return s;
}

std::vector<double> column_mean(const std::vector<std::vector<double>>& rows) {
  std::vector<double> mean(rows.front().size(), 0.0);
  for (const auto& r : rows)
    for (std::size_t i = 0; i < r.size(); ++i) mean[i] += r[i];
  for (double& m : mean) m /= static_cast<double>(rows.size());
  return mean;
}

double objective(const EmbeddingBatch& batch, const TrainConfig& cfg,
                 const AlignmentOptions& opts) {
  if (cfg.loss == LossKind::kInfoNce)
    return infonce_losses(batch, opts.tau, cfg.alpha, cfg.beta).total;
  // Terms with zero weight are skipped so that e.g. alpha = beta = 0 costs
  // nothing.
  double total = 0.0;
  if (cfg.alpha != 0.0) total += cfg.alpha * semantic_loss(batch, opts);
  if (cfg.beta != 0.0) total += cfg.beta * modality_loss(batch, opts);
  return total;
}

bool batch_finite(const EmbeddingBatch& b) {
  const auto ok = [](const std::vector<Vec>& list) {
    return std::all_of(list.begin(), list.end(), [](const Vec& v) {
      const double n = norm(v);  // overflows to inf before the entries do
      return all_finite(v) && std::isfinite(n) && n > kMinNorm;
    });
  };
  return ok(b.texts) && ok(b.images);
}

}  // namespace

GameConfig bench_game(std::uint64_t seed, std::size_t k, double tau) {
  SplitMix64 rng(derive_seed(seed, {k}));
  GameConfig game;
  game.tau = tau;
  game.sims.resize(k);
  for (double& s : game.sims) s = rng.uniform(-1.0, 1.0);
  return game;
}

RunReport bench_convergence(const BenchConfig& cfg) {
  require(cfg.seeds >= 1, ErrorKind::kInvalidArgument, "bench needs >= 1 seed");
  require(!cfg.k_values.empty(), ErrorKind::kInvalidArgument, "bench needs >= 1 k");
  for (std::size_t k : cfg.k_values) {
    require(k >= 1 && k <= kMaxExactPermutationPlayers, ErrorKind::kTooManyPlayers,
            "bench supports 1 <= k <= 8, got " + std::to_string(k));
  }

  RunReport report;
  const auto timed = [&](Clock::time_point t0) {
    return cfg.record_timing ? seconds_since(t0) : 0.0;
  };

  for (std::size_t k : cfg.k_values) {
    const GameConfig game = bench_game(cfg.seed, k, cfg.tau);
    const std::int64_t stride =
        cfg.stride != 0 ? cfg.stride : std::max<std::int64_t>(1, static_cast<std::int64_t>(k / 2));
    require(stride >= 1, ErrorKind::kNonPositiveStride, "stride must be >= 1");

    auto t0 = Clock::now();
    const ShapleyReport exact = shapley_exact_subsets(game);
    report.estimators.push_back(
        {k, "exact_subset", exact.utility_evaluations, 0.0, 0.0, timed(t0)});

    std::vector<std::vector<double>> cyclic(cfg.seeds), naive(cfg.seeds);
    std::vector<std::uint64_t> budget(cfg.seeds);
    t0 = Clock::now();
    parallel_for(cfg.seeds, cfg.threads, [&](std::size_t s) {
      const ShapleyReport r = shapley_cyclic(game, stride, derive_seed(cfg.seed, {k, s}));
      cyclic[s] = r.values;
      budget[s] = r.utility_evaluations;
    });
    const double cyclic_seconds = timed(t0);

    // Same number of utility evaluations: one permutation per cyclic scan.
    const std::size_t passes = budget.front() / k;
    t0 = Clock::now();
    parallel_for(cfg.seeds, cfg.threads, [&](std::size_t s) {
      NaiveMcOptions opts;
      opts.permutations = passes;
      opts.seed = derive_seed(cfg.seed, {k, s, 1});
      naive[s] = shapley_naive_mc(game, opts).values;
    });
    const double naive_seconds = timed(t0);

    const ErrorStats ce = error_stats(cyclic, exact.values);
    const ErrorStats ne = error_stats(naive, exact.values);
    const ErrorStats cm = error_stats({column_mean(cyclic)}, exact.values);
    const ErrorStats nm = error_stats({column_mean(naive)}, exact.values);
    const std::uint64_t per_seed = budget.front();
    const std::uint64_t all_seeds = per_seed * cfg.seeds;
    report.estimators.push_back({k, "cyclic", per_seed, ce.mean, ce.max, cyclic_seconds});
    report.estimators.push_back({k, "naive_mc", per_seed, ne.mean, ne.max, naive_seconds});
    report.estimators.push_back({k, "cyclic_seed_mean", all_seeds, cm.mean, cm.max, cyclic_seconds});
    report.estimators.push_back({k, "naive_mc_seed_mean", all_seeds, nm.mean, nm.max, naive_seconds});
  }
  return report;
}

void TrainConfig::validate() const {
  data.validate();
  require(steps >= 1, ErrorKind::kInvalidArgument, "steps must be >= 1");
  require(lr >= 0.0 && std::isfinite(lr), ErrorKind::kInvalidArgument,
          "learning rate must be >= 0");
  require(alpha >= 0.0 && beta >= 0.0, ErrorKind::kNegativeWeight,
          "alpha and beta must be non-negative");
  require(align.tau > 0.0, ErrorKind::kNonPositiveTemperature, "tau must be > 0");
  require(align.stride >= 0, ErrorKind::kNonPositiveStride, "stride must be >= 1");
}

RunReport train_toy_alignment(const TrainConfig& cfg) {
  EmbeddingBatch unused;
  return train_toy_alignment(cfg, unused);
}

RunReport train_toy_alignment(const TrainConfig& cfg, EmbeddingBatch& final_batch) {
  cfg.validate();
  const auto t_start = Clock::now();
  EmbeddingBatch batch = synth_batch(cfg.data);
  RunReport report;
  report.steps.reserve(cfg.steps + 1);

  for (std::size_t step = 0;; ++step) {
    AlignmentOptions opts = cfg.align;
    if (cfg.resample_permutations) opts.seed = derive_seed(cfg.align.seed, {step});

    const double loss = objective(batch, cfg, opts);
    report.steps.push_back({step, loss, retrieval_top1(batch)});
    if (!std::isfinite(loss)) {
      report.diverged = true;
      break;
    }
    if (step == cfg.steps) break;

    const EmbeddingGrads g =
        cfg.loss == LossKind::kInfoNce
            ? infonce_gradients(batch, opts.tau, cfg.alpha, cfg.beta)
            : loss_gradients(batch, opts, cfg.alpha, cfg.beta);
    for (std::size_t i = 0; i < batch.size(); ++i) {
      for (std::size_t c = 0; c < cfg.data.d; ++c) {
        batch.texts[i][c] -= cfg.lr * g.texts[i][c];
        batch.images[i][c] -= cfg.lr * g.images[i][c];
      }
    }
    if (!batch_finite(batch)) {
      report.steps.push_back({step + 1, std::nan(""), 0.0});
      report.diverged = true;
      break;
    }
  }
  report.timings.push_back(
      {"train", cfg.record_timing ? seconds_since(t_start) : 0.0});
  final_batch = std::move(batch);
  return report;
}

WeightGrid weight_grid(const std::vector<double>& alphas,
                       const std::vector<double>& betas) {
  WeightGrid grid;
  for (double a : alphas)
    for (double b : betas) grid.emplace_back(a, b);
  return grid;
}

RunReport sweep_alpha_beta(const WeightGrid& grid, const TrainConfig& base,
                           unsigned threads) {
  require(!grid.empty(), ErrorKind::kInvalidArgument, "sweep grid is empty");
  std::vector<RunReport> cells(grid.size());
  parallel_for(grid.size(), threads, [&](std::size_t i) {
    TrainConfig cfg = base;
    cfg.alpha = grid[i].first;
    cfg.beta = grid[i].second;
    cells[i] = train_toy_alignment(cfg);
  });

  RunReport report;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const StepRecord& last = cells[i].steps.back();
    report.sweep.push_back({grid[i].first, grid[i].second, last.accuracy, last.loss});
    report.diverged = report.diverged || cells[i].diverged;
    double secs = 0.0;
    for (const auto& t : cells[i].timings) secs += t.seconds;
    report.timings.push_back({"cell " + std::to_string(i), secs});
  }
  return report;
}

}  // namespace shapalign::harness
