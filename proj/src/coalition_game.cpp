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

#include "shapalign/coalition_game.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "shapalign/errors.hpp"
#include "shapalign/rng.hpp"
#include "shapalign/tensor.hpp"

namespace shapalign {

namespace {

// Utility of a growing coalition, maintained as a max-shifted running
// softmax so that adding a player is O(1).
class PrefixUtility {
 public:
  explicit PrefixUtility(double tau) : tau_(tau) {}

  void add(double s) {
    if (s > max_) {
      const double rescale = std::exp((max_ - s) / tau_);
      z_ *= rescale;
      a_ *= rescale;
      max_ = s;
    }
    const double w = std::exp((s - max_) / tau_);
    z_ += w;
    a_ += w * s;
  }

  double value() const { return z_ > 0.0 ? a_ / z_ : 0.0; }

 private:
  double tau_;
  double max_ = -std::numeric_limits<double>::infinity();
  double z_ = 0.0;
  double a_ = 0.0;
};

std::vector<std::size_t> iota_players(std::size_t k) {
  std::vector<std::size_t> p(k);
  std::iota(p.begin(), p.end(), std::size_t{0});
  return p;
}

// Adds the marginals of one ordering into `acc`; returns evaluations used.
std::uint64_t scan_ordering(const GameConfig& cfg,
                            std::span<const std::size_t> order,
                            std::span<double> acc) {
  PrefixUtility prefix(cfg.tau);
  double previous = cfg.empty_utility;
  for (std::size_t player : order) {
    prefix.add(cfg.sims[player]);
    const double current = prefix.value();
    acc[player] += current - previous;
    previous = current;
  }
  return order.size();
}

void require_permutation(std::span<const std::size_t> p, std::size_t k) {
  std::vector<bool> seen(k, false);
  require(p.size() == k, ErrorKind::kInvalidCoalition,
          "permutation has " + std::to_string(p.size()) + " entries, expected " +
              std::to_string(k));
  for (std::size_t i : p) {
    require(i < k && !seen[i], ErrorKind::kInvalidCoalition,
            "not a permutation of 0.." + std::to_string(k - 1));
    seen[i] = true;
  }
}

}  // namespace

void GameConfig::validate() const {
  require(!sims.empty(), ErrorKind::kInvalidArgument, "game needs >= 1 player");
  require(tau > 0.0 && std::isfinite(tau), ErrorKind::kNonPositiveTemperature,
          "tau must be > 0");
  require(all_finite(sims), ErrorKind::kInvalidArgument, "non-finite similarity");
  require(empty_utility == 0.0, ErrorKind::kInvalidArgument,
          "empty-coalition utility is fixed at 0");
}

void Coalition::validate(std::size_t players) const {
  std::vector<bool> seen(players, false);
  for (std::size_t i : members_) {
    require(i < players, ErrorKind::kInvalidCoalition,
            "player " + std::to_string(i) + " out of range");
    require(!seen[i], ErrorKind::kInvalidCoalition,
            "duplicate player " + std::to_string(i));
    seen[i] = true;
  }
}

std::string_view to_string(ShapleyMethod method) {
  switch (method) {
    case ShapleyMethod::kExactSubset: return "exact_subset";
    case ShapleyMethod::kExactPermutation: return "exact_permutation";
    case ShapleyMethod::kCyclic: return "cyclic";
    case ShapleyMethod::kNaiveMc: return "naive_mc";
  }
  return "unknown";
}

double utility(const GameConfig& cfg, const Coalition& coalition) {
  cfg.validate();
  coalition.validate(cfg.players());
  if (coalition.empty()) return cfg.empty_utility;
  std::vector<double> member_sims;
  member_sims.reserve(coalition.size());
  for (std::size_t i : coalition.members()) member_sims.push_back(cfg.sims[i]);
  const Vec p = softmax_temp(member_sims, cfg.tau);
  return dot(p, member_sims);
}

ShapleyReport shapley_exact_subsets(const GameConfig& cfg) {
  cfg.validate();
  const std::size_t k = cfg.players();
  require(k <= kMaxExactSubsetPlayers, ErrorKind::kTooManyPlayers,
          "subset enumeration supports k <= 20, got " + std::to_string(k));

  const std::size_t n_masks = std::size_t{1} << k;
  std::vector<double> u(n_masks, cfg.empty_utility);
  for (std::size_t mask = 1; mask < n_masks; ++mask) {
    PrefixUtility acc(cfg.tau);
    for (std::size_t i = 0; i < k; ++i)
      if (mask & (std::size_t{1} << i)) acc.add(cfg.sims[i]);
    u[mask] = acc.value();
  }

  // weight[s] = 1 / (k * C(k-1, s))
  std::vector<double> weight(k);
  double binom = 1.0;
  for (std::size_t s = 0; s < k; ++s) {
    weight[s] = 1.0 / (static_cast<double>(k) * binom);
    binom = binom * static_cast<double>(k - 1 - s) / static_cast<double>(s + 1);
  }

  ShapleyReport report;
  report.method = ShapleyMethod::kExactSubset;
  report.values.assign(k, 0.0);
  report.utility_evaluations = n_masks - 1;
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t bit = std::size_t{1} << i;
    double phi = 0.0;
    for (std::size_t mask = 0; mask < n_masks; ++mask) {
      if (mask & bit) continue;
      const auto size = static_cast<std::size_t>(std::popcount(mask));
      phi += weight[size] * (u[mask | bit] - u[mask]);
    }
    report.values[i] = phi;
  }
  return report;
}

ShapleyReport shapley_exact_permutations(const GameConfig& cfg) {
  cfg.validate();
  const std::size_t k = cfg.players();
  require(k <= kMaxExactPermutationPlayers, ErrorKind::kTooManyPlayers,
          "permutation enumeration supports k <= 8, got " + std::to_string(k));

  ShapleyReport report;
  report.method = ShapleyMethod::kExactPermutation;
  report.values.assign(k, 0.0);
  std::vector<std::size_t> order = iota_players(k);
  std::size_t count = 0;
  do {
    report.utility_evaluations += scan_ordering(cfg, order, report.values);
    ++count;
  } while (std::next_permutation(order.begin(), order.end()));
  for (double& v : report.values) v /= static_cast<double>(count);
  report.passes = count;
  return report;
}

std::vector<std::vector<std::size_t>> CyclicSchedule::orders() const {
  std::vector<std::vector<std::size_t>> out;
  out.reserve(strides.size());
  std::vector<std::size_t> p = initial;
  for (std::size_t s : strides) {
    out.push_back(p);
    if (!p.empty()) {
      std::rotate(p.begin(), p.begin() + static_cast<std::ptrdiff_t>(s % p.size()),
                  p.end());
    }
  }
  return out;
}

CyclicSchedule make_cyclic_schedule(std::vector<std::size_t> initial,
                                    std::int64_t initial_stride) {
  require(initial_stride >= 1, ErrorKind::kNonPositiveStride,
          "initial stride must be >= 1, got " + std::to_string(initial_stride));
  require_permutation(initial, initial.size());
  CyclicSchedule schedule;
  schedule.initial = std::move(initial);
  for (auto s = static_cast<std::size_t>(initial_stride); s > 0; s /= 2)
    schedule.strides.push_back(s);
  return schedule;
}

std::vector<std::size_t> seeded_permutation(std::vector<std::size_t> base,
                                            std::uint64_t seed) {
  SplitMix64 rng(seed);
  shuffle(std::span<std::size_t>(base), rng);
  return base;
}

ShapleyReport shapley_cyclic(const GameConfig& cfg, std::int64_t initial_stride,
                             std::uint64_t seed) {
  cfg.validate();
  require(initial_stride >= 1, ErrorKind::kNonPositiveStride,
          "initial stride must be >= 1, got " + std::to_string(initial_stride));
  auto schedule = make_cyclic_schedule(
      seeded_permutation(iota_players(cfg.players()), seed), initial_stride);
  ShapleyReport report = shapley_cyclic(cfg, schedule);
  report.seed = seed;
  return report;
}

ShapleyReport shapley_cyclic(const GameConfig& cfg,
                             const CyclicSchedule& schedule) {
  cfg.validate();
  require_permutation(schedule.initial, cfg.players());
  require(!schedule.strides.empty(), ErrorKind::kNonPositiveStride,
          "schedule has no scans");

  ShapleyReport report;
  report.method = ShapleyMethod::kCyclic;
  report.values.assign(cfg.players(), 0.0);
  report.stride_trace = schedule.strides;
  // Each player appears exactly once per scan, so the running mean of its
  // marginals is the scan-sum divided by the scan count.
  for (const auto& order : schedule.orders()) {
    report.utility_evaluations += scan_ordering(cfg, order, report.values);
    ++report.passes;
  }
  for (double& v : report.values) v /= static_cast<double>(report.passes);
  return report;
}

std::vector<double> shapley_cyclic_backward(const GameConfig& cfg,
                                            const CyclicSchedule& schedule,
                                            std::span<const double> weights) {
  cfg.validate();
  const std::size_t k = cfg.players();
  require(weights.size() == k, ErrorKind::kDimMismatch,
          "weights length must equal player count");
  require_permutation(schedule.initial, k);

  // sum_i w_i phi_i = (1/passes) sum_scans sum_t u_t * (w[P_t] - w[P_{t+1}])
  // and du(S)/ds_i = p_i * (1 + (s_i - u(S)) / tau) for i in S.
  std::vector<double> grad(k, 0.0);
  const double inv_passes = 1.0 / static_cast<double>(schedule.passes());
  std::vector<double> p;
  for (const auto& order : schedule.orders()) {
    for (std::size_t t = 0; t < k; ++t) {
      const double next_w = t + 1 < k ? weights[order[t + 1]] : 0.0;
      const double coef = inv_passes * (weights[order[t]] - next_w);
      if (coef == 0.0) continue;

      double m = -std::numeric_limits<double>::infinity();
      for (std::size_t a = 0; a <= t; ++a) m = std::max(m, cfg.sims[order[a]]);
      p.assign(t + 1, 0.0);
      double z = 0.0;
      for (std::size_t a = 0; a <= t; ++a) {
        p[a] = std::exp((cfg.sims[order[a]] - m) / cfg.tau);
        z += p[a];
      }
      double u = 0.0;
      for (std::size_t a = 0; a <= t; ++a) {
        p[a] /= z;
        u += p[a] * cfg.sims[order[a]];
      }
      for (std::size_t a = 0; a <= t; ++a) {
        const double s = cfg.sims[order[a]];
        grad[order[a]] += coef * p[a] * (1.0 + (s - u) / cfg.tau);
      }
    }
  }
  return grad;
}

ShapleyReport shapley_naive_mc(const GameConfig& cfg, const NaiveMcOptions& opts) {
  cfg.validate();
  const std::size_t k = cfg.players();
  if (opts.enumerate) {
    ShapleyReport report = shapley_exact_permutations(cfg);
    report.method = ShapleyMethod::kNaiveMc;
    report.seed = opts.seed;
    return report;
  }
  require(opts.permutations >= 1, ErrorKind::kInvalidArgument,
          "naive Monte Carlo needs >= 1 permutation");

  ShapleyReport report;
  report.method = ShapleyMethod::kNaiveMc;
  report.seed = opts.seed;
  report.values.assign(k, 0.0);
  SplitMix64 rng(opts.seed);
  std::vector<std::size_t> order(k);
  for (std::size_t n = 0; n < opts.permutations; ++n) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    shuffle(std::span<std::size_t>(order), rng);
    report.utility_evaluations += scan_ordering(cfg, order, report.values);
  }
  report.passes = opts.permutations;
  for (double& v : report.values) v /= static_cast<double>(opts.permutations);
  return report;
}

}  // namespace shapalign
