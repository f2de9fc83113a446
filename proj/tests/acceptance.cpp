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

// Acceptance suite: one PASS/FAIL line per criterion, with the measured
// statistic and wall-clock time. Exits non-zero if any criterion fails.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "shapalign/coalition_game.hpp"
#include "shapalign/decoders.hpp"
#include "shapalign/harness/experiments.hpp"
#include "shapalign/harness/gradcheck.hpp"
#include "shapalign/rng.hpp"

#ifndef SHAPALIGN_CLI
#error "SHAPALIGN_CLI must be the path of the shapalign executable"
#endif

namespace {

using namespace shapalign;
using namespace shapalign::harness;
namespace fs = std::filesystem;

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void criterion(int id, const char* name, double budget_seconds,
               const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (budget_seconds > 0 && secs >= budget_seconds) {
    o.pass = false;
    o.detail += "; over time budget";
  }
  std::printf("[%s] %d %s: %s (%.2f s", o.pass ? "PASS" : "FAIL", id, name,
              o.detail.c_str(), secs);
  if (budget_seconds > 0) std::printf(", budget %.0f s", budget_seconds);
  std::printf(")\n");
  std::fflush(stdout);
  if (!o.pass) ++failures;
}

std::string sci(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", x);
  return buf;
}

std::vector<double> random_sims(SplitMix64& rng, std::size_t k) {
  std::vector<double> s(k);
  for (double& x : s) x = rng.uniform(-1.0, 1.0);
  return s;
}

double grand_utility(const GameConfig& cfg) {
  std::vector<std::size_t> all(cfg.players());
  std::iota(all.begin(), all.end(), std::size_t{0});
  return utility(cfg, Coalition(std::move(all)));
}

double sum(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

Outcome exact_efficiency() {
  SplitMix64 rng(1001);
  double worst = 0.0;
  for (int t = 0; t < 500; ++t) {
    const GameConfig cfg{random_sims(rng, 1 + t % 8), t % 2 ? 1.0 : 0.1};
    worst = std::max(worst, std::abs(sum(shapley_exact_subsets(cfg).values) - grand_utility(cfg)));
  }
  return {worst < 1e-9, "max |sum phi - u(K)| = " + sci(worst) + " over 500 games, tol 1e-9"};
}

Outcome oracle_equivalence() {
  SplitMix64 rng(1002);
  double worst = 0.0;
  for (int t = 0; t < 200; ++t) {
    const GameConfig cfg{random_sims(rng, 1 + t % 6), rng.uniform(0.1, 2.0)};
    const auto a = shapley_exact_subsets(cfg).values;
    const auto b = shapley_exact_permutations(cfg).values;
    for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  }
  return {worst < 1e-9, "max |subset - permutation| = " + sci(worst) + " over 200 games, tol 1e-9"};
}

Outcome cyclic_telescoping() {
  SplitMix64 rng(1003);
  double worst = 0.0;
  for (int t = 0; t < 1000; ++t) {
    const std::size_t k = 1 + rng.below(16);
    const GameConfig cfg{random_sims(rng, k), t % 2 ? 1.0 : 0.1};
    const auto stride = static_cast<std::int64_t>(1 + rng.below(2 * k));
    const auto r = shapley_cyclic(cfg, stride, rng.next());
    worst = std::max(worst, std::abs(sum(r.values) - grand_utility(cfg)));
  }
  return {worst < 1e-12, "max |sum phi_hat - u(K)| = " + sci(worst) +
                             " over 1000 seed/stride cases, tol 1e-12"};
}

Outcome cyclic_unbiasedness() {
  // 20000 seeds per game: the per-seed spread at k = 8 is ~0.1, so 2000 seeds
  // would leave the sampling error of the mean close to the 0.01 tolerance.
  constexpr std::size_t kSeeds = 20000;
  constexpr int kGames = 5;
  double worst = 0.0, worst_2000 = 0.0;
  for (int g = 0; g < kGames; ++g) {
    const GameConfig cfg = bench_game(2000 + g, 8, 1.0);
    const auto exact = shapley_exact_subsets(cfg).values;
    std::vector<double> mean(8, 0.0);
    for (std::size_t s = 0; s < kSeeds; ++s) {
      const auto v = shapley_cyclic(cfg, 4, derive_seed(2000 + g, {s})).values;
      for (std::size_t i = 0; i < 8; ++i) mean[i] += v[i];
      if (s + 1 == 2000) {
        for (std::size_t i = 0; i < 8; ++i)
          worst_2000 = std::max(worst_2000, std::abs(mean[i] / 2000 - exact[i]));
      }
    }
    for (std::size_t i = 0; i < 8; ++i)
      worst = std::max(worst, std::abs(mean[i] / kSeeds - exact[i]));
  }
  return {worst < 0.01, "k=8, tau=1, " + std::to_string(kGames) +
                            " games: max |mean - exact| = " + sci(worst) + " at " +
                            std::to_string(kSeeds) + " seeds (" + sci(worst_2000) +
                            " at 2000), tol 0.01"};
}

Outcome gradient_checks() {
  const GradCheckResult r[] = {gradcheck_alignment(1005, 100), gradcheck_fusion(1005, 100),
                               gradcheck_crf(1005, 100)};
  bool ok = true;
  std::string detail;
  for (const auto& g : r) {
    ok = ok && g.instances >= 100 && g.max_rel_err < 1e-4;
    detail += (detail.empty() ? "" : ", ") + g.target + " " + sci(g.max_rel_err) + " (" +
              std::to_string(g.entries) + " entries; two-point h=1e-5 gives " +
              sci(g.max_rel_err_two_point) + ")";
  }
  return {ok, "max relative error vs five-point stencil: " + detail +
                  "; 100 instances each, tol 1e-4"};
}

Outcome crf_oracle() {
  SplitMix64 rng(1006);
  double worst = 0.0;
  int viterbi_mismatch = 0;
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = 1 + rng.below(6), labels = 2 + rng.below(3);
    CrfModel m = CrfModel::zeros(n, labels);
    for (double& x : m.emissions.flat()) x = 2.0 * rng.normal();
    for (double& x : m.transitions.flat()) x = 2.0 * rng.normal();
    for (double& x : m.start) x = rng.normal();
    for (double& x : m.end) x = rng.normal();
    std::vector<std::size_t> gold(n);
    for (auto& y : gold) y = rng.below(labels);

    double log_z = -std::numeric_limits<double>::infinity();
    double best = -std::numeric_limits<double>::infinity();
    std::vector<std::size_t> y(n, 0), argmax;
    for (;;) {
      const double s = crf_score(m, y);
      const double hi = std::max(log_z, s);
      log_z = hi + std::log(std::exp(log_z - hi) + std::exp(s - hi));
      if (s > best) {
        best = s;
        argmax = y;
      }
      std::size_t p = n;
      while (p > 0 && ++y[p - 1] == labels) y[--p] = 0;
      if (p == 0) break;
    }
    worst = std::max(worst, std::abs(crf_nll(m, gold) - (log_z - crf_score(m, gold))));
    if (crf_decode(m) != argmax) ++viterbi_mismatch;
  }
  return {worst < 1e-8 && viterbi_mismatch == 0,
          "max |NLL - enumeration| = " + sci(worst) + ", Viterbi mismatches " +
              std::to_string(viterbi_mismatch) + "/200, tol 1e-8"};
}

Outcome refine_properties() {
  SplitMix64 rng(1007);
  const auto simplex = [&](std::size_t n) {
    std::vector<double> p(n);
    double s = 0.0;
    for (double& x : p) s += (x = -std::log(1.0 - rng.uniform()));
    for (double& x : p) x /= s;
    return p;
  };
  double worst_sum = 0.0;
  int negative = 0, argmax_mismatch = 0;
  for (int t = 0; t < 10000; ++t) {
    const std::size_t n = 2 + rng.below(7);
    const auto pt = simplex(n), ptsp = simplex(n);
    const Vec r = refine_distribution(pt, ptsp, rng.uniform(0.0, 3.0));
    worst_sum = std::max(worst_sum, std::abs(sum(r.values()) - 1.0));
    negative += std::any_of(r.begin(), r.end(), [](double x) { return x < 0.0; });
    const Vec r0 = refine_distribution(pt, ptsp, 0.0);
    if (std::max_element(r0.begin(), r0.end()) - r0.begin() !=
        std::max_element(ptsp.begin(), ptsp.end()) - ptsp.begin())
      ++argmax_mismatch;
  }
  return {worst_sum < 1e-12 && negative == 0 && argmax_mismatch == 0,
          "10^4 simplex pairs: max |sum - 1| = " + sci(worst_sum) + ", negative outputs " +
              std::to_string(negative) + ", lambda=0 argmax mismatches " +
              std::to_string(argmax_mismatch)};
}

Outcome toy_alignment() {
  TrainConfig cfg;  // k=16, d=32, sigma=0.8, 300 steps, lr=0.5, alpha=0.2, beta=0.4
  cfg.data.seed = 7;
  const RunReport shapley = train_toy_alignment(cfg);
  cfg.loss = LossKind::kInfoNce;
  const RunReport infonce = train_toy_alignment(cfg);
  const double start = shapley.steps.front().accuracy;
  const double end = shapley.steps.back().accuracy;
  const bool ok = !shapley.diverged && end >= 0.9 && end > start && !infonce.diverged &&
                  infonce.steps.size() == 301;
  return {ok, "seed 7 top-1 " + sci(start) + " -> " + sci(end) +
                  " (chance 0.0625, need >= 0.9); InfoNCE run " +
                  (infonce.diverged ? "diverged" : "completed") + " at " +
                  sci(infonce.steps.back().accuracy)};
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(SHAPALIGN_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome determinism() {
  const fs::path dir = fs::temp_directory_path() / "shapalign_acceptance";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::vector<std::string> commands = {
      "bench-convergence --k 2,5,8 --seeds 500",
      "train-toy --k 8 --d 8 --steps 40",
      "sweep --k 8 --d 8 --steps 10 --alphas 0,0.2,0.4 --betas 0.2,0.4",
  };
  int checked = 0, mismatched = 0, errors = 0;
  for (std::size_t c = 0; c < commands.size(); ++c) {
    std::string reference_out, reference_report;
    for (int threads : {1, 2, 8}) {
      for (int rep = 0; rep < 2; ++rep) {
        const fs::path out = dir / "out", report = dir / "report.json";
        fs::remove(out);
        fs::remove(report);
        if (run_cli("--seed 31337 --threads " + std::to_string(threads) + " --out " +
                    out.string() + " " + commands[c] + " --report " + report.string()) != 0) {
          ++errors;
          continue;
        }
        const std::string o = slurp(out), r = slurp(report);
        if (reference_out.empty()) {
          reference_out = o;
          reference_report = r;
        } else {
          ++checked;
          if (o != reference_out || r != reference_report) ++mismatched;
        }
      }
    }
  }
  fs::remove_all(dir);
  return {errors == 0 && mismatched == 0 && checked == 15,
          std::to_string(checked) + " repeated runs at 1/2/8 threads compared to the first, " +
              std::to_string(mismatched) + " differ, " + std::to_string(errors) +
              " failed to run"};
}

}  // namespace

int main() {
  criterion(1, "Shapley efficiency (exact)", 10, exact_efficiency);
  criterion(2, "Oracle equivalence (subset vs permutation)", 30, oracle_equivalence);
  criterion(3, "Cyclic telescoping", 0, cyclic_telescoping);
  criterion(4, "Cyclic unbiasedness", 120, cyclic_unbiasedness);
  criterion(5, "Gradient checks", 120, gradient_checks);
  criterion(6, "CRF oracle", 0, crf_oracle);
  criterion(7, "Refinement properties", 0, refine_properties);
  criterion(8, "Toy alignment", 180, toy_alignment);
  criterion(9, "Determinism across threads", 0, determinism);
  std::printf("%d of 9 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
