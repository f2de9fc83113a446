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

// shapalign command-line front end.
//
// Exit codes: 0 success, 2 invalid input (bad flags or a validation error
// from the library), 1 anything else, including a diverged training run.

#include <algorithm>
#include <cstdint>
#include <exception>
#include <iostream>
#include <numeric>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "shapalign/adaptive_fusion.hpp"
#include "shapalign/alignment_loss.hpp"
#include "shapalign/coalition_game.hpp"
#include "shapalign/errors.hpp"
#include "shapalign/harness/experiments.hpp"
#include "shapalign/harness/gradcheck.hpp"
#include "shapalign/harness/report.hpp"
#include "shapalign/harness/synth.hpp"
#include "shapalign/rng.hpp"

namespace {

using nlohmann::json;
using namespace shapalign;
using namespace shapalign::harness;

struct Globals {
  std::uint64_t seed = 0;
  double tau = 1.0;
  std::int64_t stride = 0;
  std::string out;
  unsigned threads = 1;
  bool timing = false;
};

struct DataFlags {
  std::size_t k = 16;
  std::size_t d = 32;
  double sigma = 0.8;
};

struct TrainFlags {
  DataFlags data;
  std::size_t steps = 300;
  double lr = 0.5;
  double alpha = 0.2;
  double beta = 0.4;
  std::string loss = "shapley";
  bool resample = false;
  std::string report;
};

void emit(const Globals& g, const std::string& text) {
  if (g.out.empty()) {
    std::cout << text;
  } else {
    write_text(g.out, text);
  }
}

json shapley_json(const GameConfig& cfg, const ShapleyReport& r) {
  std::vector<std::size_t> all(cfg.players());
  std::iota(all.begin(), all.end(), std::size_t{0});
  const Coalition everyone(std::move(all));
  return {{"method", std::string(to_string(r.method))},
          {"values", r.values},
          {"passes", r.passes},
          {"seed", r.seed},
          {"stride_trace", r.stride_trace},
          {"utility_evaluations", r.utility_evaluations},
          {"grand_coalition_utility", utility(cfg, everyone)}};
}

json matrix_json(const Mat& m) {
  json rows = json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto row = m.row(r);
    rows.push_back(std::vector<double>(row.begin(), row.end()));
  }
  return rows;
}

TrainConfig train_config(const Globals& g, const TrainFlags& f) {
  TrainConfig cfg;
  cfg.data.k = f.data.k;
  cfg.data.d = f.data.d;
  cfg.data.noise_sigma = f.data.sigma;
  cfg.data.seed = g.seed;
  cfg.steps = f.steps;
  cfg.lr = f.lr;
  cfg.alpha = f.alpha;
  cfg.beta = f.beta;
  cfg.loss = f.loss == "infonce" ? LossKind::kInfoNce : LossKind::kShapley;
  cfg.align.tau = g.tau;
  cfg.align.stride = g.stride;
  cfg.align.seed = g.seed;
  cfg.resample_permutations = f.resample;
  cfg.record_timing = g.timing;
  return cfg;
}

void add_data_flags(CLI::App* cmd, DataFlags& f) {
  cmd->add_option("--k", f.k, "Batch size")->capture_default_str();
  cmd->add_option("--d", f.d, "Embedding dimension")->capture_default_str();
  cmd->add_option("--sigma", f.sigma, "Noise scale of texts and images")
      ->capture_default_str();
}

void add_train_flags(CLI::App* cmd, TrainFlags& f) {
  add_data_flags(cmd, f.data);
  cmd->add_option("--steps", f.steps)->capture_default_str();
  cmd->add_option("--lr", f.lr)->capture_default_str();
  cmd->add_option("--loss", f.loss)
      ->check(CLI::IsMember({"shapley", "infonce"}))
      ->capture_default_str();
  cmd->add_flag("--resample-permutations", f.resample,
                "Fresh starting permutations at every step");
  cmd->add_option("--report", f.report, "Also write the full JSON report here");
}

int finish_run(const Globals& g, const RunReport& report, const std::string& csv,
               const std::string& json_path) {
  emit(g, csv);
  if (!json_path.empty()) save_report(report, json_path);
  if (report.diverged) {
    std::cerr << "error: training diverged (non-finite loss)\n";
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Shapley-valued contrastive alignment toolkit"};
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("--seed", g.seed, "Master seed")->capture_default_str();
  app.add_option("--tau", g.tau, "Softmax temperature")->capture_default_str();
  app.add_option("--stride", g.stride, "Initial cyclic stride, 0 = max(1, k/2)")
      ->capture_default_str();
  app.add_option("--out", g.out, "Output file (default stdout)");
  app.add_option("--threads", g.threads, "Worker threads")
      ->check(CLI::Range(1u, 256u))
      ->capture_default_str();
  app.add_flag("--timing", g.timing, "Record wall-clock seconds (otherwise 0)");

  std::vector<double> sims;
  std::string exact_method = "subset";
  auto* exact = app.add_subcommand("shapley-exact", "Exact Shapley values");
  exact->add_option("--sims", sims, "Player similarities")->required()->delimiter(',');
  exact->add_option("--method", exact_method)
      ->check(CLI::IsMember({"subset", "permutation"}))
      ->capture_default_str();

  auto* cyclic = app.add_subcommand("shapley-cyclic", "Cyclic Shapley estimate");
  cyclic->add_option("--sims", sims, "Player similarities")->required()->delimiter(',');

  std::string batch_path;
  DataFlags loss_data;
  double alpha = 0.2, beta = 0.4;
  auto* align = app.add_subcommand("align-loss", "Semantic and modality losses");
  align->add_option("--batch", batch_path, "Batch JSON; synthetic when omitted");
  add_data_flags(align, loss_data);
  align->add_option("--alpha", alpha)->capture_default_str();
  align->add_option("--beta", beta)->capture_default_str();

  std::size_t n_text = 4, n_context = 3, n_regions = 2, dim = 8, image_dim = 6,
              width = 8;
  auto* fusion = app.add_subcommand("fusion-forward",
                                    "Gated cross-attention on seeded random inputs");
  fusion->add_option("--text-len", n_text)->capture_default_str();
  fusion->add_option("--context-len", n_context)->capture_default_str();
  fusion->add_option("--regions", n_regions)->capture_default_str();
  fusion->add_option("--dim", dim)->capture_default_str();
  fusion->add_option("--image-dim", image_dim)->capture_default_str();
  fusion->add_option("--width", width)->capture_default_str();

  std::size_t instances = 100;
  std::string target = "all";
  double tolerance = 1e-4;
  auto* grad = app.add_subcommand("gradcheck", "Finite-difference gradient checks");
  grad->add_option("--instances", instances)->capture_default_str();
  grad->add_option("--target", target)
      ->check(CLI::IsMember({"all", "alignment", "fusion", "crf"}))
      ->capture_default_str();
  grad->add_option("--tolerance", tolerance, "Fail above this relative error")
      ->capture_default_str();

  BenchConfig bench_cfg;
  std::string bench_report;
  auto* bench = app.add_subcommand("bench-convergence",
                                   "Cyclic vs naive Monte Carlo error against exact");
  bench->add_option("--k", bench_cfg.k_values, "Player counts (each <= 8)")
      ->delimiter(',');
  bench->add_option("--seeds", bench_cfg.seeds)->capture_default_str();
  bench->add_option("--report", bench_report, "Also write the full JSON report here");

  TrainFlags train_flags;
  auto* train = app.add_subcommand("train-toy", "Gradient descent on synthetic embeddings");
  add_train_flags(train, train_flags);
  train->add_option("--alpha", train_flags.alpha)->capture_default_str();
  train->add_option("--beta", train_flags.beta)->capture_default_str();
  std::string final_batch;
  train->add_option("--final-batch", final_batch, "Write trained embeddings here");

  TrainFlags sweep_flags;
  std::vector<double> alphas = {0.0, 0.1, 0.2, 0.3, 0.4};
  std::vector<double> betas = {0.2, 0.3, 0.4, 0.5, 0.6};
  auto* sweep = app.add_subcommand("sweep", "Toy training over an alpha x beta grid");
  add_train_flags(sweep, sweep_flags);
  sweep->add_option("--alphas", alphas)->delimiter(',');
  sweep->add_option("--betas", betas)->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*exact || *cyclic) {
      GameConfig cfg;
      cfg.sims = sims;
      cfg.tau = g.tau;
      ShapleyReport r;
      if (*cyclic) {
        const auto k = static_cast<std::int64_t>(sims.size());
        r = shapley_cyclic(cfg, g.stride != 0 ? g.stride : std::max<std::int64_t>(1, k / 2),
                           g.seed);
      } else if (exact_method == "permutation") {
        r = shapley_exact_permutations(cfg);
      } else {
        r = shapley_exact_subsets(cfg);
      }
      emit(g, shapley_json(cfg, r).dump(2) + "\n");
      return 0;
    }

    if (*align) {
      EmbeddingBatch batch;
      if (!batch_path.empty()) {
        batch = load_batch(batch_path);
      } else {
        SynthConfig sc{loss_data.k, loss_data.d, loss_data.sigma, g.seed};
        batch = synth_batch(sc);
      }
      AlignmentOptions opts{g.tau, g.stride, g.seed};
      const LossBreakdown l = alignment_losses(batch, opts, alpha, beta);
      const json doc = {{"k", batch.size()},
                        {"c2t", l.c2t},
                        {"t2c", l.t2c},
                        {"c2v", l.c2v},
                        {"v2c", l.v2c},
                        {"semantic", l.semantic},
                        {"modality", l.modality},
                        {"alpha", l.alpha},
                        {"beta", l.beta},
                        {"total", l.total}};
      emit(g, doc.dump(2) + "\n");
      return 0;
    }

    if (*fusion) {
      require(n_text >= 1 && n_context >= 1 && n_regions >= 1 && dim >= 1 &&
                  image_dim >= 1 && width >= 1,
              ErrorKind::kInvalidArgument, "fusion sizes must be >= 1");
      SplitMix64 rng(g.seed);
      const auto random_mat = [&](std::size_t r, std::size_t c) {
        Mat m(r, c);
        for (double& x : m.flat()) x = rng.normal();
        return m;
      };
      FusionInput input;
      input.text = random_mat(n_text, dim);
      input.context = random_mat(n_context, dim);
      input.image = random_mat(n_regions, image_dim);
      const FusionParams params = FusionParams::random(dim, image_dim, width, rng);
      const Mat out = fusion_forward(input, params);
      emit(g, json{{"rows", out.rows()}, {"cols", out.cols()}, {"output", matrix_json(out)}}
                      .dump(2) +
                  "\n");
      return 0;
    }

    if (*grad) {
      std::vector<GradCheckResult> results;
      if (target == "all" || target == "alignment")
        results.push_back(gradcheck_alignment(g.seed, instances, g.tau));
      if (target == "all" || target == "fusion")
        results.push_back(gradcheck_fusion(g.seed, instances));
      if (target == "all" || target == "crf")
        results.push_back(gradcheck_crf(g.seed, instances));
      emit(g, gradcheck_csv(results));
      for (const auto& r : results) {
        if (r.max_rel_err >= tolerance) {
          std::cerr << "error: " << r.target << " gradient relative error "
                    << r.max_rel_err << " >= " << tolerance << "\n";
          return 1;
        }
      }
      return 0;
    }

    if (*bench) {
      bench_cfg.tau = g.tau;
      bench_cfg.stride = g.stride;
      bench_cfg.seed = g.seed;
      bench_cfg.threads = g.threads;
      bench_cfg.record_timing = g.timing;
      const RunReport report = bench_convergence(bench_cfg);
      return finish_run(g, report, estimators_csv(report), bench_report);
    }

    if (*train) {
      EmbeddingBatch trained;
      const RunReport report = train_toy_alignment(train_config(g, train_flags), trained);
      if (!final_batch.empty() && !report.diverged) save_batch(trained, final_batch);
      return finish_run(g, report, steps_csv(report), train_flags.report);
    }

    if (*sweep) {
      const RunReport report = sweep_alpha_beta(
          weight_grid(alphas, betas), train_config(g, sweep_flags), g.threads);
      return finish_run(g, report, sweep_csv(report), sweep_flags.report);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
