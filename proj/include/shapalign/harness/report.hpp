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

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "shapalign/alignment_loss.hpp"

namespace shapalign::harness {

struct StepRecord {
  std::size_t step = 0;
  double loss = 0.0;
  double accuracy = 0.0;  // context -> text top-1, in [0, 1]
};

struct EstimatorRow {
  std::size_t k = 0;
  std::string method;
  std::uint64_t budget = 0;  // utility evaluations
  double mean_abs_err = 0.0;
  double max_abs_err = 0.0;
  double seconds = 0.0;
};

struct SweepRow {
  double alpha = 0.0;
  double beta = 0.0;
  double final_accuracy = 0.0;
  double final_loss = 0.0;
};

struct PhaseTiming {
  std::string phase;
  double seconds = 0.0;
};

struct RunReport {
  std::vector<StepRecord> steps;
  std::vector<EstimatorRow> estimators;
  std::vector<SweepRow> sweep;
  std::vector<PhaseTiming> timings;
  bool diverged = false;
};

// Shortest decimal string that parses back to the same double.
std::string format_double(double x);

// CSV writers; headers are
//   steps:      step,loss,accuracy
//   estimators: k,method,budget,mean_abs_err,max_abs_err,seconds
//   sweep:      alpha,beta,final_accuracy,final_loss
std::string steps_csv(const RunReport& report);
std::string estimators_csv(const RunReport& report);
std::string sweep_csv(const RunReport& report);

std::string report_json(const RunReport& report);

// Throws std::runtime_error when the file cannot be written.
void write_text(const std::filesystem::path& path, const std::string& text);
void save_report(const RunReport& report, const std::filesystem::path& path);

// Batch files are one JSON document
//   {"k": int, "d": int, "contexts": [[...]], "texts": [[...]], "images": [[...]]}
// Numbers are written with round-trip precision. ids are not stored; a
// loaded batch has ids 0..k-1.
std::string batch_json(const EmbeddingBatch& batch);
EmbeddingBatch parse_batch(const std::string& text);
void save_batch(const EmbeddingBatch& batch, const std::filesystem::path& path);
// Throws Error(kParseError) with line/column and field diagnostics.
EmbeddingBatch load_batch(const std::filesystem::path& path);

}  // namespace shapalign::harness
