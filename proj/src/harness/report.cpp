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

#include "shapalign/harness/report.hpp"

#include <array>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "shapalign/errors.hpp"

namespace shapalign::harness {

namespace {

using nlohmann::json;

constexpr std::array<const char*, 5> kBatchFields = {"k", "d", "contexts", "texts",
                                                     "images"};

nlohmann::ordered_json vectors_json(const std::vector<Vec>& list) {
  auto out = nlohmann::ordered_json::array();
  for (const Vec& v : list) out.push_back(v.values());
  return out;
}

std::string line_column(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i + 1 < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

[[noreturn]] void parse_fail(const std::string& what) {
  fail(ErrorKind::kParseError, what);
}

std::vector<Vec> read_vectors(const json& doc, const char* field, std::size_t k,
                              std::size_t d) {
  const json& arr = doc.at(field);
  if (!arr.is_array()) parse_fail(std::string("field '") + field + "' must be an array");
  if (arr.size() != k) {
    parse_fail(std::string("field '") + field + "' has " + std::to_string(arr.size()) +
               " rows, expected k = " + std::to_string(k));
  }
  std::vector<Vec> out;
  out.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    const json& row = arr[i];
    const std::string where = std::string(field) + "[" + std::to_string(i) + "]";
    if (!row.is_array() || row.size() != d) {
      parse_fail("field '" + where + "' must be an array of d = " + std::to_string(d) +
                 " numbers");
    }
    Vec v(d);
    for (std::size_t c = 0; c < d; ++c) {
      if (!row[c].is_number()) {
        parse_fail("field '" + where + "[" + std::to_string(c) + "]' is not a number");
      }
      v[c] = row[c].get<double>();
    }
    out.push_back(std::move(v));
  }
  return out;
}

}  // namespace

std::string format_double(double x) {
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  return std::string(buf.data(), res.ptr);
}

std::string steps_csv(const RunReport& report) {
  std::ostringstream out;
  out << "step,loss,accuracy\n";
  for (const auto& s : report.steps)
    out << s.step << ',' << format_double(s.loss) << ',' << format_double(s.accuracy)
        << '\n';
  return out.str();
}

std::string estimators_csv(const RunReport& report) {
  std::ostringstream out;
  out << "k,method,budget,mean_abs_err,max_abs_err,seconds\n";
  for (const auto& r : report.estimators)
    out << r.k << ',' << r.method << ',' << r.budget << ','
        << format_double(r.mean_abs_err) << ',' << format_double(r.max_abs_err) << ','
        << format_double(r.seconds) << '\n';
  return out.str();
}

std::string sweep_csv(const RunReport& report) {
  std::ostringstream out;
  out << "alpha,beta,final_accuracy,final_loss\n";
  for (const auto& r : report.sweep)
    out << format_double(r.alpha) << ',' << format_double(r.beta) << ','
        << format_double(r.final_accuracy) << ',' << format_double(r.final_loss)
        << '\n';
  return out.str();
}

std::string report_json(const RunReport& report) {
  json doc;
  doc["diverged"] = report.diverged;
  doc["steps"] = json::array();
  for (const auto& s : report.steps)
    doc["steps"].push_back({{"step", s.step}, {"loss", s.loss}, {"accuracy", s.accuracy}});
  doc["estimators"] = json::array();
  for (const auto& r : report.estimators)
    doc["estimators"].push_back({{"k", r.k},
                                 {"method", r.method},
                                 {"budget", r.budget},
                                 {"mean_abs_err", r.mean_abs_err},
                                 {"max_abs_err", r.max_abs_err},
                                 {"seconds", r.seconds}});
  doc["sweep"] = json::array();
  for (const auto& r : report.sweep)
    doc["sweep"].push_back({{"alpha", r.alpha},
                            {"beta", r.beta},
                            {"final_accuracy", r.final_accuracy},
                            {"final_loss", r.final_loss}});
  doc["timings"] = json::array();
  for (const auto& t : report.timings)
    doc["timings"].push_back({{"phase", t.phase}, {"seconds", t.seconds}});
  return doc.dump(2) + "\n";
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

void save_report(const RunReport& report, const std::filesystem::path& path) {
  write_text(path, report_json(report));
}

std::string batch_json(const EmbeddingBatch& batch) {
  batch.validate();
  nlohmann::ordered_json doc;  // keys in schema order
  doc["k"] = batch.size();
  doc["d"] = batch.contexts.front().dim();
  doc["contexts"] = vectors_json(batch.contexts);
  doc["texts"] = vectors_json(batch.texts);
  doc["images"] = vectors_json(batch.images);
  return doc.dump() + "\n";
}

EmbeddingBatch parse_batch(const std::string& text) {
  // Top-level keys are recorded while parsing so that a truncated document
  // can name the field it stopped in and the fields it never reached.
  std::set<std::string> seen;
  std::string current;
  const json::parser_callback_t track = [&](int depth, json::parse_event_t event,
                                            json& parsed) {
    if (depth == 1 && event == json::parse_event_t::key) {
      current = parsed.get<std::string>();
      seen.insert(current);
    }
    return true;
  };

  json doc;
  try {
    doc = json::parse(text, track);
  } catch (const json::parse_error& e) {
    std::string msg = line_column(text, e.byte) + ": malformed JSON";
    if (!current.empty()) msg += "; field '" + current + "' is incomplete";
    std::string missing;
    for (const char* f : kBatchFields)
      if (!seen.count(f)) missing += std::string(missing.empty() ? "" : ", ") + "'" + f + "'";
    if (!missing.empty()) msg += "; missing field(s) " + missing;
    parse_fail(msg);
  }

  if (!doc.is_object()) parse_fail("batch document must be a JSON object");
  for (const char* f : kBatchFields)
    if (!doc.contains(f)) parse_fail(std::string("missing field '") + f + "'");
  for (const char* f : {"k", "d"}) {
    if (!doc[f].is_number_unsigned() || doc[f].get<std::size_t>() < 1)
      parse_fail(std::string("field '") + f + "' must be a positive integer");
  }
  const auto k = doc["k"].get<std::size_t>();
  const auto d = doc["d"].get<std::size_t>();

  EmbeddingBatch batch;
  batch.contexts = read_vectors(doc, "contexts", k, d);
  batch.texts = read_vectors(doc, "texts", k, d);
  batch.images = read_vectors(doc, "images", k, d);
  batch.validate();
  return batch;
}

void save_batch(const EmbeddingBatch& batch, const std::filesystem::path& path) {
  write_text(path, batch_json(batch));
}

EmbeddingBatch load_batch(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_batch(buf.str());
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::kParseError) throw;
    fail(ErrorKind::kParseError, path.string() + ": " +
                                     std::string(e.what()).substr(std::string("ParseError: ").size()));
  }
}

}  // namespace shapalign::harness
