// Copyright 2026 The vsdesign Authors.
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

// JSON encoding of library results. Indices are written 1-based.

#ifndef VSDESIGN_REPORT_HPP
#define VSDESIGN_REPORT_HPP

#include <nlohmann/json.hpp>

#include <cstdio>
#include <string>
#include <vector>

#include "vsdesign/estimator.hpp"
#include "vsdesign/harness.hpp"
#include "vsdesign/sampler.hpp"
#include "vsdesign/verify.hpp"

namespace vsdesign {

using Json = nlohmann::json;

/// %.17g, enough digits to round-trip any double.
inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline Json to_json(const Vector& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

inline Json to_json(const Matrix& m) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) a.push_back(to_json(Vector(m.row(i).transpose())));
  return a;
}

inline Json indices_to_json(const std::vector<std::size_t>& idx) {
  Json a = Json::array();
  for (auto i : idx) a.push_back(i + 1);
  return a;
}

inline Json to_json(const MetricEstimate& m) {
  Json j;
  if (m.skipped) {
    j["status"] = "skipped";
    j["reason"] = m.reason;
    j["value"] = nullptr;
    j["se"] = nullptr;
    j["trials"] = 0;
  } else {
    j["status"] = "ok";
    j["value"] = m.value;
    j["se"] = m.se;
    j["trials"] = m.trials;
  }
  return j;
}

inline Json to_json(const DesignSequence& pi, std::size_t n) {
  Json j;
  j["indices"] = indices_to_json(pi.indices);
  j["rescale"] = to_json(pi.rescale);
  const auto s = multiplicity_counts(pi, n);
  j["multiplicities"] = s;
  return j;
}

/// Reads a design written by to_json(DesignSequence). Indices are 1-based in
/// the document and 0-based in the result.
inline DesignSequence design_from_json(const Json& j, std::size_t n) {
  DesignSequence pi;
  if (!j.contains("indices") || !j.contains("rescale")) {
    fail(ErrorCode::kParseError, "design entry needs 'indices' and 'rescale'");
  }
  for (const auto& v : j.at("indices")) {
    const auto i = v.get<std::size_t>();
    if (i < 1 || i > n) fail(ErrorCode::kParseError, "design index " + std::to_string(i) + " out of range");
    pi.indices.push_back(i - 1);
  }
  const auto& r = j.at("rescale");
  if (r.size() != pi.indices.size()) fail(ErrorCode::kParseError, "rescale length differs from indices length");
  pi.rescale.resize(static_cast<Eigen::Index>(r.size()));
  for (std::size_t t = 0; t < r.size(); ++t) pi.rescale(static_cast<Eigen::Index>(t)) = r[t].get<double>();
  return pi;
}

inline Json to_json(const CheckResult& c) {
  Json j;
  j["name"] = c.name;
  j["status"] = std::string(to_string(c.status));
  j["statistic"] = c.statistic;
  j["threshold"] = c.threshold;
  j["detail"] = c.detail;
  return j;
}

inline Json to_json(const EvalReport& r) {
  Json j;
  j["metrics"]["mse_excess"] = to_json(r.mse_excess);
  j["metrics"]["mspe_excess"] = to_json(r.mspe_excess);
  j["metrics"]["expected_loss_ratio"] = to_json(r.expected_loss_ratio);
  j["metrics"]["minimax_ratio"] = to_json(r.minimax_ratio);
  j["metrics"]["aopt_trace"] = to_json(r.aopt_trace);
  j["trial_count"] = r.trial_count;
  j["config"]["n"] = r.n;
  j["config"]["d"] = r.d;
  j["config"]["k"] = r.k;
  j["config"]["alpha"] = r.alpha;
  j["config"]["dist"] = std::string(to_string(r.dist));
  j["config"]["model"] = std::string(to_string(r.model));
  j["config"]["seed"] = r.seed;
  Json checks = Json::array();
  for (const auto& c : r.checks) checks.push_back(to_json(c));
  j["checks"] = checks;
  j["passed"] = r.passed();
  return j;
}

}  // namespace vsdesign

#endif  // VSDESIGN_REPORT_HPP
