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

// Subcommand driver behind the vsdesign executable. Kept in a header so the
// test suites can run subcommands in-process.

#ifndef VSDESIGN_CLI_HPP
#define VSDESIGN_CLI_HPP

#include <cstdint>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "vsdesign/csv.hpp"
#include "vsdesign/estimator.hpp"
#include "vsdesign/harness.hpp"
#include "vsdesign/report.hpp"
#include "vsdesign/sampler.hpp"
#include "vsdesign/scores.hpp"
#include "vsdesign/verify.hpp"

namespace vsdesign::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kNumerical = 2, kVerificationFailed = 3 };

struct RunConfig {
  std::string command;
  std::string input_path;
  std::optional<std::size_t> k;
  double alpha = kDefaultAlpha;
  DistributionKind dist = DistributionKind::kMixture;
  std::uint64_t seed = 0;
  std::size_t trials = 1000;
  std::optional<ModelKind> model;
  double sigma = 1.0;
  std::vector<double> sigma_list;
  double prior_scale = 1.0;
  std::string output_path;
  std::size_t designs = 1;
  unsigned workers = 1;
  /// `estimate` only: reuse the designs stored in a `sample` report.
  std::string design_path;
};

inline int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kRankDeficient:
    case ErrorCode::kAlphaOutOfRange:
    case ErrorCode::kZeroProbabilityEntry:
    case ErrorCode::kInvalidDistribution:
    case ErrorCode::kPreconditionViolated:
    case ErrorCode::kTrialBudgetExhausted:
    case ErrorCode::kSketchRankDeficient:
    case ErrorCode::kResponseInColumnSpan:
    case ErrorCode::kInvariantViolated:
      return kNumerical;
    default:
      return kUsage;
  }
}

namespace detail {

inline std::size_t require_k(const RunConfig& c, const DesignMatrix& x) {
  if (!c.k) fail(ErrorCode::kInvalidConfig, "--k is required for '" + c.command + "'");
  if (*c.k < x.d()) {
    fail(ErrorCode::kInvalidConfig,
         "--k " + std::to_string(*c.k) + " is smaller than the number of columns d = " + std::to_string(x.d()));
  }
  return *c.k;
}

inline Json config_echo(const RunConfig& c) {
  Json j;
  j["command"] = c.command;
  j["input"] = c.input_path;
  j["k"] = c.k ? Json(*c.k) : Json(nullptr);
  j["alpha"] = c.alpha;
  j["dist"] = std::string(to_string(c.dist));
  j["seed"] = c.seed;
  j["trials"] = c.trials;
  j["designs"] = c.designs;
  j["model"] = c.model ? Json(std::string(to_string(*c.model))) : Json(nullptr);
  return j;
}

inline void print_vector(std::ostream& out, const std::string& label, const Vector& v) {
  out << std::left << std::setw(22) << label;
  for (Eigen::Index i = 0; i < v.size(); ++i) out << (i ? " " : "") << format_double(v(i));
  out << '\n';
}

inline ResponseModel build_model(const RunConfig& c, const LoadedData& data) {
  const ModelKind kind = c.model.value_or(data.y ? ModelKind::kFixed : ModelKind::kHomoscedastic);
  const Weights w_star = Weights::Ones(static_cast<Eigen::Index>(data.x.d()));
  switch (kind) {
    case ModelKind::kFixed:
      if (!data.y) fail(ErrorCode::kInvalidConfig, "the fixed model needs a 'y' column in the input");
      return ResponseModel::fixed(*data.y);
    case ModelKind::kHomoscedastic:
      return ResponseModel::homoscedastic(w_star, c.sigma);
    case ModelKind::kHeteroscedastic: {
      if (c.sigma_list.size() != data.x.n()) {
        fail(ErrorCode::kInvalidConfig, "--sigma-list needs exactly n = " + std::to_string(data.x.n()) + " values");
      }
      Vector s(static_cast<Eigen::Index>(c.sigma_list.size()));
      for (std::size_t i = 0; i < c.sigma_list.size(); ++i) s(static_cast<Eigen::Index>(i)) = c.sigma_list[i];
      return ResponseModel::heteroscedastic(w_star, s);
    }
    case ModelKind::kBayesian:
      return ResponseModel::bayesian(w_star, c.prior_scale, c.sigma);
  }
  return ResponseModel::fixed(Vector());
}

/// Design j of a `sample` or `estimate` run draws from stream (seed, j).
inline std::vector<DesignSequence> draw_designs(const RunConfig& c, const DesignMatrix& x, const GramFactor& f,
                                                const SamplingDistribution& q, std::size_t k, Json* stats) {
  const RescaledVolumeSampler sampler(x, f, q, k);
  std::vector<DesignSequence> out;
  for (std::size_t j = 0; j < c.designs; ++j) {
    RngStream rng(c.seed, j);
    auto [pi, st] = sampler.sample(rng);
    if (stats) {
      Json s;
      s["bernoulli_trials"] = st.bernoulli_trials;
      s["iid_draws_consumed"] = st.iid_draws_consumed;
      stats->push_back(s);
    }
    out.push_back(std::move(pi));
  }
  return out;
}

inline Json run_scores(const RunConfig& c, const LoadedData& data, std::ostream& out) {
  const DesignMatrix& x = data.x;
  const GramFactor f = factorize(x);
  const ScoreProfile s = compute_scores(x, f);
  Json j;
  j["leverage"] = to_json(s.leverage);
  j["inverse"] = to_json(s.inverse);
  j["phi"] = s.phi;
  print_vector(out, "leverage", s.leverage);
  print_vector(out, "inverse", s.inverse);
  out << std::left << std::setw(22) << "phi" << format_double(s.phi) << '\n';
  for (auto kind : {DistributionKind::kUniform, DistributionKind::kLeverage, DistributionKind::kInverse}) {
    const std::string name(to_string(kind));
    try {
      const auto q = pure_distribution(s, x.n(), x.d(), kind);
      j["distributions"][name] = to_json(q.q());
      print_vector(out, "p_" + name, q.q());
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kZeroProbabilityEntry) throw;
      j["distributions"][name] = {{"status", "skipped"}, {"reason", e.what()}};
      out << std::left << std::setw(22) << ("p_" + name) << "skipped: " << e.what() << '\n';
    }
  }
  const auto mix = mixture_distribution(s, x.n(), x.d(), c.alpha);
  j["distributions"]["mixture"] = to_json(mix.q());
  print_vector(out, "q_mixture", mix.q());
  return j;
}

inline Json run_sample(const RunConfig& c, const LoadedData& data, std::ostream& out) {
  const DesignMatrix& x = data.x;
  const std::size_t k = require_k(c, x);
  const GramFactor f = factorize(x);
  const SamplingDistribution q = make_distribution(compute_scores(x, f), x.n(), x.d(), c.dist, c.alpha);
  Json stats = Json::array();
  const auto designs = draw_designs(c, x, f, q, k, &stats);
  Json j;
  j["q"] = to_json(q.q());
  j["designs"] = Json::array();
  for (std::size_t t = 0; t < designs.size(); ++t) {
    Json dj = to_json(designs[t], x.n());
    dj["stream_id"] = t;
    dj["stats"] = stats[t];
    j["designs"].push_back(dj);
    out << "design " << t + 1 << ":";
    for (auto i : designs[t].indices) out << ' ' << (i + 1);
    out << '\n';
  }
  return j;
}

inline Json run_estimate(const RunConfig& c, const LoadedData& data, std::ostream& out) {
  const DesignMatrix& x = data.x;
  if (!data.y) fail(ErrorCode::kInvalidConfig, "'estimate' needs a response column named 'y' in the input header");
  const Vector& y = *data.y;
  const GramFactor f = factorize(x);
  std::vector<DesignSequence> designs;
  if (!c.design_path.empty()) {
    std::ifstream in(c.design_path);
    if (!in) fail(ErrorCode::kParseError, "cannot open design file '" + c.design_path + "'");
    Json doc;
    try {
      doc = Json::parse(in);
    } catch (const Json::exception& e) {
      fail(ErrorCode::kParseError, std::string("design file: ") + e.what());
    }
    const Json* list = nullptr;
    if (doc.contains("result") && doc["result"].contains("designs")) list = &doc["result"]["designs"];
    if (doc.contains("designs")) list = &doc["designs"];
    if (!list) fail(ErrorCode::kParseError, "design file has no 'designs' array");
    for (const auto& dj : *list) designs.push_back(design_from_json(dj, x.n()));
  } else {
    const std::size_t k = require_k(c, x);
    const SamplingDistribution q = make_distribution(compute_scores(x, f), x.n(), x.d(), c.dist, c.alpha);
    designs = draw_designs(c, x, f, q, k, nullptr);
  }

  const Weights w_ls = least_squares(f, x, y);
  const double res = residual(x, w_ls, y).norm();
  const bool consistent = res <= 1e-10 * std::max(1.0, y.norm());

  Json j;
  j["w_ls"] = to_json(w_ls);
  j["consistent_system"] = consistent;
  j["flags"] = Json::array();
  if (consistent) j["flags"].push_back("consistent-system");
  j["estimates"] = Json::array();
  std::vector<SubsampledEstimate> ests;
  for (const auto& pi : designs) {
    ests.push_back(subsampled_ls(x, pi, observe(pi, y)));
    Json e = to_json(pi, x.n());
    e["w_hat"] = to_json(ests.back().w_hat);
    e["condition_report"] = ests.back().condition_report;
    j["estimates"].push_back(e);
    print_vector(out, "w_hat", ests.back().w_hat);
  }
  if (ests.size() > 1) {
    const Weights avg = averaged_estimate(ests);
    j["average"] = to_json(avg);
    print_vector(out, "average", avg);
  } else {
    j["average"] = nullptr;
  }
  print_vector(out, "w_ls", w_ls);
  if (consistent) out << "flag                  consistent-system\n";
  return j;
}

inline Json run_verify(const RunConfig& c, const LoadedData& data, std::ostream& out, bool& passed) {
  const DesignMatrix& x = data.x;
  VerifyConfig vc;
  vc.design.k = require_k(c, x);
  vc.design.dist = c.dist;
  vc.design.alpha = c.alpha;
  vc.model = build_model(c, data);
  vc.mc.trials = c.trials;
  vc.mc.workers = c.workers;
  vc.seed = c.seed;
  const EvalReport rep = run_verification(x, vc);
  passed = rep.passed();

  auto metric_line = [&](const std::string& name, const MetricEstimate& m) {
    out << std::left << std::setw(22) << name;
    if (m.skipped) {
      out << "skipped (" << m.reason << ")\n";
    } else {
      out << format_double(m.value) << " +/- " << format_double(m.se) << '\n';
    }
  };
  metric_line("mse_excess", rep.mse_excess);
  metric_line("mspe_excess", rep.mspe_excess);
  metric_line("expected_loss_ratio", rep.expected_loss_ratio);
  metric_line("minimax_ratio", rep.minimax_ratio);
  metric_line("aopt_trace", rep.aopt_trace);
  for (const auto& ch : rep.checks) {
    out << std::left << std::setw(28) << ch.name << std::setw(8) << to_string(ch.status);
    if (ch.status != CheckStatus::kSkipped) {
      out << format_double(ch.statistic) << " <= " << format_double(ch.threshold);
    } else {
      out << ch.detail;
    }
    out << '\n';
  }
  out << (passed ? "verification passed\n" : "verification FAILED\n");
  return to_json(rep);
}

inline Json run_oracle(const RunConfig& c, const LoadedData& data, std::ostream& out) {
  const DesignMatrix& x = data.x;
  const std::size_t k = require_k(c, x);
  const GramFactor f = factorize(x);
  const SamplingDistribution q = make_distribution(compute_scores(x, f), x.n(), x.d(), c.dist, c.alpha);
  const SequenceLaw law = brute_force_vs_probs(x, q, k);
  Json j;
  j["q"] = to_json(q.q());
  j["sequences"] = Json::array();
  double total = 0.0;
  for (std::size_t code = 0; code < law.size(); ++code) {
    if (law[code] == 0.0) continue;
    total += law[code];
    const auto seq = law.decode(code);
    j["sequences"].push_back({{"indices", indices_to_json(seq)}, {"probability", law[code]}});
    for (auto i : seq) out << (i + 1) << ' ';
    out << format_double(law[code]) << '\n';
  }
  j["total_probability"] = total;
  return j;
}

}  // namespace detail

/// Runs one subcommand. The machine-readable report goes to
/// config.output_path when set; a human-readable summary goes to `out`.
inline int run(const RunConfig& config, std::ostream& out, std::ostream& err) {
  try {
    if (config.trials < 1) fail(ErrorCode::kInvalidConfig, "--trials must be at least 1");
    if (config.designs < 1) fail(ErrorCode::kInvalidConfig, "--designs must be at least 1");
    if (!(config.alpha >= kMinAlpha && config.alpha <= kMaxAlpha)) {
      fail(ErrorCode::kAlphaOutOfRange, "--alpha must lie in [0.5, 0.75]");
    }
    if (config.input_path.empty()) fail(ErrorCode::kInvalidConfig, "--input is required");
    const LoadedData data = load_matrix(config.input_path);

    Json report;
    report["config"] = detail::config_echo(config);
    report["config"]["n"] = data.x.n();
    report["config"]["d"] = data.x.d();
    bool passed = true;
    if (config.command == "scores") {
      report["result"] = detail::run_scores(config, data, out);
    } else if (config.command == "sample") {
      report["result"] = detail::run_sample(config, data, out);
    } else if (config.command == "estimate") {
      report["result"] = detail::run_estimate(config, data, out);
    } else if (config.command == "verify") {
      report["result"] = detail::run_verify(config, data, out, passed);
      report["config"]["model"] = report["result"]["config"]["model"];
    } else if (config.command == "oracle") {
      report["result"] = detail::run_oracle(config, data, out);
    } else {
      fail(ErrorCode::kInvalidConfig, "unknown command '" + config.command + "'");
    }

    if (!config.output_path.empty()) {
      std::ofstream f(config.output_path, std::ios::binary);
      if (!f) fail(ErrorCode::kInvalidConfig, "cannot write '" + config.output_path + "'");
      f << report.dump(2) << '\n';
    }
    return passed ? kOk : kVerificationFailed;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const Json::exception& e) {
    err << "error: malformed JSON input: " << e.what() << '\n';
    return kUsage;
  }
}

}  // namespace vsdesign::cli

#endif  // VSDESIGN_CLI_HPP
