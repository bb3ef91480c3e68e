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

#include <CLI11.hpp>

#include <iostream>
#include <string>

#include "vsdesign/cli.hpp"

int main(int argc, char** argv) {
  namespace cli = vsdesign::cli;

  CLI::App app{"Randomized experimental design for linear regression"};
  app.set_help_flag("-h,--help", "Print this help message and exit");

  cli::RunConfig cfg;
  std::size_t k = 0;
  std::string model;
  std::string dist = "mixture";

  app.add_option("command", cfg.command, "scores | sample | estimate | verify | oracle")
      ->required()
      ->check(CLI::IsMember({"scores", "sample", "estimate", "verify", "oracle"}));
  app.add_option("--input", cfg.input_path, "CSV file, one experiment per row")->required();
  auto* k_opt = app.add_option("--k", k, "Design size (number of sampled rows, k >= d)");
  app.add_option("--alpha", cfg.alpha, "Mixture weight in [0.5, 0.75]")->capture_default_str();
  app.add_option("--dist", dist, "Sampling distribution")
      ->check(CLI::IsMember({"uniform", "leverage", "inverse", "mixture"}))
      ->capture_default_str();
  app.add_option("--seed", cfg.seed, "Master seed")->capture_default_str();
  app.add_option("--trials", cfg.trials, "Monte Carlo trials for verify")->capture_default_str();
  app.add_option("--model", model, "Response model for verify")
      ->check(CLI::IsMember({"homo", "hetero", "bayes", "fixed"}));
  app.add_option("--sigma", cfg.sigma, "Noise scale (homo, bayes)")->capture_default_str();
  app.add_option("--sigma-list", cfg.sigma_list, "Per-row noise scales (hetero)")->delimiter(',');
  app.add_option("--prior-scale", cfg.prior_scale, "Prior scale (bayes)")->capture_default_str();
  app.add_option("--out", cfg.output_path, "Write the JSON report here");
  app.add_option("--designs", cfg.designs, "Number of independent designs (sample, estimate)")
      ->capture_default_str();
  app.add_option("--design-file", cfg.design_path, "Reuse designs from a 'sample' report (estimate)");
  app.add_option("--workers", cfg.workers, "Worker threads for verify")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : cli::kUsage;
  }
  if (k_opt->count() > 0) cfg.k = k;
  cfg.dist = *vsdesign::parse_distribution_kind(dist);
  if (!model.empty()) cfg.model = vsdesign::parse_model_kind(model);
  return cli::run(cfg, std::cout, std::cerr);
}
