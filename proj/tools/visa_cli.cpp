// Copyright 2026 The VISA Authors.
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

#include <filesystem>
#include <iostream>
#include <numeric>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "visa/experiment/config.hpp"
#include "visa/experiment/csv.hpp"
#include "visa/experiment/plot.hpp"
#include "visa/experiment/runner.hpp"

namespace {

int run(const std::string& config_path, const std::string& out, unsigned jobs) {
  const visa::ExperimentConfig cfg = visa::parse_config(config_path);
  visa::RunOptions options;
  if (!out.empty()) {
    options.out_dir = out;
  }
  options.jobs = jobs;
  const auto summary = visa::run_experiment(cfg, options);
  for (const auto& c : summary.cells) {
    std::cout << (c.error ? "FAILED " : "ok     ") << c.path << "  steps=" << c.steps << " evals=" << c.model_evals;
    if (c.error) {
      std::cout << "  (" << *c.error << ")";
    }
    std::cout << '\n';
  }
  return summary.exit_code();
}

int simulate(const std::string& model, const std::string& config_path, std::string out) {
  const visa::ExperimentConfig cfg = visa::parse_config(config_path);
  if (model == "lv") {
    if (cfg.model != visa::ModelKind::lotka_volterra) {
      throw visa::ConfigError("/model/type", "simulate-data --model lv needs a lotka-volterra config");
    }
    visa::LvSpec spec = cfg.lv;
    spec.data.reset();
    const visa::LvData data = visa::lv_dataset(spec);
    std::vector<int> times(static_cast<std::size_t>(data.y.rows()));
    std::iota(times.begin(), times.end(), 1);
    out = out.empty() ? (std::filesystem::path(cfg.output_dir) / "lv_data.csv").string() : out;
    std::filesystem::create_directories(std::filesystem::absolute(out).parent_path());
    visa::csv::write_dataset(out, {"prey", "predator"}, times, data.y);
  } else {
    if (cfg.model != visa::ModelKind::pickover) {
      throw visa::ConfigError("/model/type", "simulate-data --model pickover needs a pickover config");
    }
    visa::PickoverSpec spec = cfg.pickover;
    spec.data.reset();
    const Eigen::MatrixXd y = visa::pickover_dataset(spec);
    std::vector<int> times(static_cast<std::size_t>(y.rows()));
    std::iota(times.begin(), times.end(), 0);
    out = out.empty() ? (std::filesystem::path(cfg.output_dir) / "pickover_data.csv").string() : out;
    std::filesystem::create_directories(std::filesystem::absolute(out).parent_path());
    visa::csv::write_dataset(out, {"x", "y", "z"}, times, y);
  }
  std::cout << out << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Variational inference with sequential sample-average approximations"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  unsigned jobs = 1;
  auto* run_cmd = app.add_subcommand("run", "Run an experiment grid and write one CSV trace per cell");
  run_cmd->add_option("--config", config_path, "experiment configuration (JSON)")->required()->check(CLI::ExistingFile);
  run_cmd->add_option("--out", out_dir, "output directory (overrides output_dir)");
  run_cmd->add_option("--jobs", jobs, "grid cells run in parallel")->check(CLI::PositiveNumber);

  std::string svg_path;
  bool log_x = false;
  std::vector<std::string> csvs;
  auto* plot_cmd = app.add_subcommand("plot", "Render trace CSVs as an SVG convergence chart");
  plot_cmd->add_option("--out", svg_path, "output SVG")->required();
  plot_cmd->add_flag("--logx", log_x, "logarithmic model-evaluation axis");
  plot_cmd->add_option("csv", csvs, "trace CSV files")->required()->check(CLI::ExistingFile);

  std::string sim_model;
  std::string sim_config;
  std::string sim_out;
  auto* sim_cmd = app.add_subcommand("simulate-data", "Write a synthetic dataset from a config's generate block");
  sim_cmd->add_option("--model", sim_model, "lv or pickover")->required()->check(CLI::IsMember({"lv", "pickover"}));
  sim_cmd->add_option("--config", sim_config, "experiment configuration (JSON)")->required()->check(CLI::ExistingFile);
  sim_cmd->add_option("--out", sim_out, "output CSV");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run_cmd) {
      return run(config_path, out_dir, jobs);
    }
    if (*plot_cmd) {
      visa::PlotOptions options;
      options.log_x = log_x;
      visa::plot_traces(csvs, svg_path, options);
      std::cout << svg_path << '\n';
      return 0;
    }
    return simulate(sim_model, sim_config, sim_out);
  } catch (const visa::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
