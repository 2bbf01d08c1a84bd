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

#ifndef VISA_EXPERIMENT_RUNNER_HPP
#define VISA_EXPERIMENT_RUNNER_HPP

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <deque>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "visa/experiment/config.hpp"
#include "visa/experiment/csv.hpp"
#include "visa/metrics.hpp"
#include "visa/models/gaussian.hpp"
#include "visa/models/lotka_volterra.hpp"
#include "visa/models/pickover.hpp"
#include "visa/visa.hpp"

namespace visa {

/// One (method, lr, alpha, seed) cell of an experiment grid.
struct CellSpec {
  Method method = Method::visa;
  double lr = 1e-3;
  std::optional<double> alpha;
  std::uint64_t seed = 0;

  [[nodiscard]] std::string file_name() const {
    char buf[160];
    if (alpha) {
      std::snprintf(buf, sizeof(buf), "%s_lr%g_a%g_s%llu.csv", to_string(method).c_str(), lr, *alpha,
                    static_cast<unsigned long long>(seed));
    } else {
      std::snprintf(buf, sizeof(buf), "%s_lr%g_s%llu.csv", to_string(method).c_str(), lr,
                    static_cast<unsigned long long>(seed));
    }
    return buf;
  }
};

inline std::vector<CellSpec> grid_cells(const ExperimentConfig& cfg) {
  std::vector<CellSpec> out;
  std::vector<std::optional<double>> alphas;
  if (cfg.method == Method::visa) {
    alphas.assign(cfg.alphas.begin(), cfg.alphas.end());
  } else {
    alphas.emplace_back(std::nullopt);
  }
  for (double lr : cfg.lrs) {
    for (const auto& a : alphas) {
      for (auto seed : cfg.seeds) {
        out.push_back(CellSpec{cfg.method, lr, a, seed});
      }
    }
  }
  return out;
}

/// LV observations: from the configured file, or simulated from the generating parameters.
inline LvData lv_dataset(const LvSpec& spec) {
  if (spec.data) {
    return LvData{csv::read_dataset(*spec.data, 2)};
  }
  Rng rng(spec.data_seed);
  return lv_simulate_data(spec.theta, {spec.prey0, spec.pred0}, spec.data_sigma, spec.t_obs, rng, spec.step);
}

inline Eigen::MatrixXd pickover_dataset(const PickoverSpec& spec) {
  if (spec.data) {
    return csv::read_dataset(*spec.data, 3);
  }
  Rng rng(spec.data_seed);
  return pickover_simulate(spec.beta, spec.eta, spec.horizon, spec.sigma_z, spec.sigma_y, rng);
}

/**
 * Everything a grid cell needs that does not depend on the cell: the target,
 * the starting point and the held-out evaluation data.
 */
class Problem {
 public:
  /// Builds the problem; an LV reference set missing on disk is sampled and written under `out_dir`.
  static Problem build(const ExperimentConfig& cfg, const std::filesystem::path& out_dir) {
    Problem p;
    p.kind_ = cfg.model;
    const CovarianceKind cov = cfg.covariance;
    switch (cfg.model) {
      case ModelKind::gaussian_diag:
      case ModelKind::gaussian_dense: {
        const Eigen::Index d = cfg.gaussian.dim;
        const Eigen::VectorXd mean = Eigen::VectorXd::Constant(d, cfg.gaussian.mean);
        if (cfg.model == ModelKind::gaussian_diag) {
          p.gaussian_ = std::make_shared<const GaussianTarget>(
              GaussianTarget::diagonal(mean, make_diag_cov(d, cfg.gaussian.sigma_min, cfg.gaussian.sigma_max)));
        } else {
          Rng rng(cfg.gaussian.cov_seed);
          p.gaussian_ = std::make_shared<const GaussianTarget>(mean, make_dense_cov(d, rng));
        }
        p.target_moments_ = GaussianMoments::of(*p.gaussian_);
        p.init_ = VariationalParams::isotropic(Eigen::VectorXd::Constant(d, cfg.init_mean), cfg.init_log_std, cov);
        break;
      }
      case ModelKind::lotka_volterra: {
        auto lv = std::make_shared<LotkaVolterraModel>();
        lv->data = lv_dataset(cfg.lv);
        lv->sigma = cfg.lv.sigma;
        lv->step = cfg.lv.step;
        p.lv_ = lv;
        p.init_ = lv_initial_params(cov);
        p.reference_ = std::make_shared<const ReferenceSampleSet>(lv_reference(cfg, p.lv_, out_dir));
        break;
      }
      case ModelKind::pickover: {
        auto pk = std::make_shared<PickoverModel>();
        pk->y = pickover_dataset(cfg.pickover);
        pk->particles = cfg.pickover.particles;
        pk->sigma_z = cfg.pickover.sigma_z;
        pk->sigma_y = cfg.pickover.sigma_y;
        pk->resampling = cfg.pickover.resampling;
        p.pickover_ = pk;
        p.init_ = VariationalParams::isotropic(Eigen::VectorXd::Zero(2), 0.0, cov, pickover_transform());
        break;
      }
    }
    return p;
  }

  /// A fresh model handle with its own evaluation counter.
  [[nodiscard]] Model make_model() const {
    switch (kind_) {
      case ModelKind::lotka_volterra:
        return make_lv_model(lv_);
      case ModelKind::pickover:
        return make_pickover_model(pickover_);
      default:
        return make_gaussian_model(gaussian_);
    }
  }

  [[nodiscard]] const VariationalParams& init() const noexcept { return init_; }
  [[nodiscard]] ModelKind kind() const noexcept { return kind_; }
  [[nodiscard]] const std::shared_ptr<const GaussianTarget>& gaussian() const noexcept { return gaussian_; }
  [[nodiscard]] const std::shared_ptr<const ReferenceSampleSet>& reference() const noexcept { return reference_; }

  /// Held-out metric of `params`; never evaluates the model. Pickover has none (see the runner).
  [[nodiscard]] std::optional<double> metric(const VariationalParams& params) const {
    switch (kind_) {
      case ModelKind::gaussian_diag:
      case ModelKind::gaussian_dense:
        return symmetric_kl(target_moments_, GaussianMoments::of(params));
      case ModelKind::lotka_volterra:
        return oracle_upper_bound(*reference_, params);
      case ModelKind::pickover:
        break;
    }
    return std::nullopt;
  }

 private:
  static ReferenceSampleSet lv_reference(const ExperimentConfig& cfg, const std::shared_ptr<const LotkaVolterraModel>& lv,
                                         const std::filesystem::path& out_dir) {
    const std::filesystem::path path =
        cfg.lv.reference ? std::filesystem::path(*cfg.lv.reference) : out_dir / "lv_reference.csv";
    if (std::filesystem::exists(path)) {
      return csv::read_reference(path.string());
    }
    const Model model = make_lv_model(lv);
    Eigen::VectorXd start(6);
    start << cfg.lv.prey0, cfg.lv.pred0, cfg.lv.theta.alpha, cfg.lv.theta.beta, cfg.lv.theta.gamma, cfg.lv.theta.delta;
    RwmhOptions opts;
    opts.n_samples = cfg.lv.reference_samples;
    opts.burn_in = cfg.lv.reference_burn_in;
    opts.thin = cfg.lv.reference_thin;
    opts.step_scale = 0.01 * start.cwiseAbs();
    Rng rng(cfg.lv.reference_seed);
    ReferenceSampleSet ref = rwmh_sample(model, start, opts, rng);
    if (!path.parent_path().empty()) {
      std::filesystem::create_directories(path.parent_path());
    }
    csv::write_reference(path.string(), ref);
    return ref;
  }

  ModelKind kind_ = ModelKind::gaussian_diag;
  VariationalParams init_ = VariationalParams::isotropic(Eigen::VectorXd::Zero(1), 0.0, CovarianceKind::diagonal);
  std::shared_ptr<const GaussianTarget> gaussian_;
  GaussianMoments target_moments_;
  std::shared_ptr<const LotkaVolterraModel> lv_;
  std::shared_ptr<const PickoverModel> pickover_;
  std::shared_ptr<const ReferenceSampleSet> reference_;
};

struct CellOutcome {
  CellSpec cell;
  std::string path;
  std::optional<std::string> error;
  std::int64_t steps = 0;
  std::uint64_t model_evals = 0;
};

/**
 * Runs one grid cell and streams its trace to `dir / cell.file_name()`.
 *
 * Each row is written (and flushed) once the next step has completed, so the
 * last row of a finished run always carries a test metric and a crash leaves a
 * valid prefix. Metrics are computed every `eval_every` steps.
 */
inline CellOutcome run_cell(const ExperimentConfig& cfg, const Problem& problem, const CellSpec& cell,
                            const std::filesystem::path& dir) {
  CellOutcome outcome{cell, (dir / cell.file_name()).string(), std::nullopt, 0, 0};
  std::ofstream out(outcome.path, std::ios::trunc);
  if (!out) {
    outcome.error = "cannot write " + outcome.path;
    return outcome;
  }
  out << csv::kTraceHeader << '\n' << std::flush;

  const Model model = problem.make_model();
  VisaConfig vc;
  vc.n_samples = cfg.n_samples;
  vc.ess_threshold = cell.alpha.value_or(1.0);
  vc.steps = cfg.steps;
  vc.eval_budget = cfg.eval_budget;
  vc.optimizer = OptimizerSpec{cfg.optimizer, cell.lr};
  vc.seed = cell.seed;

  const bool pickover = problem.kind() == ModelKind::pickover;
  std::deque<double> window;
  double window_sum = 0.0;

  std::optional<csv::TraceRow> pending;
  std::optional<VariationalParams> pending_params;
  std::optional<double> pending_running;
  auto flush = [&](bool final) {
    if (!pending) {
      return;
    }
    if (final || pending->step % cfg.eval_every == 0) {
      pending->test_metric = pickover ? pending_running : problem.metric(*pending_params);
    }
    out << csv::format_row(*pending) << '\n' << std::flush;
    outcome.steps = pending->step;
    outcome.model_evals = pending->model_evals;
    pending.reset();
  };

  const StepObserver observer = [&](const StepRecord& rec, const VariationalParams& params) {
    flush(false);
    if (pickover) {
      window.push_back(rec.train_loss);
      window_sum += rec.train_loss;
      if (static_cast<std::int64_t>(window.size()) > cfg.running_window) {
        window_sum -= window.front();
        window.pop_front();
      }
      pending_running = window_sum / static_cast<double>(window.size());
    }
    pending = csv::TraceRow{to_string(cell.method), cell.lr, cell.alpha, cell.seed, rec.step, rec.model_evals,
                            rec.train_loss, std::nullopt, rec.refreshed};
    pending_params = params;
  };

  try {
    const RunResult result = [&] {
      Rng rng(cell.seed);
      switch (cell.method) {
        case Method::iwfvi:
          return baseline_run(model, Estimator::iwfvi, problem.init(), vc, rng, observer);
        case Method::bbvi_sf:
          return baseline_run(model, Estimator::bbvi_sf, problem.init(), vc, rng, observer);
        case Method::bbvi_rp:
          return baseline_run(model, Estimator::bbvi_rp, problem.init(), vc, rng, observer);
        case Method::visa:
          break;
      }
      return visa_run(model, problem.init(), vc, rng, observer);
    }();
    outcome.error = result.error;
  } catch (const std::exception& e) {
    outcome.error = e.what();
  }
  try {
    flush(true);
  } catch (const std::exception& e) {
    if (!outcome.error) {
      outcome.error = e.what();
    }
  }
  return outcome;
}

struct RunOptions {
  std::optional<std::string> out_dir;  ///< overrides the configured output directory
  unsigned jobs = 1;
};

struct ExperimentSummary {
  std::filesystem::path out_dir;
  std::vector<CellOutcome> cells;

  [[nodiscard]] bool all_ok() const {
    return std::all_of(cells.begin(), cells.end(), [](const CellOutcome& c) { return !c.error; });
  }
  /// 0 when every cell finished, 2 otherwise.
  [[nodiscard]] int exit_code() const { return all_ok() ? 0 : 2; }
};

inline nlohmann::json status_json(const ExperimentSummary& summary) {
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& c : summary.cells) {
    nlohmann::json j;
    j["file"] = std::filesystem::path(c.path).filename().string();
    j["method"] = to_string(c.cell.method);
    j["lr"] = c.cell.lr;
    j["alpha"] = c.cell.alpha ? nlohmann::json(*c.cell.alpha) : nlohmann::json(nullptr);
    j["seed"] = c.cell.seed;
    j["status"] = c.error ? "error" : "ok";
    j["error"] = c.error ? nlohmann::json(*c.error) : nlohmann::json(nullptr);
    j["steps"] = c.steps;
    j["model_evals"] = c.model_evals;
    cells.push_back(std::move(j));
  }
  return nlohmann::json{{"cells", cells}, {"ok", summary.all_ok()}};
}

/**
 * Runs the full grid on a pool of `jobs` workers.
 *
 * Writes effective_config.json, one trace CSV per cell, and status.json. A
 * failing cell is recorded in status.json and does not stop the others.
 */
inline ExperimentSummary run_experiment(const ExperimentConfig& config, const RunOptions& options = {}) {
  ExperimentConfig cfg = config;
  if (options.out_dir) {
    cfg.output_dir = *options.out_dir;
  }
  ExperimentSummary summary;
  summary.out_dir = cfg.output_dir;
  std::filesystem::create_directories(summary.out_dir);
  {
    std::ofstream eff(summary.out_dir / "effective_config.json");
    eff << to_json(cfg).dump(2) << '\n';
  }
  const Problem problem = Problem::build(cfg, summary.out_dir);
  const auto cells = grid_cells(cfg);
  summary.cells.resize(cells.size());

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      summary.cells[i] = run_cell(cfg, problem, cells[i], summary.out_dir);
    }
  };
  const unsigned jobs = std::max(1u, std::min<unsigned>(options.jobs, static_cast<unsigned>(cells.size())));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned k = 0; k < jobs; ++k) {
      pool.emplace_back(worker);
    }
  }
  std::ofstream status(summary.out_dir / "status.json");
  status << status_json(summary).dump(2) << '\n';
  return summary;
}

}  // namespace visa

#endif  // VISA_EXPERIMENT_RUNNER_HPP
