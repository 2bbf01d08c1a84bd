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

#ifndef VISA_VISA_HPP
#define VISA_VISA_HPP

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "visa/error.hpp"
#include "visa/estimators.hpp"
#include "visa/family.hpp"
#include "visa/model.hpp"
#include "visa/optim.hpp"
#include "visa/rng.hpp"
#include "visa/saa.hpp"

/**
 * \file
 * \brief Optimization loops: sequential SAA (VISA) and the fresh-batch baselines.
 *
 * Both loops share one accounting convention. The batch used for the gradient
 * of step t + 1 is drawn at the parameters reached by step t, so a baseline
 * spends N evaluations up front and N per step, and VISA with threshold 1
 * (refresh after every step) produces the same evaluation counts, random
 * streams and gradients as IWFVI.
 */

namespace visa {

struct VisaConfig {
  Eigen::Index n_samples = 10;
  double ess_threshold = 0.95;  ///< alpha in (0, 1]; refresh once trust_score <= alpha
  std::int64_t steps = 1000;
  std::uint64_t eval_budget = 0;  ///< stop once this many evaluations were spent (0: no limit)
  OptimizerSpec optimizer;
  std::uint64_t seed = 0;
  std::int64_t snapshot_every = 0;  ///< record params every k steps (0: final params only)
  unsigned threads = 1;             ///< workers for batch model evaluation

  void validate() const {
    if (n_samples < 2) {
      throw ConfigError("/n_samples", "must be at least 2");
    }
    if (!(ess_threshold > 0.0 && ess_threshold <= 1.0)) {
      throw ConfigError("/ess_threshold", "must lie in (0, 1]");
    }
    if (steps < 0) {
      throw ConfigError("/steps", "must be non-negative");
    }
  }
};

struct StepRecord {
  std::int64_t step = 0;
  std::uint64_t model_evals = 0;  ///< cumulative
  double train_loss = 0.0;
  double trust_score = 1.0;  ///< VISA: score of the new params on the old SAA; baselines: batch ESS
  bool refreshed = false;
};

struct OptTrace {
  std::vector<StepRecord> records;
  std::vector<std::pair<std::int64_t, Eigen::VectorXd>> snapshots;  ///< (step, flat params)
};

struct RunResult {
  VariationalParams params;
  OptTrace trace;
  std::optional<std::string> error;  ///< set when the run aborted early
};

using StepObserver = std::function<void(const StepRecord&, const VariationalParams&)>;

/// Step-wise VISA driver. Construction builds the first SAA at the initial parameters.
class VisaSolver {
 public:
  VisaSolver(const Model& model, VariationalParams init, VisaConfig config, Rng rng)
      : model_(&model),
        config_(validated(std::move(config))),
        rng_(std::move(rng)),
        params_(std::move(init)),
        optimizer_(make_optimizer(config_.optimizer)),
        state_(build_saa(*model_, params_, config_.n_samples, rng_, config_.threads)),
        evals_(static_cast<std::uint64_t>(config_.n_samples)) {}

  [[nodiscard]] StepRecord initial_record() const {
    return StepRecord{0, evals_, saa_objective(state_, params_), 1.0, false};
  }

  StepRecord step() {
    gradient_ = saa_gradient(state_, params_);
    auto [flat, next] = visa::step(optimizer_, params_.flat(), gradient_);
    params_ = params_.with_flat(std::move(flat));
    optimizer_ = std::move(next);
    ++t_;
    StepRecord rec{t_, evals_, 0.0, trust_score(state_, params_), false};
    if (rec.trust_score <= config_.ess_threshold) {
      state_ = build_saa(*model_, params_, config_.n_samples, rng_, config_.threads);
      evals_ += static_cast<std::uint64_t>(config_.n_samples);
      rec.model_evals = evals_;
      rec.refreshed = true;
    }
    rec.train_loss = saa_objective(state_, params_);
    return rec;
  }

  [[nodiscard]] const VariationalParams& params() const noexcept { return params_; }
  [[nodiscard]] const SaaState& saa() const noexcept { return state_; }
  /// Gradient applied by the most recent step.
  [[nodiscard]] const Eigen::VectorXd& last_gradient() const noexcept { return gradient_; }
  [[nodiscard]] std::uint64_t evals() const noexcept { return evals_; }

 private:
  static VisaConfig validated(VisaConfig config) {
    config.validate();
    return config;
  }

  const Model* model_;
  VisaConfig config_;
  Rng rng_;
  VariationalParams params_;
  OptimizerState optimizer_;
  SaaState state_;
  Eigen::VectorXd gradient_;
  std::uint64_t evals_;
  std::int64_t t_ = 0;
};

enum class Estimator { iwfvi, bbvi_sf, bbvi_rp };

/// Step-wise driver for the fresh-batch estimators (IWFVI, BBVI-SF, BBVI-RP).
class GradientStreamSolver {
 public:
  GradientStreamSolver(const Model& model, Estimator estimator, VariationalParams init, Eigen::Index n_samples,
                       OptimizerSpec optimizer, Rng rng, unsigned threads = 1)
      : model_(&model),
        estimator_(estimator),
        n_(n_samples),
        threads_(threads),
        rng_(std::move(rng)),
        params_(std::move(init)),
        optimizer_(make_optimizer(optimizer)) {
    estimate_ = estimate();
    evals_ = estimate_.evals;
  }

  [[nodiscard]] StepRecord initial_record() const { return StepRecord{0, evals_, estimate_.loss, 1.0, false}; }

  StepRecord step() {
    gradient_ = estimate_.gradient;
    auto [flat, next] = visa::step(optimizer_, params_.flat(), gradient_);
    params_ = params_.with_flat(std::move(flat));
    optimizer_ = std::move(next);
    ++t_;
    estimate_ = estimate();
    evals_ += estimate_.evals;
    return StepRecord{t_, evals_, estimate_.loss, estimate_.ess, true};
  }

  [[nodiscard]] const VariationalParams& params() const noexcept { return params_; }
  [[nodiscard]] const Eigen::VectorXd& last_gradient() const noexcept { return gradient_; }
  [[nodiscard]] std::uint64_t evals() const noexcept { return evals_; }

 private:
  GradEstimate estimate() {
    switch (estimator_) {
      case Estimator::bbvi_sf:
        return bbvi_sf_gradient(*model_, params_, n_, rng_, true, threads_);
      case Estimator::bbvi_rp:
        return bbvi_rp_gradient(*model_, params_, rng_);
      case Estimator::iwfvi:
        break;
    }
    return iwfvi_gradient(*model_, params_, n_, rng_, threads_);
  }

  const Model* model_;
  Estimator estimator_;
  Eigen::Index n_;
  unsigned threads_;
  Rng rng_;
  VariationalParams params_;
  OptimizerState optimizer_;
  GradEstimate estimate_;
  Eigen::VectorXd gradient_;
  std::uint64_t evals_ = 0;
  std::int64_t t_ = 0;
};

namespace detail {

template <class Solver>
RunResult drive(Solver& solver, const VariationalParams& init, const VisaConfig& config,
                const StepObserver& observer) {
  RunResult result{init, {}, std::nullopt};
  auto record = [&](const StepRecord& rec) {
    result.trace.records.push_back(rec);
    if (config.snapshot_every > 0 && rec.step % config.snapshot_every == 0) {
      result.trace.snapshots.emplace_back(rec.step, solver.params().flat());
    }
    if (observer) {
      observer(rec, solver.params());
    }
  };
  record(solver.initial_record());
  try {
    for (std::int64_t t = 1; t <= config.steps; ++t) {
      if (config.eval_budget > 0 && solver.evals() >= config.eval_budget) {
        break;
      }
      record(solver.step());
    }
  } catch (const Error& e) {
    result.error = e.what();
  }
  result.params = solver.params();
  if (config.snapshot_every <= 0 ||
      (!result.trace.snapshots.empty() && result.trace.snapshots.back().first != result.trace.records.back().step)) {
    result.trace.snapshots.emplace_back(result.trace.records.back().step, result.params.flat());
  }
  return result;
}

}  // namespace detail

/**
 * Runs VISA for `config.steps` optimizer steps (or until the evaluation budget is spent).
 *
 * A degenerate batch at the initial parameters throws; a failure during the
 * loop ends the run and is reported in `RunResult::error` alongside the trace
 * recorded so far.
 */
inline RunResult visa_run(const Model& model, const VariationalParams& init, const VisaConfig& config, Rng rng,
                          const StepObserver& observer = {}) {
  config.validate();
  VisaSolver solver(model, init, config, std::move(rng));
  return detail::drive(solver, init, config, observer);
}

inline RunResult visa_run(const Model& model, const VariationalParams& init, const VisaConfig& config,
                          const StepObserver& observer = {}) {
  return visa_run(model, init, config, Rng(config.seed), observer);
}

/// Same loop shape for a fresh-batch estimator; `config.ess_threshold` is ignored.
inline RunResult baseline_run(const Model& model, Estimator estimator, const VariationalParams& init,
                              const VisaConfig& config, Rng rng, const StepObserver& observer = {}) {
  GradientStreamSolver solver(model, estimator, init, config.n_samples, config.optimizer, std::move(rng),
                              config.threads);
  return detail::drive(solver, init, config, observer);
}

}  // namespace visa

#endif  // VISA_VISA_HPP
