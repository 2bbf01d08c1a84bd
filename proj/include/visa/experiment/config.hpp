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

#ifndef VISA_EXPERIMENT_CONFIG_HPP
#define VISA_EXPERIMENT_CONFIG_HPP

#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "visa/error.hpp"
#include "visa/family.hpp"
#include "visa/models/lotka_volterra.hpp"
#include "visa/models/particle_filter.hpp"
#include "visa/optim.hpp"

/**
 * \file
 * \brief Strict JSON experiment configuration.
 *
 * Unknown keys are rejected, defaults are filled in, and `to_json` produces the
 * effective configuration that `parse_config_text` reads back unchanged.
 */

namespace visa {

enum class Method { visa, iwfvi, bbvi_sf, bbvi_rp };
enum class ModelKind { gaussian_diag, gaussian_dense, lotka_volterra, pickover };

inline std::string to_string(Method m) {
  switch (m) {
    case Method::iwfvi:
      return "iwfvi";
    case Method::bbvi_sf:
      return "bbvi-sf";
    case Method::bbvi_rp:
      return "bbvi-rp";
    case Method::visa:
      break;
  }
  return "visa";
}

inline std::string to_string(ModelKind m) {
  switch (m) {
    case ModelKind::gaussian_dense:
      return "gaussian-dense";
    case ModelKind::lotka_volterra:
      return "lotka-volterra";
    case ModelKind::pickover:
      return "pickover";
    case ModelKind::gaussian_diag:
      break;
  }
  return "gaussian-diag";
}

struct GaussianSpec {
  Eigen::Index dim = 128;
  double sigma_min = 0.1;  // diag only
  double sigma_max = 1.0;  // diag only
  std::uint64_t cov_seed = 0;  // dense only
  double mean = 0.0;
};

struct LvSpec {
  std::optional<std::string> data;
  LvParams theta;
  double prey0 = 10.0;
  double pred0 = 10.0;
  double data_sigma = 0.25;
  int t_obs = 20;
  std::uint64_t data_seed = 0;
  double sigma = 0.25;
  double step = 0.01;
  std::optional<std::string> reference;
  Eigen::Index reference_samples = 10000;
  std::int64_t reference_burn_in = 10000;
  std::int64_t reference_thin = 10;
  std::uint64_t reference_seed = 0;
};

struct PickoverSpec {
  std::optional<std::string> data;
  double beta = -2.3;
  double eta = 1.25;
  int horizon = 100;
  std::uint64_t data_seed = 0;
  int particles = 500;
  double sigma_z = 0.01;
  double sigma_y = 0.2;
  Resampling resampling = Resampling::multinomial;
};

struct ExperimentConfig {
  Method method = Method::visa;
  ModelKind model = ModelKind::gaussian_diag;
  GaussianSpec gaussian;
  LvSpec lv;
  PickoverSpec pickover;

  CovarianceKind covariance = CovarianceKind::diagonal;
  double init_mean = 0.0;     // gaussian models only
  double init_log_std = 0.0;  // gaussian models only

  OptimizerKind optimizer = OptimizerKind::adam;
  std::vector<double> lrs{1e-3};
  std::vector<double> alphas;  // visa only
  Eigen::Index n_samples = 10;
  std::int64_t steps = 1000;
  std::uint64_t eval_budget = 0;
  std::vector<std::uint64_t> seeds{0};
  std::int64_t eval_every = 10;
  std::int64_t running_window = 100;
  std::string output_dir = "out";

  [[nodiscard]] bool gaussian_model() const noexcept {
    return model == ModelKind::gaussian_diag || model == ModelKind::gaussian_dense;
  }
};

namespace detail {

using nlohmann::json;

// Reads one JSON object, remembering which keys were consumed.
class ObjectReader {
 public:
  ObjectReader(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) {
      throw ConfigError(path_.empty() ? "/" : path_, "expected an object");
    }
  }

  [[nodiscard]] bool has(const std::string& key) const { return obj_.contains(key) && !obj_.at(key).is_null(); }

  [[nodiscard]] const json* find(const std::string& key) {
    seen_.insert(key);
    if (!has(key)) {
      return nullptr;
    }
    return &obj_.at(key);
  }

  [[nodiscard]] std::string child(const std::string& key) const { return path_ + "/" + key; }

  double number(const std::string& key, double fallback) {
    const json* v = find(key);
    if (!v) {
      return fallback;
    }
    if (!v->is_number()) {
      throw ConfigError(child(key), "expected a number");
    }
    return v->get<double>();
  }

  template <class Int>
  Int integer(const std::string& key, Int fallback) {
    const json* v = find(key);
    if (!v) {
      return fallback;
    }
    if (!v->is_number_integer()) {
      throw ConfigError(child(key), "expected an integer");
    }
    if constexpr (std::is_unsigned_v<Int>) {
      if (v->is_number_unsigned()) {
        return static_cast<Int>(v->get<std::uint64_t>());
      }
      if (v->get<std::int64_t>() < 0) {
        throw ConfigError(child(key), "must be non-negative");
      }
    }
    return static_cast<Int>(v->get<std::int64_t>());
  }

  std::string string(const std::string& key, const std::string& fallback) {
    const json* v = find(key);
    if (!v) {
      return fallback;
    }
    if (!v->is_string()) {
      throw ConfigError(child(key), "expected a string");
    }
    return v->get<std::string>();
  }

  std::optional<std::string> optional_string(const std::string& key) {
    const json* v = find(key);
    if (!v) {
      return std::nullopt;
    }
    if (!v->is_string()) {
      throw ConfigError(child(key), "expected a string or null");
    }
    return v->get<std::string>();
  }

  /// A number or a non-empty array of numbers.
  std::optional<std::vector<double>> numbers(const std::string& key) {
    const json* v = find(key);
    if (!v) {
      return std::nullopt;
    }
    std::vector<double> out;
    if (v->is_number()) {
      out.push_back(v->get<double>());
      return out;
    }
    if (!v->is_array() || v->empty()) {
      throw ConfigError(child(key), "expected a number or a non-empty array of numbers");
    }
    for (std::size_t i = 0; i < v->size(); ++i) {
      if (!(*v)[i].is_number()) {
        throw ConfigError(child(key) + "/" + std::to_string(i), "expected a number");
      }
      out.push_back((*v)[i].get<double>());
    }
    return out;
  }

  void finish() const {
    for (const auto& [key, value] : obj_.items()) {
      if (!seen_.contains(key)) {
        throw ConfigError(child(key), "unknown key");
      }
    }
  }

 private:
  const json& obj_;
  std::string path_;
  std::set<std::string> seen_;
};

// Best-effort source line of a JSON pointer, found by walking the keys textually.
inline std::optional<int> locate_line(const std::string& text, const std::string& pointer) {
  std::size_t pos = 0;
  std::istringstream parts(pointer);
  std::string key;
  bool any = false;
  while (std::getline(parts, key, '/')) {
    if (key.empty()) {
      continue;
    }
    const bool index = !key.empty() && key.find_first_not_of("0123456789") == std::string::npos;
    if (index) {
      continue;
    }
    const auto found = text.find("\"" + key + "\"", pos);
    if (found == std::string::npos) {
      break;
    }
    pos = found;
    any = true;
  }
  if (!any) {
    return std::nullopt;
  }
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(pos), '\n'));
}

inline void require(bool ok, const std::string& path, const std::string& message) {
  if (!ok) {
    throw ConfigError(path, message);
  }
}

inline ExperimentConfig parse_config_json(const json& root) {
  ExperimentConfig cfg;
  ObjectReader top(root, "");

  const std::string method = top.string("method", "visa");
  if (method == "visa") {
    cfg.method = Method::visa;
  } else if (method == "iwfvi") {
    cfg.method = Method::iwfvi;
  } else if (method == "bbvi-sf") {
    cfg.method = Method::bbvi_sf;
  } else if (method == "bbvi-rp") {
    cfg.method = Method::bbvi_rp;
  } else {
    throw ConfigError("/method", "must be one of visa, iwfvi, bbvi-sf, bbvi-rp");
  }

  const json* model = top.find("model");
  require(model != nullptr, "/model", "is required");
  ObjectReader m(*model, "/model");
  const std::string type = m.string("type", "");
  if (type == "gaussian-diag" || type == "gaussian-dense") {
    const bool diag = type == "gaussian-diag";
    cfg.model = diag ? ModelKind::gaussian_diag : ModelKind::gaussian_dense;
    cfg.covariance = diag ? CovarianceKind::diagonal : CovarianceKind::full;
    cfg.gaussian.dim = m.integer<Eigen::Index>("dim", diag ? 128 : 32);
    require(cfg.gaussian.dim >= 2, "/model/dim", "must be at least 2");
    cfg.gaussian.mean = m.number("mean", 0.0);
    if (diag) {
      cfg.gaussian.sigma_min = m.number("sigma_min", 0.1);
      cfg.gaussian.sigma_max = m.number("sigma_max", 1.0);
      require(cfg.gaussian.sigma_min > 0.0, "/model/sigma_min", "must be positive");
      require(cfg.gaussian.sigma_max >= cfg.gaussian.sigma_min, "/model/sigma_max", "must be >= sigma_min");
    } else {
      cfg.gaussian.cov_seed = m.integer<std::uint64_t>("cov_seed", 0);
    }
  } else if (type == "lotka-volterra") {
    cfg.model = ModelKind::lotka_volterra;
    cfg.covariance = CovarianceKind::full;
    auto& lv = cfg.lv;
    lv.data = m.optional_string("data");
    if (const json* g = m.find("generate")) {
      ObjectReader gen(*g, "/model/generate");
      lv.theta.alpha = gen.number("alpha", lv.theta.alpha);
      lv.theta.beta = gen.number("beta", lv.theta.beta);
      lv.theta.gamma = gen.number("gamma", lv.theta.gamma);
      lv.theta.delta = gen.number("delta", lv.theta.delta);
      lv.prey0 = gen.number("prey0", lv.prey0);
      lv.pred0 = gen.number("pred0", lv.pred0);
      lv.data_sigma = gen.number("sigma", lv.data_sigma);
      lv.t_obs = gen.integer<int>("t_obs", lv.t_obs);
      lv.data_seed = gen.integer<std::uint64_t>("seed", lv.data_seed);
      gen.finish();
      require(lv.prey0 > 0.0 && lv.pred0 > 0.0, "/model/generate", "initial populations must be positive");
      require(lv.t_obs >= 1, "/model/generate/t_obs", "must be at least 1");
      require(lv.data_sigma >= 0.0, "/model/generate/sigma", "must be non-negative");
    }
    lv.sigma = m.number("sigma", lv.sigma);
    lv.step = m.number("step", lv.step);
    require(lv.sigma > 0.0, "/model/sigma", "must be positive");
    require(lv.step > 0.0, "/model/step", "must be positive");
    if (const json* r = m.find("reference")) {
      ObjectReader ref(*r, "/model/reference");
      lv.reference = ref.optional_string("path");
      lv.reference_samples = ref.integer<Eigen::Index>("n_samples", lv.reference_samples);
      lv.reference_burn_in = ref.integer<std::int64_t>("burn_in", lv.reference_burn_in);
      lv.reference_thin = ref.integer<std::int64_t>("thin", lv.reference_thin);
      lv.reference_seed = ref.integer<std::uint64_t>("seed", lv.reference_seed);
      ref.finish();
      require(lv.reference_samples >= 1, "/model/reference/n_samples", "must be positive");
      require(lv.reference_thin >= 1, "/model/reference/thin", "must be positive");
      require(lv.reference_burn_in >= 0, "/model/reference/burn_in", "must be non-negative");
    }
  } else if (type == "pickover") {
    cfg.model = ModelKind::pickover;
    cfg.covariance = CovarianceKind::full;
    auto& pk = cfg.pickover;
    pk.data = m.optional_string("data");
    if (const json* g = m.find("generate")) {
      ObjectReader gen(*g, "/model/generate");
      pk.beta = gen.number("beta", pk.beta);
      pk.eta = gen.number("eta", pk.eta);
      pk.horizon = gen.integer<int>("horizon", pk.horizon);
      pk.data_seed = gen.integer<std::uint64_t>("seed", pk.data_seed);
      gen.finish();
      require(pk.horizon >= 1, "/model/generate/horizon", "must be at least 1");
    }
    pk.particles = m.integer<int>("particles", pk.particles);
    pk.sigma_z = m.number("sigma_z", pk.sigma_z);
    pk.sigma_y = m.number("sigma_y", pk.sigma_y);
    const std::string rs = m.string("resampling", "multinomial");
    require(rs == "multinomial" || rs == "systematic", "/model/resampling", "must be multinomial or systematic");
    pk.resampling = rs == "multinomial" ? Resampling::multinomial : Resampling::systematic;
    require(pk.particles >= 2, "/model/particles", "must be at least 2");
    require(pk.sigma_z > 0.0 && pk.sigma_y > 0.0, "/model", "noise scales must be positive");
  } else {
    throw ConfigError("/model/type", "must be one of gaussian-diag, gaussian-dense, lotka-volterra, pickover");
  }
  m.finish();

  if (const json* f = top.find("family")) {
    ObjectReader fam(*f, "/family");
    const std::string cov = fam.string("covariance", cfg.covariance == CovarianceKind::diagonal ? "diagonal" : "full");
    require(cov == "diagonal" || cov == "full", "/family/covariance", "must be diagonal or full");
    cfg.covariance = cov == "diagonal" ? CovarianceKind::diagonal : CovarianceKind::full;
    if (cfg.gaussian_model()) {
      cfg.init_mean = fam.number("init_mean", cfg.init_mean);
      cfg.init_log_std = fam.number("init_log_std", cfg.init_log_std);
    }
    fam.finish();
  }

  const std::string opt = top.string("optimizer", "adam");
  require(opt == "adam" || opt == "sgd", "/optimizer", "must be adam or sgd");
  cfg.optimizer = opt == "adam" ? OptimizerKind::adam : OptimizerKind::sgd;

  if (auto lrs = top.numbers("lr")) {
    cfg.lrs = *lrs;
  }
  for (std::size_t i = 0; i < cfg.lrs.size(); ++i) {
    require(cfg.lrs[i] >= 0.0 && std::isfinite(cfg.lrs[i]), "/lr", "must be non-negative");
  }

  auto alphas = top.numbers("ess_threshold");
  if (cfg.method == Method::visa) {
    cfg.alphas = alphas ? *alphas : std::vector<double>{0.95};
    for (double a : cfg.alphas) {
      require(a > 0.0 && a <= 1.0, "/ess_threshold", "must lie in (0, 1], got " + std::to_string(a));
    }
  } else {
    require(!alphas, "/ess_threshold", "only valid for method visa");
  }
  require(cfg.method != Method::bbvi_rp || cfg.gaussian_model(), "/method",
          "bbvi-rp needs a model with an analytic gradient (gaussian-diag or gaussian-dense)");

  cfg.n_samples = top.integer<Eigen::Index>("n_samples", cfg.n_samples);
  require(cfg.n_samples >= 2, "/n_samples", "must be at least 2");
  cfg.steps = top.integer<std::int64_t>("steps", cfg.steps);
  require(cfg.steps >= 1, "/steps", "must be at least 1");
  cfg.eval_budget = top.integer<std::uint64_t>("eval_budget", cfg.eval_budget);
  cfg.eval_every = top.integer<std::int64_t>("eval_every", cfg.eval_every);
  require(cfg.eval_every >= 1, "/eval_every", "must be at least 1");
  cfg.running_window = top.integer<std::int64_t>("running_window", cfg.running_window);
  require(cfg.running_window >= 1, "/running_window", "must be at least 1");
  cfg.output_dir = top.string("output_dir", cfg.output_dir);

  if (const json* s = top.find("seeds")) {
    require(s->is_array() && !s->empty(), "/seeds", "expected a non-empty array of integers");
    cfg.seeds.clear();
    for (std::size_t i = 0; i < s->size(); ++i) {
      require((*s)[i].is_number_integer() && (*s)[i].get<std::int64_t>() >= 0, "/seeds/" + std::to_string(i),
              "expected a non-negative integer");
      cfg.seeds.push_back((*s)[i].get<std::uint64_t>());
    }
  }
  top.finish();
  return cfg;
}

}  // namespace detail

/// Parses and validates a configuration document. Errors carry the field path and, when found, the line.
inline ExperimentConfig parse_config_text(const std::string& text) {
  nlohmann::json root;
  try {
    root = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    const auto upto = std::min<std::size_t>(e.byte, text.size());
    const int line = 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(upto), '\n'));
    throw ConfigError("", "line " + std::to_string(line) + ": invalid JSON: " + e.what());
  }
  try {
    return detail::parse_config_json(root);
  } catch (const ConfigError& e) {
    if (auto line = detail::locate_line(text, e.path())) {
      throw ConfigError(e.path(), std::string("line ") + std::to_string(*line) + ": " +
                                      std::string(e.what()).substr(e.path().size() + 2));
    }
    throw;
  }
}

inline ExperimentConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("", "cannot open config file " + path);
  }
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

/// The effective configuration with every default spelled out.
inline nlohmann::json to_json(const ExperimentConfig& cfg) {
  using nlohmann::json;
  json model;
  model["type"] = to_string(cfg.model);
  switch (cfg.model) {
    case ModelKind::gaussian_diag:
      model["dim"] = cfg.gaussian.dim;
      model["sigma_min"] = cfg.gaussian.sigma_min;
      model["sigma_max"] = cfg.gaussian.sigma_max;
      model["mean"] = cfg.gaussian.mean;
      break;
    case ModelKind::gaussian_dense:
      model["dim"] = cfg.gaussian.dim;
      model["cov_seed"] = cfg.gaussian.cov_seed;
      model["mean"] = cfg.gaussian.mean;
      break;
    case ModelKind::lotka_volterra: {
      const auto& lv = cfg.lv;
      model["data"] = lv.data ? json(*lv.data) : json(nullptr);
      model["generate"] = {{"alpha", lv.theta.alpha}, {"beta", lv.theta.beta},   {"gamma", lv.theta.gamma},
                           {"delta", lv.theta.delta}, {"prey0", lv.prey0},       {"pred0", lv.pred0},
                           {"sigma", lv.data_sigma},  {"t_obs", lv.t_obs},       {"seed", lv.data_seed}};
      model["sigma"] = lv.sigma;
      model["step"] = lv.step;
      model["reference"] = {{"path", lv.reference ? json(*lv.reference) : json(nullptr)},
                            {"n_samples", lv.reference_samples},
                            {"burn_in", lv.reference_burn_in},
                            {"thin", lv.reference_thin},
                            {"seed", lv.reference_seed}};
      break;
    }
    case ModelKind::pickover: {
      const auto& pk = cfg.pickover;
      model["data"] = pk.data ? json(*pk.data) : json(nullptr);
      model["generate"] = {{"beta", pk.beta}, {"eta", pk.eta}, {"horizon", pk.horizon}, {"seed", pk.data_seed}};
      model["particles"] = pk.particles;
      model["sigma_z"] = pk.sigma_z;
      model["sigma_y"] = pk.sigma_y;
      model["resampling"] = std::string(to_string(pk.resampling));
      break;
    }
  }
  json out;
  out["method"] = to_string(cfg.method);
  out["model"] = model;
  json family;
  family["covariance"] = cfg.covariance == CovarianceKind::diagonal ? "diagonal" : "full";
  if (cfg.gaussian_model()) {
    family["init_mean"] = cfg.init_mean;
    family["init_log_std"] = cfg.init_log_std;
  }
  out["family"] = family;
  out["optimizer"] = std::string(to_string(cfg.optimizer));
  out["lr"] = cfg.lrs;
  if (cfg.method == Method::visa) {
    out["ess_threshold"] = cfg.alphas;
  }
  out["n_samples"] = cfg.n_samples;
  out["steps"] = cfg.steps;
  out["eval_budget"] = cfg.eval_budget;
  out["seeds"] = cfg.seeds;
  out["eval_every"] = cfg.eval_every;
  out["running_window"] = cfg.running_window;
  out["output_dir"] = cfg.output_dir;
  return out;
}

}  // namespace visa

#endif  // VISA_EXPERIMENT_CONFIG_HPP
