#include "nudgepf/config.hpp"

#include <fstream>
#include <stdexcept>

namespace nudgepf {
namespace {

using nlohmann::json;

template <class T>
void read(const json& j, const char* key, T& field) {
  if (j.contains(key)) field = j.at(key).get<T>();
}

std::string model_name(ModelKind kind) { return kind == ModelKind::linear_sde ? "linear_sde" : "sks"; }

}  // namespace

void ExperimentConfig::validate() const {
  if (particles < 1) throw std::invalid_argument("config: particles must be >= 1");
  if (n_windows < 0) throw std::invalid_argument("config: n_windows must be >= 0");
  if (steps_per_window < 1) throw std::invalid_argument("config: steps_per_window must be >= 1");
  if (workers < 1) throw std::invalid_argument("config: workers must be >= 1");
  if (!(obs_variance() >= 0.0)) throw std::invalid_argument("config: obs_variance must be >= 0");
  if (model == ModelKind::linear_sde) linear.params.validate();
  else sks.params.validate();
  if (!(nudge.sigma > 0.0)) throw std::invalid_argument("config: nudge.sigma must be positive");
  if (!(nudge.delta > 0.0) || !(temper_jitter.delta > 0.0)) {
    throw std::invalid_argument("config: jitter delta must be positive");
  }
  if (!(temper_jitter.ess_target >= 0.0 && temper_jitter.ess_target < 1.0)) {
    throw std::invalid_argument("config: temper_jitter.ess_target must be in [0, 1)");
  }
}

ExperimentConfig preset_config(const std::string& name) {
  ExperimentConfig cfg;
  cfg.preset = name;
  if (name == "linear_verification") {
    cfg.model = ModelKind::linear_sde;
    cfg.filter = FilterKind::nudge;
    cfg.particles = 300;
    cfg.n_windows = 1;
    cfg.steps_per_window = 10;
    cfg.linear.params = LinearSdeParams{1.0, 1.0, 0.1, 10};
    cfg.linear.obs_variance = 0.01;
    cfg.linear.fixed_observation = -0.055634;
    cfg.temper_jitter = TemperJitterOptions{0.8, 0.15, 5};
    cfg.nudge.delta = 0.05;
    cfg.nudge.n_jitter = 5;
  } else if (name == "sks_benchmark") {
    cfg.model = ModelKind::sks;
    cfg.filter = FilterKind::nudge;
    cfg.particles = 90;
    cfg.n_windows = 900;
    cfg.steps_per_window = 5;
    cfg.sks.params = SksParams{};
    cfg.sks.obs_variance = 2.5;
    cfg.temper_jitter = TemperJitterOptions{0.8, 0.15, 5};
    cfg.nudge.delta = 0.05;
    cfg.nudge.n_jitter = 5;
  } else {
    throw std::invalid_argument("unknown preset '" + name + "'");
  }
  cfg.output_dir = "runs/" + name;
  return cfg;
}

ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig cfg = preset_config(j.value("preset", std::string("linear_verification")));
  if (j.contains("filter")) cfg.filter = parse_filter_kind(j.at("filter").get<std::string>());
  read(j, "particles", cfg.particles);
  read(j, "seed", cfg.seed);
  read(j, "n_windows", cfg.n_windows);
  read(j, "steps_per_window", cfg.steps_per_window);
  read(j, "workers", cfg.workers);
  read(j, "resample_threshold", cfg.resample_threshold);
  read(j, "abort_on_error", cfg.abort_on_error);
  read(j, "write_snapshots", cfg.write_snapshots);
  if (j.contains("output_dir")) cfg.output_dir = j.at("output_dir").get<std::string>();

  if (j.contains("linear")) {
    const json& l = j.at("linear");
    read(l, "A", cfg.linear.params.A);
    read(l, "D", cfg.linear.params.D);
    read(l, "dt", cfg.linear.params.dt);
    read(l, "obs_variance", cfg.linear.obs_variance);
    if (l.contains("fixed_observation")) {
      if (l.at("fixed_observation").is_null()) cfg.linear.fixed_observation.reset();
      else cfg.linear.fixed_observation = l.at("fixed_observation").get<double>();
    }
  }
  if (j.contains("sks")) {
    const json& s = j.at("sks");
    auto& p = cfg.sks.params;
    read(s, "L", p.L);
    read(s, "n_cells", p.n_cells);
    read(s, "alpha", p.alpha);
    read(s, "beta", p.beta);
    read(s, "gamma", p.gamma);
    read(s, "c", p.c);
    read(s, "eta", p.eta);
    read(s, "dt", p.dt);
    read(s, "newton_tol", p.newton_tol);
    read(s, "newton_max_iter", p.newton_max_iter);
    read(s, "n_obs", p.n_obs);
    read(s, "obs_variance", cfg.sks.obs_variance);
    read(s, "spin_up_steps", cfg.sks.spin_up_steps);
    read(s, "spread_steps", cfg.sks.spread_steps);
  }
  if (j.contains("temper_jitter")) {
    const json& t = j.at("temper_jitter");
    read(t, "ess_target", cfg.temper_jitter.ess_target);
    read(t, "delta", cfg.temper_jitter.delta);
    read(t, "n_jitter", cfg.temper_jitter.n_jitter);
  }
  if (j.contains("nudge")) {
    const json& n = j.at("nudge");
    read(n, "sigma", cfg.nudge.sigma);
    read(n, "delta", cfg.nudge.delta);
    read(n, "n_jitter", cfg.nudge.n_jitter);
    read(n, "stage1_max_iter", cfg.nudge.stage1_max_iter);
    read(n, "stage1_tol", cfg.nudge.stage1_tol);
    read(n, "stage2_tol", cfg.nudge.stage2_tol);
    read(n, "stage2_max_iter", cfg.nudge.stage2_max_iter);
    read(n, "stage3_tol", cfg.nudge.stage3_tol);
  }
  cfg.linear.params.n_steps = cfg.steps_per_window;
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path.string());
  return config_from_json(json::parse(in, nullptr, true, /*ignore_comments=*/true));
}

json config_to_json(const ExperimentConfig& cfg) {
  json j;
  j["preset"] = cfg.preset;
  j["model"] = model_name(cfg.model);
  j["filter"] = std::string(filter_name(cfg.filter));
  j["particles"] = cfg.particles;
  j["seed"] = cfg.seed;
  j["n_windows"] = cfg.n_windows;
  j["steps_per_window"] = cfg.steps_per_window;
  j["resample_threshold"] = cfg.resample_threshold;
  j["abort_on_error"] = cfg.abort_on_error;
  j["write_snapshots"] = cfg.write_snapshots;
  j["output_dir"] = cfg.output_dir.string();
  const auto& lp = cfg.linear.params;
  j["linear"] = {{"A", lp.A}, {"D", lp.D}, {"dt", lp.dt}, {"obs_variance", cfg.linear.obs_variance}};
  j["linear"]["fixed_observation"] =
      cfg.linear.fixed_observation ? json(*cfg.linear.fixed_observation) : json(nullptr);
  const auto& sp = cfg.sks.params;
  j["sks"] = {{"L", sp.L},
              {"n_cells", sp.n_cells},
              {"alpha", sp.alpha},
              {"beta", sp.beta},
              {"gamma", sp.gamma},
              {"c", sp.c},
              {"eta", sp.eta},
              {"dt", sp.dt},
              {"newton_tol", sp.newton_tol},
              {"newton_max_iter", sp.newton_max_iter},
              {"n_obs", sp.n_obs},
              {"obs_variance", cfg.sks.obs_variance},
              {"spin_up_steps", cfg.sks.spin_up_steps},
              {"spread_steps", cfg.sks.spread_steps}};
  j["temper_jitter"] = {{"ess_target", cfg.temper_jitter.ess_target},
                        {"delta", cfg.temper_jitter.delta},
                        {"n_jitter", cfg.temper_jitter.n_jitter}};
  j["nudge"] = {{"sigma", cfg.nudge.sigma},
                {"delta", cfg.nudge.delta},
                {"n_jitter", cfg.nudge.n_jitter},
                {"stage1_max_iter", cfg.nudge.stage1_max_iter},
                {"stage1_tol", cfg.nudge.stage1_tol},
                {"stage2_tol", cfg.nudge.stage2_tol},
                {"stage2_max_iter", cfg.nudge.stage2_max_iter},
                {"stage3_tol", cfg.nudge.stage3_tol}};
  return j;
}

}  // namespace nudgepf
