#include "nudgepf/experiment.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace nudgepf {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::ofstream open_csv(const fs::path& path, const std::string& kind, const std::string& header) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "# " << kCsvSchemaVersion << ' ' << kind << '\n' << header << '\n';
  return out;
}

std::vector<double> obs_locations(const Model& model) {
  if (const auto* sks = dynamic_cast<const SksModel*>(&model)) return sks->obs_points();
  return std::vector<double>(static_cast<std::size_t>(model.obs_dim()), 0.0);
}

std::vector<double> dof_locations(const Model& model) {
  std::vector<double> x(static_cast<std::size_t>(model.state_dim()), 0.0);
  if (const auto* sks = dynamic_cast<const SksModel*>(&model)) {
    for (int k = 0; k < sks->mesh().n_dofs(); ++k) x[static_cast<std::size_t>(k)] = sks->mesh().dof_coordinate(k);
  }
  return x;
}

void write_snapshot(const fs::path& dir, int window, const WeightedEnsemble& ens,
                    const ModelState& truth, const Model& model) {
  char name[32];
  std::snprintf(name, sizeof name, "window_%05d.csv", window);
  std::ostringstream header;
  header << "dof,x,truth";
  for (std::size_t i = 0; i < ens.size(); ++i) header << ",p" << i;
  auto out = open_csv(dir / name, "snapshot", header.str());
  const auto x = dof_locations(model);
  for (Eigen::Index k = 0; k < model.state_dim(); ++k) {
    out << k << ',' << num(x[static_cast<std::size_t>(k)]) << ',' << num(truth.dof[k]);
    for (const auto& p : ens.particles) out << ',' << num(p.x_end.dof[k]);
    out << '\n';
  }
}

Matrix observed_ensemble(const WeightedEnsemble& ens, const Model& model) {
  Matrix hx(static_cast<Eigen::Index>(ens.size()), model.obs_dim());
  for (std::size_t i = 0; i < ens.size(); ++i) {
    hx.row(static_cast<Eigen::Index>(i)) = model.observe(ens.particles[i].x_end.dof).transpose();
  }
  return hx;
}

std::vector<std::vector<std::string>> read_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::vector<std::vector<std::string>> rows;
  std::string line;
  bool header_seen = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      header_seen = true;
      continue;
    }
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    rows.push_back(std::move(cells));
  }
  return rows;
}

}  // namespace

std::unique_ptr<Model> make_model(const ExperimentConfig& cfg) {
  if (cfg.model == ModelKind::linear_sde) {
    LinearSdeParams p = cfg.linear.params;
    p.n_steps = cfg.steps_per_window;
    return std::make_unique<LinearSdeModel>(p);
  }
  return std::make_unique<SksModel>(cfg.sks.params);
}

TruthAndObs generate_truth_and_obs(const ExperimentConfig& cfg, const Model& model) {
  TruthAndObs data;
  const std::uint64_t seed = cfg.seed;
  ModelState x;
  if (cfg.model == ModelKind::linear_sde) {
    RngStream init(StreamKey{seed, 0, 0, 0, 0, Purpose::truth_noise});
    x.dof = Vector::Constant(1, stationary_init_sampler(cfg.linear.params, init));
  } else {
    RngStream spin(StreamKey{seed, 0, 0, 0, 0, Purpose::initial_condition});
    x = spin_up_initial(cfg.sks.params, cfg.sks.spin_up_steps, spin);
    for (int s = 1; s <= cfg.sks.spread_steps; ++s) {
      RngStream stream(StreamKey{seed, 0, 0, static_cast<std::uint64_t>(s), 0, Purpose::truth_noise});
      x.dof = model.step(x.dof, sample_brownian(stream, model.noise_dim(), model.dt()));
    }
  }
  x.time_index = 0;
  data.truth.push_back(x);

  const double R = cfg.obs_variance();
  for (int k = 1; k <= cfg.n_windows; ++k) {
    NoiseWindow w(cfg.steps_per_window, model.noise_dim(), model.dt());
    for (int n = 1; n <= cfg.steps_per_window; ++n) {
      RngStream stream(StreamKey{seed, 0, static_cast<std::uint64_t>(k), static_cast<std::uint64_t>(n),
                                 0, Purpose::truth_noise});
      w.dW.row(n - 1) = sample_brownian(stream, model.noise_dim(), model.dt()).transpose();
    }
    try {
      x = propagate(model, x, w, ControlWindow(cfg.steps_per_window, model.noise_dim()));
    } catch (const PropagationError& e) {
      throw std::runtime_error("truth propagation failed in window " + std::to_string(k) + ": " + e.what());
    }
    data.truth.push_back(x);

    Observation obs;
    obs.window_index = k;
    obs.obs_variance = R;
    obs.y = model.observe(x.dof);
    if (cfg.model == ModelKind::linear_sde && cfg.linear.fixed_observation) {
      obs.y.setConstant(*cfg.linear.fixed_observation);
    } else {
      RngStream noise(StreamKey{seed, 0, static_cast<std::uint64_t>(k), 0, 0, Purpose::obs_noise});
      for (auto& v : obs.y) v += std::sqrt(R) * noise.standard_normal();
    }
    data.observations.push_back(std::move(obs));
  }
  return data;
}

void write_truth_and_obs(const fs::path& dir, const TruthAndObs& data, const Model& model) {
  fs::create_directories(dir);
  std::ostringstream header;
  header << "window_index";
  for (Eigen::Index k = 0; k < model.state_dim(); ++k) header << ",dof_" << k;
  auto truth = open_csv(dir / "truth.csv", "truth", header.str());
  for (std::size_t k = 0; k < data.truth.size(); ++k) {
    truth << k;
    for (double v : data.truth[k].dof) truth << ',' << num(v);
    truth << '\n';
  }
  auto obs = open_csv(dir / "observations.csv", "observations",
                      "window_index,point_index,location,y,obs_variance");
  const auto loc = obs_locations(model);
  for (const auto& o : data.observations) {
    for (Eigen::Index m = 0; m < o.y.size(); ++m) {
      obs << o.window_index << ',' << m << ',' << num(loc[static_cast<std::size_t>(m)]) << ','
          << num(o.y[m]) << ',' << num(o.obs_variance) << '\n';
    }
  }
}

std::vector<ModelState> initial_ensemble(const ExperimentConfig& cfg, const Model& model) {
  std::vector<ModelState> states(static_cast<std::size_t>(cfg.particles));
  if (cfg.model == ModelKind::linear_sde) {
    for (std::size_t i = 0; i < states.size(); ++i) {
      RngStream stream(StreamKey{cfg.seed, i, 0, 0, 0, Purpose::initial_condition});
      states[i].dof = Vector::Constant(1, stationary_init_sampler(cfg.linear.params, stream));
    }
    return states;
  }
  RngStream spin(StreamKey{cfg.seed, 0, 0, 0, 0, Purpose::initial_condition});
  const ModelState u0 = spin_up_initial(cfg.sks.params, cfg.sks.spin_up_steps, spin);
  for (std::size_t i = 0; i < states.size(); ++i) {
    Vector u = u0.dof;
    for (int s = 1; s <= cfg.sks.spread_steps; ++s) {
      RngStream stream(StreamKey{cfg.seed, i, 0, static_cast<std::uint64_t>(s), 0, Purpose::initial_spread});
      u = model.step(u, sample_brownian(stream, model.noise_dim(), model.dt()));
    }
    states[i].dof = std::move(u);
  }
  return states;
}

ComponentMoments ensemble_moments(const WeightedEnsemble& ens, Eigen::Index component) {
  const Vector w = normalize_log_weights(ens.log_weights);
  ComponentMoments m;
  for (std::size_t i = 0; i < ens.size(); ++i) {
    m.mean += w[static_cast<Eigen::Index>(i)] * ens.particles[i].x_end.dof[component];
  }
  for (std::size_t i = 0; i < ens.size(); ++i) {
    const double d = ens.particles[i].x_end.dof[component] - m.mean;
    m.variance += w[static_cast<Eigen::Index>(i)] * d * d;
  }
  return m;
}

AssimilationReport assimilate(const ExperimentConfig& cfg, WeightedEnsemble& ens,
                              const Observation& y, const FilterContext& ctx) {
  switch (cfg.filter) {
    case FilterKind::bootstrap: return bootstrap_assimilate(ens, y, cfg.steps_per_window, ctx);
    case FilterKind::temper_jitter:
      return temper_jitter_assimilate(ens, y, cfg.steps_per_window, ctx, cfg.temper_jitter);
    case FilterKind::nudge: return nudge_assimilate(ens, y, cfg.steps_per_window, ctx, cfg.nudge);
  }
  throw std::logic_error("unhandled filter kind");
}

RunResult run_experiment(const ExperimentConfig& cfg, bool write_files) {
  cfg.validate();
  const auto model = make_model(cfg);
  const TruthAndObs data = generate_truth_and_obs(cfg, *model);
  WeightedEnsemble ens = WeightedEnsemble::from_states(initial_ensemble(cfg, *model));

  const fs::path dir = cfg.output_dir;
  std::ofstream diag, ranks, posterior, errors;
  if (write_files) {
    fs::create_directories(dir);
    write_truth_and_obs(dir, data, *model);
    json meta = config_to_json(cfg);
    meta["schema"] = kCsvSchemaVersion;
    meta["state_dim"] = model->state_dim();
    meta["noise_dim"] = model->noise_dim();
    meta["obs_locations"] = obs_locations(*model);
    meta["dof_locations"] = dof_locations(*model);
    std::ofstream(dir / "meta.json") << meta.dump(2) << '\n';
    diag = open_csv(dir / "diagnostics.csv", "diagnostics", "window_index,ess,rmse,rb,res");
    ranks = open_csv(dir / "ranks.csv", "ranks", "window_index,point_index,rank");
    posterior = open_csv(dir / "posterior.csv", "posterior",
                         "window_index,ess_fraction,mean,variance");
    if (cfg.write_snapshots) {
      fs::create_directories(dir / "snapshots");
      write_snapshot(dir / "snapshots", 0, ens, data.truth[0], *model);
    }
  }

  RunResult result;
  result.histogram = RankHistogram(cfg.particles);
  for (int k = 1; k <= cfg.n_windows; ++k) {
    WindowResult wr;
    const Observation& y = data.observations[static_cast<std::size_t>(k - 1)];
    FilterContext ctx{model.get(), cfg.seed, k, cfg.workers, cfg.resample_threshold};
    try {
      wr.report = assimilate(cfg, ens, y, ctx);
    } catch (const std::exception& e) {
      if (cfg.abort_on_error) {
        throw std::runtime_error("window " + std::to_string(k) + ": " + e.what());
      }
      wr.failed = true;
      wr.error = e.what();
      ens.log_weights.setZero();
      if (write_files) {
        if (!errors.is_open()) errors.open(dir / "errors.log");
        errors << "window " << k << ": " << e.what() << '\n';
      }
    }

    const Vector y_true = model->observe(data.truth[static_cast<std::size_t>(k)].dof);
    const Matrix hx = observed_ensemble(ens, *model);
    RngStream ties(StreamKey{cfg.seed, 0, static_cast<std::uint64_t>(k), 0, 0, Purpose::rank_ties});
    try {
      wr.diagnostics = diagnose(k, wr.report.ess_pre_resample, y_true, hx, ties);
    } catch (const UndefinedMetricError&) {
      const double nan = std::numeric_limits<double>::quiet_NaN();
      wr.diagnostics = DiagnosticsRecord{k, wr.report.ess_pre_resample, nan, nan, nan, {}};
    }
    for (int r : wr.diagnostics.ranks) result.histogram.add(r);
    wr.moments = ensemble_moments(ens, 0);

    if (write_files) {
      const auto& d = wr.diagnostics;
      diag << k << ',' << num(d.ess_pre_resample) << ',' << num(d.rmse) << ',' << num(d.rb) << ','
           << num(d.res) << '\n';
      for (std::size_t m = 0; m < d.ranks.size(); ++m) ranks << k << ',' << m << ',' << d.ranks[m] << '\n';
      posterior << k << ',' << num(d.ess_pre_resample / cfg.particles) << ',' << num(wr.moments.mean)
                << ',' << num(wr.moments.variance) << '\n';
      if (cfg.write_snapshots) {
        write_snapshot(dir / "snapshots", k, ens, data.truth[static_cast<std::size_t>(k)], *model);
      }
    }
    result.windows.push_back(std::move(wr));
  }
  return result;
}

std::string report_runs(const std::vector<fs::path>& run_dirs) {
  std::ostringstream out;
  char line[256];
  bool linear_header = false;
  bool sks_header = false;
  for (const auto& dir : run_dirs) {
    std::ifstream meta_in(dir / "meta.json");
    if (!meta_in) throw std::runtime_error("not a run directory: " + dir.string());
    const json meta = json::parse(meta_in);
    const auto filter = meta.at("filter").get<std::string>();
    const int np = meta.at("particles").get<int>();
    const auto diag = read_csv(dir / "diagnostics.csv");
    const auto post = read_csv(dir / "posterior.csv");

    if (meta.at("model").get<std::string>() == "linear_sde") {
      if (!linear_header) {
        out << "Filter          N_p  ESS(%)  Exact mean  Ens. mean   Error     Exact var  Ens. var   Error\n";
        linear_header = true;
      }
      if (post.empty()) continue;
      const auto obs = read_csv(dir / "observations.csv");
      const double A = meta.at("linear").at("A").get<double>();
      const double D = meta.at("linear").at("D").get<double>();
      const double y = std::stod(obs.at(0).at(3));
      const double R = std::stod(obs.at(0).at(4));
      const auto exact = exact_gaussian_posterior(0.0, D * D / (2.0 * A), y, R);
      const double ess_pct = 100.0 * std::stod(post[0][1]);
      const double mean = std::stod(post[0][2]);
      const double var = std::stod(post[0][3]);
      std::snprintf(line, sizeof line, "%-14s %4d  %6.1f  %10.6f  %10.6f  %8.6f  %9.6f  %9.6f  %8.6f\n",
                    filter.c_str(), np, ess_pct, exact.mean, mean, std::abs(mean - exact.mean),
                    exact.var, var, std::abs(var - exact.var));
      out << line;
    } else {
      if (!sks_header) {
        out << "Filter          N_p  windows  ESS(%)   RMSE      RB        RES\n";
        sks_header = true;
      }
      double ess = 0, rmse_sum = 0, rb_sum = 0, res_sum = 0;
      for (const auto& row : diag) {
        ess += std::stod(row[1]);
        rmse_sum += std::stod(row[2]);
        rb_sum += std::stod(row[3]);
        res_sum += std::stod(row[4]);
      }
      const double nw = diag.empty() ? 1.0 : static_cast<double>(diag.size());
      std::snprintf(line, sizeof line, "%-14s %4d  %7zu  %6.1f  %8.5f  %8.5f  %8.5f\n", filter.c_str(), np,
                    diag.size(), 100.0 * ess / nw / np, rmse_sum / nw, rb_sum / nw, res_sum / nw);
      out << line;
    }
  }
  return out.str();
}

}  // namespace nudgepf
