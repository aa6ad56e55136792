#include "commands.hpp"

#include "tvmcf/stability.hpp"

#include <CLI11.hpp>
#include <omp.h>

#include <fstream>
#include <iostream>

namespace tvmcf::cli {

namespace fs = std::filesystem;
using io::json;

namespace {

fs::path resolve(const fs::path& out_dir, const std::string& name) {
  const fs::path p(name);
  return p.is_absolute() ? p : out_dir / p;
}

std::string checkpoint_name(const std::string& pattern, long step) {
  std::string out = pattern;
  const std::string key = "{step}";
  const auto pos = out.find(key);
  if (pos != std::string::npos) out.replace(pos, key.size(), std::to_string(step));
  return out;
}

json fit_json(const std::optional<DecayFit>& fit) { return fit ? io::to_json(*fit) : json(nullptr); }

int exit_for(Termination t) {
  switch (t) {
    case Termination::GuardTripped: return kGuardTripped;
    case Termination::UnderResolved: return kUnderResolved;
    default: return kOk;
  }
}

void prepare_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (!fs::is_directory(dir)) throw io::ConfigError("cannot create output directory " + dir.string());
}

ReferenceSurface with_parameter(const json& surface_doc, const std::string& parameter, double value) {
  json doc = surface_doc;
  doc["params"][parameter] = value;
  return io::surface_from_json(doc);
}

}  // namespace

std::optional<std::pair<double, double>> sign_change(const std::vector<std::pair<double, double>>& sweep) {
  for (std::size_t k = 1; k < sweep.size(); ++k)
    if ((sweep[k - 1].second < 0.0) != (sweep[k].second < 0.0)) return std::pair{sweep[k - 1].first, sweep[k].first};
  return std::nullopt;
}

SimulateResult simulate(const io::RunConfig& cfg, const fs::path& out_dir, const std::optional<io::Checkpoint>& restart,
                        std::ostream& log) {
  prepare_dir(out_dir);
  const ReferenceSurface& f = cfg.surface;
  const FlowState init = restart ? io::checkpoint_state(*restart, f) : initial_state(f, io::initial_data(cfg));
  if (restart && init.psi.front().grid.n[0] != cfg.n_per_axis) throw io::ConfigError("checkpoint grid differs from the config");

  const fs::path csv_path = resolve(out_dir, cfg.outputs.csv_path);
  std::ofstream csv(csv_path, std::ios::binary | std::ios::trunc);
  if (!csv) throw io::ConfigError("cannot write " + csv_path.string());
  csv << io::kCsvHeader << '\n';

  RunHooks hooks;
  hooks.on_record = [&](const DiagnosticsRecord& r) {
    csv << io::csv_row(r, f.ambient_dim()) << '\n';
    csv.flush();
  };
  if (!cfg.outputs.checkpoint_path.empty())
    hooks.on_checkpoint = [&](const FlowState& s) {
      io::write_checkpoint(resolve(out_dir, checkpoint_name(cfg.outputs.checkpoint_path, s.step)), cfg.document, s);
    };

  SimulateResult res;
  res.trajectory = run(f, init, cfg.flow, hooks);
  csv.close();
  const Trajectory& tr = res.trajectory;
  res.analysis = analyze_trajectory(f, cfg.n_per_axis, tr, cfg.stability.mode_cutoff, cfg.tolerances.lyapunov_increase);
  const RunAnalysis& a = res.analysis;
  res.exit_code = exit_for(tr.termination);

  json rep;
  rep["termination"] = termination_name(tr.termination);
  rep["message"] = tr.message;
  rep["surface"] = io::surface_to_json(f);
  rep["n_per_axis"] = cfg.n_per_axis;
  rep["scheme"] = scheme_name(cfg.flow.scheme);
  rep["dt"] = tr.dt;
  rep["steps"] = tr.steps;
  rep["records"] = tr.records.size();
  rep["restarted_from_step"] = restart ? json(restart->state.step) : json(nullptr);
  rep["max_projection_offset"] = tr.max_projection_offset;
  rep["sigma1"] = a.sigma1;
  rep["sigma0"] = a.sigma0;
  rep["sigma0_sign"] = "positive: decay exponent (sigma1/2)(1/3 - (n-1)/10)";
  rep["lambda1"] = a.lambda1;
  rep["decay_fits"] = {{"v_l2_sq", fit_json(a.velocity_sq)}, {"d_fit", fit_json(a.d_fit)}, {"phi_w25", fit_json(a.phi_w25)}};
  auto at_least = [](const std::optional<DecayFit>& fit, double rate) { return json(fit && fit->rate >= rate); };
  const double target = cfg.tolerances.decay_fraction * a.sigma1;
  rep["decay_checks"] = {{"v_l2_sq_rate_at_least", target},
                         {"v_l2_sq", at_least(a.velocity_sq, target)},
                         {"d_fit", at_least(a.d_fit, target)},
                         {"phi_w25_rate_at_least", a.sigma0},
                         {"phi_w25", at_least(a.phi_w25, a.sigma0)}};
  rep["lyapunov"] = {{"c0_run", a.c0_run},
                     {"violations_at_c0_run", a.violations_run},
                     {"c0_reported", a.c0_reported},
                     {"violations", a.violations_reported},
                     {"c0_sweep", a.c0_sweep},
                     {"tolerance", cfg.tolerances.lyapunov_increase}};
  if (!tr.records.empty()) {
    const DiagnosticsRecord& last = tr.records.back();
    rep["p_hat"] = std::vector<double>(last.p.data(), last.p.data() + f.ambient_dim());
    rep["final"] = io::to_json(last, f.ambient_dim());
  }
  res.report = rep;
  io::write_text(resolve(out_dir, cfg.outputs.report_path), rep.dump(2) + "\n");

  for (const auto& [column, file] : cfg.outputs.svg_paths) {
    io::PlotSeries s;
    s.title = column + " against t";
    s.y_label = column;
    s.log_scale = column == "v_l2" || column == "lyapunov" || column == "d_fit";
    for (const auto& r : tr.records) {
      s.t.push_back(r.t);
      s.y.push_back(io::record_column(r, column));
    }
    io::write_text(resolve(out_dir, file), io::svg_plot(s));
  }
  log << "simulate: " << termination_name(tr.termination) << " after " << tr.steps << " steps, " << tr.records.size()
      << " records";
  if (!tr.message.empty() && tr.termination != Termination::ReachedTEnd && tr.termination != Termination::Converged)
    log << " (" << tr.message << ")";
  log << '\n';
  return res;
}

StabilityResult stability(const io::RunConfig& cfg, const fs::path& out_dir, std::ostream& log) {
  prepare_dir(out_dir);
  StabilityOptions so;
  so.mode_cutoff = cfg.stability.mode_cutoff;
  so.certify_samples = cfg.stability.certify_samples;
  const ReferenceSurface& f = cfg.surface;
  const SurfaceGeometry g = build_geometry_param(f, zero_bundle(f, cfg.n_per_axis));
  const StabilityReport sr = sigma1(g, so);
  const TranslationKernelReport kr = verify_translation_kernel(g);

  StabilityResult res;
  json rep;
  rep["surface"] = io::surface_to_json(f);
  rep["n_per_axis"] = cfg.n_per_axis;
  rep["mode_cutoff"] = so.mode_cutoff;
  rep["stability"] = io::to_json(sr);
  rep["strictly_stable"] = sr.sigma1 > 0.0;
  rep["translation_kernel"] = {{"laplace_residual", kr.laplace_residual},
                               {"second_variation_max", kr.second_variation_max},
                               {"passed", kr.passed}};
  rep["lambda1"] = chart_lambda1(f);
  rep["sigma0"] = sigma0(sr.sigma1, f.ambient_dim());

  if (cfg.stability.sweep) {
    const io::SweepSpec& sw = *cfg.stability.sweep;
    std::vector<double> values(sw.steps);
    for (int k = 0; k < sw.steps; ++k) values[k] = sw.from + (sw.to - sw.from) * k / (sw.steps - 1);
    std::vector<double> sig(sw.steps, 0.0);
    std::vector<std::string> errors(sw.steps);
#pragma omp parallel for schedule(dynamic)
    for (int k = 0; k < sw.steps; ++k) {
      try {
        const ReferenceSurface fk = with_parameter(cfg.surface_document, sw.parameter, values[k]);
        sig[k] = sigma1(build_geometry_param(fk, zero_bundle(fk, cfg.n_per_axis)), so).sigma1;
      } catch (const std::exception& e) {
        errors[k] = e.what();
      }
    }
    for (int k = 0; k < sw.steps; ++k)
      if (!errors[k].empty())
        throw io::ConfigError("sweep point " + sw.parameter + " = " + io::format_double(values[k]) + ": " + errors[k]);
    std::string csv = sw.parameter + ",sigma1\n";
    json points = json::array();
    for (int k = 0; k < sw.steps; ++k) {
      res.sweep.emplace_back(values[k], sig[k]);
      csv += io::format_double(values[k]) + "," + io::format_double(sig[k]) + "\n";
      points.push_back({{sw.parameter, values[k]}, {"sigma1", sig[k]}});
    }
    io::write_text(resolve(out_dir, cfg.outputs.sweep_csv_path), csv);
    const auto bracket = sign_change(res.sweep);
    rep["sweep"] = {{"parameter", sw.parameter},
                    {"points", points},
                    {"sign_change", bracket ? json{bracket->first, bracket->second} : json(nullptr)}};
  }
  res.report = rep;
  io::write_text(resolve(out_dir, cfg.outputs.report_path), rep.dump(2) + "\n");
  log << "stability: sigma1 = " << io::format_double(sr.sigma1) << '\n';
  return res;
}

VerifyResult verify(const io::RunConfig& cfg, const fs::path& out_dir, std::ostream& log) {
  prepare_dir(out_dir);
  std::vector<ReferenceSurface> surfaces = cfg.verify.surfaces;
  if (surfaces.empty()) surfaces.push_back(cfg.surface);
  const io::Tolerances& t = cfg.tolerances;
  VerifyResult res;
  for (std::size_t s = 0; s < surfaces.size(); ++s) {
    const ReferenceSurface& f = surfaces[s];
    std::mt19937_64 rng(cfg.verify.seed + 1000 * s);
    auto add = [&](std::vector<CheckResult> v) { res.checks.insert(res.checks.end(), v.begin(), v.end()); };

    CrossPathOptions cp;
    cp.samples = cfg.verify.samples;
    cp.n_per_axis = cfg.verify.n_per_axis;
    cp.tol = t.cross_path;
    cp.flip_reference_curvature = cfg.flow.flip_reference_curvature;
    add(check_cross_path(f, cp, rng));

    LinearizationOptions lo;
    lo.samples = cfg.verify.samples;
    lo.n_per_axis = cfg.verify.n_per_axis;
    lo.min_order = t.linearization_order;
    add({check_linearization(f, lo, rng)});

    InterpolationOptions io_opt;
    io_opt.samples = cfg.verify.interpolation_samples;
    add(check_interpolation(f, io_opt, kInterpolationTestSeed));

    add({check_translation_kernel(f, cfg.verify.n_per_axis)});

    DerivativeSuiteOptions dopt;
    dopt.samples = cfg.verify.samples;
    dopt.n_per_axis = cfg.verify.n_per_axis;
    dopt.dt_fd = t.dt_fd;
    dopt.tol = {t.fd_rel, t.fd_abs, t.fd_ratio_lo, t.fd_ratio_hi};
    add(check_time_derivatives(f, dopt, rng));
    add(check_normal_kinematics(f, dopt, rng));
  }
  json checks = json::array(), failed = json::array();
  for (const auto& c : res.checks) {
    checks.push_back(io::to_json(c));
    if (!c.passed) failed.push_back(c.surface + ":" + c.name);
  }
  const bool passed = failed.empty();
  res.exit_code = passed ? kOk : kVerifyFailed;
  res.report = {{"passed", passed}, {"failed", failed}, {"checks", checks}};
  io::write_text(resolve(out_dir, cfg.outputs.report_path), res.report.dump(2) + "\n");
  for (const auto& c : res.checks)
    log << (c.passed ? "PASS " : "FAIL ") << c.surface << ":" << c.name << " " << io::format_double(c.value)
        << (c.upper ? " <= " : " >= ") << io::format_double(c.threshold) << '\n';
  log << "verify: " << (passed ? "all checks passed" : std::to_string(failed.size()) + " checks failed") << '\n';
  return res;
}

int main_entry(int argc, char** argv) {
  CLI::App app{"Volume-preserving mean curvature flow on flat tori"};
  app.require_subcommand(1);
  std::string config, out = ".", restart;
  int threads = 0;
  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", config, "JSON run configuration")->envname("TVMCF_CONFIG");
    sub->add_option("--out", out, "Output directory")->envname("TVMCF_OUT");
    sub->add_option("--threads", threads, "OpenMP thread count")->envname("TVMCF_THREADS")->check(CLI::PositiveNumber);
  };
  CLI::App* sim = app.add_subcommand("simulate", "Run the flow and write the time series");
  common(sim);
  sim->add_option("--restart", restart, "Continue from a checkpoint (its embedded config is used)")->envname("TVMCF_RESTART");
  CLI::App* stab = app.add_subcommand("stability", "Coercivity constant of the reference surface");
  common(stab);
  CLI::App* ver = app.add_subcommand("verify", "Run the verification suite");
  common(ver);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }
  if (threads > 0) omp_set_num_threads(threads);

  try {
    std::optional<io::Checkpoint> cp;
    io::RunConfig cfg;
    if (sim->parsed() && !restart.empty()) {
      cp = io::read_checkpoint(restart);
      cfg = io::config_from_json(cp->config);
    } else {
      if (config.empty()) throw io::ConfigError("--config is required");
      cfg = io::load_config(config);
    }
    if (sim->parsed()) return simulate(cfg, out, cp, std::cout).exit_code;
    if (stab->parsed()) return stability(cfg, out, std::cout).exit_code;
    return verify(cfg, out, std::cout).exit_code;
  } catch (const io::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfigError;
  }
}

}  // namespace tvmcf::cli
