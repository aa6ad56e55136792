#include "commands.hpp"

#include "tvmcf/norms.hpp"
#include "tvmcf/stability.hpp"

#include <CLI11.hpp>
#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <fstream>
#include <sstream>

#ifndef TVMCF_SOURCE_DIR
#define TVMCF_SOURCE_DIR "."
#endif

using namespace tvmcf;
namespace fs = std::filesystem;
using io::json;

namespace {

// Pinned acceptance tolerances.
constexpr double kCrossPathTol = 1e-7;
constexpr double kCrossPathSeconds = 60.0;
constexpr double kMinOrder = 0.9;
constexpr double kVolumeDrift = 1e-10;
constexpr double kPerimeterSlack = 1e-10;
constexpr double kH3Bound = 1e-2;
constexpr double kDecayFraction = 0.95;
constexpr double kSigma1Tol = 1e-6;
constexpr double kLyapunovTol = 1e-10;
constexpr double kConvergedVelocity = 1e-10;
constexpr double kTranslationTol = 1e-6;
constexpr double kThresholdWindow = 0.005;
constexpr double kFdRel = 1e-4;
constexpr double kFdStep = 1e-5;
constexpr double kRatioLo = 3.5;
constexpr double kRatioHi = 4.5;
constexpr double kPi = std::numbers::pi;

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::vector<ReferenceSurface> test_surfaces() {
  return {ReferenceSurface::circle(0.5, 0.5, 0.2), ReferenceSurface::strip(0.3, 0.7),
          ReferenceSurface::lamella(0.25, 0.75), ReferenceSurface::cylinder(0.5, 0.5, 0.25)};
}

struct Outcome {
  bool pass = true;
  std::ostringstream text;
  void fail_if(bool bad) { pass = pass && !bad; }
};

void report(int k, Outcome& o) {
  std::printf("criterion %d: %s  %s\n", k, o.pass ? "PASS" : "FAIL", o.text.str().c_str());
  std::fflush(stdout);
}

json surface_json(const ReferenceSurface& f) { return io::surface_to_json(f); }

io::RunConfig run_config(const ReferenceSurface& f, int n, double amplitude, std::uint64_t seed, double t_end,
                         bool stop_on_converged, int stride) {
  json doc = {{"surface", surface_json(f)},
              {"grid", {{"n_per_axis", n}}},
              {"initial", {{"seed", seed}, {"band_limit", 3}, {"amplitude", amplitude}}},
              {"flow", {{"t_end", t_end}, {"stop_on_converged", stop_on_converged}, {"output_stride", stride}}}};
  return io::config_from_json(doc);
}

FieldBundle product(const FieldBundle& a, const FieldBundle& b) {
  FieldBundle out = a;
  for (std::size_t c = 0; c < a.size(); ++c)
    for (std::size_t i = 0; i < a[c].size(); ++i) out[c][i] = a[c][i] * b[c][i];
  return out;
}

// Random mean-free field, L2 orthogonal to the translation fields of F, scaled to the given H^3 norm.
FieldBundle orthogonal_perturbation(const ReferenceSurface& f, int n, double h3, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  FieldBundle phi;
  for (int c = 0; c < f.num_components(); ++c) phi.push_back(random_band_limited(chart_grid(f, c, n), 3, rng));
  const SurfaceGeometry g = build_geometry_param(f, zero_bundle(f, n));
  FieldBundle one = zero_bundle(f, n);
  for (auto& s : one)
    for (std::size_t i = 0; i < s.size(); ++i) s[i] = 1.0;
  const double mean = surface_integral(g, phi) / surface_integral(g, one);
  for (auto& s : phi)
    for (std::size_t i = 0; i < s.size(); ++i) s[i] -= mean;
  const TranslationBasis tb = translation_fields(g);
  if (tb.size() > 0) {
    Eigen::VectorXd rhs(tb.size());
    for (std::size_t k = 0; k < tb.size(); ++k) rhs[k] = surface_integral(g, product(phi, tb.fields[k]));
    const Eigen::VectorXd coef = tb.gram.ldlt().solve(rhs);
    for (std::size_t k = 0; k < tb.size(); ++k)
      for (std::size_t c = 0; c < phi.size(); ++c)
        for (std::size_t i = 0; i < phi[c].size(); ++i) phi[c][i] -= coef[k] * tb.fields[k][c][i];
  }
  const double s = h3 / sobolev_norm(phi, 3, 2.0);
  for (auto& comp : phi)
    for (std::size_t i = 0; i < comp.size(); ++i) comp[i] *= s;
  return phi;
}

Outcome criterion_cross_path() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  const auto surfaces = test_surfaces();
  for (std::size_t s = 0; s < surfaces.size(); ++s) {
    CrossPathOptions opt;
    opt.samples = 50;
    opt.n_per_axis = 128;
    opt.c1 = 0.1;
    opt.tol = kCrossPathTol;
    std::mt19937_64 rng(101 + s);
    for (const auto& c : check_cross_path(surfaces[s], opt, rng)) {
      o.fail_if(!c.passed);
      worst = std::isnan(c.value) ? c.value : std::max(worst, c.value);
    }
  }
  const double secs = seconds_since(t0);
  o.fail_if(!(secs < kCrossPathSeconds));
  o.text << "max |H_param - H_sdf|, |B_param - B_sdf| = " << worst << " (tol " << kCrossPathTol << "), " << secs
         << " s for 4 x 50 graphs at 128/axis";
  return o;
}

Outcome criterion_linearization() {
  Outcome o;
  const auto surfaces = test_surfaces();
  double worst = kInfinity;
  for (std::size_t s = 0; s < surfaces.size(); ++s) {
    LinearizationOptions opt;
    opt.samples = 10;
    opt.min_order = kMinOrder;
    std::mt19937_64 rng(201 + s);
    const CheckResult c = check_linearization(surfaces[s], opt, rng);
    o.fail_if(!c.passed);
    o.text << c.surface << " order " << c.value << "; ";
    worst = std::min(worst, c.value);
  }
  o.text << "min order " << worst << " (>= " << kMinOrder << ")";
  return o;
}

Outcome criterion_conservation() {
  Outcome o;
  const ReferenceSurface f = ReferenceSurface::lamella(0.25, 0.75);
  const io::RunConfig cfg = run_config(f, 128, 0.008, 31, 2.0, false, 10);
  const Trajectory tr = run(f, initial_state(f, io::initial_data(cfg)), cfg.flow);
  const double v0 = tr.final_state.v0;
  double drift = 0.0;
  int increases = 0;
  for (std::size_t k = 0; k < tr.records.size(); ++k) {
    drift = std::max(drift, std::abs(tr.records[k].volume - v0) / v0);
    if (k > 0 && tr.records[k].perimeter > tr.records[k - 1].perimeter + kPerimeterSlack * tr.dt) ++increases;
  }
  o.fail_if(tr.termination == Termination::GuardTripped || tr.termination == Termination::UnderResolved);
  o.fail_if(!(tr.final_state.t >= 2.0 - 1e-12));
  o.fail_if(!(drift <= kVolumeDrift));
  o.fail_if(increases != 0);
  o.text << termination_name(tr.termination) << " at t = " << tr.final_state.t << ", " << tr.records.size()
         << " records, max relative volume drift " << drift << " (<= " << kVolumeDrift << "), perimeter increases "
         << increases << " (slack " << kPerimeterSlack << " dt, dt = " << tr.dt << ")";
  return o;
}

struct DecayRun {
  std::string name;
  double h3 = 0.0;
  Trajectory trajectory;
  RunAnalysis analysis;
};

std::vector<DecayRun> decay_runs() {
  std::vector<DecayRun> runs;
  for (const ReferenceSurface& f : {ReferenceSurface::lamella(0.25, 0.75), ReferenceSurface::cylinder(0.5, 0.5, 0.25)}) {
    const io::RunConfig cfg = run_config(f, 64, 0.008, 41, 6.0, true, 5);
    DecayRun r;
    r.name = kind_name(f.kind());
    const FieldBundle psi0 = io::initial_data(cfg);
    const FlowState init = initial_state(f, psi0);
    r.h3 = sobolev_norm(init.psi, 3, 2.0);
    r.trajectory = run(f, init, cfg.flow);
    r.analysis = analyze_trajectory(f, cfg.n_per_axis, r.trajectory, 4, kLyapunovTol);
    runs.push_back(std::move(r));
  }
  return runs;
}

Outcome criterion_decay(const std::vector<DecayRun>& runs) {
  Outcome o;
  for (const auto& r : runs) {
    const RunAnalysis& a = r.analysis;
    o.fail_if(!(r.h3 <= kH3Bound));
    o.fail_if(!a.velocity_sq || !(a.velocity_sq->rate >= kDecayFraction * a.sigma1));
    o.text << r.name << ": |psi0|_H3 " << r.h3 << ", " << termination_name(r.trajectory.termination) << ", rate(v_l2^2) "
           << (a.velocity_sq ? a.velocity_sq->rate : NAN) << " vs 0.95 sigma1 = " << kDecayFraction * a.sigma1;
    if (r.name == "lamella") {
      const double exact = 4.0 * kPi * kPi / (1.0 + 4.0 * kPi * kPi);
      o.fail_if(!(std::abs(a.sigma1 - exact) <= kSigma1Tol));
      o.text << ", sigma1 " << a.sigma1 << " vs analytic " << exact;
    }
    o.text << "; ";
  }
  return o;
}

Outcome criterion_lyapunov(const std::vector<DecayRun>& runs) {
  Outcome o;
  for (const auto& r : runs) {
    const RunAnalysis& a = r.analysis;
    o.fail_if(a.violations_reported != 0);
    o.text << r.name << ": C0 " << a.c0_reported << " (run " << a.c0_run << "), increases " << a.violations_reported
           << " over " << r.trajectory.records.size() << " records; ";
  }
  return o;
}

Outcome criterion_translation() {
  Outcome o;
  const std::pair<ReferenceSurface, Vec3> cases[] = {
      {ReferenceSurface::lamella(0.25, 0.75), Vec3(0.0, 0.0, 0.03)},
      {ReferenceSurface::cylinder(0.5, 0.5, 0.25), Vec3(0.008, -0.006, 0.0)},
  };
  for (const auto& [f, p] : cases) {
    const int n = 64;
    FieldBundle psi0 = translation_graph(f, p, n);
    const FieldBundle phi = orthogonal_perturbation(f, n, 1e-4, 51);
    for (std::size_t c = 0; c < psi0.size(); ++c)
      for (std::size_t i = 0; i < psi0[c].size(); ++i) psi0[c][i] += phi[c][i];
    FlowOptions opt;
    opt.t_end = 6.0;
    opt.output_stride = 5;
    opt.converge_tol = kConvergedVelocity;
    const Trajectory tr = run(f, initial_state(f, psi0), opt);
    if (tr.records.empty()) {
      o.fail_if(true);
      o.text << kind_name(f.kind()) << ": " << termination_name(tr.termination) << " without records (" << tr.message
             << "); ";
      continue;
    }
    const RunAnalysis a = analyze_trajectory(f, n, tr, 4, kLyapunovTol);
    const DiagnosticsRecord& last = tr.records.back();
    const double p_err = (last.p - p).cwiseAbs().maxCoeff();
    o.fail_if(tr.termination != Termination::Converged || !(last.v_l2 < kConvergedVelocity));
    o.fail_if(!(p_err <= kTranslationTol));
    o.fail_if(!a.d_fit || !(a.d_fit->rate >= kDecayFraction * a.sigma1));
    o.fail_if(!a.phi_w25 || !(a.phi_w25->rate >= a.sigma0));
    o.text << kind_name(f.kind()) << ": " << termination_name(tr.termination) << " |H-bar - H| " << last.v_l2
           << ", |p_hat - p| " << p_err << ", rate(d_fit) " << (a.d_fit ? a.d_fit->rate : NAN) << " vs "
           << kDecayFraction * a.sigma1 << ", rate(phi_w25) " << (a.phi_w25 ? a.phi_w25->rate : NAN) << " vs sigma0 "
           << a.sigma0 << "; ";
  }
  return o;
}

Outcome criterion_threshold() {
  Outcome o;
  std::vector<std::pair<double, double>> sweep;
  const int steps = 31;
  for (int k = 0; k < steps; ++k) {
    const double r = 0.10 + (0.25 - 0.10) * k / (steps - 1);
    const ReferenceSurface f = ReferenceSurface::cylinder(0.5, 0.5, r);
    sweep.push_back({r, sigma1(build_geometry_param(f, zero_bundle(f, 32))).sigma1});
  }
  const auto sc = cli::sign_change(sweep);
  const double target = 1.0 / (2.0 * kPi);
  o.fail_if(!sc || !(sc->first >= target - kThresholdWindow && sc->second <= target + kThresholdWindow));
  if (sc)
    o.text << "sigma1 changes sign on [" << sc->first << ", " << sc->second << "], window [" << target - kThresholdWindow
           << ", " << target + kThresholdWindow << "]";
  else
    o.text << "no sign change in R in [0.10, 0.25]";
  return o;
}

Outcome criterion_time_derivatives() {
  Outcome o;
  const auto surfaces = test_surfaces();
  for (std::size_t s = 0; s < surfaces.size(); ++s) {
    DerivativeSuiteOptions opt;
    opt.samples = 4;
    opt.dt_fd = kFdStep;
    opt.tol.rel_tol = kFdRel;
    opt.tol.ratio_lo = kRatioLo;
    opt.tol.ratio_hi = kRatioHi;
    std::mt19937_64 rng(301 + s);
    auto checks = check_time_derivatives(surfaces[s], opt, rng);
    const auto nk = check_normal_kinematics(surfaces[s], opt, rng);
    checks.insert(checks.end(), nk.begin(), nk.end());
    for (const auto& c : checks) {
      o.fail_if(!c.passed);
      if (!c.passed) o.text << c.surface << ":" << c.name << " " << c.value << " " << c.detail << "; ";
    }
    double worst = 0.0;
    for (const auto& c : checks)
      if (c.detail.rfind("relative", 0) == 0) worst = std::max(worst, c.value);
    o.text << kind_name(surfaces[s].kind()) << " max rel " << worst << "; ";
  }
  o.text << "rel <= " << kFdRel << " at dt_fd " << kFdStep << ", ratios in [" << kRatioLo << ", " << kRatioHi << "]";
  return o;
}

Outcome criterion_interpolation() {
  Outcome o;
  for (const auto& f : test_surfaces()) {
    InterpolationOptions opt;
    opt.samples = 200;
    for (const auto& c : check_interpolation(f, opt, kInterpolationTestSeed)) {
      o.fail_if(!c.passed);
      o.text << c.surface << ":" << c.name.substr(c.name.find('.') + 1) << " " << c.value << "/" << c.threshold
             << (c.passed ? "" : " (failed)") << "; ";
    }
  }
  return o;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome criterion_determinism(const fs::path& scratch) {
  Outcome o;
  const io::RunConfig cfg = io::load_config(fs::path(TVMCF_SOURCE_DIR) / "configs" / "lamella_demo.json");
  std::ostringstream log;
  std::string csv[2];
  const int threads[2] = {1, 8};
  for (int k = 0; k < 2; ++k) {
    omp_set_num_threads(threads[k]);
    const fs::path dir = scratch / ("threads_" + std::to_string(threads[k]));
    cli::simulate(cfg, dir, std::nullopt, log);
    csv[k] = slurp(dir / cfg.outputs.csv_path);
  }
  omp_set_num_threads(1);
  o.fail_if(csv[0].empty() || csv[0] != csv[1]);
  o.text << "lamella demo CSV at 1 and 8 threads: " << (csv[0] == csv[1] ? "identical" : "different") << ", "
         << csv[0].size() << " bytes";
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria 1-10"};
  fs::path scratch = fs::temp_directory_path() / "tvmcf_acceptance";
  std::vector<int> only;
  app.add_option("--scratch", scratch, "Directory for the determinism runs");
  app.add_option("--only", only, "Run only these criteria")->check(CLI::Range(1, 10));
  CLI11_PARSE(app, argc, argv);
  auto wanted = [&](int k) { return only.empty() || std::find(only.begin(), only.end(), k) != only.end(); };

  omp_set_num_threads(1);
  bool all = true;
  auto emit = [&](int k, auto criterion) {
    if (!wanted(k)) return;
    Outcome o = criterion();
    all = all && o.pass;
    report(k, o);
  };
  try {
    emit(1, criterion_cross_path);
    emit(2, criterion_linearization);
    emit(3, criterion_conservation);
    std::vector<DecayRun> runs;
    if (wanted(4) || wanted(5)) runs = decay_runs();
    emit(4, [&] { return criterion_decay(runs); });
    emit(5, [&] { return criterion_lyapunov(runs); });
    emit(6, criterion_translation);
    emit(7, criterion_threshold);
    emit(8, criterion_time_derivatives);
    emit(9, criterion_interpolation);
    emit(10, [&] { return criterion_determinism(scratch); });
  } catch (const std::exception& e) {
    std::printf("acceptance aborted: %s\n", e.what());
    return 2;
  }
  std::printf("acceptance: %s\n", all ? "all criteria passed" : "some criteria failed");
  return all ? 0 : 1;
}
