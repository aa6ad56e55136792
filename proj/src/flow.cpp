#include "tvmcf/flow.hpp"

#include "tvmcf/stability.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace tvmcf {

namespace {

GeometryOptions geometry_options(const FlowOptions& opt) {
  GeometryOptions g;
  g.a_min = opt.a_min;
  return g;
}

FieldBundle rhs_from_geometry(const SurfaceGeometry& g) {
  FieldBundle v = normal_velocity(g);
  for (std::size_t c = 0; c < v.size(); ++c)
    for (std::size_t i = 0; i < v[c].size(); ++i) v[c][i] /= g.comps[c].alignment[i];
  return v;
}

FieldBundle axpy(const FieldBundle& x, double a, const FieldBundle& y) {
  FieldBundle out = x;
  for (std::size_t c = 0; c < out.size(); ++c)
    for (std::size_t i = 0; i < out[c].size(); ++i) out[c][i] += a * y[c][i];
  return out;
}

FieldBundle imex_update(const FieldBundle& psi, const FieldBundle& rhs, double dt) {
  FieldBundle out;
  for (std::size_t c = 0; c < psi.size(); ++c) {
    Spectrum p = forward(psi[c]);
    const Spectrum r = forward(rhs[c]);
    const PeriodicGrid& g = p.grid;
    for (std::size_t idx = 0; idx < p.c.size(); ++idx) {
      std::array<int, 2> k;
      std::array<bool, 2> nyq;
      p.mode(idx, k, nyq);
      double lam = 0.0;
      for (int a = 0; a < g.dim; ++a) lam += std::pow(2.0 * std::numbers::pi * k[a] / g.length[a], 2);
      p.c[idx] = (p.c[idx] + dt * (r.c[idx] + lam * p.c[idx])) / (1.0 + dt * lam);
    }
    out.push_back(inverse(p));
  }
  return out;
}

void check_finite(const FieldBundle& psi) {
  for (const auto& c : psi)
    for (double v : c.values)
      if (!std::isfinite(v)) throw std::runtime_error("non-finite graph function");
}

}  // namespace

std::string termination_name(Termination t) {
  switch (t) {
    case Termination::ReachedTEnd: return "reached_T_end";
    case Termination::Converged: return "converged";
    case Termination::GuardTripped: return "guard_tripped";
    case Termination::UnderResolved: return "under_resolved";
  }
  return "unknown";
}

std::string scheme_name(Scheme s) { return s == Scheme::Imex ? "imex" : "explicit"; }

Scheme parse_scheme(const std::string& s) {
  if (s == "imex") return Scheme::Imex;
  if (s == "explicit") return Scheme::Explicit;
  throw std::invalid_argument("unknown time scheme '" + s + "'");
}

FieldBundle flow_rhs(const ReferenceSurface& f, const FieldBundle& psi, const FlowOptions& opt,
                     SurfaceGeometry* geometry) {
  if (!opt.dealias) {
    SurfaceGeometry g = build_geometry_param(f, psi, geometry_options(opt));
    FieldBundle r = rhs_from_geometry(g);
    if (geometry) *geometry = std::move(g);
    return r;
  }
  FieldBundle fine;
  for (const auto& c : psi) fine.push_back(resample(c, padded_resolution(c.grid)));
  const SurfaceGeometry g = build_geometry_param(f, fine, geometry_options(opt));
  const FieldBundle r = rhs_from_geometry(g);
  FieldBundle out;
  for (std::size_t c = 0; c < psi.size(); ++c) out.push_back(resample(r[c], psi[c].grid.n));
  if (geometry) *geometry = build_geometry_param(f, psi, geometry_options(opt));
  return out;
}

double policy_dt(const ReferenceSurface& f, int n_per_axis, Scheme scheme, double c_dt) {
  if (!(c_dt > 0.0)) throw std::invalid_argument("c_dt must be positive");
  double h = kInfinity;
  for (int c = 0; c < f.num_components(); ++c) h = std::min(h, chart_grid(f, c, n_per_axis).min_spacing());
  return scheme == Scheme::Imex ? c_dt * h : c_dt * h * h / 4.0;
}

long step_count(double t_end, double dt_max) {
  if (!(t_end > 0.0)) throw std::invalid_argument("t_end must be positive");
  return std::max(1L, static_cast<long>(std::ceil(t_end / dt_max * (1.0 - 1e-12))));
}

double volume_project(const ReferenceSurface& f, FieldBundle& psi, double v0, double max_offset) {
  const auto a = volume_polynomial(f, psi);
  const double r = v0 - a[0];
  double c;
  if (a[2] == 0.0) {
    c = r / a[1];
  } else {
    const double disc = a[1] * a[1] + 4.0 * a[2] * r;
    if (disc < 0.0) throw FlowError(Termination::GuardTripped, "volume projection has no real root");
    c = 2.0 * r / (a[1] + std::sqrt(disc));
  }
  FieldBundle trial = psi;
  for (int it = 0; it < 3; ++it) {
    trial = psi;
    for (auto& comp : trial)
      for (double& v : comp.values) v += c;
    const double err = v0 - volume(f, trial);
    if (std::abs(err) <= 2e-16 * std::abs(v0)) break;
    c += err / (a[1] + 2.0 * a[2] * c);
  }
  if (!(std::abs(c) <= max_offset)) throw FlowError(Termination::GuardTripped, "volume projection offset exceeds the graph bound");
  for (auto& comp : psi)
    for (double& v : comp.values) v += c;
  return c;
}

FieldBundle advance(const ReferenceSurface& f, const FieldBundle& psi, double dt, Scheme scheme, const FlowOptions& opt) {
  const FieldBundle k1 = flow_rhs(f, psi, opt);
  if (scheme == Scheme::Imex) return imex_update(psi, k1, dt);
  const FieldBundle k2 = flow_rhs(f, axpy(psi, dt, k1), opt);
  FieldBundle out = psi;
  for (std::size_t c = 0; c < out.size(); ++c)
    for (std::size_t i = 0; i < out[c].size(); ++i) out[c][i] += 0.5 * dt * (k1[c][i] + k2[c][i]);
  return out;
}

double graph_bound(const ReferenceSurface& f, const FlowOptions& opt) {
  return opt.delta_graph > 0.0 ? opt.delta_graph : 0.4 * f.clearance();
}

double step(const ReferenceSurface& f, FlowState& state, double dt, const FlowOptions& opt) {
  FieldBundle next;
  try {
    next = advance(f, state.psi, dt, opt.scheme, opt);
  } catch (const GeometryError& e) {
    throw FlowError(e.kind() == GeometryError::Kind::UnderResolved ? Termination::UnderResolved : Termination::GuardTripped,
                    e.what());
  }
  check_finite(next);
  const double delta = graph_bound(f, opt);
  const double c = volume_project(f, next, state.v0, delta);
  if (c1_norm(next) > delta) throw FlowError(Termination::GuardTripped, "C1 norm of the graph exceeds the validity bound");
  state.psi = std::move(next);
  state.step += 1;
  state.t += dt;
  state.recorded = false;
  return c;
}

double default_c0(const ReferenceSurface& f, int n_per_axis, int mode_cutoff) {
  StabilityOptions so;
  so.mode_cutoff = mode_cutoff;
  so.certify_samples = 0;
  const double s = sigma1(build_geometry_param(f, zero_bundle(f, n_per_axis)), so).sigma1;
  return 10.0 * (s > 0.0 ? std::max(1.0, 1.0 / s) : 1.0);
}

FlowState initial_state(const ReferenceSurface& f, const FieldBundle& psi0, std::optional<double> v0) {
  FlowState s;
  s.psi = psi0;
  s.v0 = v0 ? *v0 : volume(f, psi0);
  return s;
}

Trajectory run(const ReferenceSurface& f, const FlowState& initial, const FlowOptions& opt, const RunHooks& hooks) {
  validate_bundle(f, initial.psi);
  if (opt.output_stride < 1) throw std::invalid_argument("output stride must be positive");
  const int n = initial.psi.front().grid.n[0];
  Trajectory tr;
  tr.c0 = opt.c0 > 0.0 ? opt.c0 : default_c0(f, n, opt.stability_mode_cutoff);
  const long nsteps = step_count(opt.t_end, policy_dt(f, n, opt.scheme, opt.c_dt));
  tr.dt = opt.t_end / static_cast<double>(nsteps);
  const ReferenceSurface check_surface = opt.flip_reference_curvature ? f.with_flipped_curvature_sign() : f;
  const double delta = graph_bound(f, opt);

  FlowState state = initial;
  state.t = static_cast<double>(state.step) * tr.dt;
  auto finish = [&](Termination why, const std::string& msg) {
    tr.termination = why;
    tr.message = msg;
  };
  if (c1_norm(state.psi) > delta) {
    finish(Termination::GuardTripped, "initial graph exceeds the validity bound");
    tr.final_state = state;
    return tr;
  }

  while (true) {
    SurfaceGeometry geo(f);
    FieldBundle rhs;
    try {
      rhs = flow_rhs(f, state.psi, opt, &geo);
    } catch (const GeometryError& e) {
      finish(e.kind() == GeometryError::Kind::UnderResolved ? Termination::UnderResolved : Termination::GuardTripped,
             e.what());
      break;
    }
    const FieldBundle v = normal_velocity(geo);
    const double v_l2 = surface_lp_norm(geo, v, 2.0);
    double dpsi = 0.0;
    for (const auto& c : rhs)
      for (double x : c.values) dpsi = std::max(dpsi, std::abs(x));
    const bool converged = v_l2 < opt.converge_tol && dpsi < opt.converge_tol;
    const bool last = state.step >= nsteps;

    if (!state.recorded && (state.step % opt.output_stride == 0 || (converged && opt.stop_on_converged) || last)) {
      const DiagnosticsRecord rec = record(f, state.psi, geo, tr.c0, state.t);
      tr.records.push_back(rec);
      state.recorded = true;
      if (hooks.on_record) hooks.on_record(rec);
      if (hooks.on_checkpoint) hooks.on_checkpoint(state);
      if (opt.check_resolution && !check_resolution(state.psi).resolved) {
        finish(Termination::UnderResolved, "graph function under-resolved");
        break;
      }
    }
    if (opt.cross_check_stride > 0 && state.step % opt.cross_check_stride == 0) {
      double gap;
      try {
        gap = curvature_gap(geo, build_geometry_sdf(check_surface, state.psi, geometry_options(opt))).max();
      } catch (const GeometryError& e) {
        gap = kInfinity;
      }
      if (!(gap <= opt.cross_check_tol)) {
        finish(Termination::GuardTripped, "curvature paths disagree");
        break;
      }
    }
    if (converged && opt.stop_on_converged) {
      finish(Termination::Converged, "converged");
      break;
    }
    if (last) {
      finish(converged ? Termination::Converged : Termination::ReachedTEnd, converged ? "converged" : "reached t_end");
      break;
    }

    try {
      FieldBundle next;
      if (opt.scheme == Scheme::Imex) {
        next = imex_update(state.psi, rhs, tr.dt);
      } else {
        const FieldBundle k2 = flow_rhs(f, axpy(state.psi, tr.dt, rhs), opt);
        next = state.psi;
        for (std::size_t c = 0; c < next.size(); ++c)
          for (std::size_t i = 0; i < next[c].size(); ++i) next[c][i] += 0.5 * tr.dt * (rhs[c][i] + k2[c][i]);
      }
      check_finite(next);
      const double c = volume_project(f, next, state.v0, delta);
      tr.max_projection_offset = std::max(tr.max_projection_offset, std::abs(c));
      if (c1_norm(next) > delta) throw FlowError(Termination::GuardTripped, "C1 norm of the graph exceeds the validity bound");
      state.psi = std::move(next);
    } catch (const FlowError& e) {
      finish(e.reason(), e.what());
      break;
    } catch (const GeometryError& e) {
      finish(e.kind() == GeometryError::Kind::UnderResolved ? Termination::UnderResolved : Termination::GuardTripped,
             e.what());
      break;
    }
    state.step += 1;
    state.t = static_cast<double>(state.step) * tr.dt;
    state.recorded = false;
  }
  tr.steps = state.step;
  tr.final_state = state;
  return tr;
}

}  // namespace tvmcf
