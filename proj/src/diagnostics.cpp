#include "tvmcf/diagnostics.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace tvmcf {

namespace {

double translate_residual(const ReferenceSurface& f, const FieldBundle& psi, const Vec3& p, FieldBundle* phi) {
  const ReferenceSurface moved = f.translated(p);
  FieldBundle g = regraph(f, psi, moved);
  const double d = weak_distance(moved, g);
  if (phi) *phi = std::move(g);
  return d;
}

}  // namespace

TranslateFit fit_translate(const ReferenceSurface& f, const FieldBundle& psi, double step_tol) {
  validate_bundle(f, psi);
  const int n = f.ambient_dim();
  std::vector<int> axes;
  std::vector<FieldBundle> fields;
  for (int axis = 0; axis < n; ++axis) {
    FieldBundle t;
    double norm2 = 0.0;
    for (int c = 0; c < f.num_components(); ++c) {
      ScalarField s(psi[c].grid);
      for (std::size_t i = 0; i < s.size(); ++i) s[i] = f.frame(c, s.grid.node(i)).nu[axis];
      norm2 += quadrature(s, s);
      t.push_back(std::move(s));
    }
    if (std::sqrt(norm2) < 1e-12) continue;
    axes.push_back(axis);
    fields.push_back(std::move(t));
  }
  const int m = static_cast<int>(axes.size());
  Eigen::MatrixXd gram(m, m);
  Eigen::VectorXd rhs(m);
  for (int a = 0; a < m; ++a) {
    double r = 0.0;
    for (int c = 0; c < f.num_components(); ++c) r += quadrature(psi[c], fields[a][c]);
    rhs[a] = r;
    for (int b = 0; b < m; ++b) {
      double v = 0.0;
      for (int c = 0; c < f.num_components(); ++c) v += quadrature(fields[a][c], fields[b][c]);
      gram(a, b) = v;
    }
  }
  const Eigen::VectorXd sol = gram.ldlt().solve(rhs);

  TranslateFit fit;
  for (int a = 0; a < m; ++a) fit.p[axes[a]] = sol[a];
  fit.residual_zero = weak_distance(f, psi);

  Vec3 p = fit.p;
  double best;
  try {
    best = translate_residual(f, psi, p, nullptr);
  } catch (const GeometryError&) {
    fit.regraph_failed = true;
    fit.p = Vec3::Zero();
    fit.residual = fit.residual_zero;
    fit.phi = psi;
    return fit;
  }
  fit.evaluations = 1;
  std::vector<double> h(m, 1e-4 * f.clearance());
  for (int sweep = 0; sweep < 60; ++sweep) {
    double max_move = 0.0;
    bool improved = false;
    for (int a = 0; a < m; ++a) {
      const int axis = axes[a];
      Vec3 pp = p, pm = p;
      pp[axis] += h[a];
      pm[axis] -= h[a];
      double dp, dm;
      try {
        dp = translate_residual(f, psi, pp, nullptr);
        dm = translate_residual(f, psi, pm, nullptr);
      } catch (const GeometryError&) {
        h[a] *= 0.25;
        continue;
      }
      fit.evaluations += 2;
      const double curv = dp + dm - 2.0 * best;
      double move;
      if (curv > 0.0) {
        move = -h[a] * (dp - dm) / (2.0 * curv);
        move = std::clamp(move, -4.0 * h[a], 4.0 * h[a]);
      } else {
        move = dp < dm ? h[a] : -h[a];
      }
      Vec3 trial = p;
      trial[axis] += move;
      double dt;
      try {
        dt = translate_residual(f, psi, trial, nullptr);
      } catch (const GeometryError&) {
        dt = kInfinity;
      }
      fit.evaluations += 1;
      double moved = 0.0;
      if (dt < best && dt <= dp && dt <= dm) {
        p = trial;
        best = dt;
        moved = std::abs(move);
      } else if (dp < best && dp <= dm) {
        p = pp;
        best = dp;
        moved = h[a];
      } else if (dm < best) {
        p = pm;
        best = dm;
        moved = h[a];
      }
      if (moved > 0.0) improved = true;
      max_move = std::max(max_move, moved);
      h[a] = std::max(std::min(h[a], 4.0 * std::max(moved, std::abs(move))), 1e-10);
    }
    if (max_move < step_tol || !improved) break;
  }
  fit.p = p;
  fit.method = "refined";
  fit.residual = translate_residual(f, psi, p, &fit.phi);
  return fit;
}

FieldBundle normal_velocity(const SurfaceGeometry& g) {
  const double hbar = g.mean_curvature_average();
  FieldBundle v = g.mean_curvature();
  for (auto& c : v)
    for (double& x : c.values) x = hbar - x;
  return v;
}

void validate_w2q_exponent(int n, double q) {
  if (!(q >= 1.0)) throw std::invalid_argument("W^{2,q} exponent must be at least 1");
  if (n == 4 && !(q < 6.0)) throw std::invalid_argument("W^{2,q} exponent must be below 6 for n = 4");
  if (std::isinf(q)) throw std::invalid_argument("W^{2,q} exponent must be finite");
  if (n < 2 || n > 4) throw std::invalid_argument("ambient dimension must lie in 2..4");
}

double decay_interpolation_alpha(int n, int j) { return j / 3.0 + (n - 1) / 10.0; }

double sigma0(double sigma1, int n) { return 0.5 * sigma1 * (1.0 / 3.0 - (n - 1) / 10.0); }

double w2q_norm(const FieldBundle& phi, int n, double q) {
  validate_w2q_exponent(n, q);
  return sobolev_norm(phi, 2, q);
}

DecayFit fit_decay(const std::vector<double>& t, const std::vector<double>& y, double t_a, double t_b) {
  if (t.size() != y.size()) throw std::invalid_argument("fit_decay: series length mismatch");
  if (!(t_b > t_a)) throw std::invalid_argument("fit_decay: empty window");
  DecayFit fit;
  fit.t_a = t_a;
  fit.t_b = t_b;
  double st = 0.0, sl = 0.0, stt = 0.0, stl = 0.0, sll = 0.0;
  int k = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] < t_a || t[i] > t_b) continue;
    if (!(y[i] > 0.0)) throw std::invalid_argument("fit_decay: nonpositive value in window");
    const double l = std::log(y[i]);
    st += t[i];
    sl += l;
    stt += t[i] * t[i];
    stl += t[i] * l;
    sll += l * l;
    ++k;
  }
  fit.samples = k;
  if (k < 2) throw std::invalid_argument("fit_decay: fewer than two samples in window");
  const double mt = st / k, ml = sl / k;
  const double vtt = stt / k - mt * mt;
  const double vtl = stl / k - mt * ml;
  const double vll = sll / k - ml * ml;
  if (!(vtt > 0.0)) throw std::invalid_argument("fit_decay: degenerate time samples");
  const double slope = vtl / vtt;
  fit.rate = -slope;
  fit.amplitude = std::exp(ml - slope * mt);
  fit.r_squared = vll > 1e-300 * std::max(1.0, ml * ml) ? (vtl * vtl) / (vtt * vll) : 1.0;
  return fit;
}

double chart_lambda1(const ReferenceSurface& f) {
  double lam = kInfinity;
  for (int c = 0; c < f.num_components(); ++c) {
    const ChartShape ch = f.chart(c);
    for (int a = 0; a < ch.dim; ++a) lam = std::min(lam, std::pow(2.0 * std::numbers::pi / ch.period[a], 2));
  }
  return lam;
}

DiagnosticsRecord record(const ReferenceSurface& f, const FieldBundle& psi, const SurfaceGeometry& g, double c0,
                         double t) {
  DiagnosticsRecord r;
  r.t = t;
  r.volume = volume(f, psi);
  r.perimeter = perimeter(g);
  const FieldBundle v = normal_velocity(g);
  r.v_l2 = surface_lp_norm(g, v, 2.0);
  const FieldBundle h = g.mean_curvature();
  r.grad_h_l2 = std::sqrt(std::max(surface_integral(g, surface_gradient_sq(g, h)), 0.0));
  r.lyapunov = r.grad_h_l2 * r.grad_h_l2 + c0 * r.v_l2 * r.v_l2;
  const FieldBundle lap = surface_laplacian(g, h);
  FieldBundle lap_sq = lap;
  for (auto& c : lap_sq)
    for (double& x : c.values) x *= x;
  r.lap_h_sq = surface_integral(g, lap_sq);
  for (std::size_t c = 0; c < v.size(); ++c)
    for (std::size_t i = 0; i < v[c].size(); ++i)
      r.dpsi_sup = std::max(r.dpsi_sup, std::abs(v[c][i] / g.comps[c].alignment[i]));
  r.d_ref = weak_distance(f, psi);
  const TranslateFit fit = fit_translate(f, psi);
  r.p = fit.p;
  r.d_fit = fit.residual;
  r.fit_flagged = fit.regraph_failed;
  r.psi_h3 = sobolev_norm(psi, 3, 2.0);
  r.psi_c1 = c1_norm(psi);
  r.phi_w25 = w2q_norm(fit.phi, f.ambient_dim(), 5.0);
  return r;
}

}  // namespace tvmcf
