#include "tvmcf/stability.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace tvmcf {

namespace {

struct ModeTable {
  std::vector<std::array<int, 2>> k;
  std::vector<bool> is_sin;
};

ModeTable chart_modes(int dim, int cutoff) {
  ModeTable t;
  t.k.push_back({0, 0});
  t.is_sin.push_back(false);
  const int k1max = dim == 2 ? cutoff : 0;
  for (int k0 = 0; k0 <= cutoff; ++k0)
    for (int k1 = -k1max; k1 <= k1max; ++k1) {
      if (k0 == 0 && k1 <= 0) continue;
      for (bool s : {false, true}) {
        t.k.push_back({k0, k1});
        t.is_sin.push_back(s);
      }
    }
  return t;
}

struct ComponentBasis {
  Eigen::MatrixXd phi;
  std::array<Eigen::MatrixXd, 2> d;
};

ComponentBasis evaluate_basis(const PeriodicGrid& g, const ModeTable& modes) {
  const std::size_t n = g.size();
  const int nb = static_cast<int>(modes.k.size());
  ComponentBasis b;
  b.phi.resize(n, nb);
  b.d[0] = Eigen::MatrixXd::Zero(n, nb);
  b.d[1] = Eigen::MatrixXd::Zero(n, nb);
  for (int j = 0; j < nb; ++j) {
    const double w0 = 2.0 * std::numbers::pi * modes.k[j][0] / g.length[0];
    const double w1 = g.dim == 2 ? 2.0 * std::numbers::pi * modes.k[j][1] / g.length[1] : 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto x = g.node(i);
      const double arg = w0 * x[0] + w1 * x[1];
      const double c = std::cos(arg), s = std::sin(arg);
      if (modes.is_sin[j]) {
        b.phi(i, j) = s;
        b.d[0](i, j) = w0 * c;
        b.d[1](i, j) = w1 * c;
      } else {
        b.phi(i, j) = c;
        b.d[0](i, j) = -w0 * s;
        b.d[1](i, j) = -w1 * s;
      }
    }
  }
  return b;
}

Eigen::VectorXd to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

TranslationBasis translation_fields(const SurfaceGeometry& g, double drop_tol) {
  TranslationBasis basis;
  const int n = g.surface.ambient_dim();
  for (int axis = 0; axis < n; ++axis) {
    FieldBundle f;
    for (const auto& cg : g.comps) {
      ScalarField s(cg.grid);
      for (std::size_t i = 0; i < cg.size(); ++i) s[i] = cg.normal[i][axis];
      f.push_back(std::move(s));
    }
    FieldBundle sq = f;
    for (auto& c : sq)
      for (double& v : c.values) v *= v;
    if (std::sqrt(std::max(surface_integral(g, sq), 0.0)) < drop_tol) continue;
    basis.directions.push_back(axis);
    basis.fields.push_back(std::move(f));
  }
  const int m = static_cast<int>(basis.fields.size());
  basis.gram.resize(m, m);
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b) {
      FieldBundle prod = basis.fields[a];
      for (std::size_t c = 0; c < prod.size(); ++c)
        for (std::size_t i = 0; i < prod[c].size(); ++i) prod[c][i] *= basis.fields[b][c][i];
      basis.gram(a, b) = surface_integral(g, prod);
    }
  return basis;
}

FieldBundle mean_free(const SurfaceGeometry& g, const FieldBundle& phi, double reject_tol) {
  FieldBundle abs = phi;
  for (auto& c : abs)
    for (double& v : c.values) v = std::abs(v);
  const double integral = surface_integral(g, phi);
  const double l1 = surface_integral(g, abs);
  if (std::abs(integral) > reject_tol * l1)
    throw std::invalid_argument("second variation requires a mean-zero field");
  const double mean = integral / perimeter(g);
  FieldBundle out = phi;
  for (auto& c : out)
    for (double& v : c.values) v -= mean;
  return out;
}

double second_variation_bilinear(const SurfaceGeometry& g, const FieldBundle& a, const FieldBundle& b) {
  const FieldBundle ma = mean_free(g, a);
  const FieldBundle mb = mean_free(g, b);
  const auto ga = surface_gradient(g, ma);
  const auto gb = surface_gradient(g, mb);
  FieldBundle integrand;
  for (std::size_t c = 0; c < g.comps.size(); ++c) {
    const auto& cg = g.comps[c];
    ScalarField s(cg.grid);
    for (std::size_t i = 0; i < cg.size(); ++i) s[i] = ga[c][i].dot(gb[c][i]) - cg.b_sq[i] * ma[c][i] * mb[c][i];
    integrand.push_back(std::move(s));
  }
  return surface_integral(g, integrand);
}

double second_variation(const SurfaceGeometry& g, const FieldBundle& phi) {
  return second_variation_bilinear(g, phi, phi);
}

double h1_norm_sq(const SurfaceGeometry& g, const FieldBundle& phi) {
  FieldBundle integrand = surface_gradient_sq(g, phi);
  for (std::size_t c = 0; c < phi.size(); ++c)
    for (std::size_t i = 0; i < phi[c].size(); ++i) integrand[c][i] += phi[c][i] * phi[c][i];
  return surface_integral(g, integrand);
}

double rayleigh_quotient(const SurfaceGeometry& g, const FieldBundle& phi) {
  return second_variation(g, phi) / h1_norm_sq(g, mean_free(g, phi));
}

StabilityReport sigma1(const SurfaceGeometry& g, const StabilityOptions& opt) {
  if (opt.mode_cutoff < 1) throw std::invalid_argument("mode cutoff must be at least 1");
  const int dim = g.chart_dim();
  const ModeTable modes = chart_modes(dim, opt.mode_cutoff);
  const int per = static_cast<int>(modes.k.size());
  const int ncomp = static_cast<int>(g.comps.size());
  for (const auto& cg : g.comps)
    for (int a = 0; a < dim; ++a)
      if (opt.mode_cutoff >= cg.grid.n[a] / 2) throw std::invalid_argument("mode cutoff exceeds the grid Nyquist shell");
  const int nb = per * ncomp;

  const TranslationBasis tb = translation_fields(g);
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(nb, nb);
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(nb, nb);
  Eigen::MatrixXd cons = Eigen::MatrixXd::Zero(1 + static_cast<int>(tb.size()), nb);
  std::vector<ComponentBasis> bases;
  for (int c = 0; c < ncomp; ++c) {
    const auto& cg = g.comps[c];
    ComponentBasis b = evaluate_basis(cg.grid, modes);
    const Eigen::VectorXd w = to_vector(cg.area_element) * cg.grid.cell();
    Eigen::VectorXd wb(cg.size());
    for (std::size_t i = 0; i < cg.size(); ++i) wb[i] = w[i] * cg.b_sq[i];
    Eigen::MatrixXd stiff = Eigen::MatrixXd::Zero(per, per);
    for (int p = 0; p < dim; ++p)
      for (int q = 0; q < dim; ++q) {
        Eigen::VectorXd wg(cg.size());
        for (std::size_t i = 0; i < cg.size(); ++i) wg[i] = w[i] * cg.metric_inv[i](p, q);
        stiff.noalias() += b.d[p].transpose() * (wg.asDiagonal() * b.d[q]);
      }
    const Eigen::MatrixXd mass = b.phi.transpose() * (w.asDiagonal() * b.phi);
    const Eigen::MatrixXd curv = b.phi.transpose() * (wb.asDiagonal() * b.phi);
    a.block(c * per, c * per, per, per) = stiff - curv;
    m.block(c * per, c * per, per, per) = stiff + mass;
    cons.block(0, c * per, 1, per) = (b.phi.transpose() * w).transpose();
    for (std::size_t t = 0; t < tb.size(); ++t)
      cons.block(1 + t, c * per, 1, per) = (b.phi.transpose() * w.cwiseProduct(to_vector(tb.fields[t][c].values))).transpose();
    bases.push_back(std::move(b));
  }
  a = 0.5 * (a + a.transpose()).eval();
  m = 0.5 * (m + m.transpose()).eval();
  for (int r = 0; r < cons.rows(); ++r) cons.row(r).normalize();

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(cons.transpose());
  qr.setThreshold(1e-10);
  const int rank = static_cast<int>(qr.rank());
  const Eigen::MatrixXd q = qr.householderQ();
  const Eigen::MatrixXd z = q.rightCols(nb - rank);
  const Eigen::MatrixXd ar = z.transpose() * a * z;
  const Eigen::MatrixXd mr = z.transpose() * m * z;
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (ar + ar.transpose()), 0.5 * (mr + mr.transpose()));
  if (es.info() != Eigen::Success) throw std::runtime_error("generalized eigen-solve did not converge");

  StabilityReport rep;
  rep.basis_dim = nb;
  rep.translation_dim = static_cast<int>(tb.size());
  rep.admissible_dim = nb - rank;
  rep.sigma1 = es.eigenvalues()[0];
  const Eigen::VectorXd y = es.eigenvectors().col(0);
  rep.residual = (ar * y - rep.sigma1 * (mr * y)).norm() / std::max(1.0, std::abs(rep.sigma1));
  rep.mean_zero_enforced = true;
  rep.translation_orthogonality_enforced = !tb.fields.empty();

  auto to_bundle = [&](const Eigen::VectorXd& coeff) {
    FieldBundle out;
    for (int c = 0; c < ncomp; ++c) {
      const Eigen::VectorXd v = bases[c].phi * coeff.segment(c * per, per);
      out.emplace_back(g.comps[c].grid, std::vector<double>(v.data(), v.data() + v.size()));
    }
    return out;
  };
  rep.minimizer = to_bundle(z * y);

  std::mt19937_64 rng(opt.seed);
  rep.certified_min = kInfinity;
  for (int s = 0; s < opt.certify_samples; ++s) {
    Eigen::VectorXd r(rep.admissible_dim);
    for (int i = 0; i < rep.admissible_dim; ++i) r[i] = 2.0 * uniform01(rng) - 1.0;
    rep.certified_min = std::min(rep.certified_min, rayleigh_quotient(g, to_bundle(z * r)));
  }
  return rep;
}

TranslationKernelReport verify_translation_kernel(const SurfaceGeometry& g, double laplace_tol, double form_tol) {
  TranslationKernelReport rep;
  const TranslationBasis tb = translation_fields(g);
  for (const FieldBundle& t : tb.fields) {
    const FieldBundle lap = surface_laplacian(g, t);
    for (std::size_t c = 0; c < t.size(); ++c)
      for (std::size_t i = 0; i < t[c].size(); ++i)
        rep.laplace_residual = std::max(rep.laplace_residual, std::abs(lap[c][i] + g.comps[c].b_sq[i] * t[c][i]));
    rep.second_variation_max = std::max(rep.second_variation_max, std::abs(second_variation(g, t)));
  }
  rep.passed = rep.laplace_residual <= laplace_tol && rep.second_variation_max <= form_tol;
  return rep;
}

}  // namespace tvmcf
