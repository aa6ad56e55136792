#include "tvmcf/torus.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace tvmcf {

namespace {

constexpr double kPi = std::numbers::pi;

double wrap_unit(double v) {
  double r = v - std::floor(v);
  if (r >= 1.0) r = 0.0;
  return r;
}

double dist1(double a, double b) { return std::abs(wrap_difference(a - b)); }

}  // namespace

TorusPoint wrap(std::span<const double> raw) {
  if (raw.empty() || raw.size() > 3) throw std::invalid_argument("wrap: dimension must be 1..3");
  TorusPoint p;
  p.dim = static_cast<int>(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (!std::isfinite(raw[i])) throw std::invalid_argument("wrap: non-finite coordinate");
    p.coords[i] = wrap_unit(raw[i]);
  }
  return p;
}

TorusPoint wrap(const Vec3& raw, int dim) {
  return wrap(std::span<const double>(raw.data(), static_cast<std::size_t>(dim)));
}

double wrap_difference(double d) { return d - std::floor(d + 0.5); }

double torus_distance(const TorusPoint& x, const TorusPoint& y) {
  if (x.dim != y.dim) throw std::invalid_argument("torus_distance: dimension mismatch");
  double s = 0.0;
  for (int i = 0; i < x.dim; ++i) {
    double d = wrap_difference(x.coords[i] - y.coords[i]);
    s += d * d;
  }
  return std::sqrt(s);
}

std::string kind_name(SurfaceKind kind) {
  switch (kind) {
    case SurfaceKind::Circle: return "circle";
    case SurfaceKind::Strip: return "strip";
    case SurfaceKind::Lamella: return "lamella";
    case SurfaceKind::Cylinder: return "cylinder";
  }
  return "unknown";
}

ReferenceSurface ReferenceSurface::circle(double cx, double cy, double radius) {
  if (!(radius > 0.0 && radius < 0.5)) throw std::invalid_argument("circle: radius must lie in (0, 1/2)");
  ReferenceSurface s;
  s.kind_ = SurfaceKind::Circle;
  s.ambient_dim_ = 2;
  s.center_ = Vec3(wrap_unit(cx), wrap_unit(cy), 0.0);
  s.radius_ = radius;
  return s;
}

ReferenceSurface ReferenceSurface::cylinder(double cx, double cy, double radius) {
  if (!(radius > 0.0 && radius < 0.5)) throw std::invalid_argument("cylinder: radius must lie in (0, 1/2)");
  ReferenceSurface s;
  s.kind_ = SurfaceKind::Cylinder;
  s.ambient_dim_ = 3;
  s.center_ = Vec3(wrap_unit(cx), wrap_unit(cy), 0.0);
  s.radius_ = radius;
  return s;
}

static void check_heights(double c1, double c2) {
  if (!std::isfinite(c1) || !std::isfinite(c2)) throw std::invalid_argument("heights must be finite");
  double gap = c2 - c1;
  if (!(gap > 0.0 && gap < 1.0)) throw std::invalid_argument("heights must satisfy 0 < c2 - c1 < 1");
}

ReferenceSurface ReferenceSurface::strip(double c1, double c2) {
  check_heights(c1, c2);
  ReferenceSurface s;
  s.kind_ = SurfaceKind::Strip;
  s.ambient_dim_ = 2;
  s.c1_ = wrap_unit(c1);
  s.c2_ = wrap_unit(c2);
  return s;
}

ReferenceSurface ReferenceSurface::lamella(double c1, double c2) {
  check_heights(c1, c2);
  ReferenceSurface s;
  s.kind_ = SurfaceKind::Lamella;
  s.ambient_dim_ = 3;
  s.c1_ = wrap_unit(c1);
  s.c2_ = wrap_unit(c2);
  return s;
}

void ReferenceSurface::check_component(int comp) const {
  if (comp < 0 || comp >= num_components()) throw std::out_of_range("invalid component index");
}

ChartShape ReferenceSurface::chart(int comp) const {
  check_component(comp);
  ChartShape c;
  c.dim = chart_dim();
  if (curved()) {
    c.period = {2.0 * kPi * radius_, 1.0};
  } else {
    c.period = {1.0, 1.0};
  }
  return c;
}

double ReferenceSurface::fiber_curvature(int comp) const {
  check_component(comp);
  return curved() ? 1.0 / radius_ : 0.0;
}

double ReferenceSurface::mean_curvature() const { return curved() ? 1.0 / radius_ : 0.0; }

int ReferenceSurface::orientation(int comp) const {
  check_component(comp);
  if (curved()) return 1;
  // comp 0 is the lower level (normal -e_n), comp 1 the upper level (normal +e_n)
  if (ambient_dim_ == 2) return comp == 0 ? 1 : -1;
  return comp == 0 ? -1 : 1;
}

RefFrame ReferenceSurface::frame(int comp, std::array<double, 2> xi) const {
  check_component(comp);
  RefFrame f;
  const int n = ambient_dim_;
  if (curved()) {
    const double R = radius_;
    const double th = xi[0] / R;
    const Vec3 e(std::cos(th), std::sin(th), 0.0);
    const Vec3 ep(-std::sin(th), std::cos(th), 0.0);
    f.x = center_ + R * e;
    f.dx[0] = ep;
    f.ddx[0][0] = -e / R;
    f.nu = e;
    f.dnu[0] = ep / R;
    f.ddnu[0][0] = -e / (R * R);
    if (kind_ == SurfaceKind::Cylinder) {
      f.x[2] = xi[1] + offset_[2];
      f.dx[1] = Vec3::UnitZ();
    }
  } else {
    const double h = comp == 0 ? c1_ : c2_;
    const double sgn = comp == 0 ? -1.0 : 1.0;
    f.x[0] = xi[0] + offset_[0];
    f.dx[0] = Vec3::UnitX();
    if (n == 3) {
      f.x[1] = xi[1] + offset_[1];
      f.dx[1] = Vec3::UnitY();
    }
    f.x[n - 1] = h;
    f.nu[n - 1] = sgn;
  }
  return f;
}

RefGeomSample ReferenceSurface::reference_geometry(int comp, std::array<double, 2> xi) const {
  const RefFrame f = frame(comp, xi);
  RefGeomSample s;
  s.position = wrap(f.x, ambient_dim_);
  s.normal = f.nu;
  const double k = fiber_curvature(comp);
  const double sign = flip_ ? -1.0 : 1.0;
  s.shape(0, 0) = sign * k;
  s.mean_curvature = sign * k;
  s.fiber_jacobian = {1.0, k};
  return s;
}

Mat3 ReferenceSurface::shape_ambient(int comp, std::array<double, 2> xi) const {
  check_component(comp);
  Mat3 b = Mat3::Zero();
  if (!curved()) return b;
  const double th = xi[0] / radius_;
  const Vec3 ep(-std::sin(th), std::cos(th), 0.0);
  b = ep * ep.transpose() / radius_;
  return flip_ ? Mat3(-b) : b;
}

Mat3 ReferenceSurface::shape_derivative(int comp, std::array<double, 2> xi, const Vec3& w) const {
  check_component(comp);
  Mat3 d = Mat3::Zero();
  if (!curved()) return d;
  const double R = radius_;
  const double th = xi[0] / R;
  const Vec3 nrm(std::cos(th), std::sin(th), 0.0);
  Mat3 perp = Mat3::Zero();
  perp(0, 0) = 1.0;
  perp(1, 1) = 1.0;
  perp -= nrm * nrm.transpose();
  const Vec3 wp = perp * w;
  d = -(w.dot(nrm)) * perp - (wp * nrm.transpose() + nrm * wp.transpose());
  d /= R * R;
  return flip_ ? Mat3(-d) : d;
}

double ReferenceSurface::signed_distance(const TorusPoint& x) const {
  if (x.dim != ambient_dim_) throw std::invalid_argument("signed_distance: dimension mismatch");
  if (curved()) {
    const double dx = wrap_difference(x.coords[0] - center_[0]);
    const double dy = wrap_difference(x.coords[1] - center_[1]);
    return std::hypot(dx, dy) - radius_;
  }
  const double y = x.coords[ambient_dim_ - 1];
  const double gap = wrap_unit(c2_ - c1_);
  const double d = std::min(dist1(y, c1_), dist1(y, c2_));
  const bool inside = wrap_unit(y - c1_) < gap;
  return inside ? -d : d;
}

ReferenceSurface ReferenceSurface::translated(const Vec3& p) const {
  ReferenceSurface s = *this;
  if (curved()) {
    s.center_[0] = wrap_unit(center_[0] + p[0]);
    s.center_[1] = wrap_unit(center_[1] + p[1]);
    if (kind_ == SurfaceKind::Cylinder) s.offset_[2] = offset_[2] + p[2];
  } else {
    const int n = ambient_dim_;
    s.c1_ = wrap_unit(c1_ + p[n - 1]);
    s.c2_ = wrap_unit(c2_ + p[n - 1]);
    for (int i = 0; i < n - 1; ++i) s.offset_[i] = offset_[i] + p[i];
  }
  return s;
}

double ReferenceSurface::enclosed_volume() const {
  if (curved()) return kPi * radius_ * radius_;
  return wrap_unit(c2_ - c1_);
}

double ReferenceSurface::area() const {
  if (curved()) return 2.0 * kPi * radius_;
  return 2.0;
}

double ReferenceSurface::clearance() const {
  if (curved()) return radius_;
  const double gap = wrap_unit(c2_ - c1_);
  return 0.5 * std::min(gap, 1.0 - gap);
}

ReferenceSurface ReferenceSurface::with_flipped_curvature_sign() const {
  ReferenceSurface s = *this;
  s.flip_ = !flip_;
  return s;
}

}  // namespace tvmcf
