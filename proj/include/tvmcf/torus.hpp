#pragma once

#include <Eigen/Dense>

#include <array>
#include <span>
#include <string>

namespace tvmcf {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat2 = Eigen::Matrix2d;

/// Point of the unit flat torus; coordinates beyond `dim` are zero.
struct TorusPoint {
  int dim = 0;
  std::array<double, 3> coords{};
};

TorusPoint wrap(std::span<const double> raw);
TorusPoint wrap(const Vec3& raw, int dim);

/// Minimal-image representative of a coordinate difference, in [-1/2, 1/2).
double wrap_difference(double d);

double torus_distance(const TorusPoint& x, const TorusPoint& y);

enum class SurfaceKind { Circle, Strip, Lamella, Cylinder };

std::string kind_name(SurfaceKind kind);

/// Chart of one boundary component: `dim` axes with the given periods.
struct ChartShape {
  int dim = 1;
  std::array<double, 2> period{1.0, 1.0};
};

struct RefGeomSample {
  TorusPoint position;
  Vec3 normal = Vec3::Zero();
  Mat2 shape = Mat2::Zero();  // chart frame; only the leading dim x dim block is used
  double mean_curvature = 0.0;
  std::array<double, 2> fiber_jacobian{1.0, 0.0};  // J(s) = c0 + c1 s
};

/// Unwrapped embedding of a chart point with chart derivatives of position and normal.
struct RefFrame {
  RefFrame() {
    for (auto& row : ddx)
      for (auto& v : row) v.setZero();
    for (auto& row : ddnu)
      for (auto& v : row) v.setZero();
  }
  Vec3 x = Vec3::Zero();
  std::array<Vec3, 2> dx{Vec3::Zero(), Vec3::Zero()};
  std::array<std::array<Vec3, 2>, 2> ddx{};
  Vec3 nu = Vec3::Zero();
  std::array<Vec3, 2> dnu{Vec3::Zero(), Vec3::Zero()};
  std::array<std::array<Vec3, 2>, 2> ddnu{};
};

class ReferenceSurface {
 public:
  static ReferenceSurface circle(double cx, double cy, double radius);
  static ReferenceSurface strip(double c1, double c2);
  static ReferenceSurface lamella(double c1, double c2);
  static ReferenceSurface cylinder(double cx, double cy, double radius);

  SurfaceKind kind() const { return kind_; }
  int ambient_dim() const { return ambient_dim_; }
  int chart_dim() const { return ambient_dim_ - 1; }
  int num_components() const { return curved() ? 1 : 2; }
  bool curved() const { return kind_ == SurfaceKind::Circle || kind_ == SurfaceKind::Cylinder; }

  double radius() const { return radius_; }
  Vec3 center() const { return center_; }
  /// Lower and upper heights (wrapped) of strip/lamella components.
  std::array<double, 2> heights() const { return {c1_, c2_}; }
  /// Tangential chart offsets accumulated by translations (in-plane for planes, axial for cylinder).
  Vec3 chart_offset() const { return offset_; }

  ChartShape chart(int comp) const;
  /// Principal curvature entering the fiber Jacobian 1 + kappa s.
  double fiber_curvature(int comp) const;
  double mean_curvature() const;
  /// Sign s such that s * (oriented normal of the chart tangents) is the outward normal.
  int orientation(int comp) const;

  RefGeomSample reference_geometry(int comp, std::array<double, 2> xi) const;
  RefFrame frame(int comp, std::array<double, 2> xi) const;

  /// Hessian of the signed distance at a boundary point (ambient shape operator).
  Mat3 shape_ambient(int comp, std::array<double, 2> xi) const;
  /// Directional derivative along w of the Hessian of the signed distance, at a boundary point.
  Mat3 shape_derivative(int comp, std::array<double, 2> xi, const Vec3& w) const;

  double signed_distance(const TorusPoint& x) const;
  ReferenceSurface translated(const Vec3& p) const;

  double enclosed_volume() const;
  double area() const;
  /// Distance to chart breakdown: R for curved kinds, half the smaller slab width otherwise.
  double clearance() const;

  /// Test hook: reverses the sign of every curvature quantity handed to the distance path.
  ReferenceSurface with_flipped_curvature_sign() const;
  bool curvature_sign_flipped() const { return flip_; }

 private:
  ReferenceSurface() = default;
  void check_component(int comp) const;

  SurfaceKind kind_ = SurfaceKind::Circle;
  int ambient_dim_ = 2;
  Vec3 center_ = Vec3::Zero();
  double radius_ = 0.0;
  double c1_ = 0.0;
  double c2_ = 0.0;
  Vec3 offset_ = Vec3::Zero();
  bool flip_ = false;
};

}  // namespace tvmcf
