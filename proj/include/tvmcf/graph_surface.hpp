#pragma once

#include "tvmcf/fields.hpp"
#include "tvmcf/norms.hpp"
#include "tvmcf/torus.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace tvmcf {

class GeometryError : public std::runtime_error {
 public:
  enum class Kind { GraphInvalid, UnderResolved };
  GeometryError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

/// Pointwise geometry of one component of a graph surface; chart-frame matrices use the leading dim x dim block.
struct ComponentGeometry {
  PeriodicGrid grid;
  std::vector<Vec3> position;
  std::vector<std::array<Vec3, 2>> tangent;
  std::vector<Mat2> metric;
  std::vector<Mat2> metric_inv;
  std::vector<double> area_element;
  std::vector<Vec3> normal;
  std::vector<Mat2> second_form;
  std::vector<Mat3> shape;
  std::vector<double> mean_curvature;
  std::vector<double> b_sq;
  std::vector<double> alignment;

  void resize(std::size_t n);
  std::size_t size() const { return position.size(); }
};

struct SurfaceGeometry {
  explicit SurfaceGeometry(const ReferenceSurface& f) : surface(f) {}

  ReferenceSurface surface;
  std::vector<ComponentGeometry> comps;

  int chart_dim() const { return surface.chart_dim(); }
  FieldBundle mean_curvature() const;
  FieldBundle area_element() const;
  FieldBundle b_sq() const;
  FieldBundle alignment() const;
  /// Area-weighted average of H over all components.
  double mean_curvature_average() const;
  double min_alignment() const;
};

struct GeometryOptions {
  double a_min = 0.5;
  bool validate = true;
  bool check_resolution = false;
};

PeriodicGrid chart_grid(const ReferenceSurface& f, int comp, int n_per_axis);
FieldBundle zero_bundle(const ReferenceSurface& f, int n_per_axis);
/// Throws std::invalid_argument unless the bundle lives on the charts of f.
void validate_bundle(const ReferenceSurface& f, const FieldBundle& psi);

SurfaceGeometry build_geometry_param(const ReferenceSurface& f, const FieldBundle& psi, const GeometryOptions& opt = {});
SurfaceGeometry build_geometry_sdf(const ReferenceSurface& f, const FieldBundle& psi, const GeometryOptions& opt = {});

/// Chart derivatives of an embedding x(xi), per node; the orientation sign fixes the normal.
struct EmbeddingJet {
  PeriodicGrid grid;
  int orientation = 1;
  std::vector<Vec3> x;
  std::array<std::vector<Vec3>, 2> dx;
  std::array<std::array<std::vector<Vec3>, 2>, 2> ddx;
  std::vector<Vec3> reference_normal;
};

SurfaceGeometry geometry_from_embedding(const ReferenceSurface& f, const std::vector<EmbeddingJet>& jets,
                                        const GeometryOptions& opt = {});
/// Embedding jet of the graph of psi over f, from the exact reference frame and spectral derivatives of psi.
std::vector<EmbeddingJet> graph_embedding(const ReferenceSurface& f, const FieldBundle& psi);

double volume(const ReferenceSurface& f, const FieldBundle& psi);
/// Coefficients a with volume(f, psi + c) = a0 + a1 c + a2 c^2.
std::array<double, 3> volume_polynomial(const ReferenceSurface& f, const FieldBundle& psi);
double perimeter(const SurfaceGeometry& g);
double weak_distance(const ReferenceSurface& f, const FieldBundle& psi);

double surface_integral(const SurfaceGeometry& g, const FieldBundle& f);
double surface_average(const SurfaceGeometry& g, const FieldBundle& f);
double surface_lp_norm(const SurfaceGeometry& g, const FieldBundle& f, double p);
/// Ambient tangential gradient g^{ij} d_j f d_i Phi per node.
std::vector<std::vector<Vec3>> surface_gradient(const SurfaceGeometry& g, const FieldBundle& f);
FieldBundle surface_gradient_sq(const SurfaceGeometry& g, const FieldBundle& f);
/// (1/J) d_i (J g^{ij} d_j f)
FieldBundle surface_laplacian(const SurfaceGeometry& g, const FieldBundle& f);

/// sup-norm differences of H and of the ambient shape operator between two geometries on the same charts.
struct CurvatureGap {
  double mean_curvature = 0.0;
  double shape = 0.0;
  double max() const { return mean_curvature > shape || std::isnan(mean_curvature) ? mean_curvature : shape; }
};
CurvatureGap curvature_gap(const SurfaceGeometry& a, const SurfaceGeometry& b);

struct SurfaceScalarOps {
  double integral = 0.0;
  double average = 0.0;
  FieldBundle gradient_sq;
  FieldBundle laplacian;
  double l2 = 0.0;
};
SurfaceScalarOps surface_scalar_ops(const SurfaceGeometry& g, const FieldBundle& f);

struct NormTransferReport {
  double value_ratio = 1.0;
  double gradient_ratio = 1.0;
  bool within = true;
};
/// f is sampled at Phi_psi of the chart nodes; compares its norms on the reference and on the graph.
NormTransferReport norm_transfer_check(const ReferenceSurface& f, const FieldBundle& psi, const FieldBundle& h,
                                       double p = 2.0, double c_star = 1.1);

struct H3ControlReport {
  double lhs = 0.0;
  double rhs = 0.0;
  double ratio = 0.0;
  bool within = true;
};
H3ControlReport h3_control_check(const ReferenceSurface& f, const FieldBundle& psi, double k_star);

/// sup |(H(eps psi) - H_F)/eps - (-Delta psi - |B_F|^2 psi)| per eps.
std::vector<double> linearization_residual(const ReferenceSurface& f, const FieldBundle& psi,
                                           const std::vector<double>& eps);

/// Covariant form of the two Laplace inequalities on the graph metric of g.
LaplaceBoundsReport check_laplace_bounds_on_graph(const SurfaceGeometry& g, const FieldBundle& f);

/// Graph over `target` of the surface that is the graph of psi over `source`; the references must be translates.
FieldBundle regraph(const ReferenceSurface& source, const FieldBundle& psi, const ReferenceSurface& target);
/// Graph of F + p over F.
FieldBundle translation_graph(const ReferenceSurface& f, const Vec3& p, int n_per_axis);

}  // namespace tvmcf
