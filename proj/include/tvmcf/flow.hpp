#pragma once

#include "tvmcf/diagnostics.hpp"
#include "tvmcf/graph_surface.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace tvmcf {

enum class Scheme { Imex, Explicit };
enum class Termination { ReachedTEnd, Converged, GuardTripped, UnderResolved };

std::string termination_name(Termination t);
std::string scheme_name(Scheme s);
Scheme parse_scheme(const std::string& s);

struct FlowOptions {
  Scheme scheme = Scheme::Imex;
  double c_dt = 0.2;
  double t_end = 1.0;
  int output_stride = 10;
  /// Lyapunov constant; non-positive selects 10 max(1, 1/sigma1(F)).
  double c0 = 0.0;
  /// Graph-validity bound on ||psi||_{C^1}; non-positive selects 0.4 clearance(F).
  double delta_graph = 0.0;
  double a_min = 0.5;
  double converge_tol = 1e-10;
  bool stop_on_converged = true;
  /// Evaluate the explicit right-hand side on the 3/2-padded grid and truncate.
  bool dealias = false;
  /// Steps between cross-path curvature checks; 0 disables.
  int cross_check_stride = 50;
  double cross_check_tol = 1e-7;
  bool check_resolution = true;
  int stability_mode_cutoff = 4;
  /// Test hook: the cross-path check evaluates the distance path on the curvature-flipped reference.
  bool flip_reference_curvature = false;
};

struct FlowState {
  double t = 0.0;
  long step = 0;
  FieldBundle psi;
  double v0 = 0.0;
  /// The diagnostics record of this state has already been emitted (restart from a checkpoint).
  bool recorded = false;
};

/// Guard failures raised while stepping.
class FlowError : public std::runtime_error {
 public:
  FlowError(Termination reason, const std::string& what) : std::runtime_error(what), reason_(reason) {}
  Termination reason() const { return reason_; }

 private:
  Termination reason_;
};

/// d psi / dt = (H-bar - H) / <nu_F, nu_psi> for the graph psi.
FieldBundle flow_rhs(const ReferenceSurface& f, const FieldBundle& psi, const FlowOptions& opt,
                     SurfaceGeometry* geometry = nullptr);

/// Policy time step: imex c_dt h_min, explicit c_dt h_min^2 / 4.
double policy_dt(const ReferenceSurface& f, int n_per_axis, Scheme scheme, double c_dt);
/// Number of uniform steps covering [0, t_end] at no more than the policy step.
long step_count(double t_end, double dt_max);

/// Adds the constant c with volume(f, psi + c) = v0 and returns c.
double volume_project(const ReferenceSurface& f, FieldBundle& psi, double v0, double max_offset = kInfinity);

/// One step of size dt (IMEX or Heun), without volume projection.
FieldBundle advance(const ReferenceSurface& f, const FieldBundle& psi, double dt, Scheme scheme, const FlowOptions& opt);

/// advance followed by volume_project; throws FlowError on guard failures.
double step(const ReferenceSurface& f, FlowState& state, double dt, const FlowOptions& opt);

double default_c0(const ReferenceSurface& f, int n_per_axis, int mode_cutoff = 4);
double graph_bound(const ReferenceSurface& f, const FlowOptions& opt);

struct Trajectory {
  std::vector<DiagnosticsRecord> records;
  Termination termination = Termination::ReachedTEnd;
  std::string message;
  FlowState final_state;
  double c0 = 0.0;
  double dt = 0.0;
  long steps = 0;
  double max_projection_offset = 0.0;
};

struct RunHooks {
  std::function<void(const DiagnosticsRecord&)> on_record;
  /// Called after each record with the state that produced it.
  std::function<void(const FlowState&)> on_checkpoint;
};

/// Runs the flow from psi0 (or from a restart state) to t_end.
Trajectory run(const ReferenceSurface& f, const FlowState& initial, const FlowOptions& opt, const RunHooks& hooks = {});

/// State at t = 0 with V0 = volume(f, psi0).
FlowState initial_state(const ReferenceSurface& f, const FieldBundle& psi0, std::optional<double> v0 = std::nullopt);

}  // namespace tvmcf
