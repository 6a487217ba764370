#pragma once

#include "rbcav/forms.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace rbcav::fom {

struct SteadyOptions {
  double tol = 1e-10;  // dual-norm residual, relative to max(1, forcing scale)
  int max_iter = 50;
  double min_damping = 1.0 / 1024.0;
};

struct SteadyResult {
  Field velocity;
  Field pressure;
  bool converged = false;
  int iterations = 0;
  double residual = 0.0;
};

/// Newton solve of the steady cavity problem at μ on Ω(A) with analytic
/// Jacobian and backtracking damping. The guess must satisfy the boundary
/// conditions (zero Dirichlet rows).
SteadyResult solve_steady(const DiscreteForms& forms, const ParameterPoint& mu,
                          const Field* guess = nullptr, const SteadyOptions& opts = {});

/// Steady solve at μ starting from rest, ramping Gr geometrically if the
/// direct solve fails.
SteadyResult steady_from_zero(const DiscreteForms& forms, const ParameterPoint& mu,
                              const SteadyOptions& opts = {});

struct TransientOptions {
  double dt = 1e-3;
  double t_end = 1.0;
  int sample_every = 1;
  bool convection_on = true;
  double blowup_norm = 1e10;
  int startup_substeps = 0;  // 0 → ceil(1/sqrt(dt))
  std::function<Eigen::VectorXd(double)> extra_forcing;  // full 2nv vector
  std::function<void(double, double)> observe;           // (t, observable) per step
  std::optional<Eigen::Vector2d> observe_point;
};

struct Trajectory {
  ParameterPoint mu;
  std::vector<double> times;
  std::vector<Field> states;
  bool blew_up = false;
  std::string diagnostic;
};

/// Semi-implicit BDF3 integration (implicit Stokes part, extrapolated
/// convection), bootstrapped by a substepped first interval and one BDF2
/// step so the third-order startup error is preserved.
Trajectory solve_transient(const DiscreteForms& forms, const ParameterPoint& mu,
                           const Field& u0, const TransientOptions& opts);

/// Horizontal velocity at a physical point via the discrete interpolant.
double observable(const DiscreteForms& forms, const Field& u, const Eigen::Vector2d& point);

/// Poisson-recovered streamfunction (zero on the boundary) of a velocity
/// field; prefactored per forms instance.
class StreamfunctionSolver {
 public:
  explicit StreamfunctionSolver(const DiscreteForms& forms);
  Eigen::VectorXd compute(const Field& u) const;

 private:
  const DiscreteForms& forms_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
};

/// Number of streamfunction extrema above `threshold` times the maximum
/// amplitude (suppresses corner-eddy noise when labeling branches).
int vortex_count(const DiscreteForms& forms, const Field& u, double threshold = 0.05);
int vortex_count(const StreamfunctionSolver& psi_solver, const Grid& g, const Field& u,
                 double threshold = 0.05);

/// Relative weak-divergence residual of a velocity field on its own domain.
double weak_divergence(const DiscreteForms& forms, const Field& u);

struct BranchPoint {
  double Gr = 0.0;
  Field velocity;
  Field pressure;
  double observable = 0.0;
  int vortices = 0;
};

struct ContinuationResult {
  std::vector<BranchPoint> points;
  bool completed = false;  // reached gr_end (otherwise ended at the step floor)
};

/// Natural continuation in Gr at fixed A with warm starts and step halving
/// on Newton failure (floor step0/1024). Direction follows the sign of
/// gr_end - gr_start.
ContinuationResult continue_steady(const DiscreteForms& forms, const Field& seed_velocity,
                                   double gr_start, double gr_end, double step0,
                                   const Eigen::Vector2d& obs_point,
                                   const SteadyOptions& opts = {});

}  // namespace rbcav::fom
