#pragma once

#include "rbcav/field.hpp"
#include "rbcav/pod.hpp"

#include <array>
#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace rbcav::sampling {

/// Parameter box 𝒟 = [A_min, A_max] x [Gr_min, Gr_max]. A box degenerate in
/// one direction selects the one-parameter (interval bisection) mode.
struct Box {
  double A_min = 2.0, A_max = 6.0;
  double Gr_min = 0.0, Gr_max = 1.0e5;

  bool degenerate_A() const { return A_max - A_min <= 1e-12 * std::max(1.0, A_max); }
  bool degenerate_Gr() const { return Gr_max - Gr_min <= 1e-12 * std::max(1.0, Gr_max); }
  bool one_dimensional() const { return degenerate_A() || degenerate_Gr(); }
  bool contains(const ParameterPoint& mu) const {
    return mu.A >= A_min - 1e-12 && mu.A <= A_max + 1e-12 && mu.Gr >= Gr_min - 1e-9 &&
           mu.Gr <= Gr_max + 1e-9;
  }
};

/// Full-order access used by the sampling loops. Snapshots arrive as
/// reference-domain (Piola pulled-back) velocity coefficient vectors.
struct FomHandle {
  std::function<Eigen::VectorXd(const ParameterPoint&)> steady;
  pod::WeightApply weight;  // inner product for projections

  // Algorithm-2 extensions (may be empty for steady-only sampling):
  /// classify whether the steady state at μ is unstable/oscillatory, given
  /// the current basis and the new steady snapshot.
  std::function<bool(const ParameterPoint&, const Eigen::VectorXd&,
                     std::span<const Eigen::VectorXd>)>
      classify_unsteady;
  /// collect time snapshots over at least two periods of the settled
  /// oscillation; empty result means the transient failed to settle.
  std::function<std::vector<Eigen::VectorXd>(const ParameterPoint&)> transient_snapshots;
};

struct SampleState {
  Box box;
  bool one_dimensional = false;
  std::vector<ParameterPoint> points;
  std::vector<Eigen::VectorXd> snapshots;  // steady snapshot per point
  std::vector<Eigen::VectorXd> basis;      // accumulated orthonormal modes
  std::vector<pod::SnapshotInfo> basis_info;
  /// raw basis contributions per point (snapshot, then any POD time modes):
  /// the per-point projection residuals are leave-one-out defects against
  /// the span of all OTHER points' contributions.
  std::vector<std::vector<Eigen::VectorXd>> point_raws;
  /// triangles into `points` (2D mode); consecutive intervals in 1D mode
  std::vector<std::array<int, 3>> triangles;
  std::vector<double> residuals;  // per triangle/interval
  double tol = std::numeric_limits<double>::infinity();
  std::vector<int> unsettled;  // indices of points whose transients never settled
};

struct LogEntry {
  int iteration = 0;
  ParameterPoint mu;
  double worst_residual = 0.0;
  double tol = 0.0;
};

struct CvtOptions {
  double threshold = 1e-4;
  int max_points = 48;
  int n0 = 4;
  double delta_min_rel = 1e-3;  // minimum point separation, relative to the box diagonal
  double energy = 0.999;        // POD threshold for transient modes (pod_cvt)
  std::function<void(const LogEntry&)> log;
};

/// Corner points plus a tensor/low-discrepancy interior filling; full-order
/// snapshots are computed for every point and seed the basis.
SampleState init_samples(const Box& box, int n0, const FomHandle& fom);

/// Index of the triangle (or interval) with the largest summed vertex
/// projection residual; ties break by area, then lowest index.
int worst_triangle(const SampleState& state);

/// Refine at the barycenter of the worst triangle (midpoint in 1D); returns
/// false when no admissible new point exists.
bool refine(SampleState& state, const FomHandle& fom, const CvtOptions& opts);

struct CvtResult {
  SampleState state;
  bool converged = false;
};

/// Residual-driven refinement until the projection tolerance drops below
/// opts.threshold or the point budget is exhausted.
CvtResult cvt_sample(const Box& box, const FomHandle& fom, const CvtOptions& opts);

/// Time-dependent sampling: per selected point, steady snapshot first; when
/// the stability classification flags the state, transient snapshots are
/// collected, reduced by POD at the energy threshold, and the surviving
/// modes enter the basis.
CvtResult pod_cvt(const Box& box, const FomHandle& fom, const CvtOptions& opts);

}  // namespace rbcav::sampling
