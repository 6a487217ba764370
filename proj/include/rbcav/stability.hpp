#pragma once

#include "rbcav/fom.hpp"
#include "rbcav/rom.hpp"

#include <complex>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace rbcav::stability {

using Complex = std::complex<double>;

enum class OperatorKind { advection, linearized_ns };

struct StabilitySpectrum {
  std::vector<Complex> eigenvalues;  // sorted by (Re desc, Im desc)
  OperatorKind op = OperatorKind::advection;
  rom::ReducedState base;
  ParameterPoint mu;
};

enum class BifKind { steady, hopf };

struct BifurcationPoint {
  BifKind kind = BifKind::steady;
  ParameterPoint mu;
  Complex critical_eigenvalue{0.0, 0.0};
  std::optional<double> frequency;  // |Im|/2π, Hopf only
  int branch_before = 0;            // vortex labels around the crossing
  int branch_after = 0;
};

struct BranchPoint {
  ParameterPoint mu;
  Eigen::VectorXd a;
  double observable = 0.0;
  int vortices = 0;
};

struct Branch {
  std::vector<BranchPoint> points;
  bool forward = true;
  bool completed = false;  // reached the far end of the range
};

/// Linearized advection matrix about a reduced base state (tensor
/// contraction with the Piola θ coefficients at μ).
Eigen::MatrixXd assemble_T(const rom::ReducedOperators& ops, const ParameterPoint& mu,
                           const Eigen::VectorXd& base);

/// Linearized reduced operator: L = T + K(μ).
Eigen::MatrixXd assemble_L(const rom::ReducedOperators& ops, const ParameterPoint& mu,
                           const Eigen::VectorXd& base);

/// Growth operator used for Hopf detection: -M(μ)^{-1} L(μ); Re > 0 means a
/// growing perturbation and Im its angular frequency.
Eigen::MatrixXd growth_matrix(const rom::ReducedOperators& ops, const ParameterPoint& mu,
                              const Eigen::VectorXd& base);

/// Full dense spectrum via QR iteration; validates sampled eigenpair
/// residuals to residual_tol * ||A||.
std::vector<Complex> eigs_dense(const Eigen::MatrixXd& A, double residual_tol = 1e-8,
                                int size_cap = 500);

StabilitySpectrum spectrum(const rom::ReducedOperators& ops, const ParameterPoint& mu,
                           const Eigen::VectorXd& base, OperatorKind op);

struct ContinuationOptions {
  double step0 = 2000.0;
  double step_floor_factor = 1.0 / 1024.0;
  rom::RomSteadyOptions newton;
};

/// Context for labeling branch points; basis/forms may be null (synthetic
/// systems), in which case observable and vortex labels stay zero.
struct BranchContext {
  const rom::ReducedOperators* ops = nullptr;
  const rom::ReducedBasis* basis = nullptr;
  const DiscreteForms* forms = nullptr;  // assembled at the branch aspect
  Eigen::Vector2d obs_point{0.7, 0.7};
};

/// Natural continuation in Gr at fixed A with warm starts; step halves on
/// Newton failure down to the floor, where the branch ends flagged.
Branch continue_branch(const BranchContext& ctx, double A, double gr_start, double gr_end,
                       const ContinuationOptions& opts, const Eigen::VectorXd& seed);

/// Resolves a base state at μ from a warm start during crossing refinement.
using StateProvider =
    std::function<std::optional<Eigen::VectorXd>(const ParameterPoint&, const Eigen::VectorXd&)>;

StateProvider rom_provider(const rom::ReducedOperators& ops,
                           const rom::RomSteadyOptions& opts = {});

struct DetectOptions {
  double im_tol_rel = 1e-6;    // |Im| ≤ im_tol_rel*||A||_F counts as real
  double gr_tol_rel = 1e-3;    // refinement width relative to max(1, |Gr|)
  double max_jump_rel = 0.35;  // tracked-eigenvalue move per step, × spectral radius
  int max_subdivide = 5;
};

/// One row per (Gr, eigenvalue) for diagram dumps.
struct EigPathEntry {
  double gr = 0.0;
  int index = 0;
  double re = 0.0, im = 0.0;
};
using EigPath = std::vector<EigPathEntry>;

/// Zero crossings of real eigenvalues of T along a branch, refined to
/// gr_tol by bisection on μ with provider-resolved base states.
std::vector<BifurcationPoint> detect_steady(const rom::ReducedOperators& ops,
                                            const Branch& branch, const DetectOptions& opts = {},
                                            StateProvider provider = nullptr,
                                            EigPath* path = nullptr);

/// Axis crossings of the least-stable complex pair of the growth operator;
/// frequency |Im|/2π reported at the refined crossing.
std::vector<BifurcationPoint> detect_hopf(const rom::ReducedOperators& ops,
                                          const Branch& branch, const DetectOptions& opts = {},
                                          StateProvider provider = nullptr,
                                          EigPath* path = nullptr);

// --- two-parameter scan ---

struct FamilyBasis {
  std::string name;
  int vortices = 0;
  rom::ReducedBasis basis;
};

struct ScanRecord {
  std::string trial;
  std::string test;
  double A = 0.0;
  double gr_star = 0.0;
  BifKind kind = BifKind::steady;
  double re = 0.0, im = 0.0;
  std::optional<double> frequency;
};

struct ScanOptions {
  double gr_lo = 0.0, gr_hi = 0.0;
  ContinuationOptions continuation;
  DetectOptions detect;
  Eigen::Vector2d obs_point{0.7, 0.7};
  std::function<void(const std::string&)> warn;  // missing-family / failed-seed warnings
};

struct ScanResult {
  std::vector<ScanRecord> records;
  /// Onset-frequency curve: per A, the lowest-Gr Hopf frequency found.
  std::vector<std::pair<double, double>> frequency_curve;
};

/// §-style plane scan: for each A and every ordered (trial, test) family
/// pair, continue the trial branch in Gr and run both detectors; spaces of
/// unequal size are truncated to the leading common dimension.
ScanResult scan_plane(const std::vector<FamilyBasis>& families, const Grid& grid,
                      std::span<const double> A_values, const ScanOptions& opts);

}  // namespace rbcav::stability
