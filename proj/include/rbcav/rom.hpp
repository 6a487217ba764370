#pragma once

#include "rbcav/forms.hpp"
#include "rbcav/kernels.hpp"
#include "rbcav/pod.hpp"

#include <optional>
#include <string>
#include <vector>

namespace rbcav::rom {

/// Ordered, L2-orthonormal, weakly divergence-free velocity modes on the
/// reference domain, with provenance per mode.
struct ReducedBasis {
  std::shared_ptr<const Grid> grid;
  std::vector<Field> modes;
  std::vector<pod::SnapshotInfo> provenance;

  int size() const { return static_cast<int>(modes.size()); }
  void append(Field mode, pod::SnapshotInfo info) {
    modes.push_back(std::move(mode));
    provenance.push_back(info);
  }
};

/// θ(μ) = (A / ref_A)^s_exp * Gr^gr_pow — the affine coefficient attached to
/// one parameter-independent block.
struct ThetaDesc {
  int s_exp = 0;
  int gr_pow = 0;
};

struct MatBlock {
  std::string name;
  ThetaDesc theta;
  Eigen::MatrixXd M;
};
struct TenBlock {
  std::string name;
  ThetaDesc theta;
  kernels::Tensor3 T;
};
struct VecBlock {
  std::string name;
  ThetaDesc theta;
  Eigen::VectorXd v;
};

struct AssembleOptions {
  /// Skip storing dense convection tensors; contract against quadrature
  /// tables instead (for larger basis sizes).
  bool on_the_fly = false;
};

/// Affine-decomposed reduced operators. Parameter-independent blocks are
/// assembled once on the reference domain; evaluation at μ only combines
/// them through the θ coefficients.
class ReducedOperators {
 public:
  int N = 0;
  double ref_A = 2.0;
  std::vector<MatBlock> mass_blocks;
  std::vector<MatBlock> stiffness_blocks;
  std::vector<TenBlock> convection_blocks;  // empty in on-the-fly mode
  std::vector<VecBlock> forcing_blocks;

  bool on_the_fly = false;
  kernels::ModeTables tables;  // reference-domain quadrature tables (on-the-fly mode)
  Eigen::VectorXd qw;

  double theta(const ThetaDesc& d, const ParameterPoint& mu) const;

  Eigen::MatrixXd mass(const ParameterPoint& mu) const;
  Eigen::MatrixXd stiffness(const ParameterPoint& mu) const;
  Eigen::VectorXd forcing(const ParameterPoint& mu) const;

  /// Quadratic convection term C(μ) : a a.
  Eigen::VectorXd convection_apply(const ParameterPoint& mu, const Eigen::VectorXd& a) const;
  /// Linearized advection about `a`: T_ij = Σ_k (C_ijk + C_ikj) a_k.
  Eigen::MatrixXd convection_linearized(const ParameterPoint& mu, const Eigen::VectorXd& a) const;
  /// Triple contraction Σ_ijk C_ijk(μ) b_i a_j a_k.
  double convection_contract(const ParameterPoint& mu, const Eigen::VectorXd& b,
                             const Eigen::VectorXd& a) const;
};

ReducedOperators assemble_reduced(const ReducedBasis& basis, const Grid& grid,
                                  const AssembleOptions& opts = {});

/// Direct deformed-domain assembly at aspect A (push modes forward, build
/// tables on Ω(A), assemble the physical forms). Oracle route for the affine
/// decomposition.
struct DirectOperators {
  Eigen::MatrixXd mass;
  Eigen::MatrixXd stiffness;
  kernels::Tensor3 convection;
  Eigen::VectorXd forcing_per_gr;  // multiply by Gr
};
DirectOperators assemble_direct(const ReducedBasis& basis, const Grid& grid, double A);

struct ReducedState {
  Eigen::VectorXd a;
  ParameterPoint mu;
  std::optional<double> time;
};

struct RomSteadyOptions {
  double tol = 1e-12;  // relative to max(1, ||f||)
  int max_iter = 60;
  double min_damping = 1.0 / 4096.0;
};

struct RomSteadyResult {
  ReducedState state;
  bool converged = false;
  int iterations = 0;
  double residual = 0.0;
};

RomSteadyResult rom_solve_steady(const ReducedOperators& ops, const ParameterPoint& mu,
                                 const Eigen::VectorXd& a0, const RomSteadyOptions& opts = {});

struct RomTransientOptions {
  double dt = 1e-4;
  double t_end = 1.0;
  int sample_every = 1;
  int startup_substeps = 0;  // 0 → ceil(1/sqrt(dt))
  double blowup_norm = 1e10;
  std::function<void(double, const Eigen::VectorXd&)> observe;
};

struct RomTrajectory {
  std::vector<double> times;
  std::vector<Eigen::VectorXd> states;
  bool blew_up = false;
};

RomTrajectory rom_solve_transient(const ReducedOperators& ops, const ParameterPoint& mu,
                                  const Eigen::VectorXd& a0, const RomTransientOptions& opts);

/// u(A) = Σ a_i P(A) ζ_i: reference-domain combination pushed forward.
Field reconstruct(const ReducedBasis& basis, const ReducedState& state);

/// Online pressure recovery: weak Poisson with homogeneous natural boundary
/// conditions and a zero-mean constraint; the right-hand side carries the
/// buoyancy load at Gr and the convective term of the given velocity.
Field recover_pressure(const DiscreteForms& forms, const Field& velocity, double Gr);

/// Observable of a reduced state: horizontal velocity of the reconstruction
/// at a physical point.
double observable(const ReducedBasis& basis, const DiscreteForms& forms,
                  const ReducedState& state, const Eigen::Vector2d& point);

}  // namespace rbcav::rom
