#pragma once

#include "rbcav/field.hpp"
#include "rbcav/grid.hpp"

#include <Eigen/Dense>

#include <memory>

namespace rbcav {

/// Assembled Galerkin operators of the cavity problem on Ω(A): scalar mass
/// and stiffness on the velocity lattice, divergence coupling blocks against
/// the pressure space, pressure mass/stiffness, and the buoyancy load
/// (per unit Grashof number). The trilinear advection form is evaluated on
/// demand from quadrature-point data.
class DiscreteForms {
 public:
  std::shared_ptr<const Grid> grid;
  double A = 2.0;

  Eigen::VectorXd qw, qx, qy;  // quadrature weights and physical coordinates
  Eigen::MatrixXd Ms, Ks;      // nv x nv scalar velocity matrices
  Eigen::MatrixXd Bx, By;      // np x nv divergence blocks
  Eigen::MatrixXd Mp, Kp;      // np x np pressure matrices
  Eigen::VectorXd fy;          // buoyancy load per unit Gr: ∫ x φ_i
  Eigen::VectorXd p_mean;      // ∫ q_i

  int nv() const { return grid->n_vnodes(); }
  int np() const { return grid->n_pnodes(); }

  /// blkdiag(Ms, Ms) applied to a velocity coefficient vector.
  Eigen::VectorXd mass_apply(const Eigen::VectorXd& u) const;
  Eigen::VectorXd stiffness_apply(const Eigen::VectorXd& u) const;

  double l2_inner(const Eigen::VectorXd& u, const Eigen::VectorXd& v) const;
  double l2_norm(const Eigen::VectorXd& u) const;
  double p_l2_norm(const Eigen::VectorXd& p) const;

  /// Forcing vector of Eq-style buoyancy Gr·x·ĵ over velocity dofs.
  Eigen::VectorXd forcing(double Gr) const;

  /// c(adv, w, ·): advection of w by adv tested against every velocity basis
  /// function; returns a 2nv vector.
  Eigen::VectorXd convection(const Eigen::VectorXd& adv, const Eigen::VectorXd& w) const;
  Eigen::VectorXd convection(const Eigen::VectorXd& u) const { return convection(u, u); }

  /// Scalar value c(u, w, v).
  double trilinear(const Eigen::VectorXd& u, const Eigen::VectorXd& w,
                   const Eigen::VectorXd& v) const;

  /// Jacobian of u ↦ c(u, u, ·) restricted to interior velocity dofs
  /// (2*ni x 2*ni, interior ordering [x-block; y-block]).
  Eigen::MatrixXd convection_jacobian_interior(const Eigen::VectorXd& u) const;

  /// Linearized advection about base: v ↦ c(base, v, ·) + c(v, base, ·),
  /// interior dofs. Equal to convection_jacobian_interior(base).
  Eigen::MatrixXd linearized_advection_interior(const Eigen::VectorXd& base) const {
    return convection_jacobian_interior(base);
  }

  /// max_q |b(u, q)| / max(‖u‖_L2, floor): relative weak-divergence residual.
  double weak_divergence_residual(const Eigen::VectorXd& u) const;

  /// Interior-eliminated scalar matrices (cached): rows/cols at interior
  /// velocity nodes.
  const Eigen::MatrixXd& Ms_int() const { return Ms_int_; }
  const Eigen::MatrixXd& Ks_int() const { return Ks_int_; }
  const Eigen::MatrixXd& Bx_int() const { return Bx_int_; }
  const Eigen::MatrixXd& By_int() const { return By_int_; }

  friend DiscreteForms assemble_forms(std::shared_ptr<const Grid> grid, double A);

 private:
  Eigen::MatrixXd Ms_int_, Ks_int_, Bx_int_, By_int_;
};

/// Direct quadrature assembly of all forms on the deformed domain Ω(A).
DiscreteForms assemble_forms(std::shared_ptr<const Grid> grid, double A);

}  // namespace rbcav
