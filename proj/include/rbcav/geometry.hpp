#pragma once

#include "rbcav/field.hpp"

#include <Eigen/Dense>

#include <functional>

namespace rbcav::geometry {

/// Parametrized cavity domain: [0, A] x [0, 1], reference rectangle
/// [0, reference_A] x [0, 1], origin at the bottom-left corner.
struct DomainSpec {
  double A = 2.0;
  double reference_A = 2.0;

  DomainSpec() = default;
  DomainSpec(double A_, double ref_A_ = 2.0) : A(A_), reference_A(ref_A_) {
    if (A <= 0.0 || reference_A <= 0.0) throw Error("DomainSpec: aspect ratios must be positive");
  }
};

/// Factors of the affine map x = F x̂: forward deformation F, derivative
/// transform G = F^{-1} (physical derivatives to reference derivatives),
/// and Jacobian determinant J_aff = det F.
struct AffineFactors {
  Eigen::Matrix2d G;
  Eigen::Matrix2d F;
  double J_aff = 1.0;
};

/// Map reference coordinates to physical coordinates at aspect ratio A.
Eigen::Vector2d affine_map(const Eigen::Vector2d& xhat, double A, double reference_A = 2.0);

AffineFactors affine_factors(double A, double reference_A = 2.0);

/// Optional weak-divergence guard used by piola_pullback to enforce its
/// precondition. Returns the relative weak-divergence residual of a field.
using WeakDivergenceCheck = std::function<double(const Field&)>;

/// Pull a velocity field on Ω(A) back to the reference domain with the
/// divergence-preserving (contravariant) transform û = J_aff F^{-1} (u ∘ T).
/// Nodal spaces on both domains share the lattice, so the transform acts on
/// coefficients componentwise.
Field piola_pullback(const Field& u, double A, double reference_A = 2.0,
                     const WeakDivergenceCheck& check = nullptr, double div_tol = 1e-10);

/// Exact inverse of piola_pullback: u = (1/J_aff) F (û ∘ T^{-1}).
Field piola_pushforward(const Field& uhat, double A, double reference_A = 2.0);

}  // namespace rbcav::geometry
