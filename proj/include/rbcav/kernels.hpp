#pragma once

#include "rbcav/field.hpp"
#include "rbcav/grid.hpp"

#include <Eigen/Dense>

#include <span>
#include <vector>

namespace rbcav::kernels {

/// Dense rank-3 tensor, layout T(i,j,k) = data[(i*nj + j)*nk + k]. Square in
/// the Galerkin case; rectangular when test and trial spaces differ.
struct Tensor3 {
  int ni = 0, nj = 0, nk = 0;
  std::vector<double> data;

  Tensor3() = default;
  explicit Tensor3(int n) : Tensor3(n, n, n) {}
  Tensor3(int i, int j, int k)
      : ni(i), nj(j), nk(k), data(static_cast<std::size_t>(i) * j * k, 0.0) {}
  double& operator()(int i, int j, int k) {
    return data[(static_cast<std::size_t>(i) * nj + j) * nk + k];
  }
  double operator()(int i, int j, int k) const {
    return data[(static_cast<std::size_t>(i) * nj + j) * nk + k];
  }
};

/// Values and physical derivatives of a set of velocity fields at all
/// quadrature points of a grid (rows: fields, cols: quadrature points).
struct ModeTables {
  Eigen::MatrixXd ux, uy;
  Eigen::MatrixXd dux_dx, dux_dy, duy_dx, duy_dy;

  int n_modes() const { return static_cast<int>(ux.rows()); }
  int n_quad() const { return static_cast<int>(ux.cols()); }
};

/// Scalar-field evaluation at quadrature points. Each element's block of
/// points is written independently (sum-factorized), so the kernel is
/// parallel over elements with a fixed per-point summation order.
void eval_scalar(const Grid& g, double A, const Eigen::VectorXd& coeffs,
                 Eigen::VectorXd* val, Eigen::VectorXd* ddx, Eigen::VectorXd* ddy);

ModeTables mode_tables(const Grid& g, double A, std::span<const Field> modes);

/// G(i,j) = sum_q w[q] * Fa(i,q) * Fb(j,q).
Eigen::MatrixXd weighted_gram(const Eigen::MatrixXd& Fa, const Eigen::MatrixXd& Fb,
                              const Eigen::VectorXd& w);

/// T(i,j,k) = sum_q w[q] * Vt(i,q) * (Ax(k,q)*Gx(j,q) + Ay(k,q)*Gy(j,q)):
/// the advection tensor of one velocity component, with test values Vt,
/// advected-component gradients (Gx, Gy) and advecting components (Ax, Ay).
Tensor3 advection_tensor(const Eigen::MatrixXd& Vt, const Eigen::MatrixXd& Gx,
                         const Eigen::MatrixXd& Gy, const Eigen::MatrixXd& Ax,
                         const Eigen::MatrixXd& Ay, const Eigen::VectorXd& w);

/// f(i) = sum_q w[q] * x[q] * Vy(i,q): buoyancy forcing against the vertical
/// component of each mode.
Eigen::VectorXd buoyancy_vector(const Eigen::MatrixXd& Vy, const Eigen::VectorXd& x,
                                const Eigen::VectorXd& w);

/// Correlation (Gram) matrix of snapshot columns in the inner product
/// induced by a weight application W: C(i,j) = u_i^T (W u_j).
Eigen::MatrixXd correlation(const Eigen::MatrixXd& snapshots, const Eigen::MatrixXd& weighted);

/// r_i = sum_q v[q] * φ_i(q) for every velocity-lattice basis function;
/// v must already carry the quadrature weights.
Eigen::VectorXd project_scalar(const Grid& g, const Eigen::VectorXd& weighted_values);

/// Interior-dof Jacobian of u ↦ c(u, u, ·) from quadrature-point data of the
/// current state (advecting values ax, ay and velocity gradients).
Eigen::MatrixXd advection_jacobian_interior(
    const Grid& g, double A, const Eigen::VectorXd& qw, const Eigen::VectorXd& ax,
    const Eigen::VectorXd& ay, const Eigen::VectorXd& ux_dx, const Eigen::VectorXd& ux_dy,
    const Eigen::VectorXd& uy_dx, const Eigen::VectorXd& uy_dy);

/// Serial reference implementations with identical contracts. Kept for
/// testing the parallel kernels and for the kernel benchmark.
namespace ref {

void eval_scalar(const Grid& g, double A, const Eigen::VectorXd& coeffs,
                 Eigen::VectorXd* val, Eigen::VectorXd* ddx, Eigen::VectorXd* ddy);

Eigen::MatrixXd weighted_gram(const Eigen::MatrixXd& Fa, const Eigen::MatrixXd& Fb,
                              const Eigen::VectorXd& w);

Tensor3 advection_tensor(const Eigen::MatrixXd& Vt, const Eigen::MatrixXd& Gx,
                         const Eigen::MatrixXd& Gy, const Eigen::MatrixXd& Ax,
                         const Eigen::MatrixXd& Ay, const Eigen::VectorXd& w);

Eigen::VectorXd buoyancy_vector(const Eigen::MatrixXd& Vy, const Eigen::VectorXd& x,
                                const Eigen::VectorXd& w);

Eigen::MatrixXd correlation(const Eigen::MatrixXd& snapshots, const Eigen::MatrixXd& weighted);

Eigen::VectorXd project_scalar(const Grid& g, const Eigen::VectorXd& weighted_values);

}  // namespace ref

}  // namespace rbcav::kernels
