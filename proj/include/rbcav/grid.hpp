#pragma once

#include "rbcav/basis.hpp"
#include "rbcav/field.hpp"

#include <functional>
#include <memory>
#include <vector>

namespace rbcav {

/// Tensor-product nodal Galerkin grid on the reference rectangle
/// [0, ref_A] x [0, 1]: nx x ny uniform elements, velocity of order `order`
/// on Gauss-Lobatto nodes (C0 across elements), pressure of order
/// `order - 2` on its own Gauss-Lobatto lattice. All integrals use a
/// per-element tensor Gauss rule dense enough to integrate the advection
/// term of two order-p fields exactly.
class Grid {
 public:
  int nx = 1, ny = 1;
  int order = 6;      // velocity polynomial order p (pressure is p - 2)
  double ref_A = 2.0;
  int nq1d = 0;       // Gauss points per direction per element

  // 1D reference-element data on [-1, 1]
  Eigen::VectorXd quad_x, quad_w;
  basis::Basis1D bv;  // velocity basis tabulated at quadrature points
  basis::Basis1D bp;  // pressure basis tabulated at quadrature points

  // global lattices (reference-domain coordinates)
  int nvx = 0, nvy = 0, npx = 0, npy = 0;
  Eigen::VectorXd vx, vy;  // velocity lattice coordinates
  Eigen::VectorXd px, py;  // pressure lattice coordinates

  static std::shared_ptr<const Grid> make(int nx, int ny, int order, double ref_A = 2.0,
                                          int nq1d = 0);

  int n_vnodes() const { return nvx * nvy; }
  int n_pnodes() const { return npx * npy; }
  int n_elems() const { return nx * ny; }
  int nq_elem() const { return nq1d * nq1d; }
  int nq_total() const { return n_elems() * nq_elem(); }
  int n_vdofs() const { return 2 * n_vnodes(); }

  int vnode(int i, int j) const { return j * nvx + i; }
  int pnode(int i, int j) const { return j * npx + i; }

  bool boundary_vnode(int idx) const {
    const int i = idx % nvx, j = idx / nvx;
    return i == 0 || i == nvx - 1 || j == 0 || j == nvy - 1;
  }

  /// Interior (non-Dirichlet) velocity node ids, ascending.
  const std::vector<int>& interior() const { return interior_; }
  /// Global velocity node id -> interior index, -1 on the boundary.
  const std::vector<int>& interior_index() const { return interior_index_; }

  /// Element sizes at aspect ratio A.
  double hx(double A) const { return A / nx; }
  double hy() const { return 1.0 / ny; }

  /// Physical coordinates of all quadrature points at aspect ratio A and the
  /// quadrature weights including the area Jacobian. Deterministic layout:
  /// point ((ey*nx + ex)*nq1d + qy)*nq1d + qx.
  void quadrature_geometry(double A, Eigen::VectorXd& w, Eigen::VectorXd& x,
                           Eigen::VectorXd& y) const;

  /// Local-to-global velocity node id for element (ex, ey), local (a, b).
  int v_l2g(int ex, int ey, int a, int b) const {
    return vnode(ex * order + a, ey * order + b);
  }
  int p_l2g(int ex, int ey, int a, int b) const {
    const int q = order - 2;
    return pnode(ex * q + a, ey * q + b);
  }

  /// Evaluate a scalar velocity-lattice field at one physical point (A
  /// fixes the horizontal stretching); derivative=0 value, 1 d/dx, 2 d/dy.
  double eval_scalar_at(const Eigen::VectorXd& c, double A, double x, double y,
                        int derivative = 0) const;

  /// Evaluate a scalar pressure-lattice field at one physical point.
  double eval_pressure_at(const Eigen::VectorXd& c, double A, double x, double y) const;

  /// Nodal interpolation of an analytic function onto the velocity lattice
  /// in physical coordinates at aspect A.
  Eigen::VectorXd interpolate(double A, const std::function<double(double, double)>& f) const;

 private:
  std::vector<int> interior_;
  std::vector<int> interior_index_;
};

}  // namespace rbcav
