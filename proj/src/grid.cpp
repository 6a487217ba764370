#include "rbcav/grid.hpp"

#include <algorithm>
#include <cmath>

namespace rbcav {

namespace {

Eigen::VectorXd lattice_coords(int n_elem, int order, double length,
                               const Eigen::VectorXd& nodes01) {
  // nodes01: element-local nodes on [-1, 1]
  const int n = n_elem * order + 1;
  Eigen::VectorXd out(n);
  const double h = length / n_elem;
  for (int e = 0; e < n_elem; ++e) {
    for (int a = 0; a <= order; ++a) {
      out[e * order + a] = (e + 0.5 * (nodes01[a] + 1.0)) * h;
    }
  }
  out[n - 1] = length;
  return out;
}

}  // namespace

std::shared_ptr<const Grid> Grid::make(int nx, int ny, int order, double ref_A, int nq1d) {
  if (nx < 1 || ny < 1) throw Error("Grid: element counts must be positive");
  if (order < 3) throw Error("Grid: velocity order must be >= 3 (pressure order = order - 2)");
  if (ref_A <= 0.0) throw Error("Grid: reference aspect ratio must be positive");
  auto g = std::make_shared<Grid>();
  g->nx = nx;
  g->ny = ny;
  g->order = order;
  g->ref_A = ref_A;
  // Exact for polynomial integrands up to the advection term (degree 3p-1).
  g->nq1d = (nq1d > 0) ? nq1d : (3 * order) / 2 + 1;

  basis::gauss_points(g->nq1d, g->quad_x, g->quad_w);

  Eigen::VectorXd gll_v, wv, gll_p, wp;
  basis::gauss_lobatto_points(order + 1, gll_v, wv);
  basis::gauss_lobatto_points(order - 1, gll_p, wp);
  g->bv = basis::Basis1D::tabulate(gll_v, g->quad_x);
  g->bp = basis::Basis1D::tabulate(gll_p, g->quad_x);

  g->nvx = nx * order + 1;
  g->nvy = ny * order + 1;
  const int q = order - 2;
  g->npx = nx * q + 1;
  g->npy = ny * q + 1;
  g->vx = lattice_coords(nx, order, ref_A, gll_v);
  g->vy = lattice_coords(ny, order, 1.0, gll_v);
  g->px = lattice_coords(nx, q, ref_A, gll_p);
  g->py = lattice_coords(ny, q, 1.0, gll_p);

  g->interior_index_.assign(g->n_vnodes(), -1);
  for (int idx = 0; idx < g->n_vnodes(); ++idx) {
    if (!g->boundary_vnode(idx)) {
      g->interior_index_[idx] = static_cast<int>(g->interior_.size());
      g->interior_.push_back(idx);
    }
  }
  return g;
}

void Grid::quadrature_geometry(double A, Eigen::VectorXd& w, Eigen::VectorXd& x,
                               Eigen::VectorXd& y) const {
  const double ex_h = hx(A), ey_h = hy();
  const double jac = 0.25 * ex_h * ey_h;
  w.resize(nq_total());
  x.resize(nq_total());
  y.resize(nq_total());
  int q = 0;
  for (int ey = 0; ey < ny; ++ey) {
    for (int ex = 0; ex < nx; ++ex) {
      for (int qy = 0; qy < nq1d; ++qy) {
        for (int qx = 0; qx < nq1d; ++qx, ++q) {
          w[q] = jac * quad_w[qx] * quad_w[qy];
          x[q] = (ex + 0.5 * (quad_x[qx] + 1.0)) * ex_h;
          y[q] = (ey + 0.5 * (quad_x[qy] + 1.0)) * ey_h;
        }
      }
    }
  }
}

namespace {

struct ElementPoint {
  int ex, ey;
  double xi, eta;  // local coordinates in [-1, 1]
};

ElementPoint locate(int nx, int ny, double hx, double hy, double x, double y) {
  int ex = static_cast<int>(std::floor(x / hx));
  int ey = static_cast<int>(std::floor(y / hy));
  ex = std::clamp(ex, 0, nx - 1);
  ey = std::clamp(ey, 0, ny - 1);
  const double xi = 2.0 * (x / hx - ex) - 1.0;
  const double eta = 2.0 * (y / hy - ey) - 1.0;
  return {ex, ey, xi, eta};
}

}  // namespace

double Grid::eval_scalar_at(const Eigen::VectorXd& c, double A, double x, double y,
                            int derivative) const {
  if (x < -1e-12 || x > A + 1e-12 || y < -1e-12 || y > 1.0 + 1e-12)
    throw Error("eval_scalar_at: point outside domain");
  const auto ep = locate(nx, ny, hx(A), hy(), x, y);
  Eigen::VectorXd lx = (derivative == 1)
                           ? basis::lagrange_derivatives(bv.nodes, bv.bary, ep.xi)
                           : basis::lagrange_values(bv.nodes, bv.bary, ep.xi);
  Eigen::VectorXd ly = (derivative == 2)
                           ? basis::lagrange_derivatives(bv.nodes, bv.bary, ep.eta)
                           : basis::lagrange_values(bv.nodes, bv.bary, ep.eta);
  if (derivative == 1) lx *= 2.0 / hx(A);
  if (derivative == 2) ly *= 2.0 / hy();
  double out = 0.0;
  for (int b = 0; b <= order; ++b) {
    double row = 0.0;
    for (int a = 0; a <= order; ++a) row += c[v_l2g(ep.ex, ep.ey, a, b)] * lx[a];
    out += row * ly[b];
  }
  return out;
}

double Grid::eval_pressure_at(const Eigen::VectorXd& c, double A, double x, double y) const {
  if (x < -1e-12 || x > A + 1e-12 || y < -1e-12 || y > 1.0 + 1e-12)
    throw Error("eval_pressure_at: point outside domain");
  const auto ep = locate(nx, ny, hx(A), hy(), x, y);
  const Eigen::VectorXd lx = basis::lagrange_values(bp.nodes, bp.bary, ep.xi);
  const Eigen::VectorXd ly = basis::lagrange_values(bp.nodes, bp.bary, ep.eta);
  const int q = order - 2;
  double out = 0.0;
  for (int b = 0; b <= q; ++b) {
    double row = 0.0;
    for (int a = 0; a <= q; ++a) row += c[p_l2g(ep.ex, ep.ey, a, b)] * lx[a];
    out += row * ly[b];
  }
  return out;
}

Eigen::VectorXd Grid::interpolate(double A,
                                  const std::function<double(double, double)>& f) const {
  const double s = A / ref_A;
  Eigen::VectorXd out(n_vnodes());
  for (int j = 0; j < nvy; ++j)
    for (int i = 0; i < nvx; ++i) out[vnode(i, j)] = f(vx[i] * s, vy[j]);
  return out;
}

}  // namespace rbcav
