#include "rbcav/forms.hpp"

#include "rbcav/instrument.hpp"
#include "rbcav/kernels.hpp"

#include <atomic>
#include <cmath>

namespace rbcav::instrument {

namespace {
std::atomic<std::uint64_t> g_full_order_ops{0};
}

std::uint64_t full_order_ops() { return g_full_order_ops.load(); }
void bump_full_order() { g_full_order_ops.fetch_add(1, std::memory_order_relaxed); }
void reset_full_order() { g_full_order_ops.store(0); }

}  // namespace rbcav::instrument

namespace rbcav {

namespace {

// 1D matrices over an element of size h: mass (h/2)*V'WV, stiffness
// (2/h)*D'WD, and mixed blocks for the divergence coupling.
Eigen::MatrixXd mat_1d(const Eigen::MatrixXd& Ta, const Eigen::MatrixXd& Tb,
                       const Eigen::VectorXd& w, double scale) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(Ta.cols(), Tb.cols());
  for (int q = 0; q < w.size(); ++q)
    out += scale * w[q] * Ta.row(q).transpose() * Tb.row(q);
  return out;
}

}  // namespace

DiscreteForms assemble_forms(std::shared_ptr<const Grid> grid, double A) {
  if (!grid) throw Error("assemble_forms: null grid");
  if (A <= 0.0) throw Error("assemble_forms: aspect ratio must be positive");
  instrument::bump_full_order();

  DiscreteForms f;
  f.grid = grid;
  f.A = A;
  const Grid& g = *grid;
  g.quadrature_geometry(A, f.qw, f.qx, f.qy);

  const double hx = g.hx(A), hy = g.hy();
  const int p = g.order, q = g.order - 2;
  const auto& w1 = g.quad_w;

  // 1D building blocks (identical for every element of the uniform grid)
  const Eigen::MatrixXd Mvx = mat_1d(g.bv.val, g.bv.val, w1, 0.5 * hx);
  const Eigen::MatrixXd Mvy = mat_1d(g.bv.val, g.bv.val, w1, 0.5 * hy);
  const Eigen::MatrixXd Kvx = mat_1d(g.bv.der, g.bv.der, w1, 2.0 / hx);
  const Eigen::MatrixXd Kvy = mat_1d(g.bv.der, g.bv.der, w1, 2.0 / hy);
  const Eigen::MatrixXd Mpx = mat_1d(g.bp.val, g.bp.val, w1, 0.5 * hx);
  const Eigen::MatrixXd Mpy = mat_1d(g.bp.val, g.bp.val, w1, 0.5 * hy);
  const Eigen::MatrixXd Kpx = mat_1d(g.bp.der, g.bp.der, w1, 2.0 / hx);
  const Eigen::MatrixXd Kpy = mat_1d(g.bp.der, g.bp.der, w1, 2.0 / hy);
  // pressure value x velocity derivative (the x-jacobians cancel)
  const Eigen::MatrixXd Dpv_x = mat_1d(g.bp.val, g.bv.der, w1, 1.0);
  const Eigen::MatrixXd Mpv_x = mat_1d(g.bp.val, g.bv.val, w1, 0.5 * hx);
  const Eigen::MatrixXd Mpv_y = mat_1d(g.bp.val, g.bv.val, w1, 0.5 * hy);
  const Eigen::MatrixXd Dpv_y = mat_1d(g.bp.val, g.bv.der, w1, 1.0);

  const int nv = g.n_vnodes(), np = g.n_pnodes();
  f.Ms = Eigen::MatrixXd::Zero(nv, nv);
  f.Ks = Eigen::MatrixXd::Zero(nv, nv);
  f.Bx = Eigen::MatrixXd::Zero(np, nv);
  f.By = Eigen::MatrixXd::Zero(np, nv);
  f.Mp = Eigen::MatrixXd::Zero(np, np);
  f.Kp = Eigen::MatrixXd::Zero(np, np);
  f.fy = Eigen::VectorXd::Zero(nv);

  for (int ey = 0; ey < g.ny; ++ey) {
    for (int ex = 0; ex < g.nx; ++ex) {
      for (int b = 0; b <= p; ++b) {
        for (int a = 0; a <= p; ++a) {
          const int gi = g.v_l2g(ex, ey, a, b);
          for (int d = 0; d <= p; ++d) {
            for (int c = 0; c <= p; ++c) {
              const int gj = g.v_l2g(ex, ey, c, d);
              f.Ms(gi, gj) += Mvx(a, c) * Mvy(b, d);
              f.Ks(gi, gj) += Kvx(a, c) * Mvy(b, d) + Mvx(a, c) * Kvy(b, d);
            }
          }
        }
      }
      for (int b = 0; b <= q; ++b) {
        for (int a = 0; a <= q; ++a) {
          const int gi = g.p_l2g(ex, ey, a, b);
          for (int d = 0; d <= p; ++d) {
            for (int c = 0; c <= p; ++c) {
              const int gj = g.v_l2g(ex, ey, c, d);
              f.Bx(gi, gj) += Dpv_x(a, c) * Mpv_y(b, d);
              f.By(gi, gj) += Mpv_x(a, c) * Dpv_y(b, d);
            }
          }
          for (int d = 0; d <= q; ++d) {
            for (int c = 0; c <= q; ++c) {
              const int gj = g.p_l2g(ex, ey, c, d);
              f.Mp(gi, gj) += Mpx(a, c) * Mpy(b, d);
              f.Kp(gi, gj) += Kpx(a, c) * Mpy(b, d) + Mpx(a, c) * Kpy(b, d);
            }
          }
        }
      }
      // buoyancy load: ∫ x φ_a(x) φ_b(y)
      Eigen::VectorXd fx1 = Eigen::VectorXd::Zero(p + 1);
      for (int iq = 0; iq < w1.size(); ++iq) {
        const double x = (ex + 0.5 * (g.quad_x[iq] + 1.0)) * hx;
        fx1 += 0.5 * hx * w1[iq] * x * g.bv.val.row(iq).transpose();
      }
      Eigen::VectorXd fy1 = Eigen::VectorXd::Zero(p + 1);
      for (int iq = 0; iq < w1.size(); ++iq)
        fy1 += 0.5 * hy * w1[iq] * g.bv.val.row(iq).transpose();
      for (int b = 0; b <= p; ++b)
        for (int a = 0; a <= p; ++a) f.fy[g.v_l2g(ex, ey, a, b)] += fx1[a] * fy1[b];
    }
  }
  f.p_mean = f.Mp * Eigen::VectorXd::Ones(np);

  const auto& interior = g.interior();
  const int ni = static_cast<int>(interior.size());
  f.Ms_int_.resize(ni, ni);
  f.Ks_int_.resize(ni, ni);
  f.Bx_int_.resize(np, ni);
  f.By_int_.resize(np, ni);
  for (int jj = 0; jj < ni; ++jj) {
    const int gj = interior[jj];
    f.Bx_int_.col(jj) = f.Bx.col(gj);
    f.By_int_.col(jj) = f.By.col(gj);
    for (int ii = 0; ii < ni; ++ii) {
      f.Ms_int_(ii, jj) = f.Ms(interior[ii], gj);
      f.Ks_int_(ii, jj) = f.Ks(interior[ii], gj);
    }
  }
  return f;
}

Eigen::VectorXd DiscreteForms::mass_apply(const Eigen::VectorXd& u) const {
  instrument::bump_full_order();
  Eigen::VectorXd out(2 * nv());
  out.head(nv()) = Ms * u.head(nv());
  out.tail(nv()) = Ms * u.tail(nv());
  return out;
}

Eigen::VectorXd DiscreteForms::stiffness_apply(const Eigen::VectorXd& u) const {
  instrument::bump_full_order();
  Eigen::VectorXd out(2 * nv());
  out.head(nv()) = Ks * u.head(nv());
  out.tail(nv()) = Ks * u.tail(nv());
  return out;
}

double DiscreteForms::l2_inner(const Eigen::VectorXd& u, const Eigen::VectorXd& v) const {
  instrument::bump_full_order();
  return u.head(nv()).dot(Ms * v.head(nv())) + u.tail(nv()).dot(Ms * v.tail(nv()));
}

double DiscreteForms::l2_norm(const Eigen::VectorXd& u) const {
  return std::sqrt(std::max(0.0, l2_inner(u, u)));
}

double DiscreteForms::p_l2_norm(const Eigen::VectorXd& p) const {
  return std::sqrt(std::max(0.0, p.dot(Mp * p)));
}

Eigen::VectorXd DiscreteForms::forcing(double Gr) const {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(2 * nv());
  out.tail(nv()) = Gr * fy;
  return out;
}

Eigen::VectorXd DiscreteForms::convection(const Eigen::VectorXd& adv,
                                          const Eigen::VectorXd& w) const {
  instrument::bump_full_order();
  const Grid& g = *grid;
  Eigen::VectorXd ax, ay, wx_dx, wx_dy, wy_dx, wy_dy;
  kernels::eval_scalar(g, A, adv.head(nv()), &ax, nullptr, nullptr);
  kernels::eval_scalar(g, A, adv.tail(nv()), &ay, nullptr, nullptr);
  kernels::eval_scalar(g, A, w.head(nv()), nullptr, &wx_dx, &wx_dy);
  kernels::eval_scalar(g, A, w.tail(nv()), nullptr, &wy_dx, &wy_dy);
  const Eigen::VectorXd gx = qw.cwiseProduct(ax.cwiseProduct(wx_dx) + ay.cwiseProduct(wx_dy));
  const Eigen::VectorXd gy = qw.cwiseProduct(ax.cwiseProduct(wy_dx) + ay.cwiseProduct(wy_dy));

  Eigen::VectorXd out(2 * nv());
  out.head(nv()) = kernels::project_scalar(g, gx);
  out.tail(nv()) = kernels::project_scalar(g, gy);
  return out;
}

double DiscreteForms::trilinear(const Eigen::VectorXd& u, const Eigen::VectorXd& w,
                                const Eigen::VectorXd& v) const {
  return v.dot(convection(u, w));
}

Eigen::MatrixXd DiscreteForms::convection_jacobian_interior(const Eigen::VectorXd& u) const {
  instrument::bump_full_order();
  const Grid& g = *grid;
  Eigen::VectorXd ax, ay, ux_dx, ux_dy, uy_dx, uy_dy;
  kernels::eval_scalar(g, A, u.head(nv()), &ax, &ux_dx, &ux_dy);
  kernels::eval_scalar(g, A, u.tail(nv()), &ay, &uy_dx, &uy_dy);
  return kernels::advection_jacobian_interior(g, A, qw, ax, ay, ux_dx, ux_dy, uy_dx, uy_dy);
}

double DiscreteForms::weak_divergence_residual(const Eigen::VectorXd& u) const {
  instrument::bump_full_order();
  const Eigen::VectorXd b = Bx * u.head(nv()) + By * u.tail(nv());
  const double nrm = l2_norm(u);
  return b.cwiseAbs().maxCoeff() / std::max(nrm, 1e-30);
}

}  // namespace rbcav
