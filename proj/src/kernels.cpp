#include "rbcav/kernels.hpp"

namespace rbcav::kernels {

namespace {

// Sum-factorized evaluation of one element's scalar coefficients at the
// element's tensor quadrature points. Writes nq1d*nq1d values per output.
void eval_element(const Grid& g, double inv_hx, double inv_hy, const Eigen::VectorXd& c,
                  int ex, int ey, double* val, double* ddx, double* ddy) {
  const int p = g.order, nq = g.nq1d;
  const auto& V = g.bv.val;
  const auto& D = g.bv.der;
  // tmp(a, qy) = sum_b c(a,b) * basis_b(qy)
  Eigen::MatrixXd tmp_v(p + 1, nq), tmp_d(p + 1, nq);
  for (int a = 0; a <= p; ++a) {
    for (int qy = 0; qy < nq; ++qy) {
      double sv = 0.0, sd = 0.0;
      for (int b = 0; b <= p; ++b) {
        const double cab = c[g.v_l2g(ex, ey, a, b)];
        sv += cab * V(qy, b);
        sd += cab * D(qy, b);
      }
      tmp_v(a, qy) = sv;
      tmp_d(a, qy) = sd;
    }
  }
  for (int qy = 0; qy < nq; ++qy) {
    for (int qx = 0; qx < nq; ++qx) {
      double sv = 0.0, sx = 0.0, sy = 0.0;
      for (int a = 0; a <= p; ++a) {
        sv += tmp_v(a, qy) * V(qx, a);
        sx += tmp_v(a, qy) * D(qx, a);
        sy += tmp_d(a, qy) * V(qx, a);
      }
      const int q = qy * nq + qx;
      if (val) val[q] = sv;
      if (ddx) ddx[q] = sx * 2.0 * inv_hx;
      if (ddy) ddy[q] = sy * 2.0 * inv_hy;
    }
  }
}

}  // namespace

void eval_scalar(const Grid& g, double A, const Eigen::VectorXd& coeffs, Eigen::VectorXd* val,
                 Eigen::VectorXd* ddx, Eigen::VectorXd* ddy) {
  if (coeffs.size() != g.n_vnodes()) throw Error("eval_scalar: coefficient size mismatch");
  const int nq_el = g.nq_elem(), nel = g.n_elems();
  const double inv_hx = 1.0 / g.hx(A), inv_hy = 1.0 / g.hy();
  if (val) val->resize(g.nq_total());
  if (ddx) ddx->resize(g.nq_total());
  if (ddy) ddy->resize(g.nq_total());
  // Elements own disjoint quadrature blocks; the per-point summation order is
  // fixed, so the result does not depend on the thread count.
#pragma omp parallel for schedule(static)
  for (int e = 0; e < nel; ++e) {
    const int ex = e % g.nx, ey = e / g.nx;
    const int off = e * nq_el;
    eval_element(g, inv_hx, inv_hy, coeffs, ex, ey, val ? val->data() + off : nullptr,
                 ddx ? ddx->data() + off : nullptr, ddy ? ddy->data() + off : nullptr);
  }
}

ModeTables mode_tables(const Grid& g, double A, std::span<const Field> modes) {
  const int N = static_cast<int>(modes.size());
  ModeTables t;
  const int nq = g.nq_total();
  t.ux.resize(N, nq);
  t.uy.resize(N, nq);
  t.dux_dx.resize(N, nq);
  t.dux_dy.resize(N, nq);
  t.duy_dx.resize(N, nq);
  t.duy_dy.resize(N, nq);
  for (int m = 0; m < N; ++m) {
    if (modes[m].kind != FieldKind::velocity) throw Error("mode_tables: velocity fields expected");
    Eigen::VectorXd v, dx, dy;
    eval_scalar(g, A, modes[m].ux(), &v, &dx, &dy);
    t.ux.row(m) = v.transpose();
    t.dux_dx.row(m) = dx.transpose();
    t.dux_dy.row(m) = dy.transpose();
    eval_scalar(g, A, modes[m].uy(), &v, &dx, &dy);
    t.uy.row(m) = v.transpose();
    t.duy_dx.row(m) = dx.transpose();
    t.duy_dy.row(m) = dy.transpose();
  }
  return t;
}

Eigen::MatrixXd weighted_gram(const Eigen::MatrixXd& Fa, const Eigen::MatrixXd& Fb,
                              const Eigen::VectorXd& w) {
  const int na = static_cast<int>(Fa.rows()), nb = static_cast<int>(Fb.rows());
  const int nq = static_cast<int>(w.size());
  if (Fa.cols() != nq || Fb.cols() != nq) throw Error("weighted_gram: size mismatch");
  Eigen::MatrixXd G(na, nb);
#pragma omp parallel for collapse(2) schedule(static)
  for (int i = 0; i < na; ++i) {
    for (int j = 0; j < nb; ++j) {
      double s = 0.0;
      for (int q = 0; q < nq; ++q) s += w[q] * Fa(i, q) * Fb(j, q);
      G(i, j) = s;
    }
  }
  return G;
}

Tensor3 advection_tensor(const Eigen::MatrixXd& Vt, const Eigen::MatrixXd& Gx,
                         const Eigen::MatrixXd& Gy, const Eigen::MatrixXd& Ax,
                         const Eigen::MatrixXd& Ay, const Eigen::VectorXd& w) {
  const int ni = static_cast<int>(Vt.rows());
  const int nj = static_cast<int>(Gx.rows());
  const int nk = static_cast<int>(Ax.rows());
  const int nq = static_cast<int>(w.size());
  Tensor3 T(ni, nj, nk);
#pragma omp parallel for collapse(2) schedule(static)
  for (int j = 0; j < nj; ++j) {
    for (int k = 0; k < nk; ++k) {
      Eigen::VectorXd adv(nq);
      for (int q = 0; q < nq; ++q)
        adv[q] = w[q] * (Ax(k, q) * Gx(j, q) + Ay(k, q) * Gy(j, q));
      for (int i = 0; i < ni; ++i) {
        double s = 0.0;
        for (int q = 0; q < nq; ++q) s += Vt(i, q) * adv[q];
        T(i, j, k) = s;
      }
    }
  }
  return T;
}

Eigen::VectorXd buoyancy_vector(const Eigen::MatrixXd& Vy, const Eigen::VectorXd& x,
                                const Eigen::VectorXd& w) {
  const int N = static_cast<int>(Vy.rows());
  const int nq = static_cast<int>(w.size());
  Eigen::VectorXd f(N);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < N; ++i) {
    double s = 0.0;
    for (int q = 0; q < nq; ++q) s += w[q] * x[q] * Vy(i, q);
    f[i] = s;
  }
  return f;
}

Eigen::MatrixXd correlation(const Eigen::MatrixXd& snapshots, const Eigen::MatrixXd& weighted) {
  const int k = static_cast<int>(snapshots.cols());
  if (weighted.rows() != snapshots.rows() || weighted.cols() != k)
    throw Error("correlation: size mismatch");
  const int n = static_cast<int>(snapshots.rows());
  Eigen::MatrixXd C(k, k);
#pragma omp parallel for collapse(2) schedule(static)
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j) {
      double s = 0.0;
      for (int r = 0; r < n; ++r) s += snapshots(r, i) * weighted(r, j);
      C(i, j) = s;
    }
  }
  return C;
}

Eigen::VectorXd project_scalar(const Grid& g, const Eigen::VectorXd& weighted_values) {
  if (weighted_values.size() != g.nq_total()) throw Error("project_scalar: size mismatch");
  const int p = g.order, nq = g.nq1d, nel = g.n_elems();
  const auto& V = g.bv.val;
  const int nloc = (p + 1) * (p + 1);
  // Per-element local vectors in parallel, then a serial ordered scatter so
  // shared-node sums have a fixed order.
  Eigen::MatrixXd local(nloc, nel);
#pragma omp parallel for schedule(static)
  for (int e = 0; e < nel; ++e) {
    const double* v = weighted_values.data() + e * g.nq_elem();
    Eigen::MatrixXd tmp(p + 1, nq);  // tmp(a, qy) = sum_qx V(qx,a) v(qx,qy)
    for (int a = 0; a <= p; ++a) {
      for (int qy = 0; qy < nq; ++qy) {
        double s = 0.0;
        for (int qx = 0; qx < nq; ++qx) s += V(qx, a) * v[qy * nq + qx];
        tmp(a, qy) = s;
      }
    }
    for (int b = 0; b <= p; ++b) {
      for (int a = 0; a <= p; ++a) {
        double s = 0.0;
        for (int qy = 0; qy < nq; ++qy) s += V(qy, b) * tmp(a, qy);
        local(b * (p + 1) + a, e) = s;
      }
    }
  }
  Eigen::VectorXd out = Eigen::VectorXd::Zero(g.n_vnodes());
  for (int e = 0; e < nel; ++e) {
    const int ex = e % g.nx, ey = e / g.nx;
    for (int b = 0; b <= p; ++b)
      for (int a = 0; a <= p; ++a) out[g.v_l2g(ex, ey, a, b)] += local(b * (p + 1) + a, e);
  }
  return out;
}

Eigen::MatrixXd advection_jacobian_interior(
    const Grid& g, double A, const Eigen::VectorXd& qw, const Eigen::VectorXd& ax,
    const Eigen::VectorXd& ay, const Eigen::VectorXd& ux_dx, const Eigen::VectorXd& ux_dy,
    const Eigen::VectorXd& uy_dx, const Eigen::VectorXd& uy_dy) {
  const int p = g.order, nq = g.nq1d, nel = g.n_elems(), nq_el = g.nq_elem();
  const int nloc = (p + 1) * (p + 1);
  const double sx = 2.0 / g.hx(A), sy = 2.0 / g.hy();

  // local tall matrices: values and physical derivatives of local basis
  Eigen::MatrixXd E(nq_el, nloc), Gx(nq_el, nloc), Gy(nq_el, nloc);
  for (int qy = 0; qy < nq; ++qy) {
    for (int qx = 0; qx < nq; ++qx) {
      const int q = qy * nq + qx;
      for (int b = 0; b <= p; ++b) {
        for (int a = 0; a <= p; ++a) {
          const int l = b * (p + 1) + a;
          E(q, l) = g.bv.val(qx, a) * g.bv.val(qy, b);
          Gx(q, l) = g.bv.der(qx, a) * g.bv.val(qy, b) * sx;
          Gy(q, l) = g.bv.val(qx, a) * g.bv.der(qy, b) * sy;
        }
      }
    }
  }

  // per-element blocks: [adv + P(ux_dx), P(ux_dy); P(uy_dx), adv + P(uy_dy)]
  std::vector<Eigen::MatrixXd> bxx(nel), bxy(nel), byx(nel), byy(nel);
#pragma omp parallel for schedule(static)
  for (int e = 0; e < nel; ++e) {
    const int off = e * nq_el;
    const auto wq = qw.segment(off, nq_el);
    Eigen::MatrixXd adv_rows(nq_el, nloc);
    for (int q = 0; q < nq_el; ++q)
      adv_rows.row(q) = wq[q] * (ax[off + q] * Gx.row(q) + ay[off + q] * Gy.row(q));
    const Eigen::MatrixXd ADV = E.transpose() * adv_rows;
    auto weighted_mass = [&](const Eigen::VectorXd& gfield) {
      Eigen::MatrixXd rows(nq_el, nloc);
      for (int q = 0; q < nq_el; ++q) rows.row(q) = wq[q] * gfield[off + q] * E.row(q);
      return Eigen::MatrixXd(E.transpose() * rows);
    };
    bxx[e] = ADV + weighted_mass(ux_dx);
    bxy[e] = weighted_mass(ux_dy);
    byx[e] = weighted_mass(uy_dx);
    byy[e] = ADV + weighted_mass(uy_dy);
  }

  const auto& idx = g.interior_index();
  const int ni = static_cast<int>(g.interior().size());
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(2 * ni, 2 * ni);
  for (int e = 0; e < nel; ++e) {
    const int ex = e % g.nx, ey = e / g.nx;
    for (int b = 0; b <= p; ++b) {
      for (int a = 0; a <= p; ++a) {
        const int li = b * (p + 1) + a;
        const int ii = idx[g.v_l2g(ex, ey, a, b)];
        if (ii < 0) continue;
        for (int d = 0; d <= p; ++d) {
          for (int c = 0; c <= p; ++c) {
            const int lj = d * (p + 1) + c;
            const int jj = idx[g.v_l2g(ex, ey, c, d)];
            if (jj < 0) continue;
            J(ii, jj) += bxx[e](li, lj);
            J(ii, ni + jj) += bxy[e](li, lj);
            J(ni + ii, jj) += byx[e](li, lj);
            J(ni + ii, ni + jj) += byy[e](li, lj);
          }
        }
      }
    }
  }
  return J;
}

// ---------------------------------------------------------------------------
// Serial reference implementations: naive quadrature loops without sum
// factorization or worksharing, used as oracles in tests and as the baseline
// in the kernel benchmark.
namespace ref {

void eval_scalar(const Grid& g, double A, const Eigen::VectorXd& coeffs, Eigen::VectorXd* val,
                 Eigen::VectorXd* ddx, Eigen::VectorXd* ddy) {
  if (coeffs.size() != g.n_vnodes()) throw Error("eval_scalar: coefficient size mismatch");
  const int p = g.order, nq = g.nq1d;
  const double inv_hx = 1.0 / g.hx(A), inv_hy = 1.0 / g.hy();
  if (val) val->setZero(g.nq_total());
  if (ddx) ddx->setZero(g.nq_total());
  if (ddy) ddy->setZero(g.nq_total());
  int q = 0;
  for (int ey = 0; ey < g.ny; ++ey) {
    for (int ex = 0; ex < g.nx; ++ex) {
      for (int qy = 0; qy < nq; ++qy) {
        for (int qx = 0; qx < nq; ++qx, ++q) {
          double sv = 0.0, sx = 0.0, sy = 0.0;
          for (int b = 0; b <= p; ++b) {
            for (int a = 0; a <= p; ++a) {
              const double cab = coeffs[g.v_l2g(ex, ey, a, b)];
              sv += cab * g.bv.val(qx, a) * g.bv.val(qy, b);
              sx += cab * g.bv.der(qx, a) * g.bv.val(qy, b);
              sy += cab * g.bv.val(qx, a) * g.bv.der(qy, b);
            }
          }
          if (val) (*val)[q] = sv;
          if (ddx) (*ddx)[q] = sx * 2.0 * inv_hx;
          if (ddy) (*ddy)[q] = sy * 2.0 * inv_hy;
        }
      }
    }
  }
}

Eigen::MatrixXd weighted_gram(const Eigen::MatrixXd& Fa, const Eigen::MatrixXd& Fb,
                              const Eigen::VectorXd& w) {
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(Fa.rows(), Fb.rows());
  for (int q = 0; q < w.size(); ++q)
    for (int i = 0; i < Fa.rows(); ++i)
      for (int j = 0; j < Fb.rows(); ++j) G(i, j) += w[q] * Fa(i, q) * Fb(j, q);
  return G;
}

Tensor3 advection_tensor(const Eigen::MatrixXd& Vt, const Eigen::MatrixXd& Gx,
                         const Eigen::MatrixXd& Gy, const Eigen::MatrixXd& Ax,
                         const Eigen::MatrixXd& Ay, const Eigen::VectorXd& w) {
  Tensor3 T(static_cast<int>(Vt.rows()), static_cast<int>(Gx.rows()),
            static_cast<int>(Ax.rows()));
  for (int i = 0; i < T.ni; ++i)
    for (int j = 0; j < T.nj; ++j)
      for (int k = 0; k < T.nk; ++k) {
        double s = 0.0;
        for (int q = 0; q < w.size(); ++q)
          s += w[q] * Vt(i, q) * (Ax(k, q) * Gx(j, q) + Ay(k, q) * Gy(j, q));
        T(i, j, k) = s;
      }
  return T;
}

Eigen::VectorXd buoyancy_vector(const Eigen::MatrixXd& Vy, const Eigen::VectorXd& x,
                                const Eigen::VectorXd& w) {
  Eigen::VectorXd f = Eigen::VectorXd::Zero(Vy.rows());
  for (int q = 0; q < w.size(); ++q)
    for (int i = 0; i < Vy.rows(); ++i) f[i] += w[q] * x[q] * Vy(i, q);
  return f;
}

Eigen::MatrixXd correlation(const Eigen::MatrixXd& snapshots, const Eigen::MatrixXd& weighted) {
  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(snapshots.cols(), snapshots.cols());
  for (int i = 0; i < C.rows(); ++i)
    for (int j = 0; j < C.cols(); ++j) C(i, j) = snapshots.col(i).dot(weighted.col(j));
  return C;
}

Eigen::VectorXd project_scalar(const Grid& g, const Eigen::VectorXd& weighted_values) {
  const int p = g.order, nq = g.nq1d;
  Eigen::VectorXd out = Eigen::VectorXd::Zero(g.n_vnodes());
  int q = 0;
  for (int ey = 0; ey < g.ny; ++ey)
    for (int ex = 0; ex < g.nx; ++ex)
      for (int qy = 0; qy < nq; ++qy)
        for (int qx = 0; qx < nq; ++qx, ++q)
          for (int b = 0; b <= p; ++b)
            for (int a = 0; a <= p; ++a)
              out[g.v_l2g(ex, ey, a, b)] +=
                  weighted_values[q] * g.bv.val(qx, a) * g.bv.val(qy, b);
  return out;
}

}  // namespace ref

}  // namespace rbcav::kernels
