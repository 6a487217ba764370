#include "rbcav/rom.hpp"

#include "rbcav/geometry.hpp"
#include "rbcav/instrument.hpp"

#include <cmath>

namespace rbcav::rom {

namespace {

void check_mu(const ReducedOperators& ops, const ParameterPoint& mu) {
  if (mu.A <= 0.0) throw Error("reduced operators: aspect ratio must be positive");
  (void)ops;
}

// quadrature tables of the advecting field and advected gradients for the
// on-the-fly contraction
struct FlyField {
  Eigen::VectorXd ux, uy, dux_dx, dux_dy, duy_dx, duy_dy;
};

FlyField combine(const kernels::ModeTables& t, const Eigen::VectorXd& a) {
  FlyField f;
  f.ux = t.ux.transpose() * a;
  f.uy = t.uy.transpose() * a;
  f.dux_dx = t.dux_dx.transpose() * a;
  f.dux_dy = t.dux_dy.transpose() * a;
  f.duy_dx = t.duy_dx.transpose() * a;
  f.duy_dy = t.duy_dy.transpose() * a;
  return f;
}

}  // namespace

double ReducedOperators::theta(const ThetaDesc& d, const ParameterPoint& mu) const {
  const double s = mu.A / ref_A;
  double out = 1.0;
  for (int k = 0; k < std::abs(d.s_exp); ++k) out *= s;
  if (d.s_exp < 0) out = 1.0 / out;
  for (int k = 0; k < d.gr_pow; ++k) out *= mu.Gr;
  return out;
}

Eigen::MatrixXd ReducedOperators::mass(const ParameterPoint& mu) const {
  check_mu(*this, mu);
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(N, N);
  for (const auto& b : mass_blocks) M += theta(b.theta, mu) * b.M;
  return M;
}

Eigen::MatrixXd ReducedOperators::stiffness(const ParameterPoint& mu) const {
  check_mu(*this, mu);
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(N, N);
  for (const auto& b : stiffness_blocks) K += theta(b.theta, mu) * b.M;
  return K;
}

Eigen::VectorXd ReducedOperators::forcing(const ParameterPoint& mu) const {
  check_mu(*this, mu);
  Eigen::VectorXd f = Eigen::VectorXd::Zero(N);
  for (const auto& b : forcing_blocks) f += theta(b.theta, mu) * b.v;
  return f;
}

Eigen::VectorXd ReducedOperators::convection_apply(const ParameterPoint& mu,
                                                   const Eigen::VectorXd& a) const {
  check_mu(*this, mu);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(N);
  if (!on_the_fly) {
    for (const auto& b : convection_blocks) {
      const double th = theta(b.theta, mu);
      for (int i = 0; i < N; ++i) {
        double s = 0.0;
        for (int j = 0; j < N; ++j) {
          double row = 0.0;
          for (int k = 0; k < N; ++k) row += b.T(i, j, k) * a[k];
          s += row * a[j];
        }
        out[i] += th * s;
      }
    }
    return out;
  }
  const double s = mu.A / ref_A;
  const double thx = 1.0, thy = 1.0 / (s * s);
  const FlyField f = combine(tables, a);
  const Eigen::VectorXd gx = qw.cwiseProduct(f.ux.cwiseProduct(f.dux_dx) +
                                             f.uy.cwiseProduct(f.dux_dy));
  const Eigen::VectorXd gy = qw.cwiseProduct(f.ux.cwiseProduct(f.duy_dx) +
                                             f.uy.cwiseProduct(f.duy_dy));
  out = thx * (tables.ux * gx) + thy * (tables.uy * gy);
  return out;
}

Eigen::MatrixXd ReducedOperators::convection_linearized(const ParameterPoint& mu,
                                                        const Eigen::VectorXd& a) const {
  check_mu(*this, mu);
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(N, N);
  if (!on_the_fly) {
    for (const auto& b : convection_blocks) {
      const double th = theta(b.theta, mu);
      for (int i = 0; i < N; ++i) {
        for (int j = 0; j < N; ++j) {
          double s = 0.0;
          for (int k = 0; k < N; ++k) s += (b.T(i, j, k) + b.T(i, k, j)) * a[k];
          T(i, j) += th * s;
        }
      }
    }
    return T;
  }
  const double s = mu.A / ref_A;
  const double thy = 1.0 / (s * s);
  const FlyField f = combine(tables, a);
  const int nq = static_cast<int>(qw.size());
  // T = (test_i, base·∇ mode_j) + (test_i, mode_j·∇ base)
  Eigen::MatrixXd adv_x(N, nq), adv_y(N, nq);
  for (int j = 0; j < N; ++j) {
    for (int q = 0; q < nq; ++q) {
      adv_x(j, q) = qw[q] * (f.ux[q] * tables.dux_dx(j, q) + f.uy[q] * tables.dux_dy(j, q) +
                             tables.ux(j, q) * f.dux_dx[q] + tables.uy(j, q) * f.dux_dy[q]);
      adv_y(j, q) = qw[q] * (f.ux[q] * tables.duy_dx(j, q) + f.uy[q] * tables.duy_dy(j, q) +
                             tables.ux(j, q) * f.duy_dx[q] + tables.uy(j, q) * f.duy_dy[q]);
    }
  }
  T = tables.ux * adv_x.transpose() + thy * (tables.uy * adv_y.transpose());
  return T;
}

double ReducedOperators::convection_contract(const ParameterPoint& mu, const Eigen::VectorXd& b,
                                             const Eigen::VectorXd& a) const {
  return b.dot(convection_apply(mu, a));
}

ReducedOperators assemble_reduced(const ReducedBasis& basis, const Grid& grid,
                                  const AssembleOptions& opts) {
  if (basis.size() == 0) throw Error("assemble_reduced: empty basis");
  if (basis.grid.get() != &grid) throw Error("assemble_reduced: basis/grid mismatch");
  for (const auto& m : basis.modes)
    if (!m.domain.reference) throw Error("assemble_reduced: modes must be reference-domain");

  ReducedOperators ops;
  ops.N = basis.size();
  ops.ref_A = grid.ref_A;
  ops.on_the_fly = opts.on_the_fly;

  Eigen::VectorXd w, qx, qy;
  grid.quadrature_geometry(grid.ref_A, w, qx, qy);
  const kernels::ModeTables t = kernels::mode_tables(grid, grid.ref_A, basis.modes);

  ops.mass_blocks.push_back({"mass_xx", {1, 0}, kernels::weighted_gram(t.ux, t.ux, w)});
  ops.mass_blocks.push_back({"mass_yy", {-1, 0}, kernels::weighted_gram(t.uy, t.uy, w)});

  ops.stiffness_blocks.push_back(
      {"stiff_x_dx", {-1, 0}, kernels::weighted_gram(t.dux_dx, t.dux_dx, w)});
  ops.stiffness_blocks.push_back(
      {"stiff_x_dy", {1, 0}, kernels::weighted_gram(t.dux_dy, t.dux_dy, w)});
  ops.stiffness_blocks.push_back(
      {"stiff_y_dx", {-3, 0}, kernels::weighted_gram(t.duy_dx, t.duy_dx, w)});
  ops.stiffness_blocks.push_back(
      {"stiff_y_dy", {-1, 0}, kernels::weighted_gram(t.duy_dy, t.duy_dy, w)});

  ops.forcing_blocks.push_back({"buoyancy", {1, 1}, kernels::buoyancy_vector(t.uy, qx, w)});

  if (opts.on_the_fly) {
    ops.tables = t;
    ops.qw = w;
  } else {
    ops.convection_blocks.push_back(
        {"conv_x", {0, 0}, kernels::advection_tensor(t.ux, t.dux_dx, t.dux_dy, t.ux, t.uy, w)});
    ops.convection_blocks.push_back(
        {"conv_y", {-2, 0}, kernels::advection_tensor(t.uy, t.duy_dx, t.duy_dy, t.ux, t.uy, w)});
  }
  return ops;
}

DirectOperators assemble_direct(const ReducedBasis& basis, const Grid& grid, double A) {
  if (basis.size() == 0) throw Error("assemble_direct: empty basis");
  std::vector<Field> pushed;
  pushed.reserve(basis.size());
  for (const auto& m : basis.modes) pushed.push_back(geometry::piola_pushforward(m, A, grid.ref_A));

  Eigen::VectorXd w, qx, qy;
  grid.quadrature_geometry(A, w, qx, qy);
  const kernels::ModeTables t = kernels::mode_tables(grid, A, pushed);

  DirectOperators out;
  out.mass = kernels::weighted_gram(t.ux, t.ux, w) + kernels::weighted_gram(t.uy, t.uy, w);
  out.stiffness = kernels::weighted_gram(t.dux_dx, t.dux_dx, w) +
                  kernels::weighted_gram(t.dux_dy, t.dux_dy, w) +
                  kernels::weighted_gram(t.duy_dx, t.duy_dx, w) +
                  kernels::weighted_gram(t.duy_dy, t.duy_dy, w);
  const kernels::Tensor3 cx =
      kernels::advection_tensor(t.ux, t.dux_dx, t.dux_dy, t.ux, t.uy, w);
  const kernels::Tensor3 cy =
      kernels::advection_tensor(t.uy, t.duy_dx, t.duy_dy, t.ux, t.uy, w);
  out.convection = cx;
  for (std::size_t i = 0; i < out.convection.data.size(); ++i)
    out.convection.data[i] += cy.data[i];
  out.forcing_per_gr = kernels::buoyancy_vector(t.uy, qx, w);
  return out;
}

RomSteadyResult rom_solve_steady(const ReducedOperators& ops, const ParameterPoint& mu,
                                 const Eigen::VectorXd& a0, const RomSteadyOptions& opts) {
  const Eigen::MatrixXd K = ops.stiffness(mu);
  const Eigen::VectorXd f = ops.forcing(mu);
  const double scale = std::max(1.0, f.norm());
  const double tol = opts.tol * scale;

  Eigen::VectorXd a = a0.size() ? a0 : Eigen::VectorXd::Zero(ops.N);
  if (a.size() != ops.N) throw Error("rom_solve_steady: initial coefficient size mismatch");

  auto residual = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd {
    return K * x + ops.convection_apply(mu, x) - f;
  };

  Eigen::VectorXd r = residual(a);
  double rn = r.norm();
  RomSteadyResult out;
  int it = 0;
  for (; it < opts.max_iter && rn > tol; ++it) {
    const Eigen::MatrixXd J = K + ops.convection_linearized(mu, a);
    const Eigen::VectorXd da = J.partialPivLu().solve(-r);
    double alpha = 1.0;
    while (true) {
      const Eigen::VectorXd a_try = a + alpha * da;
      const Eigen::VectorXd r_try = residual(a_try);
      if (r_try.norm() < rn || alpha <= opts.min_damping) {
        a = a_try;
        r = r_try;
        rn = r.norm();
        break;
      }
      alpha *= 0.5;
    }
  }
  out.state = {a, mu, std::nullopt};
  out.converged = rn <= tol;
  out.iterations = it;
  out.residual = rn;
  return out;
}

RomTrajectory rom_solve_transient(const ReducedOperators& ops, const ParameterPoint& mu,
                                  const Eigen::VectorXd& a0, const RomTransientOptions& opts) {
  if (opts.dt <= 0.0) throw Error("rom_solve_transient: dt must be positive");
  const Eigen::MatrixXd M = ops.mass(mu);
  const Eigen::MatrixXd K = ops.stiffness(mu);
  const Eigen::VectorXd f = ops.forcing(mu);

  auto lhs_lu = [&](double b0_over_dt) {
    return Eigen::PartialPivLU<Eigen::MatrixXd>(b0_over_dt * M + K);
  };
  auto conv = [&](const Eigen::VectorXd& a) { return ops.convection_apply(mu, a); };

  RomTrajectory traj;
  const int n_steps = static_cast<int>(std::llround(opts.t_end / opts.dt));
  Eigen::VectorXd a_p2, a_p1, a = a0;
  Eigen::VectorXd c_p2, c_p1, c = conv(a);

  auto record = [&](int k) {
    if (opts.observe) opts.observe(k * opts.dt, a);
    if (k % opts.sample_every == 0 || k == n_steps) {
      traj.times.push_back(k * opts.dt);
      traj.states.push_back(a);
    }
  };
  auto blown = [&](int k) {
    (void)k;
    const double n = a.norm();
    if (!std::isfinite(n) || n > opts.blowup_norm) {
      traj.blew_up = true;
      return true;
    }
    return false;
  };

  record(0);
  if (n_steps == 0) return traj;

  {  // substepped first interval: BDF1 then BDF2
    const int m = opts.startup_substeps > 0
                      ? opts.startup_substeps
                      : std::max(4, static_cast<int>(std::ceil(2.0 / std::sqrt(opts.dt))));
    const double h = opts.dt / m;
    auto lu1 = lhs_lu(1.0 / h);
    Eigen::VectorXd as_prev = a, cs_prev = c;
    Eigen::VectorXd as = lu1.solve(M * as_prev / h + f - cs_prev);
    Eigen::VectorXd cs = conv(as);
    if (m > 1) {
      auto lu2 = lhs_lu(1.5 / h);
      for (int k = 2; k <= m; ++k) {
        const Eigen::VectorXd hist = 2.0 * as - 0.5 * as_prev;
        const Eigen::VectorXd cex = 2.0 * cs - cs_prev;
        Eigen::VectorXd nxt = lu2.solve(M * hist / h + f - cex);
        as_prev = as;
        cs_prev = cs;
        as = nxt;
        cs = conv(as);
      }
    }
    a_p1 = a;
    c_p1 = c;
    a = as;
    c = cs;
    if (blown(1)) return traj;
    record(1);
  }

  if (n_steps >= 2) {
    auto lu2 = lhs_lu(1.5 / opts.dt);
    const Eigen::VectorXd hist = 2.0 * a - 0.5 * a_p1;
    const Eigen::VectorXd cex = 2.0 * c - c_p1;
    Eigen::VectorXd nxt = lu2.solve(M * hist / opts.dt + f - cex);
    a_p2 = a_p1;
    c_p2 = c_p1;
    a_p1 = a;
    c_p1 = c;
    a = nxt;
    c = conv(a);
    if (blown(2)) return traj;
    record(2);
  }

  if (n_steps >= 3) {
    auto lu3 = lhs_lu((11.0 / 6.0) / opts.dt);
    for (int k = 3; k <= n_steps; ++k) {
      const Eigen::VectorXd hist = 3.0 * a - 1.5 * a_p1 + (1.0 / 3.0) * a_p2;
      const Eigen::VectorXd cex = 3.0 * c - 3.0 * c_p1 + c_p2;
      Eigen::VectorXd nxt = lu3.solve(M * hist / opts.dt + f - cex);
      a_p2 = a_p1;
      c_p2 = c_p1;
      a_p1 = a;
      c_p1 = c;
      a = nxt;
      c = conv(a);
      if (blown(k)) return traj;
      record(k);
    }
  }
  return traj;
}

Field reconstruct(const ReducedBasis& basis, const ReducedState& state) {
  if (state.a.size() != basis.size()) throw Error("reconstruct: coefficient size mismatch");
  Field ref;
  ref.kind = FieldKind::velocity;
  ref.domain = DomainTag::ref();
  ref.coeffs = Eigen::VectorXd::Zero(2 * basis.grid->n_vnodes());
  for (int i = 0; i < basis.size(); ++i) ref.coeffs += state.a[i] * basis.modes[i].coeffs;
  return geometry::piola_pushforward(ref, state.mu.A, basis.grid->ref_A);
}

Field recover_pressure(const DiscreteForms& forms, const Field& velocity, double Gr) {
  instrument::bump_full_order();
  if (velocity.kind != FieldKind::velocity) throw Error("recover_pressure: velocity expected");
  const Grid& g = *forms.grid;
  const int nv = forms.nv(), np = forms.np();

  Eigen::VectorXd ux, uy, ux_dx, ux_dy, uy_dx, uy_dy;
  kernels::eval_scalar(g, forms.A, velocity.coeffs.head(nv), &ux, &ux_dx, &ux_dy);
  kernels::eval_scalar(g, forms.A, velocity.coeffs.tail(nv), &uy, &uy_dx, &uy_dy);
  const Eigen::VectorXd gx =
      forms.qw.cwiseProduct(-(ux.cwiseProduct(ux_dx) + uy.cwiseProduct(ux_dy)));
  const Eigen::VectorXd gy = forms.qw.cwiseProduct(
      (Gr * forms.qx - (ux.cwiseProduct(uy_dx) + uy.cwiseProduct(uy_dy))));

  // rhs_q = ∫ (Gr x ĵ − u·∇u) · ∇q  (integration by parts, natural conditions)
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(np);
  const int p = g.order - 2, nq = g.nq1d;
  const double sx = 2.0 / g.hx(forms.A), sy = 2.0 / g.hy();
  int q = 0;
  for (int ey = 0; ey < g.ny; ++ey) {
    for (int ex = 0; ex < g.nx; ++ex) {
      for (int qy = 0; qy < nq; ++qy) {
        for (int qx = 0; qx < nq; ++qx, ++q) {
          for (int b = 0; b <= p; ++b) {
            for (int a = 0; a <= p; ++a) {
              const double dqx = g.bp.der(qx, a) * g.bp.val(qy, b) * sx;
              const double dqy = g.bp.val(qx, a) * g.bp.der(qy, b) * sy;
              rhs[g.p_l2g(ex, ey, a, b)] += gx[q] * dqx + gy[q] * dqy;
            }
          }
        }
      }
    }
  }

  // bordered Neumann system with the zero-mean constraint
  Eigen::MatrixXd Kb(np + 1, np + 1);
  Kb.setZero();
  Kb.topLeftCorner(np, np) = forms.Kp;
  Kb.topRightCorner(np, 1) = forms.p_mean;
  Kb.bottomLeftCorner(1, np) = forms.p_mean.transpose();
  Eigen::VectorXd rb(np + 1);
  rb.head(np) = rhs;
  rb[np] = 0.0;
  const Eigen::VectorXd sol = Kb.partialPivLu().solve(rb);

  Field out;
  out.kind = FieldKind::pressure;
  out.domain = velocity.domain;
  out.coeffs = sol.head(np);
  return out;
}

double observable(const ReducedBasis& basis, const DiscreteForms& forms,
                  const ReducedState& state, const Eigen::Vector2d& point) {
  const Field u = reconstruct(basis, state);
  return forms.grid->eval_scalar_at(u.ux(), state.mu.A, point[0], point[1]);
}

}  // namespace rbcav::rom
