#include "rbcav/fom.hpp"

#include "rbcav/instrument.hpp"
#include "rbcav/kernels.hpp"

#include <cmath>
#include <sstream>

namespace rbcav::fom {

namespace {

// Dense LU with one step of iterative refinement: keeps constraint rows of
// saddle systems satisfied to working precision even at high Grashof number.
class LuIR {
 public:
  explicit LuIR(Eigen::MatrixXd A) : A_(std::move(A)), lu_(A_) {}

  Eigen::VectorXd solve(const Eigen::VectorXd& b) const {
    Eigen::VectorXd x = lu_.solve(b);
    const Eigen::VectorXd r = b - A_ * x;
    x += lu_.solve(r);
    return x;
  }

 private:
  Eigen::MatrixXd A_;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
};

struct Workspace {
  const DiscreteForms& f;
  const Grid& g;
  int ni, np, n;  // n = 2*ni + np + 1
  Eigen::LLT<Eigen::MatrixXd> mass_llt;    // interior scalar mass
  Eigen::LLT<Eigen::MatrixXd> pmass_llt;   // pressure mass

  explicit Workspace(const DiscreteForms& forms)
      : f(forms),
        g(*forms.grid),
        ni(static_cast<int>(forms.grid->interior().size())),
        np(forms.np()),
        n(2 * ni + np + 1),
        mass_llt(forms.Ms_int()),
        pmass_llt(forms.Mp) {}

  Eigen::VectorXd to_full(const Eigen::VectorXd& ui) const {
    Eigen::VectorXd u = Eigen::VectorXd::Zero(2 * g.n_vnodes());
    const auto& interior = g.interior();
    for (int k = 0; k < ni; ++k) {
      u[interior[k]] = ui[k];
      u[g.n_vnodes() + interior[k]] = ui[ni + k];
    }
    return u;
  }

  Eigen::VectorXd to_interior(const Eigen::VectorXd& u) const {
    Eigen::VectorXd ui(2 * ni);
    const auto& interior = g.interior();
    for (int k = 0; k < ni; ++k) {
      ui[k] = u[interior[k]];
      ui[ni + k] = u[g.n_vnodes() + interior[k]];
    }
    return ui;
  }

  // momentum residual rows restricted to interior dofs
  Eigen::VectorXd restrict_rows(const Eigen::VectorXd& r_full) const { return to_interior(r_full); }

  double dual_norm(const Eigen::VectorXd& r_u, const Eigen::VectorXd& r_p, double r_mean) const {
    const Eigen::VectorXd mx = mass_llt.solve(r_u.head(ni));
    const Eigen::VectorXd my = mass_llt.solve(r_u.tail(ni));
    const Eigen::VectorXd pp = pmass_llt.solve(r_p);
    double s = r_u.head(ni).dot(mx) + r_u.tail(ni).dot(my) + r_p.dot(pp) + r_mean * r_mean;
    return std::sqrt(std::max(0.0, s));
  }

  // steady residual at (u_full, p): momentum (interior), continuity, mean
  void residual(const Eigen::VectorXd& u_full, const Eigen::VectorXd& p, double Gr,
                Eigen::VectorXd& r_u, Eigen::VectorXd& r_p, double& r_mean,
                const Eigen::VectorXd* extra = nullptr) const {
    const int nv = f.nv();
    Eigen::VectorXd mom = f.stiffness_apply(u_full) + f.convection(u_full) - f.forcing(Gr);
    if (extra) mom -= *extra;
    mom.head(nv) -= f.Bx.transpose() * p;
    mom.tail(nv) -= f.By.transpose() * p;
    r_u = restrict_rows(mom);
    r_p = f.Bx * u_full.head(nv) + f.By * u_full.tail(nv);
    r_mean = f.p_mean.dot(p);
  }

  // assemble the bordered saddle Jacobian about u_full
  Eigen::MatrixXd jacobian(const Eigen::VectorXd& u_full) const {
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
    Eigen::MatrixXd Jc = f.convection_jacobian_interior(u_full);
    J.block(0, 0, ni, ni) = f.Ks_int() + Jc.block(0, 0, ni, ni);
    J.block(0, ni, ni, ni) = Jc.block(0, ni, ni, ni);
    J.block(ni, 0, ni, ni) = Jc.block(ni, 0, ni, ni);
    J.block(ni, ni, ni, ni) = f.Ks_int() + Jc.block(ni, ni, ni, ni);
    J.block(2 * ni, 0, np, ni) = f.Bx_int();
    J.block(2 * ni, ni, np, ni) = f.By_int();
    J.block(0, 2 * ni, ni, np) = -f.Bx_int().transpose();
    J.block(ni, 2 * ni, ni, np) = -f.By_int().transpose();
    J.block(2 * ni, 2 * ni + np, np, 1) = f.p_mean;
    J.block(2 * ni + np, 2 * ni, 1, np) = f.p_mean.transpose();
    return J;
  }
};

Field make_velocity(const DiscreteForms& f, Eigen::VectorXd coeffs) {
  Field out;
  out.kind = FieldKind::velocity;
  out.domain = DomainTag::physical(f.A);
  out.coeffs = std::move(coeffs);
  return out;
}

Field make_pressure(const DiscreteForms& f, Eigen::VectorXd coeffs) {
  Field out;
  out.kind = FieldKind::pressure;
  out.domain = DomainTag::physical(f.A);
  out.coeffs = std::move(coeffs);
  return out;
}

}  // namespace

SteadyResult solve_steady(const DiscreteForms& forms, const ParameterPoint& mu,
                          const Field* guess, const SteadyOptions& opts) {
  if (std::abs(mu.A - forms.A) > 1e-12 * std::max(1.0, forms.A))
    throw Error("solve_steady: forms assembled at a different aspect ratio");
  Workspace ws(forms);
  const int ni = ws.ni, np = ws.np;

  Eigen::VectorXd u_full = Eigen::VectorXd::Zero(2 * forms.nv());
  if (guess) {
    if (guess->coeffs.size() != 2 * forms.nv()) throw Error("solve_steady: guess size mismatch");
    u_full = guess->coeffs;
    const auto& g = *forms.grid;
    for (int idx = 0; idx < forms.nv(); ++idx) {
      if (g.boundary_vnode(idx)) {
        u_full[idx] = 0.0;
        u_full[forms.nv() + idx] = 0.0;
      }
    }
  }
  Eigen::VectorXd p = Eigen::VectorXd::Zero(np);

  const Eigen::VectorXd f_gr = forms.forcing(mu.Gr);
  const Eigen::VectorXd fi = ws.restrict_rows(f_gr);
  Eigen::VectorXd zero_p = Eigen::VectorXd::Zero(np);
  const double f_scale = ws.dual_norm(fi, zero_p, 0.0);
  const double tol = opts.tol * std::max(1.0, f_scale);

  Eigen::VectorXd r_u, r_p;
  double r_mean = 0.0;
  ws.residual(u_full, p, mu.Gr, r_u, r_p, r_mean);
  double res = ws.dual_norm(r_u, r_p, r_mean);

  SteadyResult out;
  int it = 0;
  for (; it < opts.max_iter && res > tol; ++it) {
    const Eigen::MatrixXd J = ws.jacobian(u_full);
    LuIR lu(J);
    Eigen::VectorXd rhs(ws.n);
    rhs.head(2 * ni) = -r_u;
    rhs.segment(2 * ni, np) = -r_p;
    rhs[2 * ni + np] = -r_mean;
    const Eigen::VectorXd dz = lu.solve(rhs);

    double alpha = 1.0;
    Eigen::VectorXd u_try, p_try;
    while (true) {
      u_try = u_full + alpha * ws.to_full(dz.head(2 * ni));
      p_try = p + alpha * dz.segment(2 * ni, np);
      Eigen::VectorXd ru2, rp2;
      double rm2 = 0.0;
      ws.residual(u_try, p_try, mu.Gr, ru2, rp2, rm2);
      const double res2 = ws.dual_norm(ru2, rp2, rm2);
      if (res2 < res || alpha <= opts.min_damping) {
        u_full = u_try;
        p = p_try;
        r_u = ru2;
        r_p = rp2;
        r_mean = rm2;
        res = res2;
        break;
      }
      alpha *= 0.5;
    }
  }

  out.velocity = make_velocity(forms, u_full);
  out.pressure = make_pressure(forms, p);
  out.converged = res <= tol;
  out.iterations = it;
  out.residual = res;
  return out;
}

SteadyResult steady_from_zero(const DiscreteForms& forms, const ParameterPoint& mu,
                              const SteadyOptions& opts) {
  SteadyResult r = solve_steady(forms, mu, nullptr, opts);
  if (r.converged || mu.Gr == 0.0) return r;
  // ramp the forcing: warm-start through a short Gr sequence
  const int n_ramp = 8;
  Field guess;
  const Field* gp = nullptr;
  for (int k = 1; k <= n_ramp; ++k) {
    const double gr_k = mu.Gr * k / n_ramp;
    r = solve_steady(forms, {mu.A, gr_k}, gp, opts);
    if (!r.converged) return r;
    guess = r.velocity;
    gp = &guess;
  }
  return r;
}

Trajectory solve_transient(const DiscreteForms& forms, const ParameterPoint& mu,
                           const Field& u0, const TransientOptions& opts) {
  if (opts.dt <= 0.0) throw Error("solve_transient: dt must be positive");
  if (u0.coeffs.size() != 2 * forms.nv()) throw Error("solve_transient: initial state size");
  Workspace ws(forms);
  const int ni = ws.ni, np = ws.np, nv = forms.nv();

  const auto lhs = [&](double beta0_over_dt) {
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(ws.n, ws.n);
    J.block(0, 0, ni, ni) = beta0_over_dt * forms.Ms_int() + forms.Ks_int();
    J.block(ni, ni, ni, ni) = J.block(0, 0, ni, ni);
    J.block(2 * ni, 0, np, ni) = forms.Bx_int();
    J.block(2 * ni, ni, np, ni) = forms.By_int();
    J.block(0, 2 * ni, ni, np) = -forms.Bx_int().transpose();
    J.block(ni, 2 * ni, ni, np) = -forms.By_int().transpose();
    J.block(2 * ni, 2 * ni + np, np, 1) = forms.p_mean;
    J.block(2 * ni + np, 2 * ni, 1, np) = forms.p_mean.transpose();
    return J;
  };

  const Eigen::VectorXd f_buoy = ws.restrict_rows(forms.forcing(mu.Gr));
  auto rhs_forcing = [&](double t) {
    Eigen::VectorXd f = f_buoy;
    if (opts.extra_forcing) f += ws.restrict_rows(opts.extra_forcing(t));
    return f;
  };
  auto conv_of = [&](const Eigen::VectorXd& ui) -> Eigen::VectorXd {
    if (!opts.convection_on) return Eigen::VectorXd::Zero(2 * ni);
    return ws.restrict_rows(forms.convection(ws.to_full(ui)));
  };
  auto mass_i = [&](const Eigen::VectorXd& ui) {
    Eigen::VectorXd out(2 * ni);
    out.head(ni) = forms.Ms_int() * ui.head(ni);
    out.tail(ni) = forms.Ms_int() * ui.tail(ni);
    return out;
  };

  // one implicit step: solve (b0/dt M + K) u + B'p = M*hist/dt + f - conv_ex
  auto step = [&](const LuIR& lu, double inv_dt, const Eigen::VectorXd& hist,
                  const Eigen::VectorXd& conv_ex, double t_new) {
    Eigen::VectorXd rhs(ws.n);
    rhs.head(2 * ni) = mass_i(hist) * inv_dt + rhs_forcing(t_new) - conv_ex;
    rhs.segment(2 * ni, np).setZero();
    rhs[2 * ni + np] = 0.0;
    const Eigen::VectorXd z = lu.solve(rhs);
    return Eigen::VectorXd(z.head(2 * ni));
  };

  Trajectory traj;
  traj.mu = mu;
  const int n_steps = static_cast<int>(std::llround(opts.t_end / opts.dt));

  Eigen::VectorXd u_prev2, u_prev1, u_cur = ws.to_interior(u0.coeffs);
  Eigen::VectorXd c_prev2, c_prev1, c_cur = conv_of(u_cur);

  auto record = [&](int step_idx, const Eigen::VectorXd& ui) {
    const double t = step_idx * opts.dt;
    if (opts.observe) {
      double v = 0.0;
      if (opts.observe_point) {
        const Eigen::VectorXd full = ws.to_full(ui);
        v = forms.grid->eval_scalar_at(full.head(nv), forms.A, (*opts.observe_point)[0],
                                       (*opts.observe_point)[1]);
      }
      opts.observe(t, v);
    }
    if (step_idx % opts.sample_every == 0 || step_idx == n_steps) {
      traj.times.push_back(t);
      traj.states.push_back(make_velocity(forms, ws.to_full(ui)));
    }
  };

  record(0, u_cur);
  if (n_steps == 0) return traj;

  // --- startup: integrate [0, dt] with BDF1/BDF2 substeps ---
  {
    const int m = opts.startup_substeps > 0
                      ? opts.startup_substeps
                      : std::max(4, static_cast<int>(std::ceil(2.0 / std::sqrt(opts.dt))));
    const double h = opts.dt / m;
    Eigen::VectorXd us_prev = u_cur, cs_prev = c_cur;
    // BDF1 substep
    LuIR lu1(lhs(1.0 / h));
    Eigen::VectorXd us_cur = step(lu1, 1.0 / h, us_prev, cs_prev, h);
    Eigen::VectorXd cs_cur = conv_of(us_cur);
    if (m > 1) {
      LuIR lu2(lhs(1.5 / h));
      for (int k = 2; k <= m; ++k) {
        const Eigen::VectorXd hist = 2.0 * us_cur - 0.5 * us_prev;
        const Eigen::VectorXd cex = 2.0 * cs_cur - cs_prev;
        Eigen::VectorXd us_next = step(lu2, 1.0 / h, hist, cex, k * h);
        us_prev = us_cur;
        cs_prev = cs_cur;
        us_cur = us_next;
        cs_cur = conv_of(us_cur);
      }
    }
    u_prev1 = u_cur;
    c_prev1 = c_cur;
    u_cur = us_cur;
    c_cur = cs_cur;
    record(1, u_cur);
  }

  auto check_blowup = [&](const Eigen::VectorXd& ui, int k) {
    const double nrm = forms.l2_norm(ws.to_full(ui));
    if (!std::isfinite(nrm) || nrm > opts.blowup_norm) {
      std::ostringstream msg;
      msg << "transient blow-up at step " << k << ": ||u|| = " << nrm;
      traj.blew_up = true;
      traj.diagnostic = msg.str();
      return true;
    }
    return false;
  };

  if (n_steps >= 2) {
    // one BDF2 macro step
    LuIR lu2(lhs(1.5 / opts.dt));
    const Eigen::VectorXd hist = 2.0 * u_cur - 0.5 * u_prev1;
    const Eigen::VectorXd cex = 2.0 * c_cur - c_prev1;
    Eigen::VectorXd u_next = step(lu2, 1.0 / opts.dt, hist, cex, 2.0 * opts.dt);
    u_prev2 = u_prev1;
    c_prev2 = c_prev1;
    u_prev1 = u_cur;
    c_prev1 = c_cur;
    u_cur = u_next;
    c_cur = conv_of(u_cur);
    if (check_blowup(u_cur, 2)) return traj;
    record(2, u_cur);
  }

  if (n_steps >= 3) {
    LuIR lu3(lhs((11.0 / 6.0) / opts.dt));
    for (int k = 3; k <= n_steps; ++k) {
      const Eigen::VectorXd hist = 3.0 * u_cur - 1.5 * u_prev1 + (1.0 / 3.0) * u_prev2;
      const Eigen::VectorXd cex = 3.0 * c_cur - 3.0 * c_prev1 + c_prev2;
      Eigen::VectorXd u_next = step(lu3, 1.0 / opts.dt, hist, cex, k * opts.dt);
      u_prev2 = u_prev1;
      c_prev2 = c_prev1;
      u_prev1 = u_cur;
      c_prev1 = c_cur;
      u_cur = u_next;
      c_cur = conv_of(u_cur);
      if (check_blowup(u_cur, k)) return traj;
      record(k, u_cur);
    }
  }
  return traj;
}

double observable(const DiscreteForms& forms, const Field& u, const Eigen::Vector2d& point) {
  if (u.kind != FieldKind::velocity) throw Error("observable: velocity field expected");
  return forms.grid->eval_scalar_at(u.ux(), forms.A, point[0], point[1]);
}

StreamfunctionSolver::StreamfunctionSolver(const DiscreteForms& forms) : forms_(forms) {
  llt_.compute(forms.Ks_int());
  if (llt_.info() != Eigen::Success)
    throw Error("StreamfunctionSolver: stiffness factorization failed");
}

Eigen::VectorXd StreamfunctionSolver::compute(const Field& u) const {
  instrument::bump_full_order();
  const Grid& g = *forms_.grid;
  const int nv = forms_.nv();
  Eigen::VectorXd uy_dx, ux_dy;
  kernels::eval_scalar(g, forms_.A, u.coeffs.head(nv), nullptr, nullptr, &ux_dy);
  kernels::eval_scalar(g, forms_.A, u.coeffs.tail(nv), nullptr, &uy_dx, nullptr);
  const Eigen::VectorXd vorticity = forms_.qw.cwiseProduct(uy_dx - ux_dy);
  const Eigen::VectorXd rhs_full = kernels::project_scalar(g, vorticity);
  const auto& interior = g.interior();
  Eigen::VectorXd rhs(interior.size());
  for (std::size_t k = 0; k < interior.size(); ++k) rhs[k] = rhs_full[interior[k]];
  const Eigen::VectorXd psi_i = llt_.solve(rhs);
  Eigen::VectorXd psi = Eigen::VectorXd::Zero(nv);
  for (std::size_t k = 0; k < interior.size(); ++k) psi[interior[k]] = psi_i[k];
  return psi;
}

namespace {

// Peaks of a lattice scalar by superlevel-set persistence: returns
// (value, prominence) per born component, union-find over nodes in
// descending value order. An elongated cell whose streamfunction carries two
// near-equal cores yields one high-prominence peak plus shallow ones.
std::vector<std::pair<double, double>> lattice_peaks(const Grid& g, const Eigen::VectorXd& vals) {
  const int n = g.n_vnodes();
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (vals[a] != vals[b]) return vals[a] > vals[b];
    return a < b;
  });
  std::vector<int> parent(n, -1);
  std::vector<int> comp_of(n);
  std::vector<double> birth;
  std::vector<double> death;
  auto find = [&](int x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  };
  for (int idx : order) {
    parent[idx] = idx;
    comp_of[idx] = static_cast<int>(birth.size());
    birth.push_back(vals[idx]);
    death.push_back(vals.minCoeff());
    const int i = idx % g.nvx, j = idx / g.nvx;
    for (int dj = -1; dj <= 1; ++dj) {
      for (int di = -1; di <= 1; ++di) {
        if (di == 0 && dj == 0) continue;
        const int ni = i + di, nj = j + dj;
        if (ni < 0 || ni >= g.nvx || nj < 0 || nj >= g.nvy) continue;
        const int nidx = g.vnode(ni, nj);
        if (parent[nidx] < 0) continue;
        int ra = find(idx), rb = find(nidx);
        if (ra == rb) continue;
        if (birth[comp_of[ra]] < birth[comp_of[rb]]) std::swap(ra, rb);
        death[comp_of[rb]] = vals[idx];  // younger component dies here
        parent[rb] = ra;
      }
    }
  }
  std::vector<std::pair<double, double>> peaks;
  for (std::size_t k = 0; k < birth.size(); ++k)
    peaks.emplace_back(birth[k], birth[k] - death[k]);
  return peaks;
}

}  // namespace

int vortex_count(const StreamfunctionSolver& solver, const Grid& g, const Field& u,
                 double threshold) {
  const Eigen::VectorXd psi = solver.compute(u);
  const double amax = psi.cwiseAbs().maxCoeff();
  if (amax <= 0.0) return 0;
  // A cell counts when both its streamfunction amplitude and its prominence
  // exceed the threshold fraction of the global amplitude.
  int count = 0;
  for (const auto& [value, prom] : lattice_peaks(g, psi))
    if (value >= threshold * amax && prom >= threshold * amax) ++count;
  for (const auto& [value, prom] : lattice_peaks(g, Eigen::VectorXd(-psi)))
    if (value >= threshold * amax && prom >= threshold * amax) ++count;
  return count;
}

int vortex_count(const DiscreteForms& forms, const Field& u, double threshold) {
  StreamfunctionSolver solver(forms);
  return vortex_count(solver, *forms.grid, u, threshold);
}

double weak_divergence(const DiscreteForms& forms, const Field& u) {
  return forms.weak_divergence_residual(u.coeffs);
}

ContinuationResult continue_steady(const DiscreteForms& forms, const Field& seed_velocity,
                                   double gr_start, double gr_end, double step0,
                                   const Eigen::Vector2d& obs_point, const SteadyOptions& opts) {
  if (step0 <= 0.0) throw Error("continue_steady: step must be positive");
  ContinuationResult out;
  StreamfunctionSolver psi(forms);
  const double dir = (gr_end >= gr_start) ? 1.0 : -1.0;
  const double floor_step = step0 / 1024.0;

  Field current = seed_velocity;
  SteadyResult r = solve_steady(forms, {forms.A, gr_start}, &current, opts);
  if (!r.converged) return out;
  current = r.velocity;
  auto push = [&](double gr, const SteadyResult& sr) {
    BranchPoint bp;
    bp.Gr = gr;
    bp.velocity = sr.velocity;
    bp.pressure = sr.pressure;
    bp.observable = observable(forms, sr.velocity, obs_point);
    bp.vortices = vortex_count(psi, *forms.grid, sr.velocity);
    out.points.push_back(std::move(bp));
  };
  push(gr_start, r);

  double gr = gr_start;
  double step = step0;
  while (dir * (gr_end - gr) > 1e-12 * std::max(1.0, std::abs(gr_end))) {
    const double gr_next = (dir > 0) ? std::min(gr + step, gr_end) : std::max(gr - step, gr_end);
    SteadyResult trial = solve_steady(forms, {forms.A, gr_next}, &current, opts);
    if (trial.converged) {
      gr = gr_next;
      current = trial.velocity;
      push(gr, trial);
      if (step < step0) step = std::min(step0, 2.0 * step);
    } else {
      step *= 0.5;
      if (step < floor_step) return out;  // candidate fold: branch ends here
    }
  }
  out.completed = true;
  return out;
}

}  // namespace rbcav::fom
