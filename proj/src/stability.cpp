#include "rbcav/stability.hpp"

#include "rbcav/geometry.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

namespace rbcav::stability {

Eigen::MatrixXd assemble_T(const rom::ReducedOperators& ops, const ParameterPoint& mu,
                           const Eigen::VectorXd& base) {
  return ops.convection_linearized(mu, base);
}

Eigen::MatrixXd assemble_L(const rom::ReducedOperators& ops, const ParameterPoint& mu,
                           const Eigen::VectorXd& base) {
  return assemble_T(ops, mu, base) + ops.stiffness(mu);
}

Eigen::MatrixXd growth_matrix(const rom::ReducedOperators& ops, const ParameterPoint& mu,
                              const Eigen::VectorXd& base) {
  const Eigen::MatrixXd L = assemble_L(ops, mu, base);
  return -ops.mass(mu).llt().solve(L);
}

std::vector<Complex> eigs_dense(const Eigen::MatrixXd& A, double residual_tol, int size_cap) {
  if (A.rows() != A.cols()) throw Error("eigs_dense: square matrix expected");
  const int n = static_cast<int>(A.rows());
  if (n > size_cap) throw Error("eigs_dense: matrix exceeds the configured size cap");
  if (n == 0) return {};
  Eigen::EigenSolver<Eigen::MatrixXd> es(A, true);
  if (es.info() != Eigen::Success) throw Error("eigs_dense: QR iteration did not converge");

  const double anorm = A.norm();
  std::vector<Complex> out(n);
  for (int i = 0; i < n; ++i) out[i] = es.eigenvalues()[i];

  // spot-check eigenpair residuals on a deterministic sample
  const Eigen::MatrixXcd V = es.eigenvectors();
  const Eigen::MatrixXcd Ac = A.cast<Complex>();
  for (int i = 0; i < n; i += std::max(1, n / 8)) {
    const Eigen::VectorXcd v = V.col(i);
    const double res = (Ac * v - es.eigenvalues()[i] * v).norm() / std::max(v.norm(), 1e-300);
    if (res > residual_tol * std::max(anorm, 1e-300))
      throw Error("eigs_dense: eigenpair residual above tolerance");
  }

  std::sort(out.begin(), out.end(), [](const Complex& a, const Complex& b) {
    if (a.real() != b.real()) return a.real() > b.real();
    return a.imag() > b.imag();
  });
  return out;
}

StabilitySpectrum spectrum(const rom::ReducedOperators& ops, const ParameterPoint& mu,
                           const Eigen::VectorXd& base, OperatorKind op) {
  StabilitySpectrum s;
  s.op = op;
  s.mu = mu;
  s.base = {base, mu, std::nullopt};
  const Eigen::MatrixXd A =
      (op == OperatorKind::advection) ? assemble_T(ops, mu, base) : growth_matrix(ops, mu, base);
  s.eigenvalues = eigs_dense(A);
  return s;
}

StateProvider rom_provider(const rom::ReducedOperators& ops, const rom::RomSteadyOptions& opts) {
  return [&ops, opts](const ParameterPoint& mu,
                      const Eigen::VectorXd& warm) -> std::optional<Eigen::VectorXd> {
    const auto r = rom::rom_solve_steady(ops, mu, warm, opts);
    if (!r.converged) return std::nullopt;
    return r.state.a;
  };
}

Branch continue_branch(const BranchContext& ctx, double A, double gr_start, double gr_end,
                       const ContinuationOptions& opts, const Eigen::VectorXd& seed) {
  if (!ctx.ops) throw Error("continue_branch: missing reduced operators");
  if (opts.step0 <= 0.0) throw Error("continue_branch: step must be positive");
  Branch branch;
  branch.forward = gr_end >= gr_start;

  std::unique_ptr<fom::StreamfunctionSolver> psi;
  if (ctx.basis && ctx.forms) {
    if (std::abs(ctx.forms->A - A) > 1e-12 * std::max(1.0, A))
      throw Error("continue_branch: labeling forms assembled at a different aspect ratio");
    psi = std::make_unique<fom::StreamfunctionSolver>(*ctx.forms);
  }

  auto push = [&](const ParameterPoint& mu, const Eigen::VectorXd& a) {
    BranchPoint bp;
    bp.mu = mu;
    bp.a = a;
    if (psi) {
      const Field u = rom::reconstruct(*ctx.basis, {a, mu, std::nullopt});
      bp.observable = ctx.forms->grid->eval_scalar_at(u.ux(), mu.A, ctx.obs_point[0],
                                                      ctx.obs_point[1]);
      bp.vortices = fom::vortex_count(*psi, *ctx.forms->grid, u);
    }
    branch.points.push_back(std::move(bp));
  };

  auto first = rom::rom_solve_steady(*ctx.ops, {A, gr_start}, seed, opts.newton);
  if (!first.converged) return branch;
  Eigen::VectorXd a = first.state.a;
  push({A, gr_start}, a);

  const double dir = branch.forward ? 1.0 : -1.0;
  const double floor_step = opts.step0 * opts.step_floor_factor;
  double gr = gr_start;
  double step = opts.step0;
  while (dir * (gr_end - gr) > 1e-12 * std::max(1.0, std::abs(gr_end))) {
    const double gr_next =
        (dir > 0) ? std::min(gr + step, gr_end) : std::max(gr - step, gr_end);
    const auto trial = rom::rom_solve_steady(*ctx.ops, {A, gr_next}, a, opts.newton);
    if (trial.converged) {
      gr = gr_next;
      a = trial.state.a;
      push({A, gr}, a);
      if (step < opts.step0) step = std::min(opts.step0, 2.0 * step);
    } else {
      step *= 0.5;
      if (step < floor_step) return branch;  // candidate fold: endpoint flagged by !completed
    }
  }
  branch.completed = true;
  return branch;
}

namespace {

using OperatorEval = std::function<Eigen::MatrixXd(const ParameterPoint&, const Eigen::VectorXd&)>;

struct SeqPoint {
  ParameterPoint mu;
  Eigen::VectorXd a;
  std::vector<Complex> eigs;
  double matrix_norm = 0.0;
};

SeqPoint make_point(const OperatorEval& eval, const ParameterPoint& mu,
                    const Eigen::VectorXd& a) {
  SeqPoint p;
  p.mu = mu;
  p.a = a;
  const Eigen::MatrixXd A = eval(mu, a);
  p.matrix_norm = A.norm();
  p.eigs = eigs_dense(A);
  return p;
}

double spectral_radius(const std::vector<Complex>& e) {
  double r = 0.0;
  for (const auto& z : e) r = std::max(r, std::abs(z));
  return r;
}

// greedy nearest-neighbor matching; returns max matched distance
double tracking_distance(const std::vector<Complex>& ea, const std::vector<Complex>& eb) {
  const double scale = std::max({spectral_radius(ea), spectral_radius(eb), 1e-300});
  std::vector<bool> used(eb.size(), false);
  double dmax = 0.0;
  for (const auto& za : ea) {
    double best = std::numeric_limits<double>::infinity();
    int bi = -1;
    for (std::size_t j = 0; j < eb.size(); ++j) {
      if (used[j]) continue;
      const double d = std::abs(za - eb[j]);
      if (d < best) {
        best = d;
        bi = static_cast<int>(j);
      }
    }
    if (bi >= 0) {
      used[bi] = true;
      dmax = std::max(dmax, best);
    }
  }
  return dmax / scale;
}

std::vector<double> real_eigs(const SeqPoint& p, double im_tol_rel) {
  const double tol = im_tol_rel * std::max(p.matrix_norm, 1e-300);
  std::vector<double> out;
  for (const auto& z : p.eigs)
    if (std::abs(z.imag()) <= tol) out.push_back(z.real());
  std::sort(out.begin(), out.end());
  return out;
}

// least-stable complex eigenvalue (positive imaginary representative)
std::optional<Complex> leading_pair(const SeqPoint& p, double im_tol_rel) {
  const double tol = im_tol_rel * std::max(p.matrix_norm, 1e-300);
  std::optional<Complex> best;
  for (const auto& z : p.eigs) {
    if (z.imag() <= tol) continue;
    if (!best || z.real() > best->real()) best = z;
  }
  return best;
}

struct Crossing {
  ParameterPoint mu;
  Complex eig;
  bool is_pair = false;
  int before_idx = 0;  // index into the original branch
};

}  // namespace

namespace detail {

std::vector<BifurcationPoint> detect_generic(const OperatorEval& eval, const Branch& branch,
                                             const DetectOptions& opts, StateProvider provider,
                                             EigPath* path, bool hopf_mode,
                                             double im_tol_override_rel = -1.0) {
  std::vector<BifurcationPoint> out;
  if (branch.points.size() < 2) return out;
  const double im_rel = im_tol_override_rel > 0 ? im_tol_override_rel : opts.im_tol_rel;

  // evaluate spectra along the branch, subdividing where tracking jumps
  std::vector<SeqPoint> seq;
  seq.push_back(make_point(eval, branch.points.front().mu, branch.points.front().a));
  std::vector<int> orig_idx{0};
  for (std::size_t k = 1; k < branch.points.size(); ++k) {
    std::vector<SeqPoint> pending{make_point(eval, branch.points[k].mu, branch.points[k].a)};
    std::vector<int> depth{0};
    while (!pending.empty()) {
      const SeqPoint& prev = seq.back();
      SeqPoint& next = pending.back();
      const double jump = tracking_distance(prev.eigs, next.eigs);
      if (jump > opts.max_jump_rel && depth.back() < opts.max_subdivide && provider) {
        const ParameterPoint mid_mu{prev.mu.A, 0.5 * (prev.mu.Gr + next.mu.Gr)};
        const auto mid_a = provider(mid_mu, prev.a);
        if (mid_a) {
          pending.push_back(make_point(eval, mid_mu, *mid_a));
          depth.push_back(depth.back() + 1);
          continue;
        }
      }
      seq.push_back(std::move(next));
      orig_idx.push_back(static_cast<int>(k) - 1);
      pending.pop_back();
      depth.pop_back();
    }
    orig_idx.back() = static_cast<int>(k);
  }

  if (path) {
    for (const auto& p : seq) {
      for (std::size_t i = 0; i < p.eigs.size(); ++i)
        path->push_back({p.mu.Gr, static_cast<int>(i), p.eigs[i].real(), p.eigs[i].imag()});
    }
  }

  const double gr_span = std::abs(seq.back().mu.Gr - seq.front().mu.Gr);
  std::vector<Crossing> crossings;

  auto bisect = [&](SeqPoint lo, SeqPoint hi, double v_lo, double v_hi,
                    auto&& value_of) -> std::optional<Crossing> {
    const double gr_tol =
        opts.gr_tol_rel * std::max(1.0, std::max(std::abs(lo.mu.Gr), std::abs(hi.mu.Gr)));
    Complex last_eig = hopf_mode ? *leading_pair(hi, im_rel) : Complex(v_hi, 0.0);
    while (std::abs(hi.mu.Gr - lo.mu.Gr) > gr_tol) {
      const ParameterPoint mid_mu{lo.mu.A, 0.5 * (lo.mu.Gr + hi.mu.Gr)};
      if (!provider) break;
      const auto mid_a = provider(mid_mu, lo.a);
      if (!mid_a) break;
      SeqPoint mid = make_point(eval, mid_mu, *mid_a);
      const auto vm = value_of(mid, 0.5 * (v_lo + v_hi));
      if (!vm) break;
      last_eig = vm->second;
      if ((vm->first < 0.0) == (v_lo < 0.0)) {
        lo = std::move(mid);
        v_lo = vm->first;
      } else {
        hi = std::move(mid);
        v_hi = vm->first;
      }
    }
    Crossing c;
    c.mu = {lo.mu.A, 0.5 * (lo.mu.Gr + hi.mu.Gr)};
    c.eig = last_eig;
    return c;
  };

  for (std::size_t k = 0; k + 1 < seq.size(); ++k) {
    const SeqPoint& a = seq[k];
    const SeqPoint& b = seq[k + 1];
    if (!hopf_mode) {
      // match real eigenvalues between the two spectra by value
      std::vector<double> ra = real_eigs(a, im_rel), rb = real_eigs(b, im_rel);
      std::vector<bool> used(rb.size(), false);
      for (double va : ra) {
        double best = std::numeric_limits<double>::infinity();
        int bi = -1;
        for (std::size_t j = 0; j < rb.size(); ++j) {
          if (used[j]) continue;
          const double d = std::abs(va - rb[j]);
          if (d < best) {
            best = d;
            bi = static_cast<int>(j);
          }
        }
        if (bi < 0) continue;
        used[bi] = true;
        const double vb = rb[bi];
        if (va == 0.0 || vb == 0.0 || (va < 0.0) == (vb < 0.0)) continue;
        auto value_of = [&](const SeqPoint& p,
                            double guess) -> std::optional<std::pair<double, Complex>> {
          const auto reals = real_eigs(p, im_rel);
          if (reals.empty()) return std::nullopt;
          double best_v = reals.front();
          for (double v : reals)
            if (std::abs(v - guess) < std::abs(best_v - guess)) best_v = v;
          return std::make_pair(best_v, Complex(best_v, 0.0));
        };
        auto c = bisect(a, b, va, vb, value_of);
        if (c) {
          c->before_idx = orig_idx[k];
          crossings.push_back(*c);
        }
      }
    } else {
      const auto pa = leading_pair(a, im_rel);
      const auto pb = leading_pair(b, im_rel);
      if (!pa || !pb) continue;
      if ((pa->real() < 0.0) == (pb->real() < 0.0)) continue;
      auto value_of = [&](const SeqPoint& p,
                          double) -> std::optional<std::pair<double, Complex>> {
        const auto lp = leading_pair(p, im_rel);
        if (!lp) return std::nullopt;
        return std::make_pair(lp->real(), *lp);
      };
      auto c = bisect(a, b, pa->real(), pb->real(), value_of);
      if (c) {
        c->is_pair = true;
        c->before_idx = orig_idx[k];
        crossings.push_back(*c);
      }
    }
  }

  // deduplicate refined crossings within gr_tol of one another
  std::vector<Crossing> unique;
  for (const auto& c : crossings) {
    const double gr_tol = opts.gr_tol_rel * std::max(1.0, std::abs(c.mu.Gr));
    bool dup = false;
    for (const auto& u : unique)
      if (std::abs(u.mu.Gr - c.mu.Gr) <= gr_tol && u.is_pair == c.is_pair) dup = true;
    if (!dup) unique.push_back(c);
  }
  (void)gr_span;

  for (const auto& c : unique) {
    BifurcationPoint bp;
    bp.mu = c.mu;
    bp.critical_eigenvalue = c.eig;
    const double im_abs = std::abs(c.eig.imag());
    const bool pair_like = c.is_pair && im_abs > 0.0;
    bp.kind = pair_like ? BifKind::hopf : BifKind::steady;
    if (bp.kind == BifKind::hopf) bp.frequency = im_abs / (2.0 * M_PI);
    const int bi = std::clamp(c.before_idx, 0, static_cast<int>(branch.points.size()) - 2);
    bp.branch_before = branch.points[bi].vortices;
    bp.branch_after = branch.points[bi + 1].vortices;
    out.push_back(bp);
  }
  std::sort(out.begin(), out.end(),
            [](const BifurcationPoint& x, const BifurcationPoint& y) { return x.mu.Gr < y.mu.Gr; });
  return out;
}

}  // namespace detail

std::vector<BifurcationPoint> detect_steady(const rom::ReducedOperators& ops, const Branch& branch,
                                            const DetectOptions& opts, StateProvider provider,
                                            EigPath* path) {
  if (!provider) provider = rom_provider(ops);
  OperatorEval eval = [&ops](const ParameterPoint& mu, const Eigen::VectorXd& a) {
    return assemble_T(ops, mu, a);
  };
  return detail::detect_generic(eval, branch, opts, provider, path, false);
}

std::vector<BifurcationPoint> detect_hopf(const rom::ReducedOperators& ops, const Branch& branch,
                                          const DetectOptions& opts, StateProvider provider,
                                          EigPath* path) {
  if (!provider) provider = rom_provider(ops);
  OperatorEval eval = [&ops](const ParameterPoint& mu, const Eigen::VectorXd& a) {
    return growth_matrix(ops, mu, a);
  };
  auto pts = detail::detect_generic(eval, branch, opts, provider, path, true);
  // drop pure-real crossings that slipped through classification: they are
  // reported by detect_steady instead
  std::vector<BifurcationPoint> out;
  for (auto& p : pts)
    if (p.kind == BifKind::hopf) out.push_back(p);
  return out;
}

ScanResult scan_plane(const std::vector<FamilyBasis>& families, const Grid& grid,
                      std::span<const double> A_values, const ScanOptions& opts) {
  ScanResult result;
  auto warn = [&](const std::string& msg) {
    if (opts.warn) opts.warn(msg);
  };

  // reference-domain tables and Galerkin operators per family
  std::vector<rom::ReducedOperators> ops(families.size());
  std::vector<kernels::ModeTables> tabs(families.size());
  Eigen::VectorXd w, qx, qy;
  grid.quadrature_geometry(grid.ref_A, w, qx, qy);
  for (std::size_t fi = 0; fi < families.size(); ++fi) {
    if (families[fi].basis.size() == 0) continue;
    ops[fi] = rom::assemble_reduced(families[fi].basis, grid);
    tabs[fi] = kernels::mode_tables(grid, grid.ref_A, families[fi].basis.modes);
  }

  for (std::size_t trial = 0; trial < families.size(); ++trial) {
    if (families[trial].basis.size() == 0) {
      warn("scan_plane: empty trial family " + families[trial].name + ", skipped");
      continue;
    }
    const auto& trial_ops = ops[trial];
    for (std::size_t test = 0; test < families.size(); ++test) {
      if (families[test].basis.size() == 0) {
        warn("scan_plane: empty test family " + families[test].name + ", skipped");
        continue;
      }
      const int n = std::min(families[trial].basis.size(), families[test].basis.size());

      // cross blocks (rows: test, cols/aux: trial)
      const auto& tt = tabs[trial];
      const auto& vt = tabs[test];
      const Eigen::MatrixXd mxx = kernels::weighted_gram(vt.ux, tt.ux, w);
      const Eigen::MatrixXd myy = kernels::weighted_gram(vt.uy, tt.uy, w);
      const Eigen::MatrixXd kxdx = kernels::weighted_gram(vt.dux_dx, tt.dux_dx, w);
      const Eigen::MatrixXd kxdy = kernels::weighted_gram(vt.dux_dy, tt.dux_dy, w);
      const Eigen::MatrixXd kydx = kernels::weighted_gram(vt.duy_dx, tt.duy_dx, w);
      const Eigen::MatrixXd kydy = kernels::weighted_gram(vt.duy_dy, tt.duy_dy, w);
      const kernels::Tensor3 cx =
          kernels::advection_tensor(vt.ux, tt.dux_dx, tt.dux_dy, tt.ux, tt.uy, w);
      const kernels::Tensor3 cy =
          kernels::advection_tensor(vt.uy, tt.duy_dx, tt.duy_dy, tt.ux, tt.uy, w);

      auto T_cross = [&](const ParameterPoint& mu, const Eigen::VectorXd& a) {
        const double s = mu.A / grid.ref_A;
        const double thy = 1.0 / (s * s);
        Eigen::MatrixXd T = Eigen::MatrixXd::Zero(n, n);
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j) {
            double sx = 0.0, sy = 0.0;
            for (int k = 0; k < cx.nk; ++k) {
              sx += (cx(i, j, k) + cx(i, k, j)) * a[k];
              sy += (cy(i, j, k) + cy(i, k, j)) * a[k];
            }
            T(i, j) = sx + thy * sy;
          }
        return T;
      };
      auto K_cross = [&](const ParameterPoint& mu) {
        const double s = mu.A / grid.ref_A;
        return Eigen::MatrixXd(((1.0 / s) * kxdx + s * kxdy + std::pow(s, -3) * kydx +
                                (1.0 / s) * kydy)
                                   .topLeftCorner(n, n));
      };
      auto M_cross = [&](const ParameterPoint& mu) {
        const double s = mu.A / grid.ref_A;
        return Eigen::MatrixXd((s * mxx + (1.0 / s) * myy).topLeftCorner(n, n));
      };

      const bool galerkin = (trial == test);
      OperatorEval steady_eval = [&](const ParameterPoint& mu, const Eigen::VectorXd& a) {
        return Eigen::MatrixXd(T_cross(mu, a).topLeftCorner(n, n));
      };
      OperatorEval hopf_eval = [&](const ParameterPoint& mu, const Eigen::VectorXd& a) {
        const Eigen::MatrixXd L = T_cross(mu, a).topLeftCorner(n, n) + K_cross(mu);
        if (!galerkin) return Eigen::MatrixXd(-L);
        return Eigen::MatrixXd(-M_cross(mu).llt().solve(L));
      };

      for (double A : A_values) {
        // ramped reduced seed at gr_lo
        Eigen::VectorXd a0 = Eigen::VectorXd::Zero(trial_ops.N);
        bool seeded = true;
        for (int r = 1; r <= 4; ++r) {
          const ParameterPoint mu{A, opts.gr_lo * r / 4.0};
          const auto sr = rom::rom_solve_steady(trial_ops, mu, a0, opts.continuation.newton);
          if (!sr.converged) {
            seeded = false;
            break;
          }
          a0 = sr.state.a;
        }
        if (!seeded) {
          warn("scan_plane: seed failed for trial " + families[trial].name + " at A=" +
               std::to_string(A));
          continue;
        }
        BranchContext ctx;
        ctx.ops = &trial_ops;
        Branch branch =
            continue_branch(ctx, A, opts.gr_lo, opts.gr_hi, opts.continuation, a0);
        if (branch.points.size() < 2) {
          warn("scan_plane: branch too short for trial " + families[trial].name + " at A=" +
               std::to_string(A));
          continue;
        }
        auto provider = rom_provider(trial_ops, opts.continuation.newton);
        auto record = [&](const BifurcationPoint& bp) {
          ScanRecord r;
          r.trial = families[trial].name;
          r.test = families[test].name;
          r.A = A;
          r.gr_star = bp.mu.Gr;
          r.kind = bp.kind;
          r.re = bp.critical_eigenvalue.real();
          r.im = bp.critical_eigenvalue.imag();
          r.frequency = bp.frequency;
          result.records.push_back(std::move(r));
        };
        for (const auto& bp :
             detail::detect_generic(steady_eval, branch, opts.detect, provider, nullptr, false))
          record(bp);
        for (const auto& bp :
             detail::detect_generic(hopf_eval, branch, opts.detect, provider, nullptr, true))
          if (bp.kind == BifKind::hopf) record(bp);
      }
    }
  }

  for (double A : A_values) {
    std::optional<std::pair<double, double>> best;  // (gr*, freq)
    for (const auto& r : result.records) {
      if (r.A != A || r.kind != BifKind::hopf || !r.frequency) continue;
      if (!best || r.gr_star < best->first) best = {{r.gr_star, *r.frequency}};
    }
    if (best) result.frequency_curve.push_back({A, best->second});
  }
  return result;
}

}  // namespace rbcav::stability
