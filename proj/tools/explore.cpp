// Scratch exploration of the desk-scale branch structure (not installed).
#include "rbcav/fom.hpp"

#include <Eigen/Eigenvalues>

#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

using namespace rbcav;

namespace {

Eigen::MatrixXd divfree_basis(const DiscreteForms& f) {
  const auto& g = *f.grid;
  const int ni = static_cast<int>(g.interior().size());
  const int np = f.np();
  Eigen::MatrixXd B(np, 2 * ni);
  B.leftCols(ni) = f.Bx_int();
  B.rightCols(ni) = f.By_int();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(B, Eigen::ComputeFullV);
  const double smax = svd.singularValues()[0];
  int rank = 0;
  for (int i = 0; i < svd.singularValues().size(); ++i)
    if (svd.singularValues()[i] > 1e-11 * smax) ++rank;
  return svd.matrixV().rightCols(2 * ni - rank);
}

// least-stable real-eigenvalue direction of the constrained growth operator
Eigen::VectorXd critical_real_direction(const DiscreteForms& f, const Field& base) {
  const auto& g = *f.grid;
  const int ni = static_cast<int>(g.interior().size());
  const Eigen::MatrixXd Z = divfree_basis(f);
  Eigen::MatrixXd Kb = Eigen::MatrixXd::Zero(2 * ni, 2 * ni);
  Kb.topLeftCorner(ni, ni) = f.Ks_int();
  Kb.bottomRightCorner(ni, ni) = f.Ks_int();
  Eigen::MatrixXd Mb = Eigen::MatrixXd::Zero(2 * ni, 2 * ni);
  Mb.topLeftCorner(ni, ni) = f.Ms_int();
  Mb.bottomRightCorner(ni, ni) = f.Ms_int();
  const Eigen::MatrixXd T = f.convection_jacobian_interior(base.coeffs);
  const Eigen::MatrixXd S =
      -(Z.transpose() * Mb * Z).llt().solve(Z.transpose() * (Kb + T) * Z);
  Eigen::EigenSolver<Eigen::MatrixXd> es(S);
  int best = -1;
  double best_re = -1e300;
  for (int i = 0; i < es.eigenvalues().size(); ++i) {
    if (std::abs(es.eigenvalues()[i].imag()) > 1e-6 * std::abs(es.eigenvalues()[i].real()) + 1e-9)
      continue;
    if (es.eigenvalues()[i].real() > best_re) {
      best_re = es.eigenvalues()[i].real();
      best = i;
    }
  }
  printf("# critical real eig: %g\n", best_re);
  const Eigen::VectorXd y = es.eigenvectors().col(best).real();
  const Eigen::VectorXd vi = Z * y;
  // interior -> full
  Eigen::VectorXd full = Eigen::VectorXd::Zero(2 * f.nv());
  const auto& interior = g.interior();
  for (int k = 0; k < ni; ++k) {
    full[interior[k]] = vi[k];
    full[f.nv() + interior[k]] = vi[ni + k];
  }
  return full;
}

// Full-order growth spectrum about a steady state: eigenvalues of
// -M^{-1}(K + T) restricted to the discretely divergence-free subspace
// (nullspace of B), via SVD. Exploration-only ground truth.
std::vector<std::complex<double>> growth_spectrum(const DiscreteForms& f, const Field& base,
                                                  int n_print = 6) {
  const auto& g = *f.grid;
  const int ni = static_cast<int>(g.interior().size());
  const int np = f.np();
  Eigen::MatrixXd B(np, 2 * ni);
  B.leftCols(ni) = f.Bx_int();
  B.rightCols(ni) = f.By_int();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(B, Eigen::ComputeFullV);
  const double smax = svd.singularValues()[0];
  int rank = 0;
  for (int i = 0; i < svd.singularValues().size(); ++i)
    if (svd.singularValues()[i] > 1e-11 * smax) ++rank;
  const Eigen::MatrixXd Z = svd.matrixV().rightCols(2 * ni - rank);

  Eigen::MatrixXd Kb = Eigen::MatrixXd::Zero(2 * ni, 2 * ni);
  Kb.topLeftCorner(ni, ni) = f.Ks_int();
  Kb.bottomRightCorner(ni, ni) = f.Ks_int();
  Eigen::MatrixXd Mb = Eigen::MatrixXd::Zero(2 * ni, 2 * ni);
  Mb.topLeftCorner(ni, ni) = f.Ms_int();
  Mb.bottomRightCorner(ni, ni) = f.Ms_int();
  const Eigen::MatrixXd T = f.convection_jacobian_interior(base.coeffs);

  const Eigen::MatrixXd Ar = Z.transpose() * (Kb + T) * Z;
  const Eigen::MatrixXd Mr = Z.transpose() * Mb * Z;
  const Eigen::MatrixXd S = -Mr.llt().solve(Ar);
  Eigen::EigenSolver<Eigen::MatrixXd> es(S, false);
  std::vector<std::complex<double>> eigs(es.eigenvalues().data(),
                                         es.eigenvalues().data() + es.eigenvalues().size());
  std::sort(eigs.begin(), eigs.end(),
            [](auto a, auto b) { return a.real() > b.real(); });
  printf("    leading growth eigs:");
  for (int i = 0; i < n_print && i < (int)eigs.size(); ++i)
    printf(" (%.4g%+.4gi)", eigs[i].real(), eigs[i].imag());
  printf("\n");
  return eigs;
}

void sweep(const DiscreteForms& f, const Field& seed, double gr0, double gr1, double step,
           bool spectra, double spectra_every) {
  auto res = fom::continue_steady(f, seed, gr0, gr1, step, {0.7, 0.7});
  printf("# sweep %g -> %g: %zu points, completed=%d\n", gr0, gr1, res.points.size(),
         res.completed);
  double next_spec = 0.0;
  for (auto& p : res.points) {
    printf("Gr=%9.0f obs=%+12.5g vortices=%d\n", p.Gr, p.observable, p.vortices);
    if (spectra && std::abs(p.Gr) >= next_spec) {
      growth_spectrum(f, p.velocity);
      next_spec = std::abs(p.Gr) + spectra_every;
    }
  }
}

}  // namespace

int main(int argc, char** argv) {
  double A = 4.0;
  int nx = 4, ny = 1, p = 7;
  double gr0 = 1e3, gr1 = 1.2e5, step = 2e3;
  int mode = 0;  // 0 fwd, 1 fwd+bwd, 2 spectra, 3 transient probe
  double probe_gr = 5e4, probe_dt = 1e-4, probe_T = 1.0;
  for (int i = 1; i < argc; ++i) {
    std::string a = argv[i];
    auto next = [&] { return std::stod(argv[++i]); };
    if (a == "-A") A = next();
    else if (a == "-nx") nx = (int)next();
    else if (a == "-ny") ny = (int)next();
    else if (a == "-p") p = (int)next();
    else if (a == "-gr0") gr0 = next();
    else if (a == "-gr1") gr1 = next();
    else if (a == "-step") step = next();
    else if (a == "-mode") mode = (int)next();
    else if (a == "-pgr") probe_gr = next();
    else if (a == "-pdt") probe_dt = next();
    else if (a == "-pT") probe_T = next();
  }
  auto g = Grid::make(nx, ny, p, 2.0);
  auto f = assemble_forms(g, A);
  printf("# A=%g grid %dx%d p=%d: nv=%d (interior %zu), np=%d\n", A, nx, ny, p, f.nv(),
         g->interior().size(), f.np());

  Field rest;
  rest.kind = FieldKind::velocity;
  rest.domain = DomainTag::physical(A);
  rest.coeffs = Eigen::VectorXd::Zero(2 * f.nv());

  if (mode == 0) {
    sweep(f, rest, gr0, gr1, step, false, 0);
  } else if (mode == 1) {
    auto fwd = fom::continue_steady(f, rest, gr0, gr1, step, {0.7, 0.7});
    printf("# forward: %zu pts, completed=%d, last Gr=%g\n", fwd.points.size(), fwd.completed,
           fwd.points.back().Gr);
    for (auto& pt : fwd.points)
      printf("F %9.0f %+12.5g %d\n", pt.Gr, pt.observable, pt.vortices);
    // settle a state at gr1 by transient, then sweep back
    const auto& hi = fwd.points.back();
    fom::TransientOptions topt;
    topt.dt = probe_dt;
    topt.t_end = probe_T;
    topt.sample_every = 1 << 20;
    auto traj = fom::solve_transient(f, {A, gr1}, hi.velocity, topt);
    printf("# settle at %g: blewup=%d\n", gr1, traj.blew_up);
    if (!traj.blew_up) {
      auto sr = fom::solve_steady(f, {A, gr1}, &traj.states.back());
      printf("# steady at top: conv=%d\n", sr.converged);
      if (sr.converged) {
        auto bwd = fom::continue_steady(f, sr.velocity, gr1, gr0, step, {0.7, 0.7});
        printf("# backward: %zu pts, completed=%d, last Gr=%g\n", bwd.points.size(),
               bwd.completed, bwd.points.back().Gr);
        for (auto& pt : bwd.points)
          printf("B %9.0f %+12.5g %d\n", pt.Gr, pt.observable, pt.vortices);
      }
    }
  } else if (mode == 2) {
    sweep(f, rest, gr0, gr1, step, true, (gr1 - gr0) / 10);
  } else if (mode == 4) {
    // branch jump: seed Newton at probe_gr with base +/- eps * eigvec
    auto sr = fom::steady_from_zero(f, {A, probe_gr});
    printf("# base at %g: conv=%d obs=%g vort=%d\n", probe_gr, sr.converged,
           fom::observable(f, sr.velocity, {0.7, 0.7}), fom::vortex_count(f, sr.velocity));
    const Eigen::VectorXd dir = critical_real_direction(f, sr.velocity);
    const double base_n = f.l2_norm(sr.velocity.coeffs);
    const double dir_n = f.l2_norm(dir);
    for (double eps : {0.3, -0.3, 0.8, -0.8}) {
      Field guess = sr.velocity;
      guess.coeffs += (eps * base_n / dir_n) * dir;
      auto alt = fom::solve_steady(f, {A, probe_gr}, &guess);
      if (!alt.converged) {
        printf("eps=%+.2f NOT converged\n", eps);
        continue;
      }
      const double d = f.l2_norm(alt.velocity.coeffs - sr.velocity.coeffs) / base_n;
      printf("eps=%+.2f obs=%+12.5g vort=%d reldist=%.4g\n", eps,
             fom::observable(f, alt.velocity, {0.7, 0.7}), fom::vortex_count(f, alt.velocity),
             d);
      if (d > 1e-4) {
        auto up = fom::continue_steady(f, alt.velocity, probe_gr, gr1, step, {0.7, 0.7});
        auto dn = fom::continue_steady(f, alt.velocity, probe_gr, gr0, step, {0.7, 0.7});
        printf("# alt branch up: %zu pts to %g (completed=%d)\n", up.points.size(),
               up.points.empty() ? 0.0 : up.points.back().Gr, up.completed);
        for (auto& pt : up.points) printf("U %9.0f %+12.5g %d\n", pt.Gr, pt.observable, pt.vortices);
        printf("# alt branch down: %zu pts to %g (completed=%d)\n", dn.points.size(),
               dn.points.empty() ? 0.0 : dn.points.back().Gr, dn.completed);
        for (auto& pt : dn.points) printf("D %9.0f %+12.5g %d\n", pt.Gr, pt.observable, pt.vortices);
        break;
      }
    }
  } else if (mode == 3) {
    auto sr = fom::steady_from_zero(f, {A, probe_gr});
    printf("# steady at %g: conv=%d obs=%g vort=%d\n", probe_gr, sr.converged,
           fom::observable(f, sr.velocity, {0.7, 0.7}), fom::vortex_count(f, sr.velocity));
    growth_spectrum(f, sr.velocity, 8);
    Field u0 = sr.velocity;
    u0.coeffs *= 1.001;  // small kick off the fixed point
    fom::TransientOptions topt;
    topt.dt = probe_dt;
    topt.t_end = probe_T;
    topt.sample_every = 1 << 20;
    topt.observe_point = Eigen::Vector2d(0.7, 0.7);
    std::vector<double> ts, vs;
    topt.observe = [&](double t, double v) {
      ts.push_back(t);
      vs.push_back(v);
    };
    auto traj = fom::solve_transient(f, {A, probe_gr}, u0, topt);
    printf("# probe blewup=%d (%s)\n", traj.blew_up, traj.diagnostic.c_str());
    const int stride = std::max<int>(1, (int)ts.size() / 400);
    for (std::size_t i = 0; i < ts.size(); i += stride) printf("T %.6f %+.8g\n", ts[i], vs[i]);
  }
  return 0;
}
