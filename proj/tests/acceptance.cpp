// Acceptance suite: one pass/fail line per criterion.
#include "fixtures.hpp"

#include "rbcav/driver.hpp"
#include "rbcav/geometry.hpp"
#include "rbcav/instrument.hpp"
#include "rbcav/io.hpp"
#include "rbcav/kernels.hpp"
#include "rbcav/oscillation.hpp"
#include "rbcav/stability.hpp"

#include <chrono>
#include <complex>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

using namespace rbcav;
namespace fs = std::filesystem;

namespace {

struct Gate {
  int failures = 0;

  void report(int id, const char* name, bool pass, const std::string& detail) {
    std::printf("[%s] %2d %-28s %s\n", pass ? "PASS" : "FAIL", id, name, detail.c_str());
    std::fflush(stdout);
    if (!pass) ++failures;
  }

  template <typename Fn>
  void run(int id, const char* name, Fn&& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    bool pass = false;
    std::string detail;
    try {
      std::tie(pass, detail) = fn();
    } catch (const std::exception& e) {
      pass = false;
      detail = std::string("exception: ") + e.what();
    }
    const double sec =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    char buf[32];
    std::snprintf(buf, sizeof(buf), " [%.1fs]", sec);
    report(id, name, pass, detail + buf);
  }
};

using Result = std::pair<bool, std::string>;

Eigen::VectorXd random_vec(int n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = dist(rng);
  return v;
}

Field curl_field(const Grid& g, double A, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  const double c0 = dist(rng), c1 = dist(rng), c2 = dist(rng), c3 = dist(rng);
  auto a = [A](double x) {
    const double t = x * (x - A);
    return t * t;
  };
  auto ap = [A](double x) { return 2.0 * x * (x - A) * (2.0 * x - A); };
  auto b = [](double y) {
    const double t = y * (y - 1.0);
    return t * t;
  };
  auto bp = [](double y) { return 2.0 * y * (y - 1.0) * (2.0 * y - 1.0); };
  auto q = [=](double x, double y) { return c0 + c1 * x + c2 * y + c3 * x * y; };
  auto qx = [=](double, double y) { return c1 + c3 * y; };
  auto qy = [=](double x, double) { return c2 + c3 * x; };
  Field u;
  u.kind = FieldKind::velocity;
  u.domain = (A == g.ref_A) ? DomainTag::ref() : DomainTag::physical(A);
  u.coeffs.resize(2 * g.n_vnodes());
  u.coeffs.head(g.n_vnodes()) = g.interpolate(
      A, [&](double x, double y) { return a(x) * (bp(y) * q(x, y) + b(y) * qy(x, y)); });
  u.coeffs.tail(g.n_vnodes()) = g.interpolate(
      A, [&](double x, double y) { return -b(y) * (ap(x) * q(x, y) + a(x) * qx(x, y)); });
  return u;
}

rom::ReducedBasis curl_basis(std::shared_ptr<const Grid> grid, const DiscreteForms& forms_ref,
                             int n, std::mt19937_64& rng) {
  std::vector<Field> raw;
  for (int k = 0; k < n; ++k) {
    Field f = curl_field(*grid, grid->ref_A, rng);
    f.domain = DomainTag::ref();
    raw.push_back(std::move(f));
  }
  const auto modes = pod::orthonormalize_against(raw, {}, forms_ref);
  rom::ReducedBasis basis;
  basis.grid = grid;
  for (const auto& m : modes) basis.append(m, {{grid->ref_A, 0.0}, 0.0, true});
  return basis;
}

// --- characteristic-polynomial eigen oracle ---

std::vector<double> char_poly(const Eigen::MatrixXd& A) {
  const int n = static_cast<int>(A.rows());
  std::vector<double> c(n + 1, 0.0);
  c[0] = 1.0;
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k <= n; ++k) {
    M = A * M + c[k - 1] * Eigen::MatrixXd::Identity(n, n);
    c[k] = -(A * M).trace() / k;
  }
  return c;
}

std::vector<std::complex<double>> poly_roots(const std::vector<double>& coeffs) {
  const int n = static_cast<int>(coeffs.size()) - 1;
  std::vector<std::complex<double>> z(n);
  for (int i = 0; i < n; ++i) z[i] = std::pow(std::complex<double>(0.4, 0.9), i);
  auto eval = [&](std::complex<double> x) {
    std::complex<double> p = coeffs[0];
    for (int k = 1; k <= n; ++k) p = p * x + coeffs[k];
    return p;
  };
  for (int it = 0; it < 400; ++it) {
    double moved = 0.0;
    for (int i = 0; i < n; ++i) {
      std::complex<double> denom(1.0, 0.0);
      for (int j = 0; j < n; ++j)
        if (j != i) denom *= (z[i] - z[j]);
      const auto step = eval(z[i]) / denom;
      z[i] -= step;
      moved = std::max(moved, std::abs(step));
    }
    if (moved < 1e-14) break;
  }
  return z;
}

// manufactured solution for the BDF order study (A = 2, no buoyancy)
struct Mms {
  static double g(double t) { return 1.0 + 0.5 * std::sin(t); }
  static double gp(double t) { return 0.5 * std::cos(t); }
  static double h(double t) { return std::cos(t); }
  static double a(double x) { return x * x * (x - 2.0) * (x - 2.0); }
  static double ap(double x) { return 2.0 * x * (x - 2.0) * (2.0 * x - 2.0); }
  static double app(double x) { return 12.0 * x * x - 24.0 * x + 8.0; }
  static double appp(double x) { return 24.0 * x - 24.0; }
  static double b(double y) { return y * y * (y - 1.0) * (y - 1.0); }
  static double bp(double y) { return 2.0 * y * (y - 1.0) * (2.0 * y - 1.0); }
  static double bpp(double y) { return 12.0 * y * y - 12.0 * y + 2.0; }
  static double bppp(double y) { return 24.0 * y - 12.0; }
  static double fx(double x, double y, double t) {
    const double conv = g(t) * g(t) * a(x) * ap(x) * (bp(y) * bp(y) - b(y) * bpp(y));
    return gp(t) * a(x) * bp(y) - g(t) * (app(x) * bp(y) + a(x) * bppp(y)) + conv +
           h(t) * (y - 0.5);
  }
  static double fy(double x, double y, double t) {
    const double conv = -g(t) * g(t) * b(y) * bp(y) * (a(x) * app(x) - ap(x) * ap(x));
    return -gp(t) * ap(x) * b(y) + g(t) * (appp(x) * b(y) + ap(x) * bpp(y)) + conv +
           h(t) * (x - 1.0);
  }
  static Field velocity(const Grid& grid, double t) {
    Field u;
    u.kind = FieldKind::velocity;
    u.domain = DomainTag::physical(2.0);
    u.coeffs.resize(2 * grid.n_vnodes());
    u.coeffs.head(grid.n_vnodes()) =
        grid.interpolate(2.0, [t](double x, double y) { return g(t) * a(x) * bp(y); });
    u.coeffs.tail(grid.n_vnodes()) =
        grid.interpolate(2.0, [t](double x, double y) { return -g(t) * ap(x) * b(y); });
    return u;
  }
};

std::string fmt2(double v) {
  std::ostringstream os;
  os.precision(4);
  os << v;
  return os.str();
}

// ---------------------------------------------------------------------------

Result criterion_bdf3_order() {
  auto g = Grid::make(2, 1, 7);
  auto f = assemble_forms(g, 2.0);
  auto run_error = [&](double dt) {
    fom::TransientOptions opts;
    opts.dt = dt;
    opts.t_end = 0.5;
    opts.sample_every = 1 << 20;
    opts.extra_forcing = [&](double t) {
      Eigen::VectorXd gx(g->nq_total()), gy(g->nq_total());
      for (int q = 0; q < g->nq_total(); ++q) {
        gx[q] = f.qw[q] * Mms::fx(f.qx[q], f.qy[q], t);
        gy[q] = f.qw[q] * Mms::fy(f.qx[q], f.qy[q], t);
      }
      Eigen::VectorXd out(2 * f.nv());
      out.head(f.nv()) = kernels::project_scalar(*g, gx);
      out.tail(f.nv()) = kernels::project_scalar(*g, gy);
      return out;
    };
    const auto traj = fom::solve_transient(f, {2.0, 0.0}, Mms::velocity(*g, 0.0), opts);
    const Field uex = Mms::velocity(*g, 0.5);
    return f.l2_norm(traj.states.back().coeffs - uex.coeffs) / f.l2_norm(uex.coeffs);
  };
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const std::vector<double> dts{0.05, 0.025, 0.0125, 0.00625};
  for (double dt : dts) {
    const double lx = std::log(dt), ly = std::log(run_error(dt));
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const int n = static_cast<int>(dts.size());
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  return {slope >= 2.7, "observed order " + fmt2(slope) + " (required >= 2.7)"};
}

Result criterion_divergence() {
  const auto& tb = fixtures::two_branch();
  const auto& hs = fixtures::hopf_set();
  auto grid = tb.grid;
  auto forms_ref = assemble_forms(grid, grid->ref_A);
  std::map<long long, DiscreteForms> by_A;
  auto forms_at = [&](double A) -> DiscreteForms& {
    long long key;
    std::memcpy(&key, &A, sizeof(key));
    auto it = by_A.find(key);
    if (it == by_A.end()) it = by_A.emplace(key, assemble_forms(grid, A)).first;
    return it->second;
  };

  double worst_phys = 0.0, worst_ref = 0.0;
  int n_checked = 0;
  auto check = [&](const std::vector<fixtures::Snapshot>& snaps) {
    for (const auto& s : snaps) {
      auto& forms = forms_at(s.mu.A);
      worst_phys = std::max(worst_phys, forms.weak_divergence_residual(s.velocity.coeffs));
      const Field pulled = geometry::piola_pullback(s.velocity, s.mu.A, grid->ref_A);
      worst_ref = std::max(worst_ref, forms_ref.weak_divergence_residual(pulled.coeffs));
      ++n_checked;
    }
  };
  check(tb.pre);
  check(tb.post);
  check(hs.steady);
  check(hs.unsteady);

  // reconstructed reduced solutions
  std::vector<const fixtures::Snapshot*> all;
  for (const auto& s : tb.pre) all.push_back(&s);
  for (const auto& s : tb.post) all.push_back(&s);
  const auto basis = fixtures::basis_from(grid, forms_ref, all);
  std::mt19937_64 rng(3);
  double worst_rec = 0.0;
  for (double A : {4.0, 5.2}) {
    auto& forms = forms_at(A);
    for (int rep = 0; rep < 5; ++rep) {
      const Field rec =
          rom::reconstruct(basis, {random_vec(basis.size(), rng), {A, 0.0}, std::nullopt});
      worst_rec = std::max(worst_rec, forms.weak_divergence_residual(rec.coeffs));
    }
  }
  const bool pass = worst_phys <= 1e-9 && worst_ref <= 1e-9 && worst_rec <= 1e-9;
  return {pass, "max residuals: solutions " + fmt2(worst_phys) + ", pullbacks " +
                    fmt2(worst_ref) + ", reconstructions " + fmt2(worst_rec) + " over " +
                    std::to_string(n_checked) + " snapshots (<= 1e-9)"};
}

Result criterion_theta_oracle() {
  const auto& tb = fixtures::two_branch();
  auto grid = tb.grid;
  auto forms_ref = assemble_forms(grid, grid->ref_A);
  std::vector<const fixtures::Snapshot*> sel;
  for (std::size_t k = 0; k < tb.pre.size() && sel.size() < 5; k += 2) sel.push_back(&tb.pre[k]);
  for (std::size_t k = 0; k < tb.post.size() && sel.size() < 10; k += 2)
    sel.push_back(&tb.post[k]);
  const auto basis = fixtures::basis_from(grid, forms_ref, sel);
  const auto ops = rom::assemble_reduced(basis, *grid);

  double worst = 0.0;
  for (double A : {2.0, 3.3, 4.0, 5.2, 6.0}) {
    const auto direct = rom::assemble_direct(basis, *grid, A);
    const ParameterPoint mu{A, 1.0};
    worst = std::max(worst, (ops.mass(mu) - direct.mass).cwiseAbs().maxCoeff() /
                                direct.mass.cwiseAbs().maxCoeff());
    worst = std::max(worst, (ops.stiffness(mu) - direct.stiffness).cwiseAbs().maxCoeff() /
                                direct.stiffness.cwiseAbs().maxCoeff());
    worst = std::max(worst, (ops.forcing(mu) - direct.forcing_per_gr).cwiseAbs().maxCoeff() /
                                direct.forcing_per_gr.cwiseAbs().maxCoeff());
    kernels::Tensor3 combined(ops.N);
    for (const auto& b : ops.convection_blocks) {
      const double th = ops.theta(b.theta, mu);
      for (std::size_t i = 0; i < combined.data.size(); ++i)
        combined.data[i] += th * b.T.data[i];
    }
    double dmax = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < combined.data.size(); ++i) {
      dmax = std::max(dmax, std::abs(combined.data[i] - direct.convection.data[i]));
      scale = std::max(scale, std::abs(direct.convection.data[i]));
    }
    worst = std::max(worst, dmax / scale);
  }
  return {worst <= 1e-10,
          "max relative block mismatch " + fmt2(worst) + " over A in {2,3.3,4,5.2,6} (<= 1e-10)"};
}

Result criterion_pod() {
  auto grid = Grid::make(2, 1, 6);
  auto forms_ref = assemble_forms(grid, grid->ref_A);
  std::mt19937_64 rng(41);
  const auto weight = pod::weight_for(forms_ref, pod::InnerProduct::l2);

  // spectra and orthonormality on a generic set
  pod::SnapshotSet set;
  set.grid = grid;
  set.forms = &forms_ref;
  for (int k = 0; k < 7; ++k) {
    Field f = curl_field(*grid, grid->ref_A, rng);
    f.domain = DomainTag::ref();
    set.push(std::move(f), {{2.0, 0.0}, 0.0, true});
  }
  const auto r = pod::pod_modes(set, 0.999);
  for (int i = 0; i < r.eigenvalues.size(); ++i) {
    if (r.eigenvalues[i] < 0.0) return {false, "negative correlation eigenvalue"};
    if (i && r.eigenvalues[i] > r.eigenvalues[i - 1] * (1.0 + 1e-12))
      return {false, "eigenvalues not sorted"};
  }
  double gram_err = 0.0;
  for (std::size_t i = 0; i < r.modes.size(); ++i)
    for (std::size_t j = 0; j < r.modes.size(); ++j)
      gram_err = std::max(gram_err, std::abs(r.modes[i].coeffs.dot(weight(r.modes[j].coeffs)) -
                                             (i == j ? 1.0 : 0.0)));
  if (gram_err > 1e-10) return {false, "modes not orthonormal: " + fmt2(gram_err)};

  // rank-2 set at threshold 0.9999 keeps exactly 2 modes
  const Field fa = curl_field(*grid, grid->ref_A, rng);
  const Field fb = curl_field(*grid, grid->ref_A, rng);
  pod::SnapshotSet rank2;
  rank2.grid = grid;
  rank2.forms = &forms_ref;
  for (int k = 0; k < 10; ++k) {
    Field f = fa;
    f.domain = DomainTag::ref();
    f.coeffs = std::cos(0.3 * k) * fa.coeffs + std::sin(0.7 * k + 0.2) * fb.coeffs;
    rank2.push(std::move(f), {{2.0, 0.0}, 0.0, true});
  }
  const auto r2 = pod::pod_modes(rank2, 0.9999);
  if (r2.modes.size() != 2) return {false, "rank-2 set kept " + std::to_string(r2.modes.size())};

  // optimality against 100 random subspaces
  Eigen::MatrixXd S(set.snapshots[0].coeffs.size(), set.snapshots.size());
  for (std::size_t j = 0; j < set.snapshots.size(); ++j) S.col(j) = set.snapshots[j].coeffs;
  const auto podr = pod::pod_vectors(S, weight, 1.0);
  const int ell = 3;
  auto total_defect = [&](const std::vector<Eigen::VectorXd>& basis) {
    double sum = 0.0;
    for (int j = 0; j < S.cols(); ++j) {
      const Eigen::VectorXd wu = weight(S.col(j));
      double d2 = S.col(j).dot(wu);
      for (const auto& b : basis) {
        const double c = b.dot(wu);
        d2 -= c * c;
      }
      sum += std::max(0.0, d2);
    }
    return sum;
  };
  std::vector<Eigen::VectorXd> pb;
  for (int i = 0; i < ell; ++i) pb.push_back(podr.modes.col(i));
  const double e_pod = total_defect(pb);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<Eigen::VectorXd> cand;
    for (int i = 0; i < ell; ++i) {
      Eigen::VectorXd c = Eigen::VectorXd::Zero(S.rows());
      for (int j = 0; j < S.cols(); ++j) c += gauss(rng) * S.col(j);
      cand.push_back(c);
    }
    const auto rb = pod::orthonormalize_vectors(cand, {}, weight);
    if (static_cast<int>(rb.size()) < ell) continue;
    if (e_pod > total_defect(rb) + 1e-10)
      return {false, "a random subspace beat the pod subspace"};
  }
  return {true, "spectrum, orthonormality (err " + fmt2(gram_err) +
                    "), rank-2 truncation, optimality vs 100 subspaces"};
}

Result criterion_rom_training() {
  const auto& hs = fixtures::hopf_set();
  auto grid = hs.grid;
  auto forms_ref = assemble_forms(grid, grid->ref_A);
  auto forms_A = assemble_forms(grid, hs.A);
  std::vector<const fixtures::Snapshot*> sel;
  for (const auto& s : hs.steady) sel.push_back(&s);
  const auto basis = fixtures::basis_from(grid, forms_ref, sel);
  const auto ops = rom::assemble_reduced(basis, *grid);
  const auto weight = pod::weight_for(forms_ref, pod::InnerProduct::l2);

  double worst = 0.0;
  instrument::reset_full_order();
  std::vector<rom::ReducedState> states;
  for (const auto& s : hs.steady) {
    const Field pulled = geometry::piola_pullback(s.velocity, s.mu.A, grid->ref_A);
    Eigen::VectorXd a0(basis.size());
    for (int i = 0; i < basis.size(); ++i) a0[i] = basis.modes[i].coeffs.dot(weight(pulled.coeffs));
    const auto r = rom::rom_solve_steady(ops, s.mu, a0);
    if (!r.converged) return {false, "reduced solve failed at Gr " + fmt2(s.mu.Gr)};
    states.push_back(r.state);
  }
  const auto online_ops = instrument::full_order_ops();
  for (std::size_t k = 0; k < states.size(); ++k) {
    const Field rec = rom::reconstruct(basis, states[k]);
    const double rel = forms_A.l2_norm(rec.coeffs - hs.steady[k].velocity.coeffs) /
                       forms_A.l2_norm(hs.steady[k].velocity.coeffs);
    worst = std::max(worst, rel);
  }
  const bool pass = worst <= 1e-3 && online_ops == 0;
  return {pass, "max training-point error " + fmt2(worst) + " (<= 1e-3), full-order ops during online solves: " +
                    std::to_string(online_ops)};
}

Result criterion_skew() {
  auto grid = Grid::make(2, 1, 7);
  auto forms_ref = assemble_forms(grid, grid->ref_A);
  std::mt19937_64 rng(42);
  const auto basis = curl_basis(grid, forms_ref, 5, rng);
  const auto ops = rom::assemble_reduced(basis, *grid);

  double worst_reduced = 0.0;
  for (const ParameterPoint mu : {ParameterPoint{2.0, 0.0}, ParameterPoint{4.4, 0.0}}) {
    kernels::Tensor3 combined(ops.N);
    for (const auto& b : ops.convection_blocks) {
      const double th = ops.theta(b.theta, mu);
      for (std::size_t i = 0; i < combined.data.size(); ++i)
        combined.data[i] += th * b.T.data[i];
    }
    double cnorm = 0.0;
    for (double v : combined.data) cnorm = std::max(cnorm, std::abs(v));
    for (int rep = 0; rep < 100; ++rep) {
      const Eigen::VectorXd a = random_vec(ops.N, rng);
      const double v = std::abs(a.dot(ops.convection_apply(mu, a)));
      worst_reduced = std::max(worst_reduced, v / (std::pow(a.norm(), 3) * cnorm));
    }
  }

  double worst_full = 0.0;
  auto forms = assemble_forms(grid, 2.6);
  for (int rep = 0; rep < 5; ++rep) {
    const Field u = curl_field(*grid, 2.6, rng);
    const Field v = curl_field(*grid, 2.6, rng);
    const double scale = forms.l2_norm(u.coeffs) * forms.l2_norm(v.coeffs);
    worst_full = std::max(
        worst_full, std::abs(forms.trilinear(u.coeffs, v.coeffs, v.coeffs)) / scale);
  }
  const bool pass = worst_reduced <= 1e-9 && worst_full <= 1e-10;
  return {pass, "reduced " + fmt2(worst_reduced) + " (<= 1e-9), full-order " + fmt2(worst_full) +
                    " (<= 1e-10)"};
}

Result criterion_eigensolver() {
  std::mt19937_64 rng(43);
  double worst = 0.0;
  for (int rep = 0; rep < 10; ++rep) {
    const int n = 2 + rep % 4;  // N <= 5
    Eigen::MatrixXd A(n, n);
    for (int i = 0; i < n; ++i) A.row(i) = random_vec(n, rng).transpose();
    const auto eigs = stability::eigs_dense(A);
    const auto roots = poly_roots(char_poly(A));
    for (const auto& e : eigs) {
      double best = 1e300;
      for (const auto& r : roots) best = std::min(best, std::abs(e - r));
      worst = std::max(worst, best / std::max(1.0, A.norm()));
    }
  }
  if (worst > 1e-8) return {false, "eigenvalue vs root mismatch " + fmt2(worst)};

  Eigen::MatrixXd big(200, 200);
  for (int i = 0; i < 200; ++i) big.row(i) = random_vec(200, rng).transpose();
  const auto eigs = stability::eigs_dense(big);
  double pair_err = 0.0;
  for (const auto& e : eigs) {
    if (std::abs(e.imag()) <= 1e-12 * std::abs(e.real())) continue;
    double best = 1e300;
    for (const auto& f : eigs) best = std::min(best, std::abs(std::conj(e) - f));
    pair_err = std::max(pair_err, best / std::max(1.0, std::abs(e)));
  }
  const bool pass = pair_err <= 1e-10;
  return {pass, "root-oracle error " + fmt2(worst) + " (<= 1e-8), conjugate pairing " +
                    fmt2(pair_err) + " at N=200 (<= 1e-10)"};
}

// shared helper: reduced continuation of the fixture window
stability::Branch reduced_branch(const rom::ReducedOperators& ops,
                                 const rom::ReducedBasis& basis,
                                 const DiscreteForms& forms_ref, const Field& seed_phys,
                                 double A, double gr_from, double gr_to, double step) {
  const auto weight = pod::weight_for(forms_ref, pod::InnerProduct::l2);
  const Field pulled = geometry::piola_pullback(seed_phys, A, basis.grid->ref_A);
  Eigen::VectorXd a0(basis.size());
  for (int i = 0; i < basis.size(); ++i) a0[i] = basis.modes[i].coeffs.dot(weight(pulled.coeffs));
  stability::BranchContext ctx;
  ctx.ops = &ops;
  stability::ContinuationOptions copts;
  copts.step0 = step;
  return stability::continue_branch(ctx, A, gr_from, gr_to, copts, a0);
}

Result criterion_steady_regression() {
  const auto& tb = fixtures::two_branch();
  auto grid = tb.grid;
  auto forms_ref = assemble_forms(grid, grid->ref_A);

  std::vector<const fixtures::Snapshot*> union_sel, post_sel;
  for (const auto& s : tb.pre) union_sel.push_back(&s);
  for (const auto& s : tb.post) {
    union_sel.push_back(&s);
    post_sel.push_back(&s);
  }
  const auto basis_union = fixtures::basis_from(grid, forms_ref, union_sel);
  const auto basis_post = fixtures::basis_from(grid, forms_ref, post_sel);
  const auto ops_union = rom::assemble_reduced(basis_union, *grid);
  const auto ops_post = rom::assemble_reduced(basis_post, *grid);

  stability::DetectOptions dopts;
  dopts.gr_tol_rel = 1e-3;

  const auto branch_union = reduced_branch(ops_union, basis_union, forms_ref,
                                           tb.pre.front().velocity, tb.A, tb.gr_lo, tb.gr_hi,
                                           2000.0);
  if (branch_union.points.size() < 5) return {false, "union-basis continuation too short"};
  const auto pts_union = stability::detect_steady(ops_union, branch_union, dopts);

  const auto branch_post = reduced_branch(ops_post, basis_post, forms_ref,
                                          tb.post.back().velocity, tb.A, tb.gr_hi, tb.gr_lo,
                                          2000.0);
  if (branch_post.points.size() < 3) return {false, "post-basis continuation too short"};
  const auto pts_post = stability::detect_steady(ops_post, branch_post, dopts);

  std::string detail = "union basis: " + std::to_string(pts_union.size()) + " crossing(s)";
  if (!pts_union.empty()) detail += " at Gr " + fmt2(pts_union.front().mu.Gr);
  detail += "; post-only basis: " + std::to_string(pts_post.size());
  bool bracketed = false;
  if (pts_union.size() == 1) {
    const double gr_tol = dopts.gr_tol_rel * std::max(1.0, pts_union[0].mu.Gr);
    bracketed = pts_union[0].mu.Gr > tb.gr_lo + gr_tol && pts_union[0].mu.Gr < tb.gr_hi - gr_tol;
  }
  return {pts_union.size() == 1 && pts_post.empty() && bracketed, detail};
}

Result criterion_hopf() {
  // synthetic constructed pair
  {
    const double mu_star = 0.5, omega = 3.0;
    kernels::Tensor3 C(2);
    C(0, 0, 0) = 0.5;
    C(0, 1, 1) = -0.5;
    C(1, 0, 1) = 0.5;
    C(1, 1, 0) = 0.5;
    rom::ReducedOperators ops;
    ops.N = 2;
    ops.ref_A = 2.0;
    ops.mass_blocks.push_back({"m", {0, 0}, Eigen::MatrixXd::Identity(2, 2)});
    ops.stiffness_blocks.push_back({"k", {0, 0}, Eigen::MatrixXd::Zero(2, 2)});
    ops.convection_blocks.push_back({"c", {0, 0}, C});
    ops.forcing_blocks.push_back({"f", {0, 1}, Eigen::VectorXd::Zero(2)});
    auto state_at = [&](double gr) {
      return (Eigen::VectorXd(2) << -(gr - mu_star), omega).finished();
    };
    stability::Branch branch;
    for (double gr : {0.0, 0.3, 0.7, 1.0})
      branch.points.push_back({{2.0, gr}, state_at(gr), 0.0, 1});
    stability::StateProvider prov =
        [&](const ParameterPoint& mu, const Eigen::VectorXd&) -> std::optional<Eigen::VectorXd> {
      return state_at(mu.Gr);
    };
    stability::DetectOptions opts;
    opts.gr_tol_rel = 1e-8;
    const auto pts = stability::detect_hopf(ops, branch, opts, prov);
    if (pts.size() != 1 || std::abs(pts[0].mu.Gr - mu_star) > 1e-6 ||
        std::abs(*pts[0].frequency - omega / (2.0 * M_PI)) > 1e-6)
      return {false, "synthetic pair crossing not recovered to 1e-6"};
  }

  // desk-scale fluid configuration
  const auto& hs = fixtures::hopf_set();
  auto grid = hs.grid;
  auto forms_ref = assemble_forms(grid, grid->ref_A);

  // basis: steady branch plus POD of the settled oscillation
  std::vector<const fixtures::Snapshot*> steady_sel;
  for (const auto& s : hs.steady) steady_sel.push_back(&s);
  auto basis = fixtures::basis_from(grid, forms_ref, steady_sel);
  {
    pod::SnapshotSet unsteady;
    unsteady.grid = grid;
    unsteady.forms = &forms_ref;
    for (const auto& s : hs.unsteady) {
      unsteady.push(geometry::piola_pullback(s.velocity, s.mu.A, grid->ref_A),
                    {s.mu, s.time, false});
    }
    const auto podr = pod::pod_modes(unsteady, 0.999);
    const auto kept = pod::orthonormalize_against(podr.modes, basis.modes, forms_ref);
    for (const auto& m : kept) basis.append(m, {{hs.A, hs.gr_probe}, 1.0, false});
  }
  const auto ops = rom::assemble_reduced(basis, *grid);

  const auto branch = reduced_branch(ops, basis, forms_ref, hs.steady.front().velocity, hs.A,
                                     hs.gr_lo, hs.gr_hi, 1250.0);
  if (branch.points.size() < 5) return {false, "reduced branch too short"};
  stability::DetectOptions dopts;
  dopts.gr_tol_rel = 1e-3;
  const auto pts = stability::detect_hopf(ops, branch, dopts);
  if (pts.empty()) return {false, "no axis crossing of the leading pair found"};

  const double f_rom = *pts.front().frequency;
  const double f_fft = oscillation::analyze_series(hs.series, hs.dt).frequency;
  const double rel = std::abs(f_rom - f_fft) / f_fft;
  return {rel <= 0.05, "onset at Gr " + fmt2(pts.front().mu.Gr) + ", frequency " + fmt2(f_rom) +
                           " vs transient peak " + fmt2(f_fft) + ": error " + fmt2(rel) +
                           " (<= 0.05)"};
}

Result criterion_hysteresis() {
  const auto& tb = fixtures::two_branch();
  auto grid = tb.grid;
  auto forms_ref = assemble_forms(grid, grid->ref_A);
  auto forms_A = assemble_forms(grid, tb.A);

  std::vector<const fixtures::Snapshot*> union_sel;
  for (const auto& s : tb.pre) union_sel.push_back(&s);
  for (const auto& s : tb.post) union_sel.push_back(&s);
  const auto basis = fixtures::basis_from(grid, forms_ref, union_sel);
  const auto ops = rom::assemble_reduced(basis, *grid);

  const double gr_top = 62.0e3;
  const auto weight = pod::weight_for(forms_ref, pod::InnerProduct::l2);
  auto project = [&](const Field& phys) {
    const Field pulled = geometry::piola_pullback(phys, tb.A, grid->ref_A);
    Eigen::VectorXd a(basis.size());
    for (int i = 0; i < basis.size(); ++i) a[i] = basis.modes[i].coeffs.dot(weight(pulled.coeffs));
    return a;
  };

  stability::BranchContext ctx;
  ctx.ops = &ops;
  ctx.basis = &basis;
  ctx.forms = &forms_A;
  stability::ContinuationOptions copts;
  copts.step0 = 1000.0;

  const auto fwd =
      stability::continue_branch(ctx, tb.A, tb.gr_lo, gr_top, copts, project(tb.pre.front().velocity));

  const fixtures::Snapshot* seed_post = nullptr;
  double best = 1e300;
  for (const auto& s : tb.post) {
    const double d = std::abs(s.mu.Gr - gr_top);
    if (d < best) {
      best = d;
      seed_post = &s;
    }
  }
  const auto bwd =
      stability::continue_branch(ctx, tb.A, gr_top, tb.gr_lo, copts, project(seed_post->velocity));

  if (fwd.points.size() < 5 || bwd.points.size() < 5)
    return {false, "continuation too short (fwd " + std::to_string(fwd.points.size()) +
                       ", bwd " + std::to_string(bwd.points.size()) + ")"};

  // overlap window: matched Gr values present on both sweeps
  int n_overlap = 0;
  double min_gap = 1e300, max_gap = 0.0;
  for (const auto& p : fwd.points) {
    for (const auto& q : bwd.points) {
      if (std::abs(p.mu.Gr - q.mu.Gr) > 1.0) continue;
      ++n_overlap;
      const double gap = std::abs(p.observable - q.observable);
      min_gap = std::min(min_gap, gap);
      max_gap = std::max(max_gap, gap);
    }
  }
  if (n_overlap == 0) return {false, "no overlapping Gr window between the sweeps"};
  const bool pass = min_gap > 10.0 * 1e-9;
  return {pass, std::to_string(n_overlap) + " shared Gr points, observable gap in [" +
                    fmt2(min_gap) + ", " + fmt2(max_gap) + "] (> 1e-8 required); backward end " +
                    fmt2(bwd.points.back().mu.Gr)};
}

Result criterion_determinism() {
  const fs::path base = fs::temp_directory_path() / "rbcav_acceptance_det";
  fs::remove_all(base);
  RunConfig c;
  c.box = {3.0, 3.0, 500.0, 3000.0};
  c.grid = {2, 1, 5, 0, 2.0};
  c.sampling_cfg.tolerance = 2e-3;
  c.sampling_cfg.n0 = 4;
  c.sampling_cfg.max_points = 8;
  c.time.dt = 5e-4;
  c.time.t_end = 0.05;
  c.observable = {0.7, 0.7};
  c.seed = 7;

  auto slurp = [](const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>());
  };

  c.outdir = (base / "r1").string();
  if (driver::cmd_offline(c) != driver::kOk) return {false, "first offline run failed"};
  c.outdir = (base / "r2").string();
  if (driver::cmd_offline(c) != driver::kOk) return {false, "second offline run failed"};

  if (slurp(base / "r1" / "model.rbrom") != slurp(base / "r2" / "model.rbrom"))
    return {false, "archives differ between identical runs"};
  if (slurp(base / "r1" / "sampling_log.csv") != slurp(base / "r2" / "sampling_log.csv"))
    return {false, "sampling logs differ between identical runs"};
  int n_snaps = 0;
  for (const auto& e : fs::directory_iterator(base / "r1" / "snapshots")) {
    ++n_snaps;
    if (slurp(e.path()) != slurp(base / "r2" / "snapshots" / e.path().filename()))
      return {false, "snapshot bytes differ between identical runs"};
  }

  // round-trip identity
  const auto arch = io::read_archive(base / "r1" / "model.rbrom");
  io::write_archive(base / "r1" / "model2.rbrom", arch.basis, arch.ops);
  if (slurp(base / "r1" / "model.rbrom") != slurp(base / "r1" / "model2.rbrom"))
    return {false, "archive read/write round trip not byte-identical"};
  const auto snap0 = *fs::directory_iterator(base / "r1" / "snapshots");
  auto [field, meta] = io::read_snapshot(snap0.path());
  io::write_snapshot(base / "r1" / "snap2.rbsnap", field, meta);
  if (slurp(snap0.path()) != slurp(base / "r1" / "snap2.rbsnap"))
    return {false, "snapshot read/write round trip not byte-identical"};

  return {true, "two offline runs byte-identical (" + std::to_string(n_snaps) +
                    " snapshots); archive and snapshot round trips exact"};
}

Result criterion_scan_monotone() {
  const auto& sc = fixtures::scan_set();
  auto grid = sc.grid;
  auto forms_ref = assemble_forms(grid, grid->ref_A);

  // per-vortex-count families across the plane; the family continued from
  // low Gr also receives POD modes of its settled oscillations per aspect
  std::map<int, std::vector<const fixtures::Snapshot*>> groups;
  for (const auto& s : sc.snaps) groups[s.vortices].push_back(&s);
  std::vector<stability::FamilyBasis> families;
  for (const auto& [v, snaps] : groups) {
    stability::FamilyBasis fam;
    fam.name = std::to_string(v) + "-vortex";
    fam.vortices = v;
    fam.basis = fixtures::basis_from(grid, forms_ref, snaps);
    if (v == 1) {
      std::map<long long, std::vector<const fixtures::Snapshot*>> by_A;
      for (const auto& s : sc.unsteady) {
        long long key;
        const double A = s.mu.A;
        std::memcpy(&key, &A, sizeof(key));
        by_A[key].push_back(&s);
      }
      for (const auto& [key, snaps_A] : by_A) {
        pod::SnapshotSet set;
        set.grid = grid;
        set.forms = &forms_ref;
        for (const auto* s : snaps_A)
          set.push(geometry::piola_pullback(s->velocity, s->mu.A, grid->ref_A),
                   {s->mu, s->time, false});
        const auto podr = pod::pod_modes(set, 0.999);
        const auto kept = pod::orthonormalize_against(podr.modes, fam.basis.modes, forms_ref);
        for (const auto& m : kept)
          fam.basis.append(m, {snaps_A.front()->mu, 1.0, false});
      }
    }
    families.push_back(std::move(fam));
  }

  stability::ScanOptions sopts;
  sopts.gr_lo = sc.gr_lo;
  sopts.gr_hi = sc.gr_hi;
  sopts.continuation.step0 = 1500.0;
  sopts.detect.gr_tol_rel = 1e-3;
  const auto result = stability::scan_plane(families, *grid, sc.A_values, sopts);

  if (result.frequency_curve.size() < 3)
    return {false, "frequency curve has only " +
                       std::to_string(result.frequency_curve.size()) + " points"};
  std::string curve;
  bool monotone = true;
  for (std::size_t k = 0; k < result.frequency_curve.size(); ++k) {
    const auto& [A, f] = result.frequency_curve[k];
    curve += "f(" + fmt2(A) + ")=" + fmt2(f) + " ";
    if (k && f > result.frequency_curve[k - 1].second * (1.0 + 1e-9)) monotone = false;
  }
  return {monotone, curve + (monotone ? "(nonincreasing)" : "(NOT monotone)")};
}

}  // namespace

int main() {
  Gate gate;
  gate.run(1, "bdf3-order", criterion_bdf3_order);
  gate.run(2, "divergence-invariants", criterion_divergence);
  gate.run(3, "affine-decomposition-oracle", criterion_theta_oracle);
  gate.run(4, "pod-properties", criterion_pod);
  gate.run(5, "rom-training-consistency", criterion_rom_training);
  gate.run(6, "skew-symmetry", criterion_skew);
  gate.run(7, "eigensolver-oracle", criterion_eigensolver);
  gate.run(8, "steady-crossing-regression", criterion_steady_regression);
  gate.run(9, "hopf-frequency", criterion_hopf);
  gate.run(10, "hysteresis", criterion_hysteresis);
  gate.run(11, "determinism-persistence", criterion_determinism);
  gate.run(12, "scan-frequency-monotone", criterion_scan_monotone);

  if (gate.failures == 0) {
    std::printf("acceptance: all criteria satisfied\n");
    return 0;
  }
  std::printf("acceptance: %d criterion(s) failed\n", gate.failures);
  return 1;
}
