#include <doctest.h>

#include "rbcav/fom.hpp"
#include "rbcav/geometry.hpp"
#include "rbcav/instrument.hpp"
#include "rbcav/rom.hpp"
#include "test_util.hpp"

#include <cmath>

using namespace rbcav;

TEST_SUITE_BEGIN("rom");

namespace {

rom::ReducedBasis curl_basis(std::shared_ptr<const Grid> grid, const DiscreteForms& forms_ref,
                             int n, std::mt19937_64& rng) {
  std::vector<Field> raw;
  for (int k = 0; k < n; ++k) {
    Field f = testutil::curl_field(*grid, grid->ref_A, rng);
    f.domain = DomainTag::ref();
    raw.push_back(std::move(f));
  }
  const auto ortho = pod::orthonormalize_against(raw, {}, forms_ref);
  rom::ReducedBasis basis;
  basis.grid = grid;
  for (const auto& m : ortho) basis.append(m, {{grid->ref_A, 0.0}, 0.0, true});
  return basis;
}

double tensor_rel_diff(const kernels::Tensor3& a, const kernels::Tensor3& b) {
  double dmax = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    dmax = std::max(dmax, std::abs(a.data[i] - b.data[i]));
    scale = std::max(scale, std::abs(b.data[i]));
  }
  return dmax / std::max(scale, 1e-300);
}

}  // namespace

TEST_CASE("affine-assembled operators match direct deformed-domain assembly") {
  auto grid = Grid::make(2, 1, 7);
  auto forms_ref = assemble_forms(grid, grid->ref_A);
  std::mt19937_64 rng(101);
  const auto basis = curl_basis(grid, forms_ref, 4, rng);
  const auto ops = rom::assemble_reduced(basis, *grid);

  for (double A : {2.0, 3.3, 4.0, 5.2, 6.0}) {
    const auto direct = rom::assemble_direct(basis, *grid, A);
    const ParameterPoint mu{A, 1.0};

    const Eigen::MatrixXd M = ops.mass(mu);
    const Eigen::MatrixXd K = ops.stiffness(mu);
    const Eigen::VectorXd f = ops.forcing(mu);
    const double md =
        (M - direct.mass).cwiseAbs().maxCoeff() / direct.mass.cwiseAbs().maxCoeff();
    const double kd =
        (K - direct.stiffness).cwiseAbs().maxCoeff() / direct.stiffness.cwiseAbs().maxCoeff();
    const double fd = (f - direct.forcing_per_gr).cwiseAbs().maxCoeff() /
                      direct.forcing_per_gr.cwiseAbs().maxCoeff();
    CHECK(md <= 1e-10);
    CHECK(kd <= 1e-10);
    CHECK(fd <= 1e-10);

    // convection: combine the θ-blocks at A and compare with the deformed tensor
    kernels::Tensor3 combined(ops.N);
    for (const auto& b : ops.convection_blocks) {
      const double th = ops.theta(b.theta, mu);
      for (std::size_t i = 0; i < combined.data.size(); ++i)
        combined.data[i] += th * b.T.data[i];
    }
    CHECK(tensor_rel_diff(combined, direct.convection) <= 1e-10);

    // at the reference aspect the mass is the identity (orthonormal basis)
    if (A == grid->ref_A)
      CHECK((M - Eigen::MatrixXd::Identity(ops.N, ops.N)).cwiseAbs().maxCoeff() <= 1e-10);
  }
}

TEST_CASE("stored-tensor and on-the-fly contraction agree") {
  auto grid = Grid::make(2, 1, 6);
  auto forms_ref = assemble_forms(grid, grid->ref_A);
  std::mt19937_64 rng(102);
  const auto basis = curl_basis(grid, forms_ref, 4, rng);
  const auto dense = rom::assemble_reduced(basis, *grid);
  rom::AssembleOptions fly_opts;
  fly_opts.on_the_fly = true;
  const auto fly = rom::assemble_reduced(basis, *grid, fly_opts);

  const ParameterPoint mu{3.7, 1.0};
  const Eigen::VectorXd a = testutil::random_vector(dense.N, rng);
  CHECK((dense.convection_apply(mu, a) - fly.convection_apply(mu, a)).norm() <=
        1e-11 * std::max(1.0, dense.convection_apply(mu, a).norm()));
  CHECK((dense.convection_linearized(mu, a) - fly.convection_linearized(mu, a)).norm() <=
        1e-11 * std::max(1.0, dense.convection_linearized(mu, a).norm()));
}

TEST_CASE("reduced convection inherits skew-symmetry on divergence-free bases") {
  auto grid = Grid::make(2, 1, 7);
  auto forms_ref = assemble_forms(grid, grid->ref_A);
  std::mt19937_64 rng(103);
  const auto basis = curl_basis(grid, forms_ref, 5, rng);
  const auto ops = rom::assemble_reduced(basis, *grid);

  double cnorm = 0.0;
  for (const auto& b : ops.convection_blocks)
    for (double v : b.T.data) cnorm = std::max(cnorm, std::abs(v));

  for (const ParameterPoint mu : {ParameterPoint{2.0, 0.0}, ParameterPoint{4.4, 0.0}}) {
    for (int rep = 0; rep < 20; ++rep) {
      const Eigen::VectorXd a = testutil::random_vector(ops.N, rng);
      const double v = a.dot(ops.convection_apply(mu, a));
      CHECK(std::abs(v) <= 1e-9 * std::pow(a.norm(), 3) * cnorm);
    }
  }
}

TEST_CASE("reduced steady solve: rest at Gr=0 and independent residual") {
  auto grid = Grid::make(2, 1, 6);
  auto forms_ref = assemble_forms(grid, grid->ref_A);
  std::mt19937_64 rng(104);
  const auto basis = curl_basis(grid, forms_ref, 4, rng);
  const auto ops = rom::assemble_reduced(basis, *grid);

  const auto rest = rom::rom_solve_steady(ops, {3.0, 0.0}, Eigen::VectorXd());
  CHECK(rest.converged);
  CHECK(rest.state.a.norm() <= 1e-12);

  const ParameterPoint mu{3.0, 50.0};
  const auto r = rom::rom_solve_steady(ops, mu, Eigen::VectorXd());
  REQUIRE(r.converged);
  const Eigen::VectorXd res = ops.stiffness(mu) * r.state.a +
                              ops.convection_apply(mu, r.state.a) - ops.forcing(mu);
  CHECK(res.norm() <= 1e-12 * std::max(1.0, ops.forcing(mu).norm()));
}

TEST_CASE("galerkin consistency: training snapshot reproduced through the rom") {
  auto grid = Grid::make(2, 1, 6);
  auto forms_ref = assemble_forms(grid, grid->ref_A);
  const double A = 4.0;
  auto forms_A = assemble_forms(grid, A);
  const ParameterPoint mu{A, 2.0e3};
  const auto fomr = fom::steady_from_zero(forms_A, mu);
  REQUIRE(fomr.converged);

  const Field snap_ref = geometry::piola_pullback(fomr.velocity, A, grid->ref_A);
  std::mt19937_64 rng(105);
  std::vector<Field> raw{snap_ref};
  for (int k = 0; k < 3; ++k) {
    Field f = testutil::curl_field(*grid, grid->ref_A, rng, 1e-2);
    f.domain = DomainTag::ref();
    raw.push_back(std::move(f));
  }
  const auto modes = pod::orthonormalize_against(raw, {}, forms_ref);
  rom::ReducedBasis basis;
  basis.grid = grid;
  for (const auto& m : modes) basis.append(m, {mu, 0.0, true});
  const auto ops = rom::assemble_reduced(basis, *grid);

  // warm start from the projection of the snapshot
  const auto weight = pod::weight_for(forms_ref, pod::InnerProduct::l2);
  Eigen::VectorXd a0(basis.size());
  for (int i = 0; i < basis.size(); ++i)
    a0[i] = basis.modes[i].coeffs.dot(weight(snap_ref.coeffs));

  instrument::reset_full_order();
  const auto r = rom::rom_solve_steady(ops, mu, a0);
  CHECK(instrument::full_order_ops() == 0);  // online phase touches nothing full-order
  REQUIRE(r.converged);

  const Field rec = rom::reconstruct(basis, r.state);
  const double rel = forms_A.l2_norm(rec.coeffs - fomr.velocity.coeffs) /
                     forms_A.l2_norm(fomr.velocity.coeffs);
  CHECK(rel <= 1e-3);
  CHECK((r.state.a - a0).norm() <= 1e-8 * std::max(1.0, a0.norm()));
  CHECK(forms_A.weak_divergence_residual(rec.coeffs) <= 1e-9);
}

TEST_CASE("reduced transient: zero dynamics and third-order linear decay") {
  auto grid = Grid::make(2, 1, 6);
  auto forms_ref = assemble_forms(grid, grid->ref_A);
  std::mt19937_64 rng(106);
  const auto fluid_basis = curl_basis(grid, forms_ref, 3, rng);
  const auto fluid_ops = rom::assemble_reduced(fluid_basis, *grid);

  rom::RomTransientOptions topts;
  topts.dt = 0.01;
  topts.t_end = 0.2;
  const auto zero =
      rom::rom_solve_transient(fluid_ops, {3.0, 0.0}, Eigen::VectorXd::Zero(fluid_ops.N), topts);
  for (const auto& a : zero.states) CHECK(a.norm() <= 1e-14);

  // synthetic linear system: M = I, K = diag(1, 2), no convection, no forcing
  rom::ReducedOperators lin;
  lin.N = 2;
  lin.ref_A = 2.0;
  lin.mass_blocks.push_back({"m", {0, 0}, Eigen::MatrixXd::Identity(2, 2)});
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(2, 2);
  K(0, 0) = 1.0;
  K(1, 1) = 2.0;
  lin.stiffness_blocks.push_back({"k", {0, 0}, K});
  lin.convection_blocks.push_back({"c", {0, 0}, kernels::Tensor3(2)});
  lin.forcing_blocks.push_back({"f", {0, 1}, Eigen::VectorXd::Zero(2)});

  const Eigen::VectorXd a0 = (Eigen::VectorXd(2) << 1.0, -0.5).finished();
  auto err_of = [&](double dt) {
    rom::RomTransientOptions o;
    o.dt = dt;
    o.t_end = 1.0;
    o.sample_every = 1 << 20;
    const auto traj = rom::rom_solve_transient(lin, {2.0, 0.0}, a0, o);
    Eigen::VectorXd exact(2);
    exact << a0[0] * std::exp(-1.0), a0[1] * std::exp(-2.0);
    return (traj.states.back() - exact).norm();
  };
  const std::vector<double> dts{0.05, 0.025, 0.0125, 0.00625};
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (double dt : dts) {
    const double lx = std::log(dt), ly = std::log(err_of(dt));
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const int n = static_cast<int>(dts.size());
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  INFO("slope ", slope);
  CHECK(slope >= 2.7);
}

TEST_CASE("reduced transient energy decays without forcing") {
  auto grid = Grid::make(2, 1, 6);
  auto forms_ref = assemble_forms(grid, grid->ref_A);
  std::mt19937_64 rng(107);
  const auto basis = curl_basis(grid, forms_ref, 4, rng);
  const auto ops = rom::assemble_reduced(basis, *grid);
  const ParameterPoint mu{3.5, 0.0};

  rom::RomTransientOptions topts;
  topts.dt = 0.002;
  topts.t_end = 0.1;
  const Eigen::VectorXd a0 = testutil::random_vector(ops.N, rng);
  const auto traj = rom::rom_solve_transient(ops, mu, a0, topts);
  const Eigen::MatrixXd M = ops.mass(mu);
  double prev = std::numeric_limits<double>::infinity();
  for (const auto& a : traj.states) {
    const double e = 0.5 * a.dot(M * a);
    CHECK(e <= prev * (1.0 + 1e-12));
    prev = e;
  }
}

TEST_CASE("reconstruction maps coefficients through the piola transform") {
  auto grid = Grid::make(2, 1, 6);
  auto forms_ref = assemble_forms(grid, grid->ref_A);
  std::mt19937_64 rng(108);
  const auto basis = curl_basis(grid, forms_ref, 3, rng);

  Eigen::VectorXd e1 = Eigen::VectorXd::Zero(3);
  e1[0] = 1.0;
  const Field rec1 = rom::reconstruct(basis, {e1, {4.0, 0.0}, std::nullopt});
  const Field fwd = geometry::piola_pushforward(basis.modes[0], 4.0, grid->ref_A);
  CHECK((rec1.coeffs - fwd.coeffs).cwiseAbs().maxCoeff() <= 1e-14);

  const Field rec0 =
      rom::reconstruct(basis, {Eigen::VectorXd::Zero(3), {4.0, 0.0}, std::nullopt});
  CHECK(rec0.coeffs.cwiseAbs().maxCoeff() == 0.0);

  const double A = 5.2;
  auto forms_A = assemble_forms(grid, A);
  const Eigen::VectorXd a = testutil::random_vector(3, rng);
  const Field rec = rom::reconstruct(basis, {a, {A, 0.0}, std::nullopt});
  CHECK(forms_A.weak_divergence_residual(rec.coeffs) <= 1e-9);
}

TEST_CASE("pressure recovery: zero input, zero mean, full-order agreement") {
  auto grid = Grid::make(3, 1, 7);
  const double A = 4.0;
  auto forms = assemble_forms(grid, A);

  Field zero;
  zero.kind = FieldKind::velocity;
  zero.domain = DomainTag::physical(A);
  zero.coeffs = Eigen::VectorXd::Zero(2 * forms.nv());
  const Field p0 = rom::recover_pressure(forms, zero, 0.0);
  CHECK(p0.coeffs.cwiseAbs().maxCoeff() <= 1e-12);

  const ParameterPoint mu{A, 2.0e3};
  const auto r = fom::steady_from_zero(forms, mu);
  REQUIRE(r.converged);
  const Field prec = rom::recover_pressure(forms, r.velocity, mu.Gr);

  CHECK(std::abs(forms.p_mean.dot(prec.coeffs)) <= 1e-12 * forms.p_l2_norm(prec.coeffs));

  // compare against the solver pressure up to its mean
  Eigen::VectorXd pref = r.pressure.coeffs;
  const double mean = forms.p_mean.dot(pref) / forms.p_mean.sum();
  pref.array() -= mean;
  const double rel = forms.p_l2_norm(prec.coeffs - pref) / forms.p_l2_norm(pref);
  INFO("pressure relative error ", rel);
  CHECK(rel <= 5e-2);
}

TEST_SUITE_END();
