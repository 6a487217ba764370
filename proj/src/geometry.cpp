#include "rbcav/geometry.hpp"

#include <cmath>
#include <sstream>

namespace rbcav::geometry {

Eigen::Vector2d affine_map(const Eigen::Vector2d& xhat, double A, double reference_A) {
  const AffineFactors f = affine_factors(A, reference_A);
  return f.F * xhat;
}

AffineFactors affine_factors(double A, double reference_A) {
  if (A <= 0.0 || reference_A <= 0.0) throw Error("affine_factors: aspect ratio must be positive");
  AffineFactors out;
  out.F = Eigen::Matrix2d::Zero();
  out.F(0, 0) = A / reference_A;
  out.F(1, 1) = 1.0;
  out.G = out.F.inverse();
  out.J_aff = out.F.determinant();
  return out;
}

namespace {

Field piola_apply(const Field& u, const Eigen::Matrix2d& comp, const DomainTag& target) {
  Field out;
  out.kind = FieldKind::velocity;
  out.domain = target;
  const int n = u.n_nodes();
  out.coeffs.resize(2 * n);
  // The map is affine, so the component transform is constant in space and
  // nodes coincide on both lattices.
  out.coeffs.head(n) = comp(0, 0) * u.ux() + comp(0, 1) * u.uy();
  out.coeffs.tail(n) = comp(1, 0) * u.ux() + comp(1, 1) * u.uy();
  return out;
}

}  // namespace

Field piola_pullback(const Field& u, double A, double reference_A,
                     const WeakDivergenceCheck& check, double div_tol) {
  if (u.kind != FieldKind::velocity) throw Error("piola_pullback: velocity field expected");
  if (check) {
    const double r = check(u);
    if (!(r <= div_tol)) {
      std::ostringstream msg;
      msg << "piola_pullback: input weak divergence " << r << " exceeds tolerance " << div_tol;
      throw Error(msg.str());
    }
  }
  const AffineFactors f = affine_factors(A, reference_A);
  const Eigen::Matrix2d comp = f.J_aff * f.F.inverse();
  return piola_apply(u, comp, DomainTag::ref());
}

Field piola_pushforward(const Field& uhat, double A, double reference_A) {
  if (uhat.kind != FieldKind::velocity) throw Error("piola_pushforward: velocity field expected");
  const AffineFactors f = affine_factors(A, reference_A);
  const Eigen::Matrix2d comp = (1.0 / f.J_aff) * f.F;
  return piola_apply(uhat, comp, DomainTag::physical(A));
}

}  // namespace rbcav::geometry
