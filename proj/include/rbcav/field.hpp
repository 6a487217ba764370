#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace rbcav {

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

enum class FieldKind { velocity, pressure };

/// Domain a coefficient array refers to: the fixed reference rectangle
/// [0, ref_A] x [0, 1], or the physical rectangle [0, A] x [0, 1].
struct DomainTag {
  bool reference = true;
  double A = 0.0;  // meaningful only when reference == false

  static DomainTag ref() { return DomainTag{true, 0.0}; }
  static DomainTag physical(double A) { return DomainTag{false, A}; }

  bool operator==(const DomainTag& o) const {
    return reference == o.reference && (reference || A == o.A);
  }
};

/// Nodal coefficients of a discrete field. Velocity fields store the two
/// components back to back: [ux(0..n-1), uy(0..n-1)].
struct Field {
  FieldKind kind = FieldKind::velocity;
  DomainTag domain = DomainTag::ref();
  Eigen::VectorXd coeffs;

  int n_nodes() const {
    return kind == FieldKind::velocity ? static_cast<int>(coeffs.size()) / 2
                                       : static_cast<int>(coeffs.size());
  }
  auto ux() { return coeffs.head(n_nodes()); }
  auto uy() { return coeffs.tail(n_nodes()); }
  auto ux() const { return coeffs.head(n_nodes()); }
  auto uy() const { return coeffs.tail(n_nodes()); }
};

/// A point in the (A, Gr) parameter plane.
struct ParameterPoint {
  double A = 0.0;
  double Gr = 0.0;

  bool operator==(const ParameterPoint& o) const { return A == o.A && Gr == o.Gr; }
};

}  // namespace rbcav
