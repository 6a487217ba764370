#include "rbcav/basis.hpp"

#include "rbcav/field.hpp"

#include <cmath>

namespace rbcav::basis {

std::pair<double, double> legendre(int n, double x) {
  double p0 = 1.0, p1 = x;
  if (n == 0) return {1.0, 0.0};
  if (n == 1) return {x, 1.0};
  for (int k = 2; k <= n; ++k) {
    const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
    p0 = p1;
    p1 = pk;
  }
  // derivative from the recurrence (1-x^2) P_n' = n (P_{n-1} - x P_n)
  const double dp = (std::abs(x) < 1.0)
                        ? n * (p0 - x * p1) / (1.0 - x * x)
                        : 0.5 * n * (n + 1.0) * (x > 0 ? 1.0 : ((n % 2) ? 1.0 : -1.0));
  return {p1, dp};
}

void gauss_points(int n, Eigen::VectorXd& nodes, Eigen::VectorXd& weights) {
  if (n < 1) throw Error("gauss_points: n must be >= 1");
  nodes.resize(n);
  weights.resize(n);
  for (int i = 0; i < n; ++i) {
    // Chebyshev-based initial guess, then Newton on P_n.
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    for (int it = 0; it < 100; ++it) {
      auto [p, dp] = legendre(n, x);
      const double dx = p / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    auto [p, dp] = legendre(n, x);
    (void)p;
    nodes[n - 1 - i] = x;
    weights[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
}

void gauss_lobatto_points(int n, Eigen::VectorXd& nodes, Eigen::VectorXd& weights) {
  if (n < 2) throw Error("gauss_lobatto_points: n must be >= 2");
  const int p = n - 1;
  nodes.resize(n);
  weights.resize(n);
  nodes[0] = -1.0;
  nodes[n - 1] = 1.0;
  // interior nodes are the roots of P_p'
  for (int i = 1; i < n - 1; ++i) {
    double x = -std::cos(M_PI * i / p);
    for (int it = 0; it < 100; ++it) {
      // Newton on P_p' using P_p'' from the Legendre ODE:
      // (1-x^2) P'' = 2x P' - p(p+1) P
      auto [pp, dpp] = legendre(p, x);
      const double d2 = (2.0 * x * dpp - p * (p + 1.0) * pp) / (1.0 - x * x);
      const double dx = dpp / d2;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    nodes[i] = x;
  }
  for (int i = 0; i < n; ++i) {
    auto [pp, dpp] = legendre(p, nodes[i]);
    (void)dpp;
    weights[i] = 2.0 / (p * (p + 1.0) * pp * pp);
  }
}

Eigen::VectorXd barycentric_weights(const Eigen::VectorXd& nodes) {
  const int n = static_cast<int>(nodes.size());
  Eigen::VectorXd w = Eigen::VectorXd::Ones(n);
  for (int j = 0; j < n; ++j) {
    for (int k = 0; k < n; ++k) {
      if (k != j) w[j] /= (nodes[j] - nodes[k]);
    }
  }
  return w;
}

Eigen::VectorXd lagrange_values(const Eigen::VectorXd& nodes,
                                const Eigen::VectorXd& bary, double x) {
  const int n = static_cast<int>(nodes.size());
  Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
  for (int j = 0; j < n; ++j) {
    if (x == nodes[j]) {
      out[j] = 1.0;
      return out;
    }
  }
  double denom = 0.0;
  for (int j = 0; j < n; ++j) denom += bary[j] / (x - nodes[j]);
  for (int j = 0; j < n; ++j) out[j] = (bary[j] / (x - nodes[j])) / denom;
  return out;
}

Eigen::VectorXd lagrange_derivatives(const Eigen::VectorXd& nodes,
                                     const Eigen::VectorXd& bary, double x) {
  // Differentiate through the first-form barycentric formula. Stable enough
  // away from nodes; at a node use the exact differentiation-matrix row.
  const int n = static_cast<int>(nodes.size());
  Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < n; ++i) {
    if (x == nodes[i]) {
      double diag = 0.0;
      for (int j = 0; j < n; ++j) {
        if (j == i) continue;
        out[j] = (bary[j] / bary[i]) / (nodes[i] - nodes[j]);
        diag -= out[j];
      }
      out[i] = diag;
      return out;
    }
  }
  // Quotient rule on the second-form barycentric formula.
  double denom = 0.0;
  for (int k = 0; k < n; ++k) denom += bary[k] / (x - nodes[k]);
  double num_d = 0.0;
  for (int k = 0; k < n; ++k) num_d += -bary[k] / ((x - nodes[k]) * (x - nodes[k]));
  for (int j = 0; j < n; ++j) {
    const double tj = bary[j] / (x - nodes[j]);
    const double dtj = -bary[j] / ((x - nodes[j]) * (x - nodes[j]));
    out[j] = (dtj * denom - tj * num_d) / (denom * denom);
  }
  return out;
}

Basis1D Basis1D::tabulate(const Eigen::VectorXd& nodes, const Eigen::VectorXd& eval_pts) {
  Basis1D b;
  b.nodes = nodes;
  b.bary = barycentric_weights(nodes);
  const int ne = static_cast<int>(eval_pts.size());
  const int nn = static_cast<int>(nodes.size());
  b.val.resize(ne, nn);
  b.der.resize(ne, nn);
  for (int q = 0; q < ne; ++q) {
    b.val.row(q) = lagrange_values(nodes, b.bary, eval_pts[q]).transpose();
    b.der.row(q) = lagrange_derivatives(nodes, b.bary, eval_pts[q]).transpose();
  }
  return b;
}

}  // namespace rbcav::basis
