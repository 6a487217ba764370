#pragma once

#include <Eigen/Dense>

#include <vector>

namespace rbcav::basis {

/// Legendre polynomial P_n and derivative P_n' at x.
std::pair<double, double> legendre(int n, double x);

/// Gauss-Legendre nodes and weights on [-1, 1], exact for degree 2n-1.
void gauss_points(int n, Eigen::VectorXd& nodes, Eigen::VectorXd& weights);

/// Gauss-Lobatto-Legendre nodes and weights on [-1, 1] (n >= 2 points).
void gauss_lobatto_points(int n, Eigen::VectorXd& nodes, Eigen::VectorXd& weights);

/// Barycentric weights for Lagrange interpolation on the given nodes.
Eigen::VectorXd barycentric_weights(const Eigen::VectorXd& nodes);

/// Values of the Lagrange cardinal functions l_j(x), j = 0..n-1.
Eigen::VectorXd lagrange_values(const Eigen::VectorXd& nodes,
                                const Eigen::VectorXd& bary, double x);

/// Derivatives l_j'(x) of the Lagrange cardinal functions.
Eigen::VectorXd lagrange_derivatives(const Eigen::VectorXd& nodes,
                                     const Eigen::VectorXd& bary, double x);

/// One-dimensional nodal basis on [-1, 1] with tabulated values and
/// derivatives at a set of evaluation points (rows: points, cols: functions).
struct Basis1D {
  Eigen::VectorXd nodes;  // interpolation nodes
  Eigen::VectorXd bary;
  Eigen::MatrixXd val;    // n_eval x n_nodes
  Eigen::MatrixXd der;    // n_eval x n_nodes

  static Basis1D tabulate(const Eigen::VectorXd& nodes, const Eigen::VectorXd& eval_pts);
};

}  // namespace rbcav::basis
