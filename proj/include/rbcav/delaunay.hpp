#pragma once

#include <Eigen/Dense>

#include <array>
#include <vector>

namespace rbcav::delaunay {

/// Delaunay triangulation by Bowyer-Watson insertion in the given point
/// order; triangle vertex triples and the list itself are sorted so the
/// output is a deterministic function of the input.
std::vector<std::array<int, 3>> triangulate(const std::vector<Eigen::Vector2d>& points);

/// All points within tol (relative to the bounding-box diagonal) of one line.
bool nearly_collinear(const std::vector<Eigen::Vector2d>& points, double tol = 1e-9);

}  // namespace rbcav::delaunay
