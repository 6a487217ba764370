#include "rbcav/delaunay.hpp"

#include "rbcav/field.hpp"

#include <algorithm>
#include <cmath>

namespace rbcav::delaunay {

namespace {

struct Tri {
  int a, b, c;
};

// > 0 when d lies inside the circumcircle of (a, b, c) with ccw orientation
double incircle(const Eigen::Vector2d& a, const Eigen::Vector2d& b, const Eigen::Vector2d& c,
                const Eigen::Vector2d& d) {
  const double ax = a.x() - d.x(), ay = a.y() - d.y();
  const double bx = b.x() - d.x(), by = b.y() - d.y();
  const double cx = c.x() - d.x(), cy = c.y() - d.y();
  const double det = (ax * ax + ay * ay) * (bx * cy - cx * by) -
                     (bx * bx + by * by) * (ax * cy - cx * ay) +
                     (cx * cx + cy * cy) * (ax * by - bx * ay);
  return det;
}

double orient(const Eigen::Vector2d& a, const Eigen::Vector2d& b, const Eigen::Vector2d& c) {
  return (b.x() - a.x()) * (c.y() - a.y()) - (b.y() - a.y()) * (c.x() - a.x());
}

}  // namespace

bool nearly_collinear(const std::vector<Eigen::Vector2d>& points, double tol) {
  if (points.size() < 3) return true;
  Eigen::Vector2d lo = points[0], hi = points[0];
  for (const auto& p : points) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  const double diag = (hi - lo).norm();
  if (diag <= 0.0) return true;
  // find the farthest pair anchor (first point vs farthest), then test area
  std::size_t far = 1;
  for (std::size_t i = 1; i < points.size(); ++i)
    if ((points[i] - points[0]).norm() > (points[far] - points[0]).norm()) far = i;
  const Eigen::Vector2d a = points[0], b = points[far];
  const double ab = (b - a).norm();
  if (ab <= tol * diag) return true;
  for (const auto& p : points) {
    const double area2 = std::abs(orient(a, b, p));
    if (area2 / ab > tol * diag) return false;
  }
  return true;
}

std::vector<std::array<int, 3>> triangulate(const std::vector<Eigen::Vector2d>& points) {
  const int n = static_cast<int>(points.size());
  if (n < 3) throw Error("triangulate: at least three points required");
  if (nearly_collinear(points)) throw Error("triangulate: points are collinear");

  // normalize into the unit box
  Eigen::Vector2d lo = points[0], hi = points[0];
  for (const auto& p : points) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  const Eigen::Vector2d span = (hi - lo).cwiseMax(Eigen::Vector2d::Constant(1e-300));
  std::vector<Eigen::Vector2d> pts(n + 3);
  for (int i = 0; i < n; ++i)
    pts[i] = Eigen::Vector2d((points[i].x() - lo.x()) / span.x(),
                             (points[i].y() - lo.y()) / span.y());
  // super-triangle
  pts[n] = {-10.0, -10.0};
  pts[n + 1] = {11.0, -10.0};
  pts[n + 2] = {0.5, 12.0};

  std::vector<Tri> tris{{n, n + 1, n + 2}};
  for (int ip = 0; ip < n; ++ip) {
    const Eigen::Vector2d& p = pts[ip];
    std::vector<Tri> keep;
    std::vector<std::array<int, 2>> boundary;
    for (const Tri& t : tris) {
      Eigen::Vector2d a = pts[t.a], b = pts[t.b], c = pts[t.c];
      double sign = orient(a, b, c) >= 0 ? 1.0 : -1.0;
      if (sign * incircle(a, b, c, p) > 1e-14) {
        // bad triangle: collect edges
        const std::array<std::array<int, 2>, 3> edges{{{t.a, t.b}, {t.b, t.c}, {t.c, t.a}}};
        for (auto e : edges) {
          auto rev = std::array<int, 2>{e[1], e[0]};
          auto it = std::find(boundary.begin(), boundary.end(), rev);
          if (it != boundary.end())
            boundary.erase(it);  // shared edge cancels
          else
            boundary.push_back(e);
        }
      } else {
        keep.push_back(t);
      }
    }
    for (auto e : boundary) keep.push_back({e[0], e[1], ip});
    tris = std::move(keep);
  }

  std::vector<std::array<int, 3>> out;
  for (const Tri& t : tris) {
    if (t.a >= n || t.b >= n || t.c >= n) continue;  // touches super-triangle
    std::array<int, 3> tri{t.a, t.b, t.c};
    std::sort(tri.begin(), tri.end());
    out.push_back(tri);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace rbcav::delaunay
