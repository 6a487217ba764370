#include "rbcav/sampling.hpp"

#include "rbcav/delaunay.hpp"

#include <algorithm>
#include <cmath>

namespace rbcav::sampling {

namespace {

Eigen::Vector2d normalized(const Box& box, const ParameterPoint& mu) {
  const double sa = std::max(box.A_max - box.A_min, 1e-300);
  const double sg = std::max(box.Gr_max - box.Gr_min, 1e-300);
  return {(mu.A - box.A_min) / sa, (mu.Gr - box.Gr_min) / sg};
}

double separation(const Box& box, const ParameterPoint& a, const ParameterPoint& b) {
  // normalized metric; the box diagonal has length sqrt(2) (or 1 in 1D)
  return (normalized(box, a) - normalized(box, b)).norm();
}

double halton(int index, int base) {
  double f = 1.0, r = 0.0;
  while (index > 0) {
    f /= base;
    r += f * (index % base);
    index /= base;
  }
  return r;
}

struct Projector {
  const FomHandle& fom;

  // leave-one-out defect: the point's snapshot against the span of every
  // other point's raw contributions (in insertion order)
  double defect(const SampleState& s, int point_idx) const {
    std::vector<Eigen::VectorXd> others;
    for (std::size_t j = 0; j < s.point_raws.size(); ++j) {
      if (static_cast<int>(j) == point_idx) continue;
      for (const auto& v : s.point_raws[j]) others.push_back(v);
    }
    const auto loo = pod::orthonormalize_vectors(others, {}, fom.weight);
    const Eigen::VectorXd& u = s.snapshots[point_idx];
    const Eigen::VectorXd wu = fom.weight(u);
    double d2 = u.dot(wu);
    for (const auto& b : loo) {
      const double c = b.dot(wu);
      d2 -= c * c;
    }
    return std::sqrt(std::max(0.0, d2));
  }

  double norm(const SampleState& s, int point_idx) const {
    const Eigen::VectorXd& u = s.snapshots[point_idx];
    return std::sqrt(std::max(0.0, u.dot(fom.weight(u))));
  }
};

void rebuild_geometry(SampleState& s) {
  if (s.one_dimensional) {
    // consecutive intervals along the active coordinate
    std::vector<int> order(s.points.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    const bool along_gr = s.box.degenerate_A();
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      return along_gr ? s.points[a].Gr < s.points[b].Gr : s.points[a].A < s.points[b].A;
    });
    s.triangles.clear();
    for (std::size_t k = 0; k + 1 < order.size(); ++k)
      s.triangles.push_back({order[k], order[k + 1], -1});
    return;
  }
  std::vector<Eigen::Vector2d> pts;
  pts.reserve(s.points.size());
  for (const auto& mu : s.points) pts.push_back(normalized(s.box, mu));
  s.triangles = delaunay::triangulate(pts);
}

void recompute_residuals(SampleState& s, const FomHandle& fom) {
  Projector proj{fom};
  std::vector<double> defects(s.points.size()), norms(s.points.size());
  for (std::size_t i = 0; i < s.points.size(); ++i) {
    defects[i] = proj.defect(s, static_cast<int>(i));
    norms[i] = proj.norm(s, static_cast<int>(i));
  }
  s.residuals.assign(s.triangles.size(), 0.0);
  for (std::size_t t = 0; t < s.triangles.size(); ++t) {
    for (int v : s.triangles[t])
      if (v >= 0) s.residuals[t] += defects[v];
  }
  double tol = 0.0;
  for (std::size_t i = 0; i < s.points.size(); ++i) {
    const double rel = (norms[i] > 1e-300) ? defects[i] / norms[i] : 0.0;
    tol = std::max(tol, rel);
  }
  s.tol = tol;
}

double triangle_area(const SampleState& s, const std::array<int, 3>& t) {
  if (t[2] < 0) {
    return separation(s.box, s.points[t[0]], s.points[t[1]]);
  }
  const Eigen::Vector2d a = normalized(s.box, s.points[t[0]]);
  const Eigen::Vector2d b = normalized(s.box, s.points[t[1]]);
  const Eigen::Vector2d c = normalized(s.box, s.points[t[2]]);
  return 0.5 * std::abs((b.x() - a.x()) * (c.y() - a.y()) - (b.y() - a.y()) * (c.x() - a.x()));
}

ParameterPoint barycenter(const SampleState& s, const std::array<int, 3>& t) {
  double A = 0.0, Gr = 0.0;
  int n = 0;
  for (int v : t) {
    if (v < 0) continue;
    A += s.points[v].A;
    Gr += s.points[v].Gr;
    ++n;
  }
  return {A / n, Gr / n};
}

ParameterPoint longest_edge_midpoint(const SampleState& s, const std::array<int, 3>& t) {
  if (t[2] < 0) return barycenter(s, t);
  double best = -1.0;
  ParameterPoint mid{0, 0};
  const std::array<std::array<int, 2>, 3> edges{{{t[0], t[1]}, {t[1], t[2]}, {t[2], t[0]}}};
  for (auto e : edges) {
    const double len = separation(s.box, s.points[e[0]], s.points[e[1]]);
    if (len > best) {
      best = len;
      mid = {0.5 * (s.points[e[0]].A + s.points[e[1]].A),
             0.5 * (s.points[e[0]].Gr + s.points[e[1]].Gr)};
    }
  }
  return mid;
}

bool admissible(const SampleState& s, const ParameterPoint& mu, double delta_min_rel) {
  if (!s.box.contains(mu)) return false;
  const double dmin = delta_min_rel * std::sqrt(2.0);
  for (const auto& p : s.points)
    if (separation(s.box, p, mu) < dmin) return false;
  return true;
}

// snapshot at a new point; append steady mode and, in Algorithm-2 mode,
// transient POD modes
void add_point(SampleState& s, const ParameterPoint& mu, const FomHandle& fom,
               const CvtOptions& opts, bool algorithm2) {
  const Eigen::VectorXd snap = fom.steady(mu);
  s.points.push_back(mu);
  s.snapshots.push_back(snap);
  s.point_raws.push_back({snap});
  const int point_idx = static_cast<int>(s.points.size()) - 1;

  const auto accepted =
      pod::orthonormalize_vectors(std::span<const Eigen::VectorXd>(&snap, 1), s.basis,
                                  fom.weight);
  for (const auto& m : accepted) {
    s.basis.push_back(m);
    s.basis_info.push_back({mu, 0.0, true});
  }

  if (algorithm2 && fom.classify_unsteady && fom.transient_snapshots &&
      fom.classify_unsteady(mu, snap, s.basis)) {
    const auto time_snaps = fom.transient_snapshots(mu);
    if (time_snaps.empty()) {
      s.unsettled.push_back(point_idx);
      return;
    }
    Eigen::MatrixXd S(time_snaps.front().size(), time_snaps.size());
    for (std::size_t j = 0; j < time_snaps.size(); ++j) S.col(j) = time_snaps[j];
    const auto podr = pod::pod_vectors(S, fom.weight, opts.energy);
    std::vector<Eigen::VectorXd> modes;
    for (int j = 0; j < podr.modes.cols(); ++j) modes.push_back(podr.modes.col(j));
    for (const auto& m : modes) s.point_raws.back().push_back(m);
    const auto kept = pod::orthonormalize_vectors(modes, s.basis, fom.weight);
    for (std::size_t j = 0; j < kept.size(); ++j) {
      s.basis.push_back(kept[j]);
      s.basis_info.push_back({mu, static_cast<double>(j), false});
    }
  }
}

SampleState init_state(const Box& box, int n0, const FomHandle& fom, const CvtOptions& opts,
                       bool algorithm2) {
  if (n0 < 4) throw Error("init_samples: n0 must be at least 4");
  if (!fom.steady || !fom.weight) throw Error("init_samples: incomplete full-order handle");
  SampleState s;
  s.box = box;
  s.one_dimensional = box.one_dimensional();

  std::vector<ParameterPoint> initial;
  if (s.one_dimensional) {
    const bool along_gr = box.degenerate_A();
    for (int k = 0; k < n0; ++k) {
      const double t = static_cast<double>(k) / (n0 - 1);
      initial.push_back(along_gr
                            ? ParameterPoint{box.A_min, box.Gr_min + t * (box.Gr_max - box.Gr_min)}
                            : ParameterPoint{box.A_min + t * (box.A_max - box.A_min), box.Gr_min});
    }
  } else {
    int k = 2;
    while ((k + 1) * (k + 1) <= n0) ++k;
    for (int j = 0; j < k; ++j) {
      for (int i = 0; i < k; ++i) {
        initial.push_back({box.A_min + (box.A_max - box.A_min) * i / (k - 1),
                           box.Gr_min + (box.Gr_max - box.Gr_min) * j / (k - 1)});
      }
    }
    int h = 1;
    while (static_cast<int>(initial.size()) < n0) {
      const ParameterPoint cand{box.A_min + (box.A_max - box.A_min) * halton(h, 2),
                                box.Gr_min + (box.Gr_max - box.Gr_min) * halton(h, 3)};
      ++h;
      bool ok = true;
      for (const auto& p : initial)
        if (separation(box, p, cand) < opts.delta_min_rel * std::sqrt(2.0)) ok = false;
      if (ok) initial.push_back(cand);
    }
  }

  for (const auto& mu : initial) add_point(s, mu, fom, opts, algorithm2);
  rebuild_geometry(s);
  recompute_residuals(s, fom);
  return s;
}

}  // namespace

SampleState init_samples(const Box& box, int n0, const FomHandle& fom) {
  return init_state(box, n0, fom, CvtOptions{}, false);
}

int worst_triangle(const SampleState& state) {
  if (state.basis.empty()) throw Error("worst_triangle: basis is empty");
  if (state.triangles.empty()) throw Error("worst_triangle: no triangles");
  int best = 0;
  for (int t = 1; t < static_cast<int>(state.triangles.size()); ++t) {
    const double r = state.residuals[t], rb = state.residuals[best];
    if (r > rb) {
      best = t;
    } else if (r == rb) {
      const double a = triangle_area(state, state.triangles[t]);
      const double ab = triangle_area(state, state.triangles[best]);
      if (a > ab) best = t;  // tie: larger area, then lower index (kept)
    }
  }
  return best;
}

namespace {

bool refine_impl(SampleState& state, const FomHandle& fom, const CvtOptions& opts,
                 bool algorithm2) {
  if (state.triangles.empty()) return false;
  std::vector<int> order(state.triangles.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (state.residuals[a] != state.residuals[b]) return state.residuals[a] > state.residuals[b];
    const double aa = triangle_area(state, state.triangles[a]);
    const double ab = triangle_area(state, state.triangles[b]);
    if (aa != ab) return aa > ab;
    return a < b;
  });
  for (int t : order) {
    ParameterPoint cand = barycenter(state, state.triangles[t]);
    if (!admissible(state, cand, opts.delta_min_rel)) {
      cand = longest_edge_midpoint(state, state.triangles[t]);
      if (!admissible(state, cand, opts.delta_min_rel)) continue;
    }
    add_point(state, cand, fom, opts, algorithm2);
    rebuild_geometry(state);
    recompute_residuals(state, fom);
    return true;
  }
  return false;
}

CvtResult run_loop(const Box& box, const FomHandle& fom, const CvtOptions& opts,
                   bool algorithm2) {
  if (opts.threshold <= 0.0) throw Error("cvt: threshold must be positive");
  CvtResult out;
  out.state = init_state(box, opts.n0, fom, opts, algorithm2);
  SampleState& s = out.state;

  int iteration = 0;
  auto log = [&](const ParameterPoint& mu) {
    if (!opts.log) return;
    const int wt = s.triangles.empty() ? -1 : worst_triangle(s);
    opts.log({iteration, mu, wt >= 0 ? s.residuals[wt] : 0.0, s.tol});
  };
  log(s.points.back());

  while (s.tol >= opts.threshold) {
    if (static_cast<int>(s.points.size()) >= opts.max_points) return out;  // budget exhausted
    ++iteration;
    if (!refine_impl(s, fom, opts, algorithm2)) return out;
    log(s.points.back());
  }
  out.converged = true;
  return out;
}

}  // namespace

bool refine(SampleState& state, const FomHandle& fom, const CvtOptions& opts) {
  return refine_impl(state, fom, opts, false);
}

CvtResult cvt_sample(const Box& box, const FomHandle& fom, const CvtOptions& opts) {
  return run_loop(box, fom, opts, false);
}

CvtResult pod_cvt(const Box& box, const FomHandle& fom, const CvtOptions& opts) {
  return run_loop(box, fom, opts, true);
}

}  // namespace rbcav::sampling
