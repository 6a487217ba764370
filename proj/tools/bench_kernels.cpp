// Timing comparison of the OpenMP kernels against their serial references.
#include "rbcav/kernels.hpp"

#include <chrono>
#include <cstdio>
#include <functional>
#include <random>

using namespace rbcav;

namespace {

double time_of(const std::function<void()>& fn, int reps) {
  fn();  // warm up
  const auto t0 = std::chrono::steady_clock::now();
  for (int r = 0; r < reps; ++r) fn();
  const auto t1 = std::chrono::steady_clock::now();
  return std::chrono::duration<double>(t1 - t0).count() / reps;
}

void report(const char* name, double serial, double parallel) {
  std::printf("%-22s serial %10.4f ms   omp %10.4f ms   speedup %5.2fx\n", name,
              1e3 * serial, 1e3 * parallel, serial / parallel);
}

}  // namespace

int main(int argc, char** argv) {
  const int N = argc > 1 ? std::atoi(argv[1]) : 48;
  const int reps = argc > 2 ? std::atoi(argv[2]) : 3;

  auto g = Grid::make(4, 2, 7);
  const int nq = g->nq_total();
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  auto rand_mat = [&](int r, int c) {
    Eigen::MatrixXd m(r, c);
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < c; ++j) m(i, j) = dist(rng);
    return m;
  };

  Eigen::VectorXd w, qx, qy;
  g->quadrature_geometry(4.0, w, qx, qy);
  const Eigen::MatrixXd Vt = rand_mat(N, nq), Gx = rand_mat(N, nq), Gy = rand_mat(N, nq),
                        Ax = rand_mat(N, nq), Ay = rand_mat(N, nq);

  std::printf("grid %dx%d order %d (%d quadrature points), %d modes, %d reps\n\n", g->nx, g->ny,
              g->order, nq, N, reps);

  report("eval_scalar",
         time_of(
             [&] {
               Eigen::VectorXd v, dx, dy;
               Eigen::VectorXd c = Eigen::VectorXd::LinSpaced(g->n_vnodes(), 0.0, 1.0);
               kernels::ref::eval_scalar(*g, 4.0, c, &v, &dx, &dy);
             },
             reps * 20),
         time_of(
             [&] {
               Eigen::VectorXd v, dx, dy;
               Eigen::VectorXd c = Eigen::VectorXd::LinSpaced(g->n_vnodes(), 0.0, 1.0);
               kernels::eval_scalar(*g, 4.0, c, &v, &dx, &dy);
             },
             reps * 20));

  report("weighted_gram",
         time_of([&] { kernels::ref::weighted_gram(Vt, Gx, w); }, reps * 10),
         time_of([&] { kernels::weighted_gram(Vt, Gx, w); }, reps * 10));

  report("advection_tensor",
         time_of([&] { kernels::ref::advection_tensor(Vt, Gx, Gy, Ax, Ay, w); }, reps),
         time_of([&] { kernels::advection_tensor(Vt, Gx, Gy, Ax, Ay, w); }, reps));

  report("buoyancy_vector",
         time_of([&] { kernels::ref::buoyancy_vector(Vt, qx, w); }, reps * 50),
         time_of([&] { kernels::buoyancy_vector(Vt, qx, w); }, reps * 50));

  const Eigen::MatrixXd snaps = rand_mat(2 * g->n_vnodes(), N);
  const Eigen::MatrixXd weighted = rand_mat(2 * g->n_vnodes(), N);
  report("correlation",
         time_of([&] { kernels::ref::correlation(snaps, weighted); }, reps * 10),
         time_of([&] { kernels::correlation(snaps, weighted); }, reps * 10));

  const Eigen::VectorXd integrand = w;
  report("project_scalar",
         time_of([&] { kernels::ref::project_scalar(*g, integrand); }, reps * 20),
         time_of([&] { kernels::project_scalar(*g, integrand); }, reps * 20));
  return 0;
}
