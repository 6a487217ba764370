#pragma once

#include "rbcav/io.hpp"
#include "rbcav/sampling.hpp"

#include <cstdint>
#include <filesystem>
#include <string>

namespace rbcav {

/// One JSON document drives every pipeline stage; all values dimensionless.
struct RunConfig {
  sampling::Box box{4.0, 4.0, 5.0e3, 3.5e4};
  io::GridDesc grid{4, 1, 7, 0, 2.0};

  struct Sampling {
    double tolerance = 1e-4;
    double energy = 0.999;
    int n0 = 4;
    int max_points = 32;
  } sampling_cfg;

  struct Time {
    double dt = 1e-4;
    double t_end = 2.0;
    int sample_every = 25;
    int snapshots_per_run = 16;  // time snapshots kept over >= 2 periods
  } time;

  struct Continuation {
    double gr_step = 2000.0;
    double gr_tol_rel = 1e-3;
  } continuation;

  struct Scan {
    int a_steps = 3;
  } scan;

  Eigen::Vector2d observable{0.7, 0.7};
  std::string outdir = "out";
  std::uint64_t seed = 0;

  void validate() const;

  static RunConfig from_file(const std::filesystem::path& path);
  std::string to_json_string() const;
};

}  // namespace rbcav
