#include "rbcav/config.hpp"

#include <json.hpp>

#include <fstream>

namespace rbcav {

using nlohmann::json;

void RunConfig::validate() const {
  if (box.A_min <= 0.0 || box.A_max < box.A_min) throw Error("config: invalid aspect-ratio range");
  if (box.Gr_max < box.Gr_min) throw Error("config: invalid Grashof range");
  if (grid.nx < 1 || grid.ny < 1 || grid.order < 3) throw Error("config: invalid grid");
  if (sampling_cfg.tolerance <= 0.0) throw Error("config: sampling tolerance must be positive");
  if (sampling_cfg.energy <= 0.0 || sampling_cfg.energy > 1.0)
    throw Error("config: POD energy fraction must lie in (0, 1]");
  if (sampling_cfg.n0 < 4) throw Error("config: n0 must be at least 4");
  if (time.dt <= 0.0 || time.t_end <= 0.0) throw Error("config: invalid time settings");
  if (time.sample_every < 1) throw Error("config: sample_every must be >= 1");
  if (continuation.gr_step <= 0.0 || continuation.gr_tol_rel <= 0.0)
    throw Error("config: invalid continuation settings");
  if (scan.a_steps < 1) throw Error("config: a_steps must be >= 1");
  // the observable point must lie inside every Ω(A) for A in the box
  if (!(observable[1] > 0.0 && observable[1] < 1.0))
    throw Error("config: observable y must lie in (0, 1)");
  if (!(observable[0] > 0.0 && observable[0] < box.A_min))
    throw Error("config: observable x must lie in (0, A_min)");
}

RunConfig RunConfig::from_file(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw Error("config: cannot open " + path.string());
  json j;
  try {
    is >> j;
  } catch (const json::exception& e) {
    throw Error(std::string("config: JSON parse error: ") + e.what());
  }

  RunConfig c;
  try {
    if (j.contains("box")) {
      const auto& b = j["box"];
      c.box.A_min = b.value("A_min", c.box.A_min);
      c.box.A_max = b.value("A_max", c.box.A_max);
      c.box.Gr_min = b.value("Gr_min", c.box.Gr_min);
      c.box.Gr_max = b.value("Gr_max", c.box.Gr_max);
    }
    if (j.contains("grid")) {
      const auto& g = j["grid"];
      c.grid.nx = g.value("nx", c.grid.nx);
      c.grid.ny = g.value("ny", c.grid.ny);
      c.grid.order = g.value("order", c.grid.order);
      c.grid.nq1d = g.value("nq1d", 0);
      c.grid.ref_A = g.value("ref_A", c.grid.ref_A);
    }
    if (j.contains("sampling")) {
      const auto& s = j["sampling"];
      c.sampling_cfg.tolerance = s.value("tolerance", c.sampling_cfg.tolerance);
      c.sampling_cfg.energy = s.value("energy", c.sampling_cfg.energy);
      c.sampling_cfg.n0 = s.value("n0", c.sampling_cfg.n0);
      c.sampling_cfg.max_points = s.value("max_points", c.sampling_cfg.max_points);
    }
    if (j.contains("time")) {
      const auto& t = j["time"];
      c.time.dt = t.value("dt", c.time.dt);
      c.time.t_end = t.value("t_end", c.time.t_end);
      c.time.sample_every = t.value("sample_every", c.time.sample_every);
      c.time.snapshots_per_run = t.value("snapshots_per_run", c.time.snapshots_per_run);
    }
    if (j.contains("continuation")) {
      const auto& t = j["continuation"];
      c.continuation.gr_step = t.value("gr_step", c.continuation.gr_step);
      c.continuation.gr_tol_rel = t.value("gr_tol_rel", c.continuation.gr_tol_rel);
    }
    if (j.contains("scan")) c.scan.a_steps = j["scan"].value("a_steps", c.scan.a_steps);
    if (j.contains("observable")) {
      c.observable[0] = j["observable"].at(0);
      c.observable[1] = j["observable"].at(1);
    }
    c.outdir = j.value("outdir", c.outdir);
    c.seed = j.value("seed", c.seed);
  } catch (const json::exception& e) {
    throw Error(std::string("config: schema error: ") + e.what());
  }
  c.validate();
  return c;
}

std::string RunConfig::to_json_string() const {
  const json j{
      {"box",
       {{"A_min", box.A_min}, {"A_max", box.A_max}, {"Gr_min", box.Gr_min},
        {"Gr_max", box.Gr_max}}},
      {"grid",
       {{"nx", grid.nx}, {"ny", grid.ny}, {"order", grid.order}, {"nq1d", grid.nq1d},
        {"ref_A", grid.ref_A}}},
      {"sampling",
       {{"tolerance", sampling_cfg.tolerance}, {"energy", sampling_cfg.energy},
        {"n0", sampling_cfg.n0}, {"max_points", sampling_cfg.max_points}}},
      {"time",
       {{"dt", time.dt}, {"t_end", time.t_end}, {"sample_every", time.sample_every},
        {"snapshots_per_run", time.snapshots_per_run}}},
      {"continuation",
       {{"gr_step", continuation.gr_step}, {"gr_tol_rel", continuation.gr_tol_rel}}},
      {"scan", {{"a_steps", scan.a_steps}}},
      {"observable", {observable[0], observable[1]}},
      {"outdir", outdir},
      {"seed", seed},
  };
  return j.dump(2);
}

}  // namespace rbcav
