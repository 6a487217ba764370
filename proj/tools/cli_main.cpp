#include "rbcav/driver.hpp"

#include <CLI11.hpp>

#include <iostream>

using namespace rbcav;

namespace {

bool parse_range(const std::string& s, double& lo, double& hi) {
  const auto pos = s.find(':');
  if (pos == std::string::npos) return false;
  try {
    lo = std::stod(s.substr(0, pos));
    hi = std::stod(s.substr(pos + 1));
  } catch (...) {
    return false;
  }
  return true;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reduced-basis bifurcation analysis for the buoyant cavity flow"};
  app.require_subcommand(1);

  std::string config_path, archive_path, out_dir, mode = "steady", gr_range, seed_snapshot;
  double A = 0.0, gr = 0.0;
  long long seed = -1;
  bool transient = false, dump_fields = false;

  auto add_common = [&](CLI::App* cmd, bool needs_archive) {
    cmd->add_option("--config", config_path, "run configuration (JSON)")->required();
    cmd->add_option("--out", out_dir, "output directory override");
    cmd->add_option("--seed", seed, "seed override");
    if (needs_archive)
      cmd->add_option("--archive", archive_path, "reduced model archive")->required();
  };

  auto* offline = app.add_subcommand("offline", "sample the parameter box and build the model");
  add_common(offline, false);

  auto* online = app.add_subcommand("online", "reduced solve at one parameter point");
  add_common(online, true);
  online->add_option("--A", A, "aspect ratio")->required();
  online->add_option("--gr", gr, "Grashof number")->required();
  online->add_flag("--transient", transient, "run the transient instead of the steady solve");
  online->add_flag("--dump-fields", dump_fields, "write reconstructed velocity and pressure");

  auto* diagram = app.add_subcommand("diagram", "forward/backward bifurcation diagram");
  add_common(diagram, true);
  diagram->add_option("--A", A, "aspect ratio")->required();
  diagram->add_option("--gr-range", gr_range, "LO:HI Grashof range")->required();
  diagram->add_option("--seed-snapshot", seed_snapshot,
                      "snapshot file seeding the backward sweep");

  auto* detect = app.add_subcommand("detect", "bifurcation detection");
  add_common(detect, true);
  detect->add_option("--mode", mode, "steady|hopf|plane")->required();
  detect->add_option("--A", A, "aspect ratio (steady/hopf modes)");
  detect->add_option("--gr-range", gr_range, "LO:HI Grashof range");

  auto* report = app.add_subcommand("report", "timing summary from the run log");
  add_common(report, false);

  CLI11_PARSE(app, argc, argv);

  try {
    RunConfig config = RunConfig::from_file(config_path);
    if (!out_dir.empty()) config.outdir = out_dir;
    if (seed >= 0) config.seed = static_cast<std::uint64_t>(seed);

    if (offline->parsed()) return driver::cmd_offline(config);

    if (online->parsed())
      return driver::cmd_online(config, archive_path, {A, gr}, transient, dump_fields);

    if (diagram->parsed()) {
      double lo = config.box.Gr_min, hi = config.box.Gr_max;
      if (!gr_range.empty() && !parse_range(gr_range, lo, hi)) {
        std::cerr << "invalid --gr-range, expected LO:HI\n";
        return driver::kError;
      }
      std::optional<std::filesystem::path> seed_path;
      if (!seed_snapshot.empty()) seed_path = seed_snapshot;
      return driver::cmd_diagram(config, archive_path, A, lo, hi, seed_path);
    }

    if (detect->parsed()) {
      double lo = config.box.Gr_min, hi = config.box.Gr_max;
      if (!gr_range.empty() && !parse_range(gr_range, lo, hi)) {
        std::cerr << "invalid --gr-range, expected LO:HI\n";
        return driver::kError;
      }
      driver::DetectMode m;
      if (mode == "steady")
        m = driver::DetectMode::steady;
      else if (mode == "hopf")
        m = driver::DetectMode::hopf;
      else if (mode == "plane")
        m = driver::DetectMode::plane;
      else {
        std::cerr << "invalid --mode, expected steady|hopf|plane\n";
        return driver::kError;
      }
      if (m != driver::DetectMode::plane && A <= 0.0) {
        std::cerr << "--A is required for steady/hopf detection\n";
        return driver::kError;
      }
      return driver::cmd_detect(config, archive_path, m, A, lo, hi);
    }

    if (report->parsed())
      return driver::cmd_report(config,
                                std::filesystem::path(config.outdir) / "timings.log");
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return driver::kError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return driver::kError;
  }
  return driver::kOk;
}
