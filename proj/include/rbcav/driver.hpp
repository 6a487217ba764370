#pragma once

#include "rbcav/config.hpp"
#include "rbcav/stability.hpp"

#include <filesystem>
#include <optional>

namespace rbcav::driver {

inline constexpr int kOk = 0;
inline constexpr int kError = 1;
inline constexpr int kPartial = 2;

/// Offline phase: residual-driven sampling over the configured box, snapshot
/// persistence, basis construction, reduced-operator assembly, archive and
/// sampling-log emission. Returns kPartial when the point budget ran out
/// before the tolerance was met.
int cmd_offline(const RunConfig& config);

/// Forward/backward continuation diagram at fixed A over [gr_lo, gr_hi];
/// emits the diagram CSV and a companion eigenvalue-path CSV. The backward
/// sweep starts from the forward endpoint unless a seed snapshot is given.
int cmd_diagram(const RunConfig& config, const std::filesystem::path& archive, double A,
                double gr_lo, double gr_hi,
                const std::optional<std::filesystem::path>& seed_snapshot = std::nullopt);

enum class DetectMode { steady, hopf, plane };

/// Single-aspect detection (steady | hopf) over the configured Gr range, or
/// the two-parameter plane scan with per-family trial/test combinations.
int cmd_detect(const RunConfig& config, const std::filesystem::path& archive, DetectMode mode,
               double A, double gr_lo, double gr_hi);

/// Online reduced solve at μ; steady observable or transient observable
/// series, optional reconstructed-velocity and recovered-pressure dumps.
int cmd_online(const RunConfig& config, const std::filesystem::path& archive,
               const ParameterPoint& mu, bool transient, bool dump_fields);

/// Timing summary from the run log; emits measured offline/online seconds
/// and the offline+online versus fully-full-order ratio.
int cmd_report(const RunConfig& config, const std::filesystem::path& log_path);

// internals shared with the acceptance suite
struct RawSnapshot {
  Field velocity;  // physical domain
  ParameterPoint mu;
  std::string kind;  // steady | transient
  double time = 0.0;
};

struct OfflineArtifacts {
  sampling::CvtResult cvt;
  rom::ReducedBasis basis;
  int n_steady = 0;
  int n_unsteady_points = 0;
  std::vector<int> modes_per_unsteady;
  std::vector<sampling::LogEntry> log_entries;
  std::vector<RawSnapshot> raw;
  double fom_steady_seconds = 0.0;
  int fom_steady_count = 0;
};

/// Library-level offline pipeline (no filesystem side effects).
OfflineArtifacts run_offline(const RunConfig& config);

}  // namespace rbcav::driver
