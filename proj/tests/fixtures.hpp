#pragma once

#include "rbcav/driver.hpp"
#include "rbcav/fom.hpp"
#include "rbcav/rom.hpp"

#include <filesystem>
#include <vector>

namespace rbcav::fixtures {

/// Cache directory for the full-order fixture data (regenerated when absent
/// or stale): RBCAV_FIXTURE_CACHE env var or ./rbcav_fixture_cache.
std::filesystem::path cache_dir();

struct Snapshot {
  Field velocity;  // physical domain
  ParameterPoint mu;
  double time = 0.0;
  int vortices = 0;
  double observable = 0.0;
};

/// Desk-scale two-branch configuration at A = 4 on the 4x1 order-7 grid:
/// the branch continued from low Gr ("pre") and the coexisting two-roll
/// branch reached by transient settling ("post"), which folds near the lower
/// end of the window.
struct TwoBranch {
  std::shared_ptr<const Grid> grid;
  double A = 4.0;
  double gr_lo = 40.0e3, gr_hi = 70.0e3;
  std::vector<Snapshot> pre;
  std::vector<Snapshot> post;
  double post_fold_gr = 0.0;  // lowest Gr reached by the post branch
};
const TwoBranch& two_branch();

/// Oscillation-onset configuration at A = 4: steady-branch snapshots across
/// the onset plus a settled full-order transient just past it.
struct HopfSet {
  std::shared_ptr<const Grid> grid;
  double A = 4.0;
  double gr_lo = 15.0e3, gr_hi = 35.0e3;
  std::vector<Snapshot> steady;
  std::vector<Snapshot> unsteady;  // states over >= 2 settled periods at gr_probe
  double gr_probe = 26.5e3;
  double dt = 1.0e-4;
  std::vector<double> series;  // probe observable at every step
};
const HopfSet& hopf_set();

/// Steady-branch snapshot families for the two-parameter scan, plus settled
/// oscillation snapshots per aspect ratio (the detector needs both).
struct ScanSet {
  std::shared_ptr<const Grid> grid;
  std::vector<double> A_values{4.0, 4.5, 5.0, 5.5};
  double gr_lo = 14.0e3, gr_hi = 30.0e3;
  std::vector<Snapshot> snaps;     // steady states on every A-branch
  std::vector<Snapshot> unsteady;  // settled oscillation states per A
};
const ScanSet& scan_set();

/// Orthonormalized reference-domain basis from physical-domain snapshots.
rom::ReducedBasis basis_from(std::shared_ptr<const Grid> grid, const DiscreteForms& forms_ref,
                             const std::vector<const Snapshot*>& snaps);

}  // namespace rbcav::fixtures
