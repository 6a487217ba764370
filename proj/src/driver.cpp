#include "rbcav/driver.hpp"

#include "rbcav/fom.hpp"
#include "rbcav/geometry.hpp"
#include "rbcav/oscillation.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <random>

namespace rbcav::driver {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

double now_seconds() {
  return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

long long key_of(double v) {
  long long k;
  static_assert(sizeof(k) == sizeof(v));
  std::memcpy(&k, &v, sizeof(k));
  return k;
}

/// Grid, per-aspect forms, and warm-started full-order steady solves shared
/// by the pipeline stages.
class FomContext {
 public:
  explicit FomContext(const RunConfig& cfg) : cfg_(cfg) {
    grid_ = cfg.grid.make();
    forms_ref_ = &forms(grid_->ref_A);
  }

  const RunConfig& cfg() const { return cfg_; }
  std::shared_ptr<const Grid> grid() const { return grid_; }
  const DiscreteForms& forms_ref() const { return *forms_ref_; }

  DiscreteForms& forms(double A) {
    auto it = forms_.find(key_of(A));
    if (it == forms_.end())
      it = forms_.emplace(key_of(A), std::make_unique<DiscreteForms>(assemble_forms(grid_, A)))
               .first;
    return *it->second;
  }

  /// Warm-started steady solve with caching per parameter point.
  const Field& steady_velocity(const ParameterPoint& mu) {
    const auto key = std::make_pair(key_of(mu.A), key_of(mu.Gr));
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second.velocity;

    auto& f = forms(mu.A);
    const Field* guess = nullptr;
    double best_d = std::numeric_limits<double>::infinity();
    for (const auto& [k, r] : cache_) {
      if (k.first != key.first) continue;
      double gr;
      std::memcpy(&gr, &k.second, sizeof(gr));
      const double d = std::abs(gr - mu.Gr);
      if (d < best_d) {
        best_d = d;
        guess = &r.velocity;
      }
    }
    const double t0 = now_seconds();
    fom::SteadyResult r =
        guess ? fom::solve_steady(f, mu, guess) : fom::steady_from_zero(f, mu);
    if (!r.converged) r = fom::steady_from_zero(f, mu);
    steady_seconds += now_seconds() - t0;
    ++steady_count;
    if (!r.converged)
      throw Error("offline: full-order steady solve failed at A=" + std::to_string(mu.A) +
                  " Gr=" + std::to_string(mu.Gr));
    auto [ins, ok] = cache_.emplace(key, std::move(r));
    (void)ok;
    return ins->second.velocity;
  }

  Eigen::VectorXd pullback(const Field& u, double A) {
    geometry::WeakDivergenceCheck check = [this, A](const Field& v) {
      return forms(A).weak_divergence_residual(v.coeffs);
    };
    return geometry::piola_pullback(u, A, grid_->ref_A, check, 1e-8).coeffs;
  }

  double steady_seconds = 0.0;
  int steady_count = 0;

 private:
  RunConfig cfg_;
  std::shared_ptr<const Grid> grid_;
  std::map<long long, std::unique_ptr<DiscreteForms>> forms_;
  DiscreteForms* forms_ref_ = nullptr;
  std::map<std::pair<long long, long long>, fom::SteadyResult> cache_;
};

Field perturbed(const Field& u, const Grid& g, double A, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  // smooth solenoidal kick: curl of a clamped random quadratic bump
  const double c0 = dist(rng), c1 = dist(rng), c2 = dist(rng);
  auto a = [A](double x) {
    const double t = x * (x - A);
    return t * t;
  };
  auto ap = [A](double x) { return 2.0 * x * (x - A) * (2.0 * x - A); };
  auto b = [](double y) {
    const double t = y * (y - 1.0);
    return t * t;
  };
  auto bp = [](double y) { return 2.0 * y * (y - 1.0) * (2.0 * y - 1.0); };
  auto q = [=](double x, double y) { return c0 + c1 * x + c2 * y; };

  Field kick;
  kick.kind = FieldKind::velocity;
  kick.domain = DomainTag::physical(A);
  kick.coeffs.resize(u.coeffs.size());
  const int nv = static_cast<int>(u.coeffs.size()) / 2;
  kick.coeffs.head(nv) = g.interpolate(
      A, [&](double x, double y) { return a(x) * (bp(y) * q(x, y) + b(y) * c2); });
  kick.coeffs.tail(nv) = g.interpolate(
      A, [&](double x, double y) { return -b(y) * (ap(x) * q(x, y) + a(x) * c1); });

  const double un = u.coeffs.norm();
  const double kn = std::max(kick.coeffs.norm(), 1e-300);
  Field out = u;
  out.coeffs = u.coeffs * 1.001 + (1e-3 * un / kn) * kick.coeffs;
  return out;
}

void ensure_dir(const fs::path& p) {
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) throw Error("cannot create directory " + p.string());
}

void append_timing(const fs::path& log, const std::string& phase, const std::string& label,
                   double seconds) {
  std::ofstream os(log, std::ios::app);
  os << phase << ',' << label << ',' << io::fmt(seconds) << '\n';
}

Eigen::VectorXd project_onto(const rom::ReducedBasis& basis, const DiscreteForms& forms_ref,
                             const Eigen::VectorXd& ref_coeffs) {
  Eigen::VectorXd a(basis.size());
  const int nv = forms_ref.nv();
  Eigen::VectorXd w(2 * nv);
  w.head(nv) = forms_ref.Ms * ref_coeffs.head(nv);
  w.tail(nv) = forms_ref.Ms * ref_coeffs.tail(nv);
  for (int i = 0; i < basis.size(); ++i) a[i] = basis.modes[i].coeffs.dot(w);
  return a;
}

/// Ramped reduced steady solve from rest.
std::optional<Eigen::VectorXd> reduced_seed(const rom::ReducedOperators& ops, double A,
                                            double gr) {
  Eigen::VectorXd a = Eigen::VectorXd::Zero(ops.N);
  for (int r = 1; r <= 4; ++r) {
    const auto sr = rom::rom_solve_steady(ops, {A, gr * r / 4.0}, a);
    if (!sr.converged) return std::nullopt;
    a = sr.state.a;
  }
  return a;
}

std::string kind_name(stability::BifKind k) {
  return k == stability::BifKind::steady ? "steady" : "hopf";
}

}  // namespace

OfflineArtifacts run_offline(const RunConfig& config) {
  config.validate();
  OfflineArtifacts art;
  auto ctx = std::make_shared<FomContext>(config);
  auto raw = std::make_shared<std::vector<RawSnapshot>>();

  sampling::FomHandle handle;
  handle.weight = pod::weight_for(ctx->forms_ref(), pod::InnerProduct::l2);
  handle.steady = [ctx, raw](const ParameterPoint& mu) {
    const Field& u = ctx->steady_velocity(mu);
    raw->push_back({u, mu, "steady", 0.0});
    return ctx->pullback(u, mu.A);
  };
  handle.classify_unsteady = [ctx](const ParameterPoint& mu, const Eigen::VectorXd& snap,
                                   std::span<const Eigen::VectorXd> basis) {
    if (basis.size() < 2) return false;
    rom::ReducedBasis rb;
    rb.grid = ctx->grid();
    for (const auto& v : basis) {
      Field m;
      m.kind = FieldKind::velocity;
      m.domain = DomainTag::ref();
      m.coeffs = v;
      rb.append(std::move(m), {mu, 0.0, true});
    }
    rom::AssembleOptions opts;
    opts.on_the_fly = true;
    const auto ops = rom::assemble_reduced(rb, *ctx->grid(), opts);
    const auto a = project_onto(rb, ctx->forms_ref(), snap);
    const auto eigs = stability::eigs_dense(stability::growth_matrix(ops, mu, a));
    return !eigs.empty() && eigs.front().real() > 0.0;
  };
  handle.transient_snapshots = [ctx, raw](const ParameterPoint& mu) {
    const auto& cfg = ctx->cfg();
    const Field& base = ctx->steady_velocity(mu);
    const Field u0 = perturbed(base, *ctx->grid(), mu.A, cfg.seed);

    std::vector<double> series;
    fom::TransientOptions topts;
    topts.dt = cfg.time.dt;
    topts.t_end = cfg.time.t_end;
    topts.sample_every = cfg.time.sample_every;
    topts.observe_point = cfg.observable;
    topts.observe = [&series](double, double v) { series.push_back(v); };

    auto& f = ctx->forms(mu.A);
    const auto traj = fom::solve_transient(f, mu, u0, topts);
    if (traj.blew_up) return std::vector<Eigen::VectorXd>{};

    const auto analysis = oscillation::analyze_series(series, cfg.time.dt);
    if (!analysis.settled) return std::vector<Eigen::VectorXd>{};

    std::vector<Eigen::VectorXd> out;
    if (!analysis.periodic) {
      const auto& last = traj.states.back();
      raw->push_back({last, mu, "transient", traj.times.back()});
      out.push_back(ctx->pullback(last, mu.A));
      return out;
    }
    // keep snapshots covering at least two periods of the settled tail
    const double dt_samp = cfg.time.dt * cfg.time.sample_every;
    const int per_window =
        std::max(2, static_cast<int>(std::ceil(2.0 / (analysis.frequency * dt_samp))));
    const int n_avail = static_cast<int>(traj.states.size());
    const int window = std::min(n_avail, per_window);
    const int count = std::min(cfg.time.snapshots_per_run, window);
    for (int k = 0; k < count; ++k) {
      const int idx = n_avail - window + (window - 1) * k / std::max(1, count - 1);
      raw->push_back({traj.states[idx], mu, "transient", traj.times[idx]});
      out.push_back(ctx->pullback(traj.states[idx], mu.A));
    }
    return out;
  };

  sampling::CvtOptions copts;
  copts.threshold = config.sampling_cfg.tolerance;
  copts.max_points = config.sampling_cfg.max_points;
  copts.n0 = config.sampling_cfg.n0;
  copts.energy = config.sampling_cfg.energy;
  std::vector<sampling::LogEntry> log;
  copts.log = [&log](const sampling::LogEntry& e) { log.push_back(e); };

  art.cvt = sampling::pod_cvt(config.box, handle, copts);

  art.basis.grid = ctx->grid();
  for (std::size_t i = 0; i < art.cvt.state.basis.size(); ++i) {
    Field m;
    m.kind = FieldKind::velocity;
    m.domain = DomainTag::ref();
    m.coeffs = art.cvt.state.basis[i];
    art.basis.append(std::move(m), art.cvt.state.basis_info[i]);
  }

  // counts for the offline summary
  std::map<std::pair<long long, long long>, int> unsteady_modes;
  for (const auto& info : art.basis.provenance) {
    if (info.steady)
      ++art.n_steady;
    else
      ++unsteady_modes[{key_of(info.mu.A), key_of(info.mu.Gr)}];
  }
  art.n_unsteady_points = static_cast<int>(unsteady_modes.size());
  for (const auto& [k, n] : unsteady_modes) art.modes_per_unsteady.push_back(n);

  // stash context state the caller may persist
  art.log_entries = std::move(log);
  art.raw = std::move(*raw);
  art.fom_steady_seconds = ctx->steady_seconds;
  art.fom_steady_count = ctx->steady_count;
  return art;
}

int cmd_offline(const RunConfig& config) {
  const double t0 = now_seconds();
  ensure_dir(config.outdir);
  ensure_dir(fs::path(config.outdir) / "snapshots");

  auto art = run_offline(config);

  // snapshots
  int idx = 0;
  for (const auto& s : art.raw) {
    char name[32];
    std::snprintf(name, sizeof(name), "%04d.rbsnap", idx++);
    io::SnapshotMeta meta;
    meta.mu = s.mu;
    meta.grid = config.grid.nq1d > 0 ? config.grid : io::GridDesc::of(*art.basis.grid);
    meta.kind = s.kind;
    meta.time = s.time;
    io::write_snapshot(fs::path(config.outdir) / "snapshots" / name, s.velocity, meta);
  }

  // sampling log
  io::CsvWriter log(fs::path(config.outdir) / "sampling_log.csv",
                    {"iteration", "A", "Gr", "triangle_residual", "tol"});
  for (const auto& e : art.log_entries)
    log.row({std::to_string(e.iteration), io::fmt(e.mu.A), io::fmt(e.mu.Gr),
             io::fmt(e.worst_residual), io::fmt(e.tol)});
  log.close();

  // archive
  const auto ops = rom::assemble_reduced(art.basis, *art.basis.grid);
  io::write_archive(fs::path(config.outdir) / "model.rbrom", art.basis, ops);

  json modes_per = json::array();
  for (int n : art.modes_per_unsteady) modes_per.push_back(n);
  const json summary{
      {"points", art.cvt.state.points.size()},
      {"steady_snapshots", art.n_steady},
      {"unsteady_points", art.n_unsteady_points},
      {"modes_per_unsteady_point", modes_per},
      {"basis_size", art.basis.size()},
      {"tol", art.cvt.state.tol},
      {"converged", art.cvt.converged},
      {"unsettled_points", art.cvt.state.unsettled.size()},
  };
  std::ofstream(fs::path(config.outdir) / "offline_summary.json") << summary.dump(2) << '\n';

  const double elapsed = now_seconds() - t0;
  append_timing(fs::path(config.outdir) / "timings.log", "offline", "total", elapsed);
  if (art.fom_steady_count > 0)
    append_timing(fs::path(config.outdir) / "timings.log", "fom_reference", "steady_avg",
                  art.fom_steady_seconds / art.fom_steady_count);

  std::cout << "offline: " << art.cvt.state.points.size() << " points, " << art.n_steady
            << " steady snapshots, " << art.n_unsteady_points << " unsteady points, basis "
            << art.basis.size() << ", tol " << art.cvt.state.tol
            << (art.cvt.converged ? "" : " (budget exhausted)") << "\n";
  return art.cvt.converged ? kOk : kPartial;
}

int cmd_diagram(const RunConfig& config, const fs::path& archive, double A, double gr_lo,
                double gr_hi, const std::optional<fs::path>& seed_snapshot) {
  config.validate();
  const auto arch = io::read_archive(archive);
  auto grid = arch.basis.grid;
  ensure_dir(config.outdir);
  const auto forms = assemble_forms(grid, A);
  const auto forms_ref = assemble_forms(grid, grid->ref_A);

  stability::BranchContext ctx;
  ctx.ops = &arch.ops;
  ctx.basis = &arch.basis;
  ctx.forms = &forms;
  ctx.obs_point = config.observable;

  stability::ContinuationOptions copts;
  copts.step0 = config.continuation.gr_step;

  const auto seed = reduced_seed(arch.ops, A, gr_lo);
  if (!seed) {
    std::cerr << "diagram: reduced seed failed at Gr=" << gr_lo << "\n";
    return kError;
  }
  const auto fwd = stability::continue_branch(ctx, A, gr_lo, gr_hi, copts, *seed);

  Eigen::VectorXd bwd_seed;
  if (seed_snapshot) {
    const auto [field, meta] = io::read_snapshot(*seed_snapshot);
    if (std::abs(meta.mu.A - A) > 1e-9 * std::max(1.0, A))
      throw Error("diagram: seed snapshot was computed at a different aspect ratio");
    const Eigen::VectorXd ref = geometry::piola_pullback(field, A, grid->ref_A).coeffs;
    bwd_seed = project_onto(arch.basis, forms_ref, ref);
  } else if (!fwd.points.empty()) {
    bwd_seed = fwd.points.back().a;
  } else {
    const auto s = reduced_seed(arch.ops, A, gr_hi);
    if (!s) {
      std::cerr << "diagram: backward seed failed\n";
      return kError;
    }
    bwd_seed = *s;
  }
  const auto bwd = stability::continue_branch(ctx, A, gr_hi, gr_lo, copts, bwd_seed);

  io::CsvWriter csv(fs::path(config.outdir) / "diagram.csv",
                    {"A", "Gr", "branch", "observable", "vortices", "stable"});
  auto emit = [&](const stability::Branch& b, const std::string& name) {
    io::CsvWriter path(fs::path(config.outdir) / ("eigpath_" + name + ".csv"),
                       {"mu", "eig_index", "re", "im"});
    for (const auto& p : b.points) {
      const auto eigs =
          stability::eigs_dense(stability::growth_matrix(arch.ops, p.mu, p.a));
      const bool stable = eigs.empty() || eigs.front().real() <= 0.0;
      csv.row({io::fmt(p.mu.A), io::fmt(p.mu.Gr), name, io::fmt(p.observable),
               std::to_string(p.vortices), stable ? "1" : "0"});
      for (std::size_t i = 0; i < eigs.size(); ++i)
        path.row({io::fmt(p.mu.Gr), std::to_string(i), io::fmt(eigs[i].real()),
                  io::fmt(eigs[i].imag())});
    }
    path.close();
  };
  emit(fwd, "forward");
  emit(bwd, "backward");
  csv.close();

  std::cout << "diagram: forward " << fwd.points.size() << " points"
            << (fwd.completed ? "" : " (ended early)") << ", backward " << bwd.points.size()
            << " points" << (bwd.completed ? "" : " (ended early)") << "\n";
  return kOk;
}

namespace {

int detect_single(const RunConfig& config, const io::Archive& arch, DetectMode mode, double A,
                  double gr_lo, double gr_hi) {
  auto grid = arch.basis.grid;
  const auto forms = assemble_forms(grid, A);
  stability::BranchContext ctx;
  ctx.ops = &arch.ops;
  ctx.basis = &arch.basis;
  ctx.forms = &forms;
  ctx.obs_point = config.observable;

  stability::ContinuationOptions copts;
  copts.step0 = config.continuation.gr_step;
  const auto seed = reduced_seed(arch.ops, A, gr_lo);
  if (!seed) {
    std::cerr << "detect: reduced seed failed\n";
    return kError;
  }
  const auto branch = stability::continue_branch(ctx, A, gr_lo, gr_hi, copts, *seed);

  stability::DetectOptions dopts;
  dopts.gr_tol_rel = config.continuation.gr_tol_rel;
  stability::EigPath path;
  const auto points = (mode == DetectMode::steady)
                          ? stability::detect_steady(arch.ops, branch, dopts, nullptr, &path)
                          : stability::detect_hopf(arch.ops, branch, dopts, nullptr, &path);

  io::CsvWriter csv(fs::path(config.outdir) / "bifurcations.csv",
                    {"family", "A", "Gr_star", "kind", "re_sigma", "im_sigma", "frequency"});
  for (const auto& bp : points) {
    csv.row({std::to_string(bp.branch_before) + "-vortex", io::fmt(A), io::fmt(bp.mu.Gr),
             kind_name(bp.kind), io::fmt(bp.critical_eigenvalue.real()),
             io::fmt(bp.critical_eigenvalue.imag()),
             bp.frequency ? io::fmt(*bp.frequency) : ""});
  }
  csv.close();

  io::CsvWriter pcsv(fs::path(config.outdir) / "eigpath_detect.csv",
                     {"mu", "eig_index", "re", "im"});
  for (const auto& e : path)
    pcsv.row({io::fmt(e.gr), std::to_string(e.index), io::fmt(e.re), io::fmt(e.im)});
  pcsv.close();

  std::cout << "detect: " << points.size() << " bifurcation point(s)\n";
  return kOk;
}

int detect_plane(const RunConfig& config, const io::Archive& arch, double gr_lo, double gr_hi) {
  auto grid = arch.basis.grid;
  FomContext fom_ctx(config);

  // label persisted snapshots by vortex count and group into families
  const fs::path snapdir = fs::path(config.outdir) / "snapshots";
  if (!fs::exists(snapdir)) {
    std::cerr << "detect plane: no snapshot directory " << snapdir << "\n";
    return kError;
  }
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(snapdir))
    if (e.path().extension() == ".rbsnap") files.push_back(e.path());
  std::sort(files.begin(), files.end());

  // transient snapshots inherit the family label of the steady state at the
  // same parameter point (the instantaneous cell count fluctuates over a
  // cycle); steady snapshots are labeled by their own streamfunction.
  struct Loaded {
    Field field;
    io::SnapshotMeta meta;
  };
  std::vector<Loaded> loaded;
  std::map<std::pair<long long, long long>, int> steady_label;
  for (const auto& f : files) {
    auto [field, meta] = io::read_snapshot(f);
    if (field.kind != FieldKind::velocity) continue;
    if (meta.kind == "steady") {
      auto& forms = fom_ctx.forms(meta.mu.A);
      steady_label[{key_of(meta.mu.A), key_of(meta.mu.Gr)}] = fom::vortex_count(forms, field);
    }
    loaded.push_back({std::move(field), meta});
  }
  std::map<int, std::vector<std::pair<Eigen::VectorXd, pod::SnapshotInfo>>> groups;
  for (auto& [field, meta] : loaded) {
    int v;
    const auto key = std::make_pair(key_of(meta.mu.A), key_of(meta.mu.Gr));
    if (meta.kind == "steady") {
      v = steady_label.at(key);
    } else if (auto it = steady_label.find(key); it != steady_label.end()) {
      v = it->second;
    } else {
      auto& forms = fom_ctx.forms(meta.mu.A);
      v = fom::vortex_count(forms, field);
    }
    pod::SnapshotInfo info{meta.mu, meta.time, meta.kind == "steady"};
    groups[v].push_back({geometry::piola_pullback(field, meta.mu.A, grid->ref_A).coeffs, info});
  }

  const auto weight = pod::weight_for(fom_ctx.forms_ref(), pod::InnerProduct::l2);
  std::vector<stability::FamilyBasis> families;
  for (const auto& [v, snaps] : groups) {
    stability::FamilyBasis fam;
    fam.name = std::to_string(v) + "-vortex";
    fam.vortices = v;
    fam.basis.grid = grid;
    std::vector<Eigen::VectorXd> basis_vecs;
    for (const auto& [vec, info] : snaps) {
      const auto kept = pod::orthonormalize_vectors(
          std::span<const Eigen::VectorXd>(&vec, 1), basis_vecs, weight);
      for (const auto& m : kept) {
        basis_vecs.push_back(m);
        Field fm;
        fm.kind = FieldKind::velocity;
        fm.domain = DomainTag::ref();
        fm.coeffs = m;
        fam.basis.append(std::move(fm), info);
      }
    }
    families.push_back(std::move(fam));
  }

  std::vector<double> A_values;
  if (config.scan.a_steps == 1 || config.box.degenerate_A()) {
    A_values.push_back(config.box.A_min);
  } else {
    for (int k = 0; k < config.scan.a_steps; ++k)
      A_values.push_back(config.box.A_min + (config.box.A_max - config.box.A_min) * k /
                                                (config.scan.a_steps - 1));
  }

  stability::ScanOptions sopts;
  sopts.gr_lo = gr_lo;
  sopts.gr_hi = gr_hi;
  sopts.continuation.step0 = config.continuation.gr_step;
  sopts.detect.gr_tol_rel = config.continuation.gr_tol_rel;
  sopts.obs_point = config.observable;
  sopts.warn = [](const std::string& msg) { std::cerr << msg << "\n"; };

  const auto result = stability::scan_plane(families, *grid, A_values, sopts);

  io::CsvWriter map(fs::path(config.outdir) / "stability_map.csv",
                    {"family", "A", "Gr_star", "kind", "re_sigma", "im_sigma", "frequency"});
  for (const auto& r : result.records)
    map.row({r.trial, io::fmt(r.A), io::fmt(r.gr_star), kind_name(r.kind), io::fmt(r.re),
             io::fmt(r.im), r.frequency ? io::fmt(*r.frequency) : ""});
  map.close();

  io::CsvWriter freq(fs::path(config.outdir) / "frequency_curve.csv", {"A", "frequency"});
  for (const auto& [A, f] : result.frequency_curve) freq.row({io::fmt(A), io::fmt(f)});
  freq.close();

  std::cout << "detect plane: " << result.records.size() << " record(s), "
            << result.frequency_curve.size() << " frequency point(s)\n";
  return kOk;
}

}  // namespace

int cmd_detect(const RunConfig& config, const fs::path& archive, DetectMode mode, double A,
               double gr_lo, double gr_hi) {
  config.validate();
  ensure_dir(config.outdir);
  const auto arch = io::read_archive(archive);
  if (mode == DetectMode::plane) return detect_plane(config, arch, gr_lo, gr_hi);
  return detect_single(config, arch, mode, A, gr_lo, gr_hi);
}

int cmd_online(const RunConfig& config, const fs::path& archive, const ParameterPoint& mu,
               bool transient, bool dump_fields) {
  config.validate();
  ensure_dir(config.outdir);
  const double t0 = now_seconds();
  const auto arch = io::read_archive(archive);
  auto grid = arch.basis.grid;

  const bool inside = config.box.contains(mu);
  if (!inside)
    std::cerr << "online: μ outside the configured box (extrapolating)\n";

  const auto seed = reduced_seed(arch.ops, mu.A, mu.Gr);
  if (!seed) {
    std::cerr << "online: reduced steady solve failed\n";
    return kError;
  }
  const auto steady = rom::rom_solve_steady(arch.ops, mu, *seed);

  // observable weights per mode (the horizontal component maps through the
  // Piola transform unchanged)
  Eigen::VectorXd obs_w(arch.basis.size());
  const double s = mu.A / grid->ref_A;
  for (int i = 0; i < arch.basis.size(); ++i)
    obs_w[i] = grid->eval_scalar_at(arch.basis.modes[i].ux(), grid->ref_A,
                                    config.observable[0] / s, config.observable[1]);

  if (!transient) {
    io::CsvWriter csv(fs::path(config.outdir) / "online_steady.csv",
                      {"A", "Gr", "observable", "converged", "inside_box"});
    csv.row({io::fmt(mu.A), io::fmt(mu.Gr), io::fmt(obs_w.dot(steady.state.a)),
             steady.converged ? "1" : "0", inside ? "1" : "0"});
    csv.close();
    if (dump_fields) {
      const Field u = rom::reconstruct(arch.basis, steady.state);
      const auto forms = assemble_forms(grid, mu.A);
      const Field p = rom::recover_pressure(forms, u, mu.Gr);
      io::SnapshotMeta meta{mu, io::GridDesc::of(*grid), "steady", 0.0};
      io::write_snapshot(fs::path(config.outdir) / "online_velocity.rbsnap", u, meta);
      io::write_snapshot(fs::path(config.outdir) / "online_pressure.rbsnap", p, meta);
    }
    append_timing(fs::path(config.outdir) / "timings.log", "online", "steady",
                  now_seconds() - t0);
    std::cout << "online: observable " << obs_w.dot(steady.state.a)
              << (steady.converged ? "" : " (not converged)") << "\n";
    return steady.converged ? kOk : kPartial;
  }

  // transient: perturb the steady coefficients deterministically from the seed
  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  Eigen::VectorXd a0 = steady.state.a * 1.001;
  for (int i = 0; i < a0.size(); ++i) a0[i] += 1e-3 * steady.state.a.norm() * dist(rng);

  std::vector<double> times, values;
  rom::RomTransientOptions topts;
  topts.dt = config.time.dt;
  topts.t_end = config.time.t_end;
  topts.sample_every = config.time.sample_every;
  topts.observe = [&](double t, const Eigen::VectorXd& a) {
    times.push_back(t);
    values.push_back(obs_w.dot(a));
  };
  const auto traj = rom::rom_solve_transient(arch.ops, mu, a0, topts);

  io::CsvWriter csv(fs::path(config.outdir) / "online_series.csv", {"t", "observable"});
  for (std::size_t k = 0; k < times.size(); ++k)
    csv.row({io::fmt(times[k]), io::fmt(values[k])});
  csv.close();

  const auto analysis = oscillation::analyze_series(values, config.time.dt);
  const json summary{
      {"A", mu.A},
      {"Gr", mu.Gr},
      {"blew_up", traj.blew_up},
      {"settled", analysis.settled},
      {"periodic", analysis.periodic},
      {"frequency", analysis.frequency},
      {"amplitude", analysis.amplitude},
      {"mean", analysis.mean},
      {"inside_box", inside},
  };
  std::ofstream(fs::path(config.outdir) / "online_summary.json") << summary.dump(2) << '\n';

  if (dump_fields && !traj.states.empty()) {
    rom::ReducedState last{traj.states.back(), mu, traj.times.back()};
    const Field u = rom::reconstruct(arch.basis, last);
    const auto forms = assemble_forms(grid, mu.A);
    const Field p = rom::recover_pressure(forms, u, mu.Gr);
    io::SnapshotMeta meta{mu, io::GridDesc::of(*grid), "transient", traj.times.back()};
    io::write_snapshot(fs::path(config.outdir) / "online_velocity.rbsnap", u, meta);
    io::write_snapshot(fs::path(config.outdir) / "online_pressure.rbsnap", p, meta);
  }
  append_timing(fs::path(config.outdir) / "timings.log", "online", "transient",
                now_seconds() - t0);
  std::cout << "online: " << (analysis.periodic ? "periodic" : "steady") << " regime, frequency "
            << analysis.frequency << (traj.blew_up ? " (blow-up)" : "") << "\n";
  return traj.blew_up ? kPartial : kOk;
}

int cmd_report(const RunConfig& config, const fs::path& log_path) {
  if (!fs::exists(log_path)) {
    std::cerr << "report: no timing log at " << log_path << "\n";
    return kError;
  }
  double offline = 0.0, online_total = 0.0, ref_sum = 0.0;
  int online_runs = 0, ref_count = 0;
  for (const auto& row : io::read_csv(log_path)) {
    if (row.size() != 3) continue;
    const double sec = std::stod(row[2]);
    if (row[0] == "offline") offline += sec;
    if (row[0] == "online") {
      online_total += sec;
      ++online_runs;
    }
    if (row[0] == "fom_reference") {
      ref_sum += sec;
      ++ref_count;
    }
  }
  const double ref_avg = ref_count ? ref_sum / ref_count : 0.0;
  const double equivalent = online_runs * ref_avg;
  const double ratio = equivalent > 0.0 ? (offline + online_total) / equivalent : 0.0;

  ensure_dir(config.outdir);
  const json report{
      {"offline_seconds", offline},
      {"online_runs", online_runs},
      {"online_seconds_total", online_total},
      {"fom_reference_seconds", ref_avg},
      {"equivalent_full_seconds", equivalent},
      {"ratio", ratio},
  };
  std::ofstream(fs::path(config.outdir) / "report.json") << report.dump(2) << '\n';
  std::cout << "report: offline " << offline << " s, " << online_runs << " online runs ("
            << online_total << " s), equivalent full " << equivalent << " s, ratio " << ratio
            << "\n";
  return kOk;
}

}  // namespace rbcav::driver
