#include "ergolab/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "ergolab/cones.hpp"
#include "ergolab/lyapunov.hpp"
#include "ergolab/output.hpp"
#include "ergolab/stationary.hpp"
#include "ergolab/unstable.hpp"
#include "json.hpp"

namespace ergolab {

namespace {

using json = nlohmann::ordered_json;

struct Context {
  const ExperimentConfig& cfg;
  const RunDirectory& dir;
  std::size_t threads;
  json results = json::object();
  std::vector<CheckResult> checks;

  const std::string& sec() const { return cfg.command(); }
  void check(const std::string& name, bool pass, const std::string& detail) { checks.push_back({name, pass, detail}); }
};

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

json estimate_json(const LyapunovEstimate& e) {
  return {{"lambda_u", e.lambda_u},
          {"lambda_s", e.lambda_s},
          {"stderr_u", e.stderr_u},
          {"mean_log_det", e.mean_log_det},
          {"n_steps", e.n_steps}};
}

RealMat2 parse_real_matrix(const ExperimentConfig& cfg, const std::string& sec, const std::string& key) {
  const auto v = cfg.get_doubles(sec, key);
  if (v.size() != 4) throw ConfigError("[" + sec + "] " + key + ": expected four numbers a b c d");
  return {v[0], v[1], v[2], v[3]};
}

std::size_t shard_size(std::size_t total, std::size_t shards) { return (total + shards - 1) / shards; }

// One orbit shard per seed, merged in seed order.
std::vector<EmpiricalMeasure> sample_shards(const Context& ctx, std::size_t total, std::size_t grid) {
  const auto& seeds = ctx.cfg.seeds();
  const std::size_t per = shard_size(total, seeds.size());
  const std::size_t burn = ctx.cfg.get_size("experiment", "burn_in");
  const StartPoint start = ctx.cfg.start();
  return parallel_map(seeds.size(), ctx.threads, [&](std::size_t i) {
    return sample_stationary(ctx.cfg.family(), ctx.cfg.measure(), start, burn, per, seeds[i], grid);
  });
}

// Past word of the first sample of the first shard.
Word first_shard_word(const Context& ctx, std::size_t extra) {
  const std::size_t burn = ctx.cfg.get_size("experiment", "burn_in");
  return sample_word(ctx.cfg.measure(), burn + extra, ctx.cfg.seeds().front());
}

void cmd_exponents(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const auto& s = ctx.sec();
  const auto& fam = cfg.family();
  const auto& nu = cfg.measure();
  const auto& seeds = cfg.seeds();
  const std::size_t steps = cfg.get_size(s, "steps");
  ExponentOptions eo;
  eo.burn_in = cfg.get_size("experiment", "burn_in");
  eo.batches = cfg.get_size(s, "batches");
  const TorusPoint x0 = cfg.start_point();
  const bool backward = cfg.get_bool(s, "backward");

  const auto ests = parallel_map(seeds.size(), ctx.threads,
                                 [&](std::size_t i) { return top_exponent(fam, nu, x0, steps, seeds[i], eo); });
  std::vector<BackwardCheck> backs;
  if (backward) {
    backs = parallel_map(seeds.size(), ctx.threads,
                         [&](std::size_t i) { return backward_exponent(fam, nu, x0, steps, seeds[i], eo); });
  }

  CsvWriter csv(ctx.dir, "exponents.csv",
                {"seed", "lambda_u", "lambda_s", "stderr_u", "mean_log_det", "identity_residual",
                 "backward_minus_lambda_s", "backward_stderr"});
  double worst_identity = 0.0, worst_sum = 0.0, worst_backward = 0.0;
  json rows = json::array();
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    const auto& e = ests[i];
    const double identity = std::abs(e.lambda_u + e.lambda_s - e.mean_log_det);
    worst_identity = std::max(worst_identity, identity);
    worst_sum = std::max(worst_sum, std::abs(e.lambda_u + e.lambda_s));
    csv.cell(seeds[i]).cell(e.lambda_u).cell(e.lambda_s).cell(e.stderr_u).cell(e.mean_log_det).cell(identity);
    json row = estimate_json(e);
    row["seed"] = seeds[i];
    if (backward) {
      const double tol = 3.0 * std::hypot(e.stderr_u, backs[i].stderr);
      const double dev = std::abs(backs[i].minus_lambda_s + e.lambda_s);
      worst_backward = std::max(worst_backward, tol > 0.0 ? dev / tol : (dev == 0.0 ? 0.0 : INFINITY));
      csv.cell(backs[i].minus_lambda_s).cell(backs[i].stderr);
      row["backward_minus_lambda_s"] = backs[i].minus_lambda_s;
      row["backward_stderr"] = backs[i].stderr;
    } else {
      csv.cell(std::string()).cell(std::string());
    }
    csv.end_row();
    rows.push_back(row);
  }
  ctx.results["per_seed"] = rows;
  ctx.results["merged"] = estimate_json(merge_estimates(ests));

  ctx.check("determinant identity", worst_identity <= 1e-9, "max |lambda_u + lambda_s - mean log|det|| = " + fmt(worst_identity));
  const bool conservative = std::all_of(fam.begin(), fam.end(), [](const MapSpec& m) { return m.conservative(); });
  if (conservative) ctx.check("conservative sum", worst_sum <= 1e-9, "max |lambda_u + lambda_s| = " + fmt(worst_sum));
  if (backward) {
    ctx.check("backward cross-check", worst_backward <= 1.0,
              "max deviation / (3 stderr) = " + fmt(worst_backward));
  }
  if (const auto expect = cfg.get_optional_double(s, "expect_lambda_u")) {
    const double tol = cfg.get_double(s, "tolerance");
    double worst = 0.0;
    for (const auto& e : ests) worst = std::max(worst, std::abs(e.lambda_u - *expect));
    ctx.check("lambda_u oracle", worst <= tol, "max |lambda_u - " + fmt(*expect) + "| = " + fmt(worst));
  }

  const auto shifts = cfg.get_doubles(s, "tv_shifts");
  if (!shifts.empty()) {
    if (nu.atoms().size() < 2) throw ConfigError("[exponents] tv_shifts needs a measure with two atoms");
    CsvWriter tv(ctx.dir, "tv_scan.csv", {"shift", "seed", "lambda_u", "stderr_u"});
    bool positive = true;
    json scan = json::array();
    for (double d : shifts) {
      auto atoms = nu.atoms();
      // Moving mass d from the second atom to the first is a total-variation shift of d.
      atoms[0].probability += d;
      atoms[1].probability -= d;
      const DrivingMeasure shifted(atoms);
      const auto runs = parallel_map(seeds.size(), ctx.threads,
                                     [&](std::size_t i) { return top_exponent(fam, shifted, x0, steps, seeds[i], eo); });
      for (std::size_t i = 0; i < seeds.size(); ++i) {
        tv.cell(d).cell(seeds[i]).cell(runs[i].lambda_u).cell(runs[i].stderr_u);
        tv.end_row();
        positive = positive && runs[i].lambda_u > 3.0 * runs[i].stderr_u;
        scan.push_back({{"shift", d}, {"seed", seeds[i]}, {"lambda_u", runs[i].lambda_u}});
      }
    }
    ctx.results["tv_scan"] = scan;
    ctx.check("positive exponent under TV shifts", positive, "lambda_u > 3 stderr for every shift and seed");
  }
}

json cone_json(const ProjectiveCone& c) { return {{"center", c.center_angle}, {"half_width", c.half_width}}; }

std::string failure_kind(ConeFailure::Kind k) {
  switch (k) {
    case ConeFailure::Kind::Overlap:
      return "overlap";
    case ConeFailure::Kind::InclusionFail:
      return "inclusion";
    case ConeFailure::Kind::ExpansionFail:
      return "expansion";
  }
  return "unknown";
}

void cmd_cones(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const auto& s = ctx.sec();
  const auto& fam = cfg.family();
  const auto mats = linear_parts(fam);
  const std::size_t grid = cfg.get_size(s, "grid");
  const std::size_t refine = cfg.get_size(s, "refine");

  std::vector<IntMat2> ints;
  for (const auto& m : fam) ints.push_back(m.inverted() ? m.linear_part().unimodular_inverse() : m.linear_part());
  if (const auto pair = find_noncommuting_hyperbolic(ints, 3)) {
    ctx.results["noncommuting_pair"] = {{"first", pair->first}, {"second", pair->second}};
  } else {
    ctx.results["noncommuting_pair"] = nullptr;
  }

  const auto cert = search_cone_certificate(mats);
  ctx.results["certificate_found"] = cert.has_value();
  if (cert) {
    const auto coarse = check_joint_cone(mats, cert->cone_u, cert->cone_s, grid);
    const auto fine = check_joint_cone(mats, cert->cone_u, cert->cone_s, grid * refine);
    CsvWriter csv(ctx.dir, "certificate.csv", {"quantity", "value"});
    const std::vector<std::pair<std::string, double>> rows{
        {"cone_u_center", cert->cone_u.center_angle},
        {"cone_u_half_width", cert->cone_u.half_width},
        {"cone_s_center", cert->cone_s.center_angle},
        {"cone_s_half_width", cert->cone_s.half_width},
        {"kappa", coarse.ok() ? coarse.certificate->kappa : NAN},
        {"kappa_refined", fine.ok() ? fine.certificate->kappa : NAN},
        {"margin", cert->margin}};
    for (const auto& [k, v] : rows) {
      csv.cell(k).cell(v);
      csv.end_row();
    }
    const bool stable = coarse.ok() && fine.ok() && coarse.certificate->kappa > 1.0 && fine.certificate->kappa > 1.0;
    ctx.results["certificate"] = {{"cone_u", cone_json(cert->cone_u)},
                                  {"cone_s", cone_json(cert->cone_s)},
                                  {"kappa", coarse.ok() ? coarse.certificate->kappa : NAN},
                                  {"kappa_refined", fine.ok() ? fine.certificate->kappa : NAN},
                                  {"margin", cert->margin}};
    ctx.check("certificate stable under refinement", stable,
              "grid " + std::to_string(grid) + " and " + std::to_string(grid * refine));

    const bool perturbed = std::any_of(fam.begin(), fam.end(), [](const MapSpec& m) { return !m.is_linear(); });
    const std::size_t pgrid = cfg.get_size(s, "perturbed_grid");
    if (perturbed) {
      const auto rep = check_perturbed_cones(fam, *cert, pgrid);
      ctx.results["perturbed"] = {{"pass", rep.pass}, {"worst_margin", rep.worst_margin}, {"worst_kappa", rep.worst_kappa}};
      ctx.check("perturbed cone field", rep.pass,
                "worst margin " + fmt(rep.worst_margin) + ", worst kappa " + fmt(rep.worst_kappa));
    }
    if (cfg.get_bool(s, "bisect")) {
      const double hi = cfg.get_double(s, "bisect_eps_hi");
      const auto iters = int(cfg.get_size(s, "bisect_iterations"));
      const auto make = [&](double eps) { return cfg.with_epsilon(eps); };
      CsvWriter scan(ctx.dir, "epsilon_scan.csv", {"epsilon", "pass", "worst_margin", "worst_kappa"});
      for (int i = 0; i <= 10; ++i) {
        const double eps = hi * i / 10.0;
        const auto rep = check_perturbed_cones(make(eps), *cert, pgrid);
        scan.cell(eps).cell(rep.pass).cell(rep.worst_margin).cell(rep.worst_kappa);
        scan.end_row();
      }
      const auto bis = bisect_cone_epsilon(make, *cert, pgrid, hi, iters);
      CsvWriter b(ctx.dir, "bisection.csv", {"last_pass", "first_fail", "witness_x", "witness_y", "witness_map"});
      if (bis) {
        b.cell(bis->last_pass).cell(bis->first_fail).cell(bis->witness.worst_point.x()).cell(bis->witness.worst_point.y());
        b.cell(bis->witness.worst_map);
        b.end_row();
        ctx.results["bisection"] = {{"last_pass", bis->last_pass}, {"first_fail", bis->first_fail}};
      } else {
        ctx.results["bisection"] = {{"last_pass", hi}, {"first_fail", nullptr}};
      }
    }
  } else {
    // Explain the failure with cones around the first hyperbolic member's eigenlines.
    CsvWriter csv(ctx.dir, "failure.csv", {"kind", "matrix", "cone", "value", "message"});
    for (const auto& m : mats) {
      const auto h = eigen_analysis(m);
      if (!h.is_hyperbolic) continue;
      const auto res = check_joint_cone(mats, ProjectiveCone(h.angle_u, 0.1), ProjectiveCone(h.angle_s, 0.1), grid);
      if (res.failure) {
        const auto& f = *res.failure;
        csv.cell(failure_kind(f.kind)).cell(f.matrix).cell(std::string(1, f.cone)).cell(f.value).cell('"' + f.message + '"');
        csv.end_row();
        ctx.results["failure"] = {{"kind", failure_kind(f.kind)}, {"matrix", f.matrix}, {"message", f.message}};
      }
      break;
    }
  }

  const std::string expect = cfg.get(s, "expect_certificate");
  if (!expect.empty()) {
    const bool want = cfg.get_bool(s, "expect_certificate");
    ctx.check("certificate expectation", cert.has_value() == want,
              std::string("certificate ") + (cert ? "found" : "not found") + ", expected " + (want ? "found" : "not found"));
  }
}

void cmd_trichotomy(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const auto& s = ctx.sec();
  const auto& fam = cfg.family();
  const auto& nu = cfg.measure();
  const auto& seeds = cfg.seeds();
  const std::size_t grid = cfg.get_size(s, "grid");
  const int cutoff = int(cfg.get_size(s, "fourier_cutoff"));
  const TorusPoint x0 = cfg.start_point();

  const auto shards = sample_shards(ctx, cfg.get_size(s, "samples"), grid);
  EmpiricalMeasure mu = merge(shards);

  Evidence ev;
  ev.spectrum = fourier_spectrum(mu.samples, cutoff);
  ev.atoms = atom_detect(mu, cfg.get_double(s, "atom_radius"), cfg.get_double(s, "atom_mass"));
  ev.exponents = top_exponent(fam, nu, x0, cfg.get_size(s, "exponent_steps"), seeds.front());
  const auto residual = stationarity_residual(mu, fam, nu, grid);
  json notes = json::array();
  try {
    ev.nonrandomness =
        nonrandomness_score(fam, nu, x0, cfg.get_size(s, "nonrandom_words"), cfg.get_size(s, "nonrandom_horizon"),
                            seeds.front());
  } catch (const UnreliableDirection& e) {
    notes.push_back(std::string("nonrandomness: ") + e.what());
  }

  std::vector<double> slice_coords;
  if (cfg.get_bool(s, "slice")) {
    const std::size_t n_back = cfg.get_size(s, "n_back");
    if (cfg.get_size("experiment", "burn_in") < n_back) throw ConfigError("[trichotomy] slice needs burn_in >= n_back");
    try {
      const Word w = first_shard_word(ctx, 0);
      CurveOptions co;
      co.points = cfg.get_size(s, "curve_points");
      const auto curve = unstable_curve(fam, past_window(w, w.size(), n_back), shards.front().samples.front(),
                                        cfg.get_double(s, "curve_radius"), n_back, co);
      const auto chart = affine_parameter(curve, cfg.get_size(s, "truncation"));
      const auto slice = conditional_slice(mu, curve, chart, cfg.get_double(s, "tube"));
      ev.dim_u = dimension_estimate(slice.coords).dim;
      slice_coords = slice.coords;
    } catch (const InsufficientSlice& e) {
      notes.push_back(std::string("slice: ") + e.what());
    } catch (const ChartOverflow& e) {
      notes.push_back(std::string("slice: ") + e.what());
    } catch (const PreconditionFail& e) {
      notes.push_back(std::string("slice: ") + e.what());
    } catch (const Degenerate& e) {
      notes.push_back(std::string("slice: ") + e.what());
    }
  }

  ClassifyThresholds th;
  th.atomic_residual = cfg.get_double(s, "atomic_residual");
  th.fourier_factor = cfg.get_double(s, "fourier_factor");
  th.dim_tolerance = cfg.get_double(s, "dim_tolerance");
  th.nonrandom = cfg.get_double(s, "nonrandom_threshold");
  const auto verdict = classify(ev, th);

  {
    CsvWriter csv(ctx.dir, "spectrum.csv", {"kx", "ky", "magnitude"});
    for (std::size_t i = 0; i < ev.spectrum->magnitudes.size(); ++i) {
      csv.cell(ev.spectrum->frequencies[i].first).cell(ev.spectrum->frequencies[i].second).cell(ev.spectrum->magnitudes[i]);
      csv.end_row();
    }
  }
  {
    CsvWriter csv(ctx.dir, "atoms.csv", {"x", "y", "mass", "radius"});
    for (const auto& c : ev.atoms->clusters) {
      csv.cell(c.center.x()).cell(c.center.y()).cell(c.mass).cell(c.radius);
      csv.end_row();
    }
  }
  json inv = json::array();
  {
    CsvWriter csv(ctx.dir, "invariance.csv", {"map", "distance"});
    for (std::size_t i = 0; i < fam.size(); ++i) {
      const double d = invariance_distance(mu, fam[i], cutoff);
      csv.cell(cfg.map_names()[i]).cell(d);
      csv.end_row();
      inv.push_back({{"map", cfg.map_names()[i]}, {"distance", d}});
    }
  }
  if (!slice_coords.empty()) {
    CsvWriter csv(ctx.dir, "slice.csv", {"H"});
    for (double h : slice_coords) {
      csv.cell(h);
      csv.end_row();
    }
  }
  if (cfg.get_bool(s, "write_samples")) {
    CsvWriter csv(ctx.dir, "samples.csv", {"x", "y"});
    for (const auto& p : mu.samples) {
      csv.cell(p.x()).cell(p.y());
      csv.end_row();
    }
  }

  PlotSeries cloud{"samples", {}, false};
  const std::size_t shown = std::min(mu.size(), cfg.get_size(s, "plot_samples"));
  for (std::size_t i = 0; i < shown; ++i) cloud.points.emplace_back(mu.samples[i].x(), mu.samples[i].y());
  write_svg_plot(ctx.dir, "samples.svg", {"Empirical stationary measure", "x", "y"}, {cloud});
  PlotSeries mags{"|coefficient|", {}, false}, flat{"4 / sqrt(N)", {}, true};
  const double thr = th.fourier_factor / std::sqrt(double(mu.size()));
  for (std::size_t i = 0; i < ev.spectrum->magnitudes.size(); ++i) {
    mags.points.emplace_back(double(i), std::max(ev.spectrum->magnitudes[i], 1e-12));
  }
  flat.points = {{0.0, thr}, {double(ev.spectrum->magnitudes.size() - 1), thr}};
  write_svg_plot(ctx.dir, "fourier.svg", {"Fourier magnitudes", "frequency index", "magnitude", false, true},
                 {mags, flat});

  ctx.results["samples"] = mu.size();
  ctx.results["fourier_max"] = ev.spectrum->max();
  ctx.results["fourier_flat"] = verdict.fourier_flat;
  ctx.results["stationarity_residual"] = {{"max_cell", residual.max_cell}, {"total", residual.total}};
  ctx.results["atoms"] = {{"clusters", ev.atoms->clusters.size()}, {"residual_mass", ev.atoms->residual_mass}};
  ctx.results["invariance_distance"] = inv;
  ctx.results["exponents"] = estimate_json(*ev.exponents);
  ctx.results["hyperbolic"] = verdict.hyperbolic;
  ctx.results["nonrandomness"] = ev.nonrandomness ? json(*ev.nonrandomness) : json(nullptr);
  ctx.results["dim_u"] = ev.dim_u ? json(*ev.dim_u) : json(nullptr);
  ctx.results["slice_count"] = slice_coords.size();
  ctx.results["verdict"] = verdict_name(verdict.tag);
  ctx.results["reason"] = verdict.reason;
  ctx.results["notes"] = notes;

  const std::string expect = cfg.get(s, "expect_verdict");
  if (!expect.empty()) {
    ctx.check("verdict", verdict_name(verdict.tag) == expect,
              "got " + verdict_name(verdict.tag) + " (" + verdict.reason + "), expected " + expect);
  }
}

void cmd_stopping_times(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const auto& s = ctx.sec();
  const auto& fam = cfg.family();
  const auto& nu = cfg.measure();
  const auto& seeds = cfg.seeds();
  const TorusPoint x0 = cfg.start_point();
  const auto est = top_exponent(fam, nu, x0, cfg.get_size(s, "exponent_steps"), seeds.front());
  const double eps0 = cfg.get_optional_double(s, "epsilon0").value_or(default_epsilon0(est));
  const std::size_t W = cfg.get_size(s, "window"), steps = cfg.get_size(s, "steps");
  const double delta = cfg.get_double(s, "delta"), epsilon = cfg.get_double(s, "epsilon");
  const std::size_t m_lo = cfg.get_size(s, "m_lo"), m_hi = cfg.get_size(s, "m_hi");
  const auto delta_grid = cfg.get_doubles(s, "delta_grid");

  struct SeedRun {
    StoppingTimeTable table;
    SlopeReport slopes;
    std::vector<std::ptrdiff_t> tau0;
  };
  const auto runs = parallel_map(seeds.size(), ctx.threads, [&](std::size_t i) {
    const Word w = sample_word(nu, steps + 2 * W + 400, seeds[i]);
    const OrbitFrame frame(fam, w, W + 150, x0, -std::ptrdiff_t(W), std::ptrdiff_t(steps + W));
    const auto data = lyapunov_norm_data(frame, est, W, eps0, steps);
    SeedRun r;
    r.table = stopping_times(data, delta, epsilon, m_lo, m_hi);
    r.slopes = check_slope_bounds(r.table, est.lambda_u, est.lambda_s, eps0);
    for (double d : delta_grid) r.tau0.push_back(stopping_times(data, d, epsilon, 0, 0).tau.front());
    return r;
  });

  // Closed form when the cocycle is a single hyperbolic linear map.
  std::optional<std::pair<double, double>> closed;
  const auto& atoms = nu.atoms();
  if (atoms.size() == 1 && fam[atoms[0].map_id].is_linear()) {
    const auto h = eigen_analysis(linear_parts(fam)[atoms[0].map_id]);
    if (h.is_hyperbolic) closed = std::make_pair(std::log(std::abs(h.lambda_u)), std::log(std::abs(h.lambda_s)));
  }

  CsvWriter table(ctx.dir, "stopping_times.csv", {"seed", "m", "tau", "L", "tau_closed_form"});
  CsvWriter slopes(ctx.dir, "slopes.csv", {"seed", "slope_lo", "slope_hi", "worst_excess", "pairs", "pass"});
  CsvWriter dgrid(ctx.dir, "delta_grid.csv", {"seed", "delta", "tau0"});
  bool slopes_ok = true, monotone = true, closed_ok = true;
  std::ptrdiff_t worst_closed = 0;
  PlotSeries tau_plot{"tau(m), seed " + std::to_string(seeds.front()), {}, true};
  json per_seed = json::array();
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    const auto& r = runs[i];
    for (std::size_t j = 0; j < r.table.m.size(); ++j) {
      table.cell(seeds[i]).cell(r.table.m[j]).cell(std::int64_t(r.table.tau[j])).cell(std::int64_t(r.table.L[j]));
      if (closed) {
        const double m = double(r.table.m[j]);
        const auto expect = std::ptrdiff_t(std::floor((std::log(epsilon / delta) - m * closed->second) / closed->first));
        worst_closed = std::max(worst_closed, std::abs(expect - r.table.tau[j]));
        table.cell(std::int64_t(expect));
      } else {
        table.cell(std::string());
      }
      table.end_row();
      if (i == 0) tau_plot.points.emplace_back(double(r.table.m[j]), double(r.table.tau[j]));
    }
    slopes.cell(seeds[i]).cell(r.slopes.slope_lo).cell(r.slopes.slope_hi).cell(r.slopes.worst_excess);
    slopes.cell(r.slopes.pairs).cell(r.slopes.pass);
    slopes.end_row();
    slopes_ok = slopes_ok && r.slopes.pass;
    for (std::size_t j = 0; j < delta_grid.size(); ++j) {
      dgrid.cell(seeds[i]).cell(delta_grid[j]).cell(std::int64_t(r.tau0[j]));
      dgrid.end_row();
      if (j > 0 && r.tau0[j] < r.tau0[j - 1]) monotone = false;
    }
    if (r.tau0.size() > 1 && !(r.tau0.back() > r.tau0.front())) monotone = false;
    per_seed.push_back({{"seed", seeds[i]},
                        {"slope_lo", r.slopes.slope_lo},
                        {"slope_hi", r.slopes.slope_hi},
                        {"worst_excess", r.slopes.worst_excess},
                        {"pass", r.slopes.pass}});
  }
  if (closed) closed_ok = worst_closed <= 1;
  write_svg_plot(ctx.dir, "stopping_times.svg", {"Stopping times", "m", "tau"}, {tau_plot});

  ctx.results["exponents"] = estimate_json(est);
  ctx.results["epsilon0"] = eps0;
  ctx.results["per_seed"] = per_seed;
  ctx.check("slope bounds", slopes_ok, "all pairs m < m' in [" + std::to_string(m_lo) + ", " + std::to_string(m_hi) + "]");
  if (delta_grid.size() > 1) ctx.check("tau(0) grows as delta shrinks", monotone, "delta grid of " + std::to_string(delta_grid.size()));
  if (closed) {
    ctx.results["closed_form_max_error"] = worst_closed;
    ctx.check("closed form", closed_ok, "max |tau - tau_closed| = " + std::to_string(worst_closed));
  }
}

void cmd_mixed_cocycle(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const auto& s = ctx.sec();
  const RealMat2 f = parse_real_matrix(cfg, s, "f"), g = parse_real_matrix(cfg, s, "g");
  const auto ts = cfg.get_doubles(s, "t_grid");
  const std::size_t steps = cfg.get_size(s, "steps");
  const double tol = cfg.get_double(s, "tolerance");
  const auto& seeds = cfg.seeds();
  const std::size_t n = seeds.size() * ts.size();
  const auto res = parallel_map(n, ctx.threads, [&](std::size_t i) {
    return mixed_projective_exponent(f, g, ts[i % ts.size()], steps, seeds[i / ts.size()]);
  });
  CsvWriter csv(ctx.dir, "mixed_cocycle.csv", {"seed", "t", "closed_form", "simulated", "difference"});
  double worst = 0.0;
  PlotSeries cf{"closed form", {}, true}, sim{"simulated, seed " + std::to_string(seeds.front()), {}, false};
  json rows = json::array();
  for (std::size_t i = 0; i < n; ++i) {
    const double t = ts[i % ts.size()], d = std::abs(res[i].closed_form - res[i].simulated);
    worst = std::max(worst, d);
    csv.cell(seeds[i / ts.size()]).cell(t).cell(res[i].closed_form).cell(res[i].simulated).cell(d);
    csv.end_row();
    if (i < ts.size()) {
      cf.points.emplace_back(t, res[i].closed_form);
      sim.points.emplace_back(t, res[i].simulated);
    }
    rows.push_back({{"seed", seeds[i / ts.size()]}, {"t", t}, {"closed_form", res[i].closed_form}, {"simulated", res[i].simulated}});
  }
  write_svg_plot(ctx.dir, "mixed_cocycle.svg", {"Mixed projective exponent", "t", "exponent"}, {cf, sim});
  ctx.results["rows"] = rows;
  ctx.results["max_difference"] = worst;
  ctx.check("closed form vs simulation", worst < tol, "max difference " + fmt(worst) + " (tolerance " + fmt(tol) + ")");
}

void cmd_dimension(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const auto& s = ctx.sec();
  const auto& fam = cfg.family();
  const std::size_t n_back = cfg.get_size(s, "n_back");
  const std::size_t burn = cfg.get_size("experiment", "burn_in");
  if (burn < n_back) throw ConfigError("[dimension] needs burn_in >= n_back");
  const double radius = cfg.get_double(s, "curve_radius"), tube = cfg.get_double(s, "tube");
  const std::size_t K = cfg.get_size(s, "truncation");
  CurveOptions co;
  co.points = cfg.get_size(s, "curve_points");
  DimensionOptions dopt;
  dopt.fit_lo = cfg.get_double(s, "fit_lo");
  dopt.fit_hi = cfg.get_double(s, "fit_hi");

  const auto shards = sample_shards(ctx, cfg.get_size(s, "samples"), 16);
  const EmpiricalMeasure mu = merge(shards);
  const TorusPoint x = shards.front().samples.front();
  const Word w = first_shard_word(ctx, n_back);

  struct Side {
    UnstableCurve curve;
    AffineChart chart;
    Slice slice;
    DimensionEstimate dim;
  };
  const auto run_side = [&](bool stable) {
    Side side;
    side.curve = stable ? stable_curve(fam, past_window(w, burn + n_back, n_back), x, radius, n_back, co)
                        : unstable_curve(fam, past_window(w, burn, n_back), x, radius, n_back, co);
    side.chart = affine_parameter(side.curve, K);
    side.slice = conditional_slice(mu, side.curve, side.chart, tube);
    side.dim = dimension_estimate(side.slice.coords, dopt);
    return side;
  };
  const bool with_stable = cfg.get_bool(s, "stable");
  const auto sides = parallel_map(with_stable ? 2 : 1, ctx.threads, [&](std::size_t i) { return run_side(i == 1); });

  std::vector<PlotSeries> plots;
  for (std::size_t i = 0; i < sides.size(); ++i) {
    const std::string tag = i == 0 ? "u" : "s";
    {
      auto out = ctx.dir.create("curve_" + tag + ".csv");
      write_curve_csv(out, sides[i].curve, sides[i].chart);
    }
    {
      auto out = ctx.dir.create("dimension_" + tag + ".csv");
      write_dimension_csv(out, sides[i].dim);
    }
    PlotSeries p{"C(r), " + tag, {}, true};
    for (std::size_t j = 0; j < sides[i].dim.radii.size(); ++j) {
      p.points.emplace_back(sides[i].dim.radii[j], sides[i].dim.correlation_sums[j]);
    }
    plots.push_back(std::move(p));
    ctx.results["dim_" + tag] = {{"dim", sides[i].dim.dim},
                                 {"fit_residual", sides[i].dim.fit_residual},
                                 {"fit_range", {sides[i].dim.fit_range.first, sides[i].dim.fit_range.second}},
                                 {"slice_count", sides[i].slice.count()}};
  }
  write_svg_plot(ctx.dir, "dimension.svg", {"Correlation sums along slices", "r", "C(r)", true, true}, plots);

  const double du = sides[0].dim.dim;
  const auto lo = cfg.get_optional_double(s, "expect_dim_u_lo"), hi = cfg.get_optional_double(s, "expect_dim_u_hi");
  if (lo || hi) {
    const bool ok = (!lo || du >= *lo) && (!hi || du <= *hi);
    ctx.check("unstable dimension range", ok, "dim_u = " + fmt(du));
  }
  if (with_stable) {
    const auto est = top_exponent(fam, cfg.measure(), cfg.start_point(), cfg.get_size(s, "exponent_steps"),
                                  cfg.seeds().front());
    const auto rep = srb_consistency(est, du, sides[1].dim.dim, cfg.get_double(s, "dim_tolerance"));
    ctx.results["exponents"] = estimate_json(est);
    ctx.results["entropy"] = {{"entropy_u", rep.entropy_u},
                              {"entropy_s", rep.entropy_s},
                              {"identity_residual", rep.identity_residual},
                              {"tolerance", rep.tolerance},
                              {"srb", rep.srb}};
    ctx.check("entropy identity", rep.consistent,
              "|lambda_u dim_u + lambda_s dim_s| = " + fmt(rep.identity_residual) + " (tolerance " + fmt(rep.tolerance) + ")");
  }
}

json config_json(const ExperimentConfig& cfg) {
  json out = json::object();
  for (const auto& sec : cfg.sections()) {
    json entries = json::object();
    for (const auto& [k, v] : sec.entries) entries[k] = v;
    out[sec.name] = entries;
  }
  return out;
}

}  // namespace

bool RunResult::all_pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.pass; });
}

RunResult run_experiment(const ExperimentConfig& cfg, const RunOptions& opts) {
  static const std::map<std::string, std::function<void(Context&)>> commands{
      {"exponents", cmd_exponents},         {"cones", cmd_cones},
      {"trichotomy", cmd_trichotomy},       {"stopping-times", cmd_stopping_times},
      {"mixed-cocycle", cmd_mixed_cocycle}, {"dimension", cmd_dimension}};
  const auto it = commands.find(cfg.command());
  if (it == commands.end()) throw ConfigError("unknown command '" + cfg.command() + "'");

  const auto t0 = std::chrono::steady_clock::now();
  const RunDirectory dir(opts.out_root, cfg.name(), cfg.command(), cfg.hash(), cfg.seeds());
  Context ctx{cfg, dir, std::max<std::size_t>(1, opts.threads), json::object(), {}};
  it->second(ctx);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  json checks = json::array();
  for (const auto& c : ctx.checks) checks.push_back({{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
  json record = {{"header", dir.provenance()},
                 {"experiment_id", dir.id()},
                 {"command", cfg.command()},
                 {"config_hash", cfg.hash()},
                 {"seeds", cfg.seeds()},
                 {"config", config_json(cfg)},
                 {"results", ctx.results},
                 {"checks", checks},
                 {"wall_time_s", wall}};
  {
    const auto p = dir.path() / "run_record.json";
    std::ofstream out(p, std::ios::binary);
    out << record.dump(2) << '\n';
  }
  return {dir.id(), dir.path(), ctx.checks};
}

}  // namespace ergolab
