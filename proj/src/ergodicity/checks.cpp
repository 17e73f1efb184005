#include <algorithm>
#include <cmath>
#include <limits>

#include "ergo/ergodicity.hpp"
#include "ergo/error.hpp"
#include "ergo/parallel.hpp"
#include "ergo/stats.hpp"

namespace ergo {

namespace {

Segment scaled(const Segment& s, double k) {
  std::vector<double> v = s.values(), pre = s.pre_values();
  for (double& x : v) x *= k;
  for (double& x : pre) x *= k;
  return Segment::from_dense(s.tau(), s.dim(), s.grid(), std::move(v), s.jump_flags(),
                             std::move(pre));
}

// Whole dt steps from 0 to t; t must sit on the grid.
std::size_t grid_index(double t, double dt) {
  const double k = std::round(t / dt);
  require(std::fabs(k * dt - t) <= 1e-9 * std::max(1.0, t), ErrorKind::precondition,
          "time is not on the dt grid");
  return static_cast<std::size_t>(k);
}

}  // namespace

std::vector<Segment> ball_probes(const ModelSpec& model, double R, std::size_t n_random,
                                 std::uint64_t seed, double dt) {
  require(R >= 0.0, ErrorKind::invalid_argument, "ball radius must be >= 0");
  std::vector<Segment> out;
  const std::vector<double> plus(model.n, R), minus(model.n, -R), zero(model.n, 0.0);
  // The corner constant has sup norm R in the Euclidean sense.
  const double corner = model.n > 1 ? 1.0 / std::sqrt(static_cast<double>(model.n)) : 1.0;
  std::vector<double> p = plus, q = minus;
  for (double& x : p) x *= corner;
  for (double& x : q) x *= corner;
  out.push_back(Segment::constant(model.tau, p));
  out.push_back(Segment::constant(model.tau, q));
  out.push_back(Segment::constant(model.tau, zero));
  SegmentSampler sampler{model.tau, model.n, dt, std::max(R, 1e-12)};
  rng::Engine eng({seed, 0, rng::Substream::sampler});
  for (std::size_t i = 0; i < n_random; ++i) {
    const Segment s = sampler.sample(eng);
    const double n = sup_norm(s);
    out.push_back(n > 0.0 ? scaled(s, R / n) : s);
  }
  return out;
}

// ---------------------------------------------------------------------------

DriftReport lyapunov_drift_check(const ModelSpec& model, const RatePolicy& policy,
                                 std::span<const Segment> probes, std::span<const double> t_grid,
                                 std::size_t n_outer, std::size_t n_inner, const SimConfig& cfg) {
  validate_policy(policy);
  validate_sim_config(cfg, model.tau);
  require(!probes.empty(), ErrorKind::invalid_argument, "no drift probes");
  require(!t_grid.empty() && t_grid.size() <= 5, ErrorKind::precondition,
          "drift check takes 1 to 5 times");
  require(std::is_sorted(t_grid.begin(), t_grid.end()) && t_grid.front() > 0.0 &&
              t_grid.back() <= 2.0 * model.tau + 1e-12,
          ErrorKind::precondition, "drift times must ascend within (0, 2 tau]");
  require(n_outer >= 2 && n_inner >= 1, ErrorKind::invalid_argument,
          "drift check needs at least two batches");

  std::vector<std::size_t> marks;
  for (double t : t_grid) marks.push_back(grid_index(t, cfg.dt));
  const std::size_t steps = marks.back();
  std::vector<double> obs(steps);
  for (std::size_t k = 0; k < steps; ++k) obs[k] = static_cast<double>(k + 1) * cfg.dt;

  DriftReport rep;
  rep.K = policy.K ? *policy.K : model.lyapunov_K;
  const std::size_t n_paths = n_outer * n_inner;
  const std::size_t nt = t_grid.size();

  for (std::size_t pi = 0; pi < probes.size(); ++pi) {
    const Segment& xi = probes[pi];
    const double V0 = policy.value(xi);
    const double f0 = policy.f(V0);
    // Per path and time: V(X_t), integral, excess.
    std::vector<double> vt(n_paths * nt), it(n_paths * nt);
    std::vector<std::uint8_t> bad(n_paths, 0);
    parallel_for(n_paths, [&](std::size_t p) {
      SimConfig c = cfg;
      c.path_index = p;
      c.horizon = obs.back();
      double integral = 0.0, prev_f = f0;
      std::size_t next = 0;
      try {
        simulate_streaming(model, xi, c, obs, [&](std::size_t k, const EulerProcess& proc) {
          const double v = policy.value(proc.history().view());
          const double fv = policy.f(v);
          integral += 0.5 * (prev_f + fv) * cfg.dt;
          prev_f = fv;
          if (next < nt && k + 1 == marks[next]) {
            vt[p * nt + next] = v;
            it[p * nt + next] = integral;
            ++next;
          }
        });
      } catch (const DivergenceError&) {
        bad[p] = 1;
      }
      for (std::size_t j = 0; j < nt; ++j)
        if (!std::isfinite(vt[p * nt + j]) || !std::isfinite(it[p * nt + j])) bad[p] = 1;
    });
    if (std::any_of(bad.begin(), bad.end(), [](auto b) { return b != 0; })) {
      rep.diverged = true;
      continue;
    }

    for (std::size_t j = 0; j < nt; ++j) {
      const double t = t_grid[j];
      std::vector<double> batch(n_outer);
      stats::Moments mv, mi;
      for (std::size_t b = 0; b < n_outer; ++b) {
        double s = 0.0;
        for (std::size_t q = 0; q < n_inner; ++q) {
          const std::size_t p = b * n_inner + q;
          s += vt[p * nt + j] - V0 + it[p * nt + j] - rep.K * t;
          mv.add(vt[p * nt + j]);
          mi.add(it[p * nt + j]);
        }
        batch[b] = s / static_cast<double>(n_inner);
      }
      const auto est = stats::mean_estimate(batch);
      DriftPoint pt;
      pt.probe = pi;
      pt.t = t;
      pt.PtV = mv.mean();
      pt.integral = mi.mean();
      pt.V0 = V0;
      pt.excess = est.mean;
      pt.excess_stderr = est.stderr;
      const double scale = 1e-12 * (1.0 + V0 + std::fabs(pt.integral) + rep.K * t);
      pt.pass = est.mean <= 4.0 * est.stderr + scale;
      rep.points.push_back(pt);
    }
  }
  rep.pass = !rep.diverged &&
             std::all_of(rep.points.begin(), rep.points.end(), [](auto& p) { return p.pass; });
  return rep;
}

// ---------------------------------------------------------------------------

SupportReport support_check(const ModelSpec& model, double R, double delta_ball, double t,
                            std::size_t n_paths, const SimConfig& cfg,
                            std::span<const Segment> probes) {
  validate_sim_config(cfg, model.tau);
  require(delta_ball > 0.0, ErrorKind::invalid_argument, "ball radius must be positive");
  require(t >= model.tau - time_tolerance(model.tau), ErrorKind::precondition,
          "support check needs t >= tau");
  require(n_paths >= 1, ErrorKind::invalid_argument, "no paths");
  std::vector<Segment> own;
  if (probes.empty()) {
    own = ball_probes(model, R, 2, rng::derive_seed(cfg.master_seed, 5), 0.05);
    probes = own;
  }
  for (const Segment& s : probes)
    require(sup_norm(s) <= R * (1.0 + 1e-12) + 1e-12, ErrorKind::precondition,
            "probe lies outside the ball of radius R");

  SupportReport rep;
  rep.R = R;
  rep.delta = delta_ball;
  rep.t = t;
  const double q = std::exp(-model.jump_rate * t);
  const double obs[1] = {t};

  for (const Segment& xi : probes) {
    std::vector<std::uint8_t> full(n_paths), aux(n_paths), none(n_paths);
    parallel_for(n_paths, [&](std::size_t p) {
      SimConfig c = cfg;
      c.path_index = p;
      c.horizon = t;
      const std::size_t jumps = simulate_streaming(
          model, xi, c, obs,
          [&](std::size_t, const EulerProcess& proc) {
            full[p] = proc.history().view().sup_norm() <= delta_ball;
          },
          StreamOptions{true});
      none[p] = jumps == 0;
      simulate_streaming(
          model, xi, c, obs,
          [&](std::size_t, const EulerProcess& proc) {
            aux[p] = proc.history().view().sup_norm() <= delta_ball;
          },
          StreamOptions{false});
    });
    SupportProbe pr;
    pr.sup_norm = sup_norm(xi);
    pr.n = n_paths;
    for (std::size_t p = 0; p < n_paths; ++p) {
      pr.hits_full += full[p];
      pr.hits_aux += aux[p];
      pr.no_jump += none[p];
    }
    const double n = static_cast<double>(n_paths);
    pr.p_full = pr.hits_full / n;
    pr.p_aux = pr.hits_aux / n;
    pr.p_no_jump = pr.no_jump / n;
    pr.no_jump_expected = q;
    pr.cp_full = stats::clopper_pearson(pr.hits_full, n_paths);
    pr.cp_aux = stats::clopper_pearson(pr.hits_aux, n_paths);

    const double se_f = std::sqrt(pr.p_full * (1.0 - pr.p_full) / n);
    const double se_a = std::sqrt(pr.p_aux * (1.0 - pr.p_aux) / n);
    const double se = std::sqrt(se_f * se_f + q * q * se_a * se_a);
    pr.ordering_margin = pr.p_full - pr.p_aux * q + 4.0 * se;
    pr.pass_ordering = pr.ordering_margin >= 0.0;

    const double se_nj = std::sqrt(q * (1.0 - q) / n);
    const double diff = pr.p_no_jump - q;
    pr.no_jump_z = se_nj > 0.0 ? diff / se_nj : (diff == 0.0 ? 0.0 : INFINITY);
    pr.pass_no_jump = std::fabs(diff) <= 4.0 * se_nj + 1e-15;
    pr.inconclusive = pr.hits_aux == 0;
    rep.probes.push_back(pr);
  }

  bool failed = false, unsure = false;
  for (const auto& p : rep.probes) {
    failed = failed || !p.pass_ordering || !p.pass_no_jump;
    unsure = unsure || p.inconclusive;
  }
  rep.verdict = failed ? Verdict::fail : (unsure ? Verdict::inconclusive : Verdict::pass);
  return rep;
}

// ---------------------------------------------------------------------------

MomentReport moment_bound_check(const ModelSpec& model, std::span<const double> x0,
                                std::size_t n_paths, const SimConfig& cfg) {
  validate_sim_config(cfg, model.tau);
  require(!x0.empty(), ErrorKind::invalid_argument, "no moment probes");
  require(n_paths >= 2, ErrorKind::invalid_argument, "need at least two paths");
  MomentReport rep;
  const double obs[1] = {model.tau};

  for (double v : x0) {
    const std::vector<double> init(model.n, v);
    const Segment xi = Segment::constant(model.tau, init);
    std::vector<double> sup_sq(n_paths);
    std::vector<std::uint8_t> bad(n_paths, 0);
    parallel_for(n_paths, [&](std::size_t p) {
      SimConfig c = cfg;
      c.path_index = p;
      c.horizon = model.tau;
      try {
        // The window at tau is exactly X on [0, tau].
        simulate_streaming(model, xi, c, obs, [&](std::size_t, const EulerProcess& proc) {
          const double s = proc.history().view().sup_norm();
          sup_sq[p] = s * s;
        });
      } catch (const DivergenceError&) {
        bad[p] = 1;
      }
      if (!std::isfinite(sup_sq[p])) bad[p] = 1;
    });
    MomentProbe mp;
    mp.x0 = v;
    mp.n = n_paths;
    if (std::any_of(bad.begin(), bad.end(), [](auto b) { return b != 0; })) {
      rep.finite = false;
      rep.probes.push_back(mp);
      continue;
    }
    mp.sup_sq = stats::mean_estimate(sup_sq);
    mp.chebyshev_L = 1.01 * std::sqrt(2.0 * (mp.sup_sq.mean + 4.0 * mp.sup_sq.stderr));
    for (double s : sup_sq) mp.within_L += s <= mp.chebyshev_L * mp.chebyshev_L;
    mp.p_within_L = static_cast<double>(mp.within_L) / static_cast<double>(n_paths);
    mp.chebyshev_holds = mp.p_within_L > 0.5;
    rep.probes.push_back(mp);
  }
  if (!rep.finite) return rep;

  std::vector<double> lx, ly, w, gx, gy;
  for (const auto& p : rep.probes) {
    const double g = 1.0 + static_cast<double>(model.n) * p.x0 * p.x0;
    gx.push_back(g);
    gy.push_back(p.sup_sq.mean);
    if (p.sup_sq.mean <= 0.0) continue;
    lx.push_back(std::log(g));
    ly.push_back(std::log(p.sup_sq.mean));
    const double rel = p.sup_sq.stderr / p.sup_sq.mean;
    w.push_back(1.0 / std::max(rel * rel, 1e-12));
  }
  const auto [lo, hi] = std::minmax_element(lx.begin(), lx.end());
  const bool spread = lx.size() >= 2 && *hi > *lo;
  if (spread) {
    const auto fit = stats::linear_fit(lx, ly, w);
    rep.exponent = fit.slope;
    rep.exponent_stderr = fit.slope_stderr;
    const auto lin = stats::linear_fit(gx, gy);
    rep.linear_slope = lin.slope;
    rep.linear_intercept = lin.intercept;
  }
  rep.pass = rep.finite && (!spread || rep.exponent <= 1.1);
  return rep;
}

// ---------------------------------------------------------------------------

namespace {

std::vector<C2ProbeResult> ball_hits(const ModelSpec& model, std::span<const Segment> probes,
                                     double radius, double t, std::size_t n_paths,
                                     const SimConfig& cfg, double confidence) {
  std::vector<C2ProbeResult> out;
  const double obs[1] = {t};
  for (const Segment& xi : probes) {
    std::vector<std::uint8_t> hit(n_paths, 0);
    parallel_for(n_paths, [&](std::size_t p) {
      SimConfig c = cfg;
      c.path_index = p;
      c.horizon = t;
      simulate_streaming(model, xi, c, obs, [&](std::size_t, const EulerProcess& proc) {
        hit[p] = proc.history().view().sup_norm() <= radius;
      });
    });
    C2ProbeResult r;
    r.sup_norm = sup_norm(xi);
    r.n = n_paths;
    for (auto h : hit) r.hits += h;
    r.p = static_cast<double>(r.hits) / static_cast<double>(n_paths);
    r.cp = stats::clopper_pearson(r.hits, n_paths, confidence);
    out.push_back(r);
  }
  return out;
}

double min_lower(const std::vector<C2ProbeResult>& v) {
  double m = 1.0;
  for (const auto& r : v) m = std::min(m, r.cp.lower);
  return m;
}

}  // namespace

C2Report condition_c2_report(const ModelSpec& model, double M, double epsilon, double t0,
                             std::size_t n_paths, const SimConfig& cfg, const C2Options& opts) {
  validate_sim_config(cfg, model.tau);
  require(M > 0.0 && epsilon > 0.0, ErrorKind::invalid_argument, "M and epsilon must be positive");
  require(t0 >= model.tau - time_tolerance(model.tau), ErrorKind::precondition, "t0 must be >= tau");
  require(n_paths >= 1, ErrorKind::invalid_argument, "no paths");

  C2Report rep;
  rep.mode = opts.mode;
  rep.M = M;
  rep.epsilon = epsilon;
  rep.t0 = t0;
  rep.D_radius = epsilon / 2.0;
  rep.D_diameter = 2.0 * rep.D_radius;
  const std::uint64_t probe_seed = rng::derive_seed(cfg.master_seed, 5);

  if (opts.mode == C2Case::sup_ball) {
    const auto probes = ball_probes(model, M, opts.n_random_probes, probe_seed, 0.05);
    rep.probes = ball_hits(model, probes, rep.D_radius, t0, n_paths, cfg, opts.confidence);
    rep.min_lower = min_lower(rep.probes);
    rep.product_lower = rep.min_lower;
    rep.verdict = rep.min_lower > 0.0 ? Verdict::pass : Verdict::inconclusive;
    return rep;
  }

  // Ball in |xi(0)|: first reach the sup-ball of radius L within tau, then
  // hit D from there.
  require(t0 - model.tau >= model.tau - time_tolerance(model.tau), ErrorKind::precondition,
          "chained check needs t0 >= 2 tau");
  const std::vector<double> x0{-M, 0.0, M};
  rep.moments = moment_bound_check(model, x0, n_paths, cfg);
  if (!rep.moments->finite) {
    rep.verdict = Verdict::inconclusive;
    return rep;
  }
  double f1 = 1.0;
  for (const auto& p : rep.moments->probes) rep.L = std::max(rep.L, p.chebyshev_L);
  // Factor 1 is re-counted at the common L.
  const double obs[1] = {model.tau};
  for (double v : x0) {
    const Segment xi = Segment::constant(model.tau, std::vector<double>(model.n, v));
    std::vector<std::uint8_t> in(n_paths, 0);
    parallel_for(n_paths, [&](std::size_t p) {
      SimConfig c = cfg;
      c.path_index = p;
      c.horizon = model.tau;
      simulate_streaming(model, xi, c, obs, [&](std::size_t, const EulerProcess& proc) {
        in[p] = proc.history().view().sup_norm() <= rep.L;
      });
    });
    std::size_t k = 0;
    for (auto b : in) k += b;
    f1 = std::min(f1, stats::clopper_pearson(k, n_paths, opts.confidence).lower);
  }
  rep.factor1_lower = f1;

  const auto probes = ball_probes(model, rep.L, opts.n_random_probes, probe_seed, 0.05);
  rep.probes =
      ball_hits(model, probes, rep.D_radius, t0 - model.tau, n_paths, cfg, opts.confidence);
  rep.min_lower = min_lower(rep.probes);
  rep.factor2_lower = rep.min_lower;
  rep.product_lower = rep.factor1_lower * rep.factor2_lower;
  rep.verdict = rep.factor1_lower > 0.5 && rep.factor2_lower > 0.0 ? Verdict::pass
                                                                    : Verdict::inconclusive;
  return rep;
}

}  // namespace ergo
