#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "ergo/error.hpp"
#include "ergo/io.hpp"
#include "ergo/parallel.hpp"
#include "ergo/rng.hpp"
#include "ergo/stats.hpp"
#include "ergo/transport.hpp"

namespace ergo {

namespace {

// samples[t][i]: segment X_{times[t]} of path i.
std::vector<std::vector<Segment>> sample_segments(const ModelSpec& model, const Segment& start,
                                                  std::span<const double> times, std::size_t n,
                                                  std::uint64_t seed, const SimConfig& cfg,
                                                  bool with_jumps) {
  std::vector<std::vector<std::optional<Segment>>> tmp(times.size(),
                                                       std::vector<std::optional<Segment>>(n));
  parallel_for(n, [&](std::size_t i) {
    SimConfig c = cfg;
    c.master_seed = seed;
    c.path_index = i;
    c.horizon = times.back();
    simulate_streaming(
        model, start, c, times,
        [&](std::size_t k, const EulerProcess& proc) {
          tmp[k][i] = proc.history().view().to_segment();
        },
        StreamOptions{with_jumps});
  });
  std::vector<std::vector<Segment>> out(times.size());
  for (std::size_t k = 0; k < times.size(); ++k) {
    out[k].reserve(n);
    for (auto& s : tmp[k]) out[k].push_back(std::move(*s));
  }
  return out;
}

}  // namespace

MarginalCurve wasserstein_time_marginals(const ModelSpec& model, const Segment& xi,
                                         const Segment& eta, std::span<const double> times,
                                         std::size_t n_samples, const SimConfig& cfg,
                                         const MarginalOptions& opts) {
  require(!times.empty(), ErrorKind::invalid_argument, "no observation times");
  require(n_samples >= 2, ErrorKind::invalid_argument, "need at least two samples per side");
  require(std::is_sorted(times.begin(), times.end()), ErrorKind::invalid_argument,
          "observation times must ascend");
  for (double t : times)
    require(t >= model.tau - time_tolerance(model.tau), ErrorKind::precondition,
            "observation times must be at least tau");
  validate_sim_config(cfg, model.tau);

  const auto left = sample_segments(model, xi, times, n_samples, cfg.master_seed, cfg,
                                    opts.with_jumps);
  std::vector<std::vector<Segment>> right;
  if (opts.reference) {
    require(opts.reference_time >= model.tau, ErrorKind::precondition,
            "reference time must be at least tau");
    const double tr[1] = {opts.reference_time};
    right = sample_segments(model, opts.reference_start ? *opts.reference_start : xi, tr,
                            n_samples, rng::derive_seed(cfg.master_seed,
                                                        static_cast<std::uint64_t>(
                                                            rng::Substream::reference)),
                            cfg, opts.with_jumps);
  } else {
    right = sample_segments(model, eta, times, n_samples, cfg.master_seed, cfg, opts.with_jumps);
  }

  const std::vector<double> w(n_samples, 1.0 / static_cast<double>(n_samples));
  MarginalCurve curve;
  curve.points.resize(times.size());
  for (std::size_t k = 0; k < times.size(); ++k) {
    const CostMatrix c = cost_matrix(left[k], right[opts.reference ? 0 : k], opts.metric);
    const TransportPlan plan = wasserstein_auto(c, w, w, opts.cap);

    std::vector<double> boot(opts.bootstrap);
    parallel_for(opts.bootstrap, [&](std::size_t r) {
      rng::Engine eng({cfg.master_seed, k * opts.bootstrap + r, rng::Substream::bootstrap});
      std::vector<std::size_t> li(n_samples), ri(n_samples);
      for (auto& x : li) x = static_cast<std::size_t>(rng::uniform01(eng) * n_samples);
      if (opts.reference)
        for (auto& x : ri) x = static_cast<std::size_t>(rng::uniform01(eng) * n_samples);
      else
        ri = li;
      boot[r] = wasserstein_auto(c.select(li, ri), w, w, opts.cap).cost;
    });
    stats::Moments mom;
    for (double x : boot) mom.add(x);

    curve.points[k] = {times[k], plan.cost, std::sqrt(mom.variance()), n_samples, plan.solver};
  }
  return curve;
}

TrendTest trend_test(const MarginalCurve& curve) {
  require(curve.points.size() >= 2, ErrorKind::degenerate_fit, "trend needs two points");
  TrendTest t;
  const auto& pts = curve.points;
  t.final_below_initial = pts.back().w_upper <= pts.front().w_upper;

  std::vector<double> x, y, w;
  bool any_stderr = false;
  for (const auto& p : pts) {
    if (p.w_upper <= 0.0) continue;
    x.push_back(p.t);
    y.push_back(std::log(p.w_upper));
    const double rel = p.stderr_boot / p.w_upper;
    any_stderr = any_stderr || rel > 0.0;
    w.push_back(1.0 / std::max(rel * rel, 1e-12));
  }
  if (x.size() < pts.size() && pts.front().w_upper > 0.0 && pts.back().w_upper == 0.0) {
    t.slope = -std::numeric_limits<double>::infinity();
    t.z = -std::numeric_limits<double>::infinity();
    t.decreasing = true;
    return t;
  }
  require(x.size() >= 2, ErrorKind::degenerate_fit, "curve is identically zero");
  const stats::LinearFit fit =
      any_stderr ? stats::linear_fit(x, y, w) : stats::linear_fit(x, y);
  t.slope = fit.slope;
  t.intercept = fit.intercept;
  t.slope_stderr = fit.slope_stderr;
  if (fit.slope_stderr > 0.0)
    t.z = fit.slope / fit.slope_stderr;
  else
    t.z = fit.slope < 0.0 ? -std::numeric_limits<double>::infinity()
                          : (fit.slope > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
  t.decreasing = t.slope < 0.0 && std::fabs(t.z) > 3.0;
  return t;
}

void write_curve_csv(std::ostream& out, const MarginalCurve& curve) {
  out << "t,w_upper,stderr_boot,n_samples,solver\n";
  for (const auto& p : curve.points) {
    const std::string f[] = {io::format_double(p.t), io::format_double(p.w_upper),
                             io::format_double(p.stderr_boot), std::to_string(p.n_samples),
                             to_string(p.solver)};
    out << io::csv_row(f);
  }
}

}  // namespace ergo
