#include "ergo/coupling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "ergo/error.hpp"
#include "ergo/io.hpp"
#include "ergo/parallel.hpp"

namespace ergo {

CoupledSimulator::CoupledSimulator(const ModelSpec& model, const Segment& xi, const Segment& eta,
                                   double lambda, const SimConfig& cfg, bool track_girsanov)
    : model_(model),
      lambda_(lambda),
      cfg_(cfg),
      girsanov_(track_girsanov),
      x_(model, xi, false),
      y_(model, eta, false),
      noise_(cfg, model.m, model.jump_rate, model.mark_sampler, true) {
  validate_sim_config(cfg, model.tau);
  require(std::isfinite(lambda) && lambda >= 0.0, ErrorKind::invalid_argument,
          "coupling strength lambda must be finite and nonnegative");
  if (girsanov_)
    require(model.n == model.m, ErrorKind::invalid_model,
            "the Girsanov shift needs a square diffusion matrix");
  extra_.resize(model.n);
  theta_left_.assign(model.m, 0.0);
  theta_right_.assign(model.m, 0.0);
  if (girsanov_) theta(theta_left_);
}

void CoupledSimulator::theta(std::span<double> out) {
  std::fill(out.begin(), out.end(), 0.0);
  if (lambda_ == 0.0) return;
  if (!sigma_inv_cached_) {
    auto inv = diffusion_inverse(model_, y_.history().view());
    if (!inv)
      fail(ErrorKind::invalid_model,
           "sigma(Y_t) is singular at t = " + io::format_double(y_.time()) +
               "; the Girsanov shift is undefined");
    sigma_inv_ = std::move(*inv);
    sigma_inv_cached_ = model_.constant_diffusion;
  }
  const auto x = x_.state(), y = y_.state();
  const std::size_t n = model_.n;
  for (std::size_t i = 0; i < n; ++i) {
    double v = 0.0;
    for (std::size_t k = 0; k < n; ++k) v += sigma_inv_[i * n + k] * (x[k] - y[k]);
    out[i] = lambda_ * v;
  }
}

void CoupledSimulator::advance_to(double t) {
  const std::size_t n = model_.n;
  while (time() < t - time_tolerance(t)) {
    if (!noise_.next(cfg_.horizon, steps_)) break;
    for (const SubStep& s : steps_) {
      const double h = s.t1 - time();
      const auto x = x_.state(), y = y_.state();
      for (std::size_t i = 0; i < n; ++i) extra_[i] = lambda_ * (x[i] - y[i]);
      x_.step(s.t1, s.dW);
      y_.step(s.t1, s.dW, extra_);
      if (girsanov_) {
        double dot = 0.0, left_sq = 0.0;
        for (std::size_t j = 0; j < theta_left_.size(); ++j) {
          dot += theta_left_[j] * s.dW[j];
          left_sq += theta_left_[j] * theta_left_[j];
        }
        log_weight_ += -dot - 0.5 * left_sq * h;
        theta(theta_right_);
        double right_sq = 0.0;
        for (double v : theta_right_) right_sq += v * v;
        kl_ += 0.25 * (left_sq + right_sq) * h;
        if (record_) integrand_.push_back(right_sq);
        theta_left_.swap(theta_right_);
      }
      if (s.jump) {
        events_x_.push_back({s.t1, s.mark, {x_.state().begin(), x_.state().end()}});
        events_y_.push_back({s.t1, s.mark, {y_.state().begin(), y_.state().end()}});
        x_.jump(s.mark);
        y_.jump(s.mark);
        if (girsanov_) theta(theta_left_);
      }
    }
  }
}

double CoupledSimulator::gap_sup(double t) const {
  return sup_distance(x_.history().view_at(t).to_segment(), y_.history().view_at(t).to_segment());
}

void CoupledSimulator::prune_for(double t) {
  const double keep = std::min(t, time());
  x_.history().prune_for(keep);
  y_.history().prune_for(keep);
}

Trajectory CoupledSimulator::take_x() {
  return Trajectory{std::move(x_.history()), std::move(events_x_)};
}

Trajectory CoupledSimulator::take_y() {
  return Trajectory{std::move(y_.history()), std::move(events_y_)};
}

CoupledRun simulate_coupled(const ModelSpec& model, const Segment& xi, const Segment& eta,
                            double lambda, const SimConfig& cfg) {
  CoupledSimulator sim(model, xi, eta, lambda, cfg, true);
  sim.record_integrand(true);
  sim.advance_to(cfg.horizon);
  CoupledRun run{sim.take_x(), sim.take_y(), lambda, sim.kl_integrand(), sim.kl(),
                 sim.log_weight()};
  return run;
}

// ---------------------------------------------------------------------------
// Decay

namespace {

void check_times(std::span<const double> times) {
  require(!times.empty(), ErrorKind::invalid_argument, "times must be nonempty");
  for (std::size_t i = 0; i < times.size(); ++i) {
    require(std::isfinite(times[i]) && times[i] > 0.0, ErrorKind::invalid_argument,
            "times must be strictly positive");
    require(i == 0 || times[i] > times[i - 1], ErrorKind::invalid_argument,
            "times must be strictly increasing");
  }
}

}  // namespace

DecayFit estimate_decay(const ModelSpec& model, const Segment& xi, const Segment& eta,
                        double lambda, double alpha, std::span<const double> times,
                        std::size_t n_paths, const SimConfig& cfg, const DecayOptions& opts) {
  require(alpha > 0.0, ErrorKind::precondition, "alpha must be positive");
  require(n_paths >= opts.min_paths, ErrorKind::invalid_argument,
          "estimate_decay needs at least " + std::to_string(opts.min_paths) + " paths");
  check_times(times);
  const double gap0 = sup_distance(xi, eta);
  require(gap0 > 0.0, ErrorKind::degenerate_fit,
          "xi and eta coincide; the decay of a zero gap cannot be fitted (choose xi != eta)");

  SimConfig base = cfg;
  base.horizon = times.back();
  validate_sim_config(base, model.tau);
  const std::size_t nt = times.size();
  std::vector<double> gaps(n_paths * nt), kls(n_paths, 0.0);

  parallel_for(n_paths, [&](std::size_t p) {
    SimConfig c = base;
    c.path_index = p;
    CoupledSimulator sim(model, xi, eta, lambda, c, opts.track_kl);
    for (std::size_t j = 0; j < nt; ++j) {
      sim.advance_to(times[j]);
      gaps[p * nt + j] = sim.gap_sup(times[j]);
      sim.prune_for(times[j]);
    }
    kls[p] = sim.kl();
  });

  DecayFit fit;
  fit.alpha_target = alpha;
  fit.lambda_used = lambda;
  fit.kappa = 2.0 * lambda - alpha;
  fit.K_prime = model.K + model.K * model.K;
  fit.gap0 = gap0;
  fit.times.assign(times.begin(), times.end());
  fit.theoretical_prefactor = 4.0 * std::exp(alpha * model.tau);
  fit.n_paths = n_paths;

  for (std::size_t j = 0; j < nt; ++j) {
    stats::Moments sq, first;
    for (std::size_t p = 0; p < n_paths; ++p) {
      const double g = gaps[p * nt + j];
      sq.add(g * g);
      first.add(g);
    }
    require(sq.mean() > 0.0 && std::isfinite(sq.mean()), ErrorKind::degenerate_fit,
            "mean squared gap is zero or non-finite at t = " + io::format_double(times[j]));
    fit.mean_sq.push_back(sq.mean());
    fit.mean_sq_stderr.push_back(sq.stderr_of_mean());
    fit.log_mean_sq.push_back(std::log(sq.mean()));
    fit.log_stderr.push_back(sq.stderr_of_mean() / sq.mean());
    fit.mean_gap.push_back(first.mean());
    fit.mean_gap_stderr.push_back(first.stderr_of_mean());
    fit.bound.push_back(fit.theoretical_prefactor * gap0 * gap0 * std::exp(-alpha * times[j]));
  }

  if (nt >= 2) {
    const bool noisy = std::any_of(fit.log_stderr.begin(), fit.log_stderr.end(),
                                   [](double s) { return s > 0.0; });
    std::vector<double> w;
    if (noisy)
      for (double s : fit.log_stderr) w.push_back(1.0 / std::max(s * s, 1e-12));
    const auto lf = stats::linear_fit(fit.times, fit.log_mean_sq, w);
    fit.fitted_slope = lf.slope;
    fit.fitted_intercept = lf.intercept;
    fit.slope_stderr = lf.slope_stderr;
    fit.pass_slope = lf.slope <= -alpha * (1.0 - opts.slope_tol_fraction);
  }
  fit.pass_prefactor = true;
  for (std::size_t j = 0; j < nt; ++j) {
    const double rel = fit.mean_sq_stderr[j] / fit.mean_sq[j];
    if (fit.mean_sq[j] > fit.bound[j] * (1.0 + 4.0 * rel)) fit.pass_prefactor = false;
  }
  if (opts.track_kl) fit.kl = stats::mean_estimate(kls);
  return fit;
}

LambdaSelection select_lambda(const ModelSpec& model, const Segment& xi, const Segment& eta,
                              double alpha, std::span<const double> times, std::size_t n_paths,
                              const SimConfig& cfg, double lambda_max) {
  require(alpha > 0.0, ErrorKind::precondition, "select_lambda: alpha must be positive");
  require(lambda_max > 0.0, ErrorKind::invalid_argument, "lambda_max must be positive");
  const std::size_t pilot = std::max<std::size_t>(100, n_paths / 10);
  LambdaSelection out;
  std::optional<DecayFit> best;
  for (double lambda = std::max(1.0, 2.0 * alpha); lambda <= lambda_max; lambda *= 2.0) {
    out.probed.push_back(lambda);
    DecayFit fit = estimate_decay(model, xi, eta, lambda, alpha, times, pilot, cfg);
    if (fit.pass_slope && fit.pass_prefactor) {
      out.lambda = lambda;
      out.pilot = std::move(fit);
      return out;
    }
    if (!best || fit.fitted_slope < best->fitted_slope) best = std::move(fit);
  }
  std::ostringstream msg;
  msg << "no lambda <= " << io::format_double(lambda_max) << " passed the decay checks";
  if (best)
    msg << "; best probe lambda = " << io::format_double(best->lambda_used)
        << " with slope " << io::format_double(best->fitted_slope) << " (target <= "
        << io::format_double(-0.9 * alpha) << "), prefactor check "
        << (best->pass_prefactor ? "passed" : "failed");
  fail(ErrorKind::selection_failure, msg.str());
}

// ---------------------------------------------------------------------------
// KL and total variation

double coupling_tv_constant(double lambda, double K, double alpha, double tau, double gap) {
  require(alpha > 0.0, ErrorKind::precondition, "alpha must be positive");
  const double C = 4.0 * std::exp(alpha * tau);
  return lambda * K * std::sqrt(C) * gap / (2.0 * std::sqrt(alpha));
}

KlReport kl_and_tv(std::span<const double> kl_per_path, double lambda, double K, double alpha,
                   double tau, double gap, double horizon) {
  require(!kl_per_path.empty(), ErrorKind::invalid_argument, "kl_and_tv: empty batch");
  const auto est = stats::mean_estimate(kl_per_path);
  KlReport r;
  r.kl = est.mean;
  r.kl_stderr = est.stderr;
  r.n = est.n;
  r.tv_bound = std::sqrt(std::max(est.mean, 0.0) / 2.0);
  r.constant_bound = coupling_tv_constant(lambda, K, alpha, tau, gap);
  r.horizon = horizon;
  return r;
}

KlReport kl_and_tv(std::span<const CoupledRun> runs, const ModelSpec& model, double alpha,
                   const Segment& xi, const Segment& eta) {
  require(!runs.empty(), ErrorKind::invalid_argument, "kl_and_tv: empty batch");
  std::vector<double> kls;
  for (const auto& r : runs) kls.push_back(r.kl);
  return kl_and_tv(kls, runs.front().lambda, model.K, alpha, model.tau, sup_distance(xi, eta),
                   runs.front().x.path.time());
}

// ---------------------------------------------------------------------------
// Importance reweighting

double TestFunctional::operator()(std::span<const double> x) const noexcept {
  if (kind == Kind::identity) return x[0];
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s) <= radius ? 1.0 : 0.0;
}

ReweightReport importance_reweight_check(const ModelSpec& model, const Segment& xi,
                                         const Segment& eta, double lambda,
                                         const TestFunctional& g, std::size_t n_paths,
                                         const SimConfig& cfg) {
  require(n_paths >= 2, ErrorKind::invalid_argument, "importance_reweight_check: n_paths >= 2");
  constexpr double kMaxLog = 700.0;
  std::vector<double> weighted(n_paths), plain(n_paths), logw(n_paths), weights(n_paths);
  std::vector<std::uint8_t> truncated(n_paths, 0);
  const std::uint64_t replica = rng::derive_seed(cfg.master_seed,
                                                 static_cast<std::uint64_t>(rng::Substream::replica));
  const double horizon[1] = {cfg.horizon};
  parallel_for(n_paths, [&](std::size_t p) {
    SimConfig c = cfg;
    c.path_index = p;
    CoupledSimulator sim(model, xi, eta, lambda, c, true);
    sim.advance_to(cfg.horizon);
    double lw = sim.log_weight();
    logw[p] = lw;
    if (lw > kMaxLog) {
      lw = kMaxLog;
      truncated[p] = 1;
    }
    weights[p] = std::exp(lw);
    weighted[p] = g(sim.y().state()) * weights[p];

    SimConfig r = cfg;
    r.master_seed = replica;
    r.path_index = p;
    simulate_streaming(model, eta, r, horizon,
                       [&](std::size_t, const EulerProcess& proc) { plain[p] = g(proc.state()); });
  });

  ReweightReport out;
  out.weighted = stats::mean_estimate(weighted);
  out.plain = stats::mean_estimate(plain);
  out.max_log_weight = *std::max_element(logw.begin(), logw.end());
  out.mean_weight = stats::mean_estimate(weights).mean;
  for (auto t : truncated) out.truncated += t;
  const double se = std::hypot(out.weighted.stderr, out.plain.stderr);
  const double diff = out.weighted.mean - out.plain.mean;
  out.z = se > 0.0 ? diff / se : (diff == 0.0 ? 0.0 : std::copysign(INFINITY, diff));
  out.pass = std::fabs(out.z) <= 3.0;
  return out;
}

// ---------------------------------------------------------------------------
// Condition C1

C1Report condition_c1_report(const ModelSpec& model,
                             std::span<const std::pair<Segment, Segment>> pairs, double alpha,
                             std::span<const double> times, std::size_t n_paths,
                             const SimConfig& cfg, const C1Options& opts) {
  require(alpha > 0.0, ErrorKind::precondition, "alpha must be positive");
  require(!pairs.empty(), ErrorKind::invalid_argument, "condition_c1_report: no pairs");
  C1Report report;
  report.alpha = alpha;
  Verdict verdict = Verdict::pass;
  for (const auto& [xi, eta] : pairs) {
    require(sup_distance(xi, eta) > 0.0, ErrorKind::precondition,
            "condition_c1_report: every pair needs xi != eta");
    C1PairReport pr;
    const double lambda = opts.lambda ? *opts.lambda
                                      : select_lambda(model, xi, eta, alpha, times, n_paths, cfg,
                                                      opts.lambda_max)
                                            .lambda;
    DecayOptions d = opts.decay;
    pr.kl_available = model.n == model.m && diffusion_inverse(model, eta.view()).has_value();
    d.track_kl = pr.kl_available;
    pr.decay = estimate_decay(model, xi, eta, lambda, alpha, times, n_paths, cfg, d);

    pr.pass_first_moment = true;
    const double root_c = std::sqrt(pr.decay.theoretical_prefactor);
    for (std::size_t j = 0; j < times.size(); ++j) {
      const double r = root_c * std::exp(-0.5 * alpha * times[j]);
      const double rel = pr.decay.mean_gap_stderr[j] / pr.decay.mean_gap[j];
      if (pr.decay.mean_gap[j] > r * pr.decay.gap0 * (1.0 + 4.0 * rel)) pr.pass_first_moment = false;
    }

    if (pr.kl_available) {
      const double kl = pr.decay.kl->mean;
      const std::vector<double> one{kl};
      pr.kl = kl_and_tv(one, lambda, model.K, alpha, model.tau, pr.decay.gap0, times.back());
      pr.kl.kl_stderr = pr.decay.kl->stderr;
      pr.kl.n = pr.decay.kl->n;
      pr.pass_kl = kl <= 2.0 * pr.kl.constant_bound * pr.kl.constant_bound;
    }
    pr.pass = pr.decay.pass_slope && pr.decay.pass_prefactor && pr.pass_first_moment &&
              (!pr.kl_available || pr.pass_kl);
    Verdict v = pr.pass ? Verdict::pass : Verdict::fail;
    if (v == Verdict::pass && !pr.kl_available) v = Verdict::inconclusive;
    verdict = combine(verdict, v);
    report.pairs.push_back(std::move(pr));
  }
  report.verdict = verdict;
  return report;
}

}  // namespace ergo
