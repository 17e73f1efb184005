// Acceptance run: one pass/fail line per criterion. Tolerances are pinned
// here; exit status is 0 only when every selected criterion passes.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ergo/coupling.hpp"
#include "ergo/ergodicity.hpp"
#include "ergo/harness.hpp"
#include "ergo/io.hpp"
#include "ergo/transport.hpp"

#ifndef ERGO_CONFIG_DIR
#define ERGO_CONFIG_DIR "configs"
#endif

using namespace ergo;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double x, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, x);
  return buf;
}

ModelSpec ou(double a, double sigma0, double rate, double c_scale = 0.5) {
  BuiltinParams p;
  p.a = a;
  p.sigma0 = sigma0;
  p.jump_rate = rate;
  p.c_scale = c_scale;
  p.mark = MarkLaw::atom(1.0);
  p.relaxed = true;
  return make_builtin(BuiltinKind::ou_jump, p);
}

const Segment one = Segment::constant(1.0, 1.0);
const Segment zero = Segment::constant(1.0, 0.0);

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// 1. Noise-free, jump-free pair with lambda = 2: E|X_t - Y_t|^2 = e^{-6t}.
Outcome deterministic_coupling() {
  const auto t0 = std::chrono::steady_clock::now();
  const std::vector<double> times{1, 2, 3, 4, 5};
  const DecayFit f = estimate_decay(ou(1.0, 0.0, 0.0), one, zero, 2.0, 0.5, times, 100,
                                    {1e-3, 5.0, 1, 0});
  const double secs = seconds_since(t0);
  const bool ok = std::fabs(f.fitted_slope + 6.0) <= 0.02 * 6.0 && secs < 10.0;
  return {ok, "slope " + fmt(f.fitted_slope, 6) + " (target -6 +/- 2%), " + fmt(secs, 3) + " s (< 10 s)"};
}

// 2. Stochastic contraction with the adaptive lambda and 1e4 coupled paths.
Outcome stochastic_contraction() {
  const auto t0 = std::chrono::steady_clock::now();
  const ModelSpec m = ou(1.0, 1.0, 1.0);
  const std::vector<double> times{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  const SimConfig cfg{0.01, 10.0, 2024, 0};
  const LambdaSelection sel = select_lambda(m, one, zero, 0.5, times, 2000, cfg);
  const DecayFit f = estimate_decay(m, one, zero, sel.lambda, 0.5, times, 10000, cfg);
  bool below = true;
  for (std::size_t j = 0; j < times.size(); ++j)
    below = below && f.mean_sq[j] <= f.bound[j] * (1.0 + 4.0 * f.mean_sq_stderr[j] / f.mean_sq[j]);
  const double secs = seconds_since(t0);
  const bool ok = f.fitted_slope <= -0.45 && below && secs < 300.0;
  return {ok, "lambda " + fmt(sel.lambda) + ", slope " + fmt(f.fitted_slope) +
                  " (<= -0.45), all points under 4e^{alpha tau}|xi-eta|^2 e^{-alpha t}: " +
                  (below ? "yes" : "no") + ", " + fmt(secs, 3) + " s (< 300 s)"};
}

// 3. KL of the coupled laws and the Girsanov reweighting identity.
Outcome kl_chain() {
  const CoupledRun det = simulate_coupled(ou(1.0, 1.0, 0.0), one, zero, 2.0, {1e-3, 6.0, 0, 0});
  const bool det_ok = std::fabs(det.kl - 1.0 / 3.0) <= 0.01 / 3.0;

  const ModelSpec m = ou(1.0, 1.0, 1.0);
  const std::vector<double> times{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  const SimConfig cfg{0.01, 10.0, 77, 0};
  const double lambda = select_lambda(m, one, zero, 0.5, times, 2000, cfg).lambda;
  DecayOptions o;
  o.track_kl = true;
  const DecayFit f = estimate_decay(m, one, zero, lambda, 0.5, times, 10000, cfg, o);
  const double c = coupling_tv_constant(lambda, m.K, 0.5, m.tau, 1.0);
  const bool kl_ok = f.kl->mean <= 2.0 * c * c;

  const ReweightReport rw = importance_reweight_check(m, one, zero, lambda, {}, 100000, {0.01, 0.5, 78, 0});
  const bool rw_ok = std::fabs(rw.z) <= 3.0;
  return {det_ok && kl_ok && rw_ok,
          "deterministic KL " + fmt(det.kl, 6) + " (1/3 +/- 1%); stochastic KL " + fmt(f.kl->mean) +
              " <= 2 x bound^2 = " + fmt(2.0 * c * c) + "; reweight |z| " + fmt(std::fabs(rw.z), 3) +
              " (<= 3, 1e5 paths, T = 0.5)"};
}

// 4. Exact jump clock and the conditioning on no jumps.
Outcome jump_statistics() {
  bool ok = true;
  std::string detail;
  const auto mark = [](rng::Engine&) { return 1.0; };
  const std::pair<double, double> cases[] = {{1, 1}, {1, 2}, {2, 1}};
  std::uint64_t seed = 4040;
  for (const auto& [rate, t] : cases) {
    ++seed;
    constexpr std::size_t n = 100000;
    std::size_t none = 0;
    for (std::size_t i = 0; i < n; ++i)
      none += sample_jump_stream(rate, t, seed, i, mark).times.empty() ? 1 : 0;
    const double q = std::exp(-rate * t);
    const double p = static_cast<double>(none) / n;
    const double z = (p - q) / std::sqrt(q * (1.0 - q) / n);
    ok = ok && std::fabs(z) <= 4.0;

    const SupportReport s = support_check(ou(1.0, 1.0, rate), 2.0, 0.5, t, 20000, {0.01, t, seed + 100, 0});
    bool ordering = true;
    for (const auto& pr : s.probes) ordering = ordering && pr.pass_ordering && pr.pass_no_jump;
    ok = ok && ordering;
    detail += "(rate " + fmt(rate) + ", t " + fmt(t) + ") no-jump z " + fmt(z, 3) +
              (ordering ? ", ordering ok; " : ", ordering FAILED; ");
  }
  detail.resize(detail.size() - 2);
  return {ok, detail};
}

// 5. E sup_{t <= 1} |Y|^2 of the linear jump OU decreases in lambda.
Outcome lambda_monotonicity() {
  LinearJumpOuConfig spec;
  spec.rate = 5.0;
  spec.mark = MarkLaw::atom(1.0);
  spec.h = {JumpKernel::Kind::constant, 1.0};
  const double lambdas[] = {1, 4, 16, 64};
  std::vector<std::vector<double>> sq;
  for (double lambda : lambdas) {
    sq.emplace_back();
    for (std::uint64_t i = 0; i < 10000; ++i) {
      const double s = simulate_linear_jump_ou(lambda, spec, {0.001, 1.0, 505, i}).sup_abs;
      sq.back().push_back(s * s);
    }
  }
  bool ok = true;
  std::string detail = "E sup|Y|^2:";
  for (std::size_t k = 0; k < sq.size(); ++k) detail += " " + fmt(stats::mean_estimate(sq[k]).mean);
  detail += "; paired z:";
  for (std::size_t k = 0; k + 1 < sq.size(); ++k) {
    const auto d = stats::paired_difference(sq[k], sq[k + 1]);
    const double z = d.mean / d.stderr;
    ok = ok && z > 2.0;
    detail += " " + fmt(z, 3);
  }
  return {ok, detail + " (each > 2)"};
}

// 6. Long-run variance (sigma0^2 + int c^2 dnu) / (2a) = 0.625.
Outcome stationary_variance() {
  const ModelSpec m = ou(1.0, 1.0, 1.0);
  constexpr std::size_t n = 100000;
  const double burn = 20.0, spacing = 5.0;
  std::vector<double> times(n);
  for (std::size_t i = 0; i < n; ++i) times[i] = burn + spacing * static_cast<double>(i);
  std::vector<double> x(n);
  simulate_streaming(m, zero, {0.005, times.back(), 606, 0}, times,
                     [&](std::size_t i, const EulerProcess& p) { x[i] = p.state()[0]; });
  const auto mean = stats::mean_estimate(x);
  std::vector<double> dev(n);
  for (std::size_t i = 0; i < n; ++i) dev[i] = (x[i] - mean.mean) * (x[i] - mean.mean);
  const auto var = stats::mean_estimate(dev);
  const double target = 0.625;
  const bool ok = std::fabs(var.mean - target) <= 4.0 * var.stderr;
  return {ok, "variance " + fmt(var.mean, 6) + " +/- " + fmt(var.stderr, 3) + " (target 0.625 within 4 se)"};
}

// 7. Exact transport against brute force, sorted couplings and entropic
// approximations.
Outcome transport_exactness() {
  const SegmentSampler sampler{1.0, 1, 0.05, 2.0};
  double worst_brute = 0.0;
  for (std::uint64_t inst = 0; inst < 200; ++inst) {
    rng::Engine e({707, inst, rng::Substream::sampler});
    const std::size_t n = 1 + inst % 8;
    std::vector<Segment> a, b;
    for (std::size_t i = 0; i < n; ++i) a.push_back(sampler.sample(e));
    for (std::size_t i = 0; i < n; ++i) b.push_back(sampler.sample(e));
    const CostMatrix c = cost_matrix(a, b, GroundMetric::sup_capped);
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    double best = INFINITY;
    do {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) s += c(i, perm[i]);
      best = std::min(best, s / static_cast<double>(n));
    } while (std::next_permutation(perm.begin(), perm.end()));
    const double exact = wasserstein_exact(EmpiricalMeasure::uniform(a), EmpiricalMeasure::uniform(b)).cost;
    worst_brute = std::max(worst_brute, std::fabs(exact - best));
  }

  double worst_sorted = 0.0;
  for (std::uint64_t inst = 0; inst < 5; ++inst) {
    rng::Engine e({708, inst, rng::Substream::sampler});
    constexpr std::size_t n = 200;
    std::vector<double> x(n), y(n);
    std::vector<Segment> a, b;
    for (auto& v : x) a.push_back(Segment::constant(1.0, v = rng::uniform01(e)));
    for (auto& v : y) b.push_back(Segment::constant(1.0, v = rng::uniform01(e)));
    std::sort(x.begin(), x.end());
    std::sort(y.begin(), y.end());
    double sorted = 0.0;
    for (std::size_t i = 0; i < n; ++i) sorted += std::fabs(x[i] - y[i]);
    sorted /= n;
    const double exact = wasserstein_exact(EmpiricalMeasure::uniform(a), EmpiricalMeasure::uniform(b)).cost;
    worst_sorted = std::max(worst_sorted, std::fabs(exact - sorted));
  }

  double worst_entropic = 0.0;
  for (std::uint64_t inst = 0; inst < 5; ++inst) {
    rng::Engine e({709, inst, rng::Substream::sampler});
    std::vector<Segment> a, b;
    for (std::size_t i = 0; i < 16; ++i) a.push_back(sampler.sample(e));
    for (std::size_t i = 0; i < 12; ++i) b.push_back(sampler.sample(e));
    const auto mu = EmpiricalMeasure::uniform(a), nu = EmpiricalMeasure::uniform(b);
    const double exact = wasserstein_exact(mu, nu).cost;
    const double ent = wasserstein_sinkhorn(mu, nu, 1e-3).cost;
    worst_entropic = std::max(worst_entropic, std::fabs(ent - exact));
  }
  const bool ok = worst_brute <= 1e-12 && worst_sorted <= 1e-9 && worst_entropic <= 1e-3;
  return {ok, "brute force max diff " + fmt(worst_brute, 3) + " (<= 1e-12, 200 instances); sorted " +
                  fmt(worst_sorted, 3) + " (<= 1e-9); entropic eps 1e-3 " + fmt(worst_entropic, 3) +
                  " (<= 1e-3)"};
}

// 8. Rate bound against the closed forms for f(u) = u and f(u) = sqrt(u).
Outcome rate_formula() {
  const double C1 = 1.3, C2 = 0.7, delta = 0.5;
  const Segment xi = Segment::constant(1.0, 2.0);  // V = 4
  const RatePolicy lin = RatePolicy::builtin("linear", LyapunovV::current_sq, delta, C1, C2);
  const RatePolicy sq = RatePolicy::builtin("sqrt", LyapunovV::current_sq, delta, C1, C2);
  double worst = 0.0;
  bool monotone = true;
  double prev_l = INFINITY, prev_s = INFINITY;
  for (int k = 0; k <= 500; ++k) {
    const double t = 0.1 * k;
    const double bl = rate_bound(lin, xi, t), bs = rate_bound(sq, xi, t);
    const double el = C1 * (1.0 + std::pow(4.0, delta)) * std::exp(-delta * C2 * t);
    const double es = C1 * (1.0 + std::pow(2.0, delta)) / std::pow(1.0 + C2 * t / 2.0, delta);
    worst = std::max({worst, std::fabs(bl / el - 1.0), std::fabs(bs / es - 1.0)});
    monotone = monotone && bl <= prev_l && bs <= prev_s;
    prev_l = bl;
    prev_s = bs;
  }
  return {worst <= 1e-8 && monotone, "max relative error " + fmt(worst, 3) +
                                         " on t in [0, 50] (<= 1e-8), non-increasing: " +
                                         (monotone ? "yes" : "no")};
}

// 9. Full report on the default instance and on the explosive control.
Outcome headline_report() {
  const auto t0 = std::chrono::steady_clock::now();
  const std::string dir = ERGO_CONFIG_DIR;
  const auto good_cfg = harness::load_experiment(dir + "/ou_jump_report.ini");
  const auto bad_cfg = harness::load_experiment(dir + "/negative_control.ini");
  const ErgodicityReport good = ergodicity_report(make_builtin(good_cfg.model_kind, good_cfg.model),
                                                  harness::report_config(good_cfg), good_cfg.digest);
  const ErgodicityReport bad = ergodicity_report(make_builtin(bad_cfg.model_kind, bad_cfg.model),
                                                 harness::report_config(bad_cfg), bad_cfg.digest);
  const auto& tr = good.wasserstein.pair_trend;
  const double secs = seconds_since(t0);
  const bool ok = good.verdict == Verdict::pass && tr.slope < 0.0 && std::fabs(tr.z) > 3.0 &&
                  bad.verdict == Verdict::fail && secs < 1800.0;
  return {ok, "default verdict " + std::string(to_string(good.verdict)) + " (slope " + fmt(tr.slope) +
                  ", |z| " + fmt(std::fabs(tr.z), 3) + "); negative control verdict " +
                  to_string(bad.verdict) + "; " + fmt(secs, 3) + " s (< 1800 s)"};
}

// 10. Skorohod upper bound versus sup distance.
Outcome metric_sanity() {
  const SegmentSampler sampler{1.0, 1, 0.05, 2.0};
  rng::Engine e({1010, 0, rng::Substream::sampler});
  std::size_t bad_order = 0, bad_zero = 0, bad_triangle = 0;
  for (int i = 0; i < 1000; ++i) {
    const Segment a = sampler.sample(e), b = sampler.sample(e), c = sampler.sample(e);
    if (skorohod_upper(a, b) > sup_distance(a, b)) ++bad_order;
    if (skorohod_upper(a, a) != 0.0 || sup_distance(a, a) != 0.0) ++bad_zero;
    if (sup_distance(a, c) > sup_distance(a, b) + sup_distance(b, c) + 1e-12) ++bad_triangle;
  }
  return {bad_order + bad_zero + bad_triangle == 0,
          "violations: ordering " + std::to_string(bad_order) + ", identity " + std::to_string(bad_zero) +
              ", triangle " + std::to_string(bad_triangle) + " (1000 pairs and triples)"};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  std::vector<int> only;
  app.add_option("--only", only, "Run only these criteria (1-10)");
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"deterministic coupling oracle", deterministic_coupling},
      {"stochastic contraction", stochastic_contraction},
      {"KL and reweighting", kl_chain},
      {"jump statistics and conditioning", jump_statistics},
      {"lambda monotonicity", lambda_monotonicity},
      {"stationary variance", stationary_variance},
      {"transport exactness", transport_exactness},
      {"rate formula", rate_formula},
      {"headline ergodicity report", headline_report},
      {"metric sanity", metric_sanity},
  };

  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const int id = static_cast<int>(k) + 1;
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::printf("[%s] %2d %s: %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", id, criteria[k].first.c_str(),
                o.detail.c_str(), seconds_since(t0));
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
