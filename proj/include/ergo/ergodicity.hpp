#pragma once

// Rate bound for subgeometric Lyapunov policies, Monte Carlo checks of the
// drift inequality, support and moment probes, the small-set condition, and
// the assembled ergodicity report.

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "ergo/coupling.hpp"
#include "ergo/model.hpp"
#include "ergo/simulate.hpp"
#include "ergo/transport.hpp"
#include "ergo/verdict.hpp"

namespace ergo {

enum class LyapunovV { current_sq, sup_sq };

struct RatePolicy {
  std::string f_name = "linear";
  std::function<double(double)> f;
  LyapunovV V = LyapunovV::current_sq;
  double delta = 0.5;
  double C1 = 1.0;
  double C2 = 1.0;
  /// Constant of the drift inequality; nullopt takes the model's value.
  std::optional<double> K;

  /// "linear" (u), "sqrt" (sqrt u), "saturating" (u / (1 + u), rejected by
  /// validate_policy).
  static RatePolicy builtin(const std::string& f_name, LyapunovV V = LyapunovV::current_sq,
                            double delta = 0.5, double C1 = 1.0, double C2 = 1.0);

  double value(const SegmentView& s) const noexcept;
  double value(const Segment& s) const noexcept { return value(s.view()); }
};

const char* to_string(LyapunovV v) noexcept;

/// f(0) = 0, f increasing on a probe grid, f unbounded in the sense
/// f(1e8) >= 100 f(1), delta in (0, 1), C1 and C2 positive.
void validate_policy(const RatePolicy& p);

/// F(x) = int_1^x du / f(u), adaptive Gauss-Kronrod on dyadic pieces.
double rate_F(const RatePolicy& p, double x);
/// Inverse of F on [0, inf), relative tolerance 1e-12 in x.
double rate_F_inverse(const RatePolicy& p, double s);

/// C1 (1 + f(V(xi))^delta) / f(F^{-1}(C2 t))^delta.
double rate_bound(const RatePolicy& p, const Segment& xi, double t);

struct DriftPoint {
  std::size_t probe = 0;
  double t = 0.0;
  double PtV = 0.0;
  double integral = 0.0;  // int_0^t P_s (f o V) ds
  double V0 = 0.0;
  /// Mean of V(X_t) - V(xi) + int f(V) ds - K t and its standard error.
  double excess = 0.0;
  double excess_stderr = 0.0;
  bool pass = false;
};

struct DriftReport {
  double K = 0.0;
  std::vector<DriftPoint> points;
  bool diverged = false;
  bool pass = false;
};

/// Common random numbers across the time grid: each path contributes one
/// term per t. Standard errors come from n_outer batch means of n_inner
/// paths.
DriftReport lyapunov_drift_check(const ModelSpec& model, const RatePolicy& policy,
                                 std::span<const Segment> probes, std::span<const double> t_grid,
                                 std::size_t n_outer, std::size_t n_inner, const SimConfig& cfg);

struct SupportProbe {
  double sup_norm = 0.0;
  std::size_t n = 0;
  std::size_t hits_full = 0, hits_aux = 0, no_jump = 0;
  double p_full = 0.0, p_aux = 0.0, p_no_jump = 0.0;
  double no_jump_expected = 0.0;
  double no_jump_z = 0.0;
  double ordering_margin = 0.0;  // p_full - p_aux e^{-nu t} + 4 se
  stats::Interval cp_aux, cp_full;
  bool pass_ordering = false;
  bool pass_no_jump = false;
  bool inconclusive = false;  // no hits at budget
};

struct SupportReport {
  double R = 0.0, delta = 0.0, t = 0.0;
  std::vector<SupportProbe> probes;
  Verdict verdict = Verdict::inconclusive;
};

/// Probe segments in the sup-ball of radius R: the constants +R, -R, 0 and
/// `n_random` sampled segments rescaled into the ball.
std::vector<Segment> ball_probes(const ModelSpec& model, double R, std::size_t n_random,
                                 std::uint64_t seed, double dt);

SupportReport support_check(const ModelSpec& model, double R, double delta_ball, double t,
                            std::size_t n_paths, const SimConfig& cfg,
                            std::span<const Segment> probes = {});

struct MomentProbe {
  double x0 = 0.0;
  stats::MeanEstimate sup_sq;  // E sup_{0 <= s <= tau} |X(s)|^2
  double chebyshev_L = 0.0;    // sqrt(2 (mean + 4 se)) with a 1% margin
  std::size_t n = 0, within_L = 0;
  double p_within_L = 0.0;
  bool chebyshev_holds = false;
};

struct MomentReport {
  std::vector<MomentProbe> probes;
  double exponent = 0.0;  // slope of log E sup against log(1 + x0^2)
  double exponent_stderr = 0.0;
  double linear_slope = 0.0;
  double linear_intercept = 0.0;
  bool finite = true;
  bool pass = false;
};

/// Constant initial segments at the given |xi(0)| values.
MomentReport moment_bound_check(const ModelSpec& model, std::span<const double> x0,
                                std::size_t n_paths, const SimConfig& cfg);

enum class C2Case { sup_ball, current_ball };

struct C2ProbeResult {
  double sup_norm = 0.0;
  std::size_t hits = 0, n = 0;
  double p = 0.0;
  stats::Interval cp;
};

struct C2Report {
  C2Case mode = C2Case::sup_ball;
  double M = 0.0;
  double epsilon = 0.0;
  double t0 = 0.0;
  double D_radius = 0.0;     // epsilon / 2
  double D_diameter = 0.0;   // <= epsilon
  std::vector<C2ProbeResult> probes;  // the factor evaluated at t0 (case i) or t0 - tau (case ii)
  double min_lower = 0.0;
  // Chaining for case (ii).
  double L = 0.0;
  double factor1_lower = 0.0;
  double factor2_lower = 0.0;
  double product_lower = 0.0;
  std::optional<MomentReport> moments;
  Verdict verdict = Verdict::inconclusive;
};

struct C2Options {
  C2Case mode = C2Case::sup_ball;
  std::size_t n_random_probes = 4;
  double confidence = 0.95;
};

C2Report condition_c2_report(const ModelSpec& model, double M, double epsilon, double t0,
                             std::size_t n_paths, const SimConfig& cfg,
                             const C2Options& opts = {});

struct WassersteinSection {
  MarginalCurve pair;       // X^xi vs X^eta
  MarginalCurve ref_xi;     // X^xi vs reference ensemble
  MarginalCurve ref_eta;    // X^eta vs reference ensemble
  TrendTest pair_trend, ref_xi_trend, ref_eta_trend;
  bool saturated = false;   // some curve sits at the cap throughout
  bool uniqueness = false;  // terminal reference values within mutual bands
  Verdict verdict = Verdict::inconclusive;
};

struct ReportConfig {
  SimConfig sim;
  double alpha = 0.5;
  std::optional<double> lambda;
  double lambda_max = 1024.0;
  Segment xi = Segment::constant(1.0, 1.0);
  Segment eta = Segment::constant(1.0, 0.0);
  std::size_t sampled_pairs = 1;
  std::vector<double> decay_times{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  std::size_t c1_paths = 2000;

  double c2_M = 1.0;
  double c2_epsilon = 2.0;
  double c2_t0 = 2.0;
  std::size_t c2_paths = 2000;
  C2Options c2;

  RatePolicy policy = RatePolicy::builtin("linear");
  std::vector<double> drift_times{0.5, 1.0, 1.5, 2.0};
  std::vector<double> drift_probe_values{0.0, 1.0, -2.0};
  std::size_t drift_outer = 20;
  std::size_t drift_inner = 100;

  std::vector<double> w_times{1, 2, 3, 4, 5, 6};
  std::size_t w_samples = 128;
  MarginalOptions w;
};

struct ErgodicityReport {
  std::string model;
  std::string config_digest;
  C1Report c1;
  C2Report c2;
  DriftReport lyapunov;
  WassersteinSection wasserstein;
  Verdict c1_verdict = Verdict::inconclusive, c2_verdict = Verdict::inconclusive,
          lyapunov_verdict = Verdict::inconclusive;
  Verdict verdict = Verdict::inconclusive;
};

ErgodicityReport ergodicity_report(const ModelSpec& model, const ReportConfig& cfg,
                                   const std::string& config_digest = "");

nlohmann::ordered_json to_json(const DecayFit& d);
nlohmann::ordered_json to_json(const C1Report& r);
nlohmann::ordered_json to_json(const C2Report& r);
nlohmann::ordered_json to_json(const DriftReport& r);
nlohmann::ordered_json to_json(const SupportReport& r);
nlohmann::ordered_json to_json(const MomentReport& r);
nlohmann::ordered_json to_json(const MarginalCurve& c, const TrendTest& t);
nlohmann::ordered_json to_json(const WassersteinSection& w);
nlohmann::ordered_json to_json(const ErgodicityReport& r);

}  // namespace ergo
