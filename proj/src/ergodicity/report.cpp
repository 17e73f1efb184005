#include <cmath>

#include "ergo/ergodicity.hpp"
#include "ergo/error.hpp"

namespace ergo {

namespace {

using json = nlohmann::ordered_json;

bool reference_ok(const MarginalCurve& c, const TrendTest& t) {
  const auto& a = c.points.front();
  const auto& b = c.points.back();
  const double band = 4.0 * std::hypot(a.stderr_boot, b.stderr_boot);
  return !(t.slope > 0.0 && t.z > 3.0) && b.w_upper <= a.w_upper + band;
}

TrendTest safe_trend(const MarginalCurve& c, bool& ok) {
  try {
    return trend_test(c);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::degenerate_fit) throw;
    ok = false;
    return {};
  }
}

json stats_json(const stats::MeanEstimate& m) {
  return {{"mean", m.mean}, {"stderr", m.stderr}, {"n", m.n}};
}

}  // namespace

ErgodicityReport ergodicity_report(const ModelSpec& model, const ReportConfig& cfg,
                                   const std::string& config_digest) {
  ErgodicityReport rep;
  rep.model = model.name;
  rep.config_digest = config_digest;

  // C1 on the headline pair plus sampled pairs.
  std::vector<std::pair<Segment, Segment>> pairs{{cfg.xi, cfg.eta}};
  SegmentSampler sampler{model.tau, model.n, 0.05, 2.0};
  rng::Engine eng({rng::derive_seed(cfg.sim.master_seed, 5), 1, rng::Substream::sampler});
  for (std::size_t i = 0; i < cfg.sampled_pairs; ++i) pairs.push_back(sampler.sample_pair(eng));
  C1Options c1o;
  c1o.lambda = cfg.lambda;
  c1o.lambda_max = cfg.lambda_max;
  rep.c1 = condition_c1_report(model, pairs, cfg.alpha, cfg.decay_times, cfg.c1_paths, cfg.sim, c1o);
  rep.c1_verdict = rep.c1.verdict;

  rep.c2 = condition_c2_report(model, cfg.c2_M, cfg.c2_epsilon, cfg.c2_t0, cfg.c2_paths, cfg.sim,
                               cfg.c2);
  rep.c2_verdict = rep.c2.verdict;

  std::vector<Segment> probes;
  for (double v : cfg.drift_probe_values)
    probes.push_back(Segment::constant(model.tau, std::vector<double>(model.n, v)));
  rep.lyapunov = lyapunov_drift_check(model, cfg.policy, probes, cfg.drift_times, cfg.drift_outer,
                                      cfg.drift_inner, cfg.sim);
  rep.lyapunov_verdict = rep.lyapunov.pass ? Verdict::pass : Verdict::fail;

  auto& w = rep.wasserstein;
  MarginalOptions po = cfg.w;
  po.reference = false;
  w.pair = wasserstein_time_marginals(model, cfg.xi, cfg.eta, cfg.w_times, cfg.w_samples, cfg.sim, po);
  MarginalOptions ro = cfg.w;
  ro.reference = true;
  ro.reference_start = cfg.xi;
  w.ref_xi = wasserstein_time_marginals(model, cfg.xi, cfg.xi, cfg.w_times, cfg.w_samples, cfg.sim, ro);
  w.ref_eta =
      wasserstein_time_marginals(model, cfg.eta, cfg.eta, cfg.w_times, cfg.w_samples, cfg.sim, ro);

  bool fit_ok = true;
  w.pair_trend = safe_trend(w.pair, fit_ok);
  w.ref_xi_trend = safe_trend(w.ref_xi, fit_ok);
  w.ref_eta_trend = safe_trend(w.ref_eta, fit_ok);
  // Any curve pinned at the cap carries no information about convergence.
  const auto at_cap = [](const MarginalCurve& c) {
    return std::all_of(c.points.begin(), c.points.end(),
                       [](const MarginalPoint& p) { return p.w_upper >= 1.0 - 1e-12; });
  };
  w.saturated = at_cap(w.pair) || at_cap(w.ref_xi) || at_cap(w.ref_eta);
  const auto& a = w.ref_xi.points.back();
  const auto& b = w.ref_eta.points.back();
  w.uniqueness = std::fabs(a.w_upper - b.w_upper) <= 4.0 * std::hypot(a.stderr_boot, b.stderr_boot) + 0.01;

  const bool pair_up = w.pair_trend.slope > 0.0 && w.pair_trend.z > 3.0;
  const bool refs_ok = reference_ok(w.ref_xi, w.ref_xi_trend) && reference_ok(w.ref_eta, w.ref_eta_trend);
  if (w.saturated || pair_up || !refs_ok || !w.uniqueness)
    w.verdict = Verdict::fail;
  else if (fit_ok && w.pair_trend.decreasing)
    w.verdict = Verdict::pass;
  else
    w.verdict = Verdict::inconclusive;

  rep.verdict = combine({rep.c1_verdict, rep.c2_verdict, rep.lyapunov_verdict, w.verdict});
  return rep;
}

// ---------------------------------------------------------------------------
// JSON

json to_json(const DecayFit& d) {
  json j{{"alpha", d.alpha_target},
         {"lambda", d.lambda_used},
         {"kappa", d.kappa},
         {"K_prime", d.K_prime},
         {"gap0", d.gap0},
         {"times", d.times},
         {"mean_sq", d.mean_sq},
         {"mean_sq_stderr", d.mean_sq_stderr},
         {"mean_gap", d.mean_gap},
         {"mean_gap_stderr", d.mean_gap_stderr},
         {"bound", d.bound},
         {"fitted_slope", d.fitted_slope},
         {"fitted_intercept", d.fitted_intercept},
         {"slope_stderr", d.slope_stderr},
         {"prefactor", d.theoretical_prefactor},
         {"pass_slope", d.pass_slope},
         {"pass_prefactor", d.pass_prefactor},
         {"n_paths", d.n_paths}};
  if (d.kl) j["kl"] = stats_json(*d.kl);
  return j;
}

json to_json(const C1Report& r) {
  json pairs = json::array();
  for (const auto& p : r.pairs) {
    json k{{"kl", p.kl.kl},
           {"kl_stderr", p.kl.kl_stderr},
           {"tv_bound", p.kl.tv_bound},
           {"constant_bound", p.kl.constant_bound},
           {"horizon", p.kl.horizon},
           {"n", p.kl.n}};
    pairs.push_back({{"decay", to_json(p.decay)},
                     {"kl", p.kl_available ? k : json(nullptr)},
                     {"pass_first_moment", p.pass_first_moment},
                     {"pass_kl", p.pass_kl},
                     {"pass", p.pass}});
  }
  return {{"alpha", r.alpha}, {"pairs", pairs}, {"verdict", to_string(r.verdict)}};
}

json to_json(const MomentReport& r) {
  json probes = json::array();
  for (const auto& p : r.probes)
    probes.push_back({{"x0", p.x0},
                      {"sup_sq", stats_json(p.sup_sq)},
                      {"chebyshev_L", p.chebyshev_L},
                      {"p_within_L", p.p_within_L},
                      {"chebyshev_holds", p.chebyshev_holds}});
  return {{"probes", probes},
          {"exponent", r.exponent},
          {"exponent_stderr", r.exponent_stderr},
          {"linear_slope", r.linear_slope},
          {"linear_intercept", r.linear_intercept},
          {"finite", r.finite},
          {"pass", r.pass}};
}

json to_json(const C2Report& r) {
  json probes = json::array();
  for (const auto& p : r.probes)
    probes.push_back({{"sup_norm", p.sup_norm},
                      {"hits", p.hits},
                      {"n", p.n},
                      {"p", p.p},
                      {"cp_lower", p.cp.lower},
                      {"cp_upper", p.cp.upper}});
  json j{{"case", r.mode == C2Case::sup_ball ? "sup_ball" : "current_ball"},
         {"M", r.M},
         {"epsilon", r.epsilon},
         {"t0", r.t0},
         {"D_radius", r.D_radius},
         {"D_diameter", r.D_diameter},
         {"probes", probes},
         {"min_lower", r.min_lower},
         {"product_lower", r.product_lower},
         {"verdict", to_string(r.verdict)}};
  if (r.mode == C2Case::current_ball) {
    j["L"] = r.L;
    j["factor1_lower"] = r.factor1_lower;
    j["factor2_lower"] = r.factor2_lower;
    if (r.moments) j["moments"] = to_json(*r.moments);
  }
  return j;
}

json to_json(const DriftReport& r) {
  json pts = json::array();
  for (const auto& p : r.points)
    pts.push_back({{"probe", p.probe},
                   {"t", p.t},
                   {"PtV", p.PtV},
                   {"integral", p.integral},
                   {"V0", p.V0},
                   {"excess", p.excess},
                   {"excess_stderr", p.excess_stderr},
                   {"pass", p.pass}});
  return {{"K", r.K}, {"points", pts}, {"diverged", r.diverged}, {"pass", r.pass}};
}

json to_json(const SupportReport& r) {
  json probes = json::array();
  for (const auto& p : r.probes)
    probes.push_back({{"sup_norm", p.sup_norm},
                      {"n", p.n},
                      {"p_full", p.p_full},
                      {"p_aux", p.p_aux},
                      {"p_no_jump", p.p_no_jump},
                      {"no_jump_expected", p.no_jump_expected},
                      {"no_jump_z", p.no_jump_z},
                      {"ordering_margin", p.ordering_margin},
                      {"cp_aux", {p.cp_aux.lower, p.cp_aux.upper}},
                      {"cp_full", {p.cp_full.lower, p.cp_full.upper}},
                      {"pass_ordering", p.pass_ordering},
                      {"pass_no_jump", p.pass_no_jump},
                      {"inconclusive", p.inconclusive}});
  return {{"R", r.R}, {"delta", r.delta}, {"t", r.t}, {"probes", probes},
          {"verdict", to_string(r.verdict)}};
}

json to_json(const MarginalCurve& c, const TrendTest& t) {
  json pts = json::array();
  for (const auto& p : c.points)
    pts.push_back({{"t", p.t},
                   {"w_upper", p.w_upper},
                   {"stderr_boot", p.stderr_boot},
                   {"n_samples", p.n_samples},
                   {"solver", to_string(p.solver)}});
  return {{"points", pts},
          {"slope", t.slope},
          {"intercept", t.intercept},
          {"slope_stderr", t.slope_stderr},
          {"z", t.z},
          {"decreasing", t.decreasing},
          {"final_below_initial", t.final_below_initial}};
}

json to_json(const WassersteinSection& w) {
  return {{"pair", to_json(w.pair, w.pair_trend)},
          {"reference_xi", to_json(w.ref_xi, w.ref_xi_trend)},
          {"reference_eta", to_json(w.ref_eta, w.ref_eta_trend)},
          {"saturated", w.saturated},
          {"uniqueness", w.uniqueness},
          {"verdict", to_string(w.verdict)}};
}

json to_json(const ErgodicityReport& r) {
  json c2 = to_json(r.c2);
  json ly = to_json(r.lyapunov);
  ly["verdict"] = to_string(r.lyapunov_verdict);
  return {{"model", r.model},
          {"config_digest", r.config_digest},
          {"c1", to_json(r.c1)},
          {"c2", c2},
          {"lyapunov", ly},
          {"wasserstein", to_json(r.wasserstein)},
          {"verdict", to_string(r.verdict)}};
}

}  // namespace ergo
