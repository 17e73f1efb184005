#include <gtest/gtest.h>

#include <cmath>

#include "ergo/ergodicity.hpp"
#include "ergo/error.hpp"

using namespace ergo;

namespace {

ModelSpec ou(double a = 1.0, double sigma0 = 1.0, double rate = 1.0, double c_scale = 0.5) {
  BuiltinParams p;
  p.a = a;
  p.sigma0 = sigma0;
  p.jump_rate = rate;
  p.c_scale = c_scale;
  p.relaxed = true;
  return make_builtin(BuiltinKind::ou_jump, p);
}

ModelSpec still() { return ou(0.0, 0.0, 0.0); }

}  // namespace

TEST(Rate, ZeroTimeUsesLowerLimit) {
  const Segment xi = Segment::constant(1.0, 3.0);
  for (const char* name : {"linear", "sqrt"}) {
    const RatePolicy p = RatePolicy::builtin(name, LyapunovV::current_sq, 0.5, 2.0, 1.0);
    const double expect = 2.0 * (1.0 + std::pow(p.f(9.0), 0.5)) / std::pow(p.f(1.0), 0.5);
    EXPECT_NEAR(rate_bound(p, xi, 0.0), expect, 1e-14);
  }
}

TEST(Rate, LinearPolicyIsExponential) {
  const RatePolicy p = RatePolicy::builtin("linear", LyapunovV::current_sq, 0.5, 1.5, 0.7);
  const Segment xi = Segment::constant(1.0, 2.0);
  double prev = INFINITY;
  for (double t = 0.0; t <= 50.0; t += 0.5) {
    const double closed = 1.5 * (1.0 + std::pow(4.0, 0.5)) * std::exp(-0.5 * 0.7 * t);
    const double b = rate_bound(p, xi, t);
    EXPECT_NEAR(b / closed, 1.0, 1e-8) << t;
    EXPECT_LE(b, prev);
    prev = b;
  }
}

TEST(Rate, SqrtPolicyIsPolynomial) {
  const RatePolicy p = RatePolicy::builtin("sqrt", LyapunovV::sup_sq, 0.5, 1.0, 2.0);
  const Segment xi = Segment::constant(1.0, 2.0);
  double prev = INFINITY;
  for (double t = 0.0; t <= 50.0; t += 0.5) {
    // F(x) = 2 (sqrt x - 1), F^{-1}(s) = (1 + s/2)^2, f(F^{-1}) = 1 + s/2.
    const double closed = (1.0 + std::pow(2.0, 0.5)) / std::pow(1.0 + 2.0 * t / 2.0, 0.5);
    const double b = rate_bound(p, xi, t);
    EXPECT_NEAR(b / closed, 1.0, 1e-8) << t;
    EXPECT_LE(b, prev);
    prev = b;
  }
}

TEST(Rate, InverseRoundTrip) {
  for (const char* name : {"linear", "sqrt"}) {
    const RatePolicy p = RatePolicy::builtin(name);
    for (double s = 0.0; s <= 100.0; s += 2.5)
      EXPECT_NEAR(rate_F(p, rate_F_inverse(p, s)), s, 1e-8) << name << " " << s;
  }
  const RatePolicy lin = RatePolicy::builtin("linear");
  EXPECT_NEAR(rate_F(lin, 0.25), std::log(0.25), 1e-13);
}

TEST(Rate, PolicyValidation) {
  EXPECT_THROW(validate_policy(RatePolicy::builtin("saturating")), Error);
  RatePolicy p = RatePolicy::builtin("linear");
  p.delta = 1.0;
  EXPECT_THROW(validate_policy(p), Error);
  p = RatePolicy::builtin("linear");
  p.f = [](double u) { return u + 1.0; };
  EXPECT_THROW(validate_policy(p), Error);
  p.f = [](double u) { return -u; };
  EXPECT_THROW(validate_policy(p), Error);
  EXPECT_THROW(RatePolicy::builtin("cubic"), Error);
  try {
    validate_policy(RatePolicy::builtin("saturating"));
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::invalid_policy);
  }
}

TEST(Drift, ZeroDynamicsNeedsKAboveF) {
  const ModelSpec m = still();
  const std::vector<Segment> probes{Segment::constant(1.0, 2.0)};
  const std::vector<double> ts{0.5, 1.0};
  RatePolicy p = RatePolicy::builtin("linear");
  p.K = 4.0;
  const DriftReport ok = lyapunov_drift_check(m, p, probes, ts, 4, 5, {0.01, 1.0, 0, 0});
  EXPECT_TRUE(ok.pass);
  EXPECT_DOUBLE_EQ(ok.points[1].PtV, 4.0);
  EXPECT_NEAR(ok.points[1].integral, 4.0, 1e-12);
  p.K = 3.9;
  EXPECT_FALSE(lyapunov_drift_check(m, p, probes, ts, 4, 5, {0.01, 1.0, 0, 0}).pass);
}

TEST(Drift, OuJumpSatisfiesInequality) {
  const ModelSpec m = ou();
  EXPECT_DOUBLE_EQ(m.lyapunov_K, 1.25);
  const std::vector<Segment> probes{Segment::constant(1.0, 0.0), Segment::constant(1.0, 2.0)};
  const std::vector<double> ts{0.5, 1.0, 2.0};
  const DriftReport r =
      lyapunov_drift_check(m, RatePolicy::builtin("linear"), probes, ts, 20, 100, {0.01, 2.0, 1, 0});
  EXPECT_TRUE(r.pass);
  EXPECT_EQ(r.points.size(), 6u);
}

TEST(Drift, ExplosiveModelFails) {
  const ModelSpec m = ou(-0.5);
  const std::vector<Segment> probes{Segment::constant(1.0, 2.0)};
  const std::vector<double> ts{1.0, 2.0};
  const DriftReport r =
      lyapunov_drift_check(m, RatePolicy::builtin("linear"), probes, ts, 20, 50, {0.01, 2.0, 1, 0});
  EXPECT_FALSE(r.pass);
  const std::vector<double> late{3.0};
  EXPECT_THROW(lyapunov_drift_check(m, RatePolicy::builtin("linear"), probes, late, 2, 2,
                                    {0.01, 3.0, 1, 0}),
               Error);
}

TEST(Support, NoJumpFractionAndOrdering) {
  const ModelSpec m = ou(1.0, 1.0, 1.0);
  const SupportReport r = support_check(m, 2.0, 1.0, 2.0, 10000, {0.02, 2.0, 3, 0});
  ASSERT_EQ(r.probes.size(), 5u);
  for (const auto& p : r.probes) {
    EXPECT_TRUE(p.pass_no_jump) << p.p_no_jump;
    EXPECT_TRUE(p.pass_ordering);
    EXPECT_NEAR(p.no_jump_expected, std::exp(-2.0), 1e-15);
  }
  EXPECT_EQ(r.verdict, Verdict::pass);
}

TEST(Support, NoJumpsMakesFullEqualAux) {
  const ModelSpec m = ou(1.0, 1.0, 0.0);
  const SupportReport r = support_check(m, 1.0, 0.8, 1.0, 2000, {0.02, 1.0, 3, 0});
  for (const auto& p : r.probes) {
    EXPECT_EQ(p.hits_full, p.hits_aux);
    EXPECT_EQ(p.no_jump, p.n);
  }
}

TEST(Support, EmptyBallIsInconclusive) {
  const ModelSpec m = ou(1.0, 1.0, 1.0);
  const SupportReport r = support_check(m, 1.0, 1e-3, 1.0, 200, {0.02, 1.0, 3, 0});
  EXPECT_EQ(r.verdict, Verdict::inconclusive);
  EXPECT_GT(r.probes[0].cp_aux.upper, 0.0);
}

TEST(MomentBound, ZeroDynamicsAtZero) {
  const std::vector<double> x0{0.0};
  const MomentReport r = moment_bound_check(still(), x0, 10, {0.01, 1.0, 0, 0});
  EXPECT_EQ(r.probes[0].sup_sq.mean, 0.0);
  EXPECT_TRUE(r.pass);
}

TEST(MomentBound, GrowthIsAtMostQuadratic) {
  const std::vector<double> x0{0, 1, 2, 4, 8};
  const MomentReport r = moment_bound_check(ou(), x0, 2000, {0.01, 1.0, 4, 0});
  EXPECT_TRUE(r.pass);
  EXPECT_LE(r.exponent, 1.1);
  EXPECT_GT(r.linear_slope, 0.0);
  for (const auto& p : r.probes) EXPECT_TRUE(p.chebyshev_holds);
}

TEST(ConditionC2, SupBallCertified) {
  const C2Report r = condition_c2_report(ou(), 1.0, 2.0, 2.0, 2000, {0.01, 2.0, 5, 0});
  EXPECT_EQ(r.verdict, Verdict::pass);
  EXPECT_DOUBLE_EQ(r.D_diameter, 2.0);
  EXPECT_GT(r.min_lower, 0.0);
  EXPECT_EQ(r.probes.size(), 7u);
}

TEST(ConditionC2, ChainedCaseMultipliesFactors) {
  C2Options o;
  o.mode = C2Case::current_ball;
  const C2Report r = condition_c2_report(ou(), 1.0, 2.0, 3.0, 2000, {0.01, 3.0, 5, 0}, o);
  EXPECT_GT(r.factor1_lower, 0.5);
  EXPECT_GT(r.factor2_lower, 0.0);
  EXPECT_DOUBLE_EQ(r.product_lower, r.factor1_lower * r.factor2_lower);
  EXPECT_EQ(r.verdict, Verdict::pass);
  EXPECT_THROW(condition_c2_report(ou(), 1.0, 2.0, 1.5, 10, {0.01, 2.0, 5, 0}, o), Error);
}

TEST(ConditionC2, HigherJumpRateLowersProbability) {
  double prev = 2.0;
  for (double rate : {0.5, 1.0, 2.0}) {
    const C2Report r = condition_c2_report(ou(1.0, 0.5, rate, 2.0), 1.0, 2.0, 2.0, 4000,
                                           {0.01, 2.0, 6, 0});
    EXPECT_LT(r.min_lower, prev) << rate;
    prev = r.min_lower;
  }
}

TEST(Report, NegativeControlFails) {
  ReportConfig cfg;
  cfg.sim = {0.01, 1.0, 7, 0};
  cfg.c1_paths = 200;
  cfg.decay_times = {1, 2, 3};
  cfg.sampled_pairs = 0;
  cfg.c2_paths = 200;
  cfg.drift_outer = 10;
  cfg.drift_inner = 20;
  cfg.w_times = {1, 2, 3};
  cfg.w_samples = 32;
  cfg.w.bootstrap = 10;
  cfg.w.reference_time = 6.0;
  const ErgodicityReport r = ergodicity_report(ou(-0.5), cfg, "digest");
  EXPECT_EQ(r.lyapunov_verdict, Verdict::fail);
  EXPECT_EQ(r.verdict, Verdict::fail);
  const auto j = to_json(r);
  EXPECT_EQ(j["verdict"], "fail");
  EXPECT_EQ(j["config_digest"], "digest");
  for (const char* key : {"model", "c1", "c2", "lyapunov", "wasserstein"})
    EXPECT_TRUE(j.contains(key)) << key;
}

TEST(Report, PureDiffusionPipelineRuns) {
  ReportConfig cfg;
  cfg.sim = {0.01, 1.0, 8, 0};
  cfg.c1_paths = 200;
  cfg.decay_times = {1, 2, 3};
  cfg.sampled_pairs = 0;
  cfg.c2_paths = 200;
  cfg.drift_outer = 10;
  cfg.drift_inner = 20;
  cfg.w_times = {1, 2, 3};
  cfg.w_samples = 32;
  cfg.w.bootstrap = 10;
  cfg.w.reference_time = 6.0;
  const ErgodicityReport r = ergodicity_report(ou(1.0, 1.0, 0.0), cfg);
  EXPECT_NE(r.verdict, Verdict::fail);
  EXPECT_EQ(r.wasserstein.pair.points.size(), 3u);
}
