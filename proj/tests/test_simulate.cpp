#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "ergo/error.hpp"
#include "ergo/model.hpp"
#include "ergo/simulate.hpp"
#include "ergo/stats.hpp"

using namespace ergo;

namespace {

ModelSpec ou(double a, double sigma0, double rate, double c_scale = 1.0,
             MarkLaw mark = MarkLaw::atom(1.0), double gamma0 = 1.0) {
  BuiltinParams p;
  p.a = a;
  p.sigma0 = sigma0;
  p.jump_rate = rate;
  p.c_scale = c_scale;
  p.mark = mark;
  p.gamma0 = gamma0;
  p.relaxed = true;
  return make_builtin(BuiltinKind::ou_jump, p);
}

double terminal(const Trajectory& t) { return t.path.state()[0]; }

}  // namespace

TEST(JumpStream, ZeroRateIsEmpty) {
  const auto s = sample_jump_stream(0.0, 10.0, 1, 0, nullptr);
  EXPECT_TRUE(s.times.empty());
}

TEST(JumpStream, PoissonCountMoments) {
  stats::Moments counts;
  for (std::uint64_t i = 0; i < 100000; ++i)
    counts.add(static_cast<double>(sample_jump_stream(2.0, 1.0, 77, i, nullptr).times.size()));
  EXPECT_NEAR(counts.mean(), 2.0, 0.02);
  EXPECT_NEAR(counts.variance(), 2.0, 0.04);
}

TEST(JumpStream, Deterministic) {
  const auto law = MarkLaw::normal(0.0, 1.0);
  auto sampler = [law](rng::Engine& e) { return law.sample(e); };
  const auto a = sample_jump_stream(3.0, 5.0, 5, 9, sampler);
  const auto b = sample_jump_stream(3.0, 5.0, 5, 9, sampler);
  EXPECT_EQ(a.times, b.times);
  EXPECT_EQ(a.marks, b.marks);
  for (std::size_t i = 1; i < a.times.size(); ++i) EXPECT_GT(a.times[i], a.times[i - 1]);
}

TEST(Simulate, ZeroDynamicsKeepsInitialValue) {
  ModelSpec m;
  m.drift = [](const SegmentView&, std::span<double> o) { o[0] = 0.0; };
  m.diffusion = [](const SegmentView&, std::span<double> o) { o[0] = 0.0; };
  m.jump_coeff = [](const SegmentView&) { return 0.0; };
  m.c_moment1 = {0.0};
  validate_model(m);
  const Segment xi = Segment::sampled(1.0, 0.1, [](double t) { return std::sin(5 * t) + 0.7; });
  const Trajectory tr = simulate(m, xi, {0.01, 3.0, 1, 0});
  for (double t : {0.0, 0.5, 1.0, 2.5, 3.0}) EXPECT_EQ(segment_at(tr, t).at(0.0)[0], 0.7);
}

TEST(Simulate, NoiseFreeOuMatchesExponential) {
  const ModelSpec m = ou(1.0, 0.0, 0.0);
  const double dt = 1e-3;
  const Trajectory tr = simulate(m, Segment::constant(1.0, 1.0), {dt, 1.0, 3, 0});
  EXPECT_NEAR(terminal(tr), std::exp(-1.0), 5 * dt);
  EXPECT_NEAR(tr.path.time(), 1.0, 1e-12);
}

TEST(Simulate, WeakOrderOne) {
  // Noise-free mean dynamics: the Euler bias halves with the step.
  const ModelSpec m = ou(1.0, 0.0, 0.0);
  auto bias = [&](double dt) {
    return terminal(simulate(m, Segment::constant(1.0, 1.0), {dt, 1.0, 0, 0})) - std::exp(-1.0);
  };
  const double ratio = bias(0.02) / bias(0.01);
  EXPECT_GE(ratio, 1.5);
  EXPECT_LE(ratio, 3.0);
}

TEST(Simulate, CompensatedJumpsAreMartingale) {
  const ModelSpec m = ou(0.0, 0.0, 1.0);
  for (double T : {0.5, 1.0, 2.0}) {
    stats::Moments x;
    for (std::uint64_t i = 0; i < 20000; ++i)
      x.add(terminal(simulate(m, Segment::constant(1.0, 0.0), {0.25, T, 21, i})));
    EXPECT_LT(std::fabs(x.mean()), 4.0 * x.stderr_of_mean()) << T;
  }
}

TEST(Simulate, EventCountsArePoisson) {
  const ModelSpec m = ou(1.0, 1.0, 1.5);
  stats::Moments n;
  for (std::uint64_t i = 0; i < 10000; ++i)
    n.add(static_cast<double>(simulate(m, Segment::constant(1.0, 0.0), {0.1, 2.0, 4, i}).events.size()));
  EXPECT_NEAR(n.mean(), 3.0, 4.0 * std::sqrt(3.0 / 10000));
  // Variance of the sample variance of a Poisson(3): (mu + 2 mu^2) / n.
  EXPECT_NEAR(n.variance(), 3.0, 4.0 * std::sqrt((3.0 + 18.0) / 10000));
}

TEST(Simulate, EventsMatchJumpStreamAndAreInPath) {
  const ModelSpec m = ou(1.0, 1.0, 3.0, 0.5, MarkLaw::normal(0.0, 1.0));
  const SimConfig cfg{0.05, 4.0, 8, 3};
  const Trajectory tr = simulate(m, Segment::constant(1.0, 0.0), cfg);
  const auto stream = sample_jump_stream(3.0, 4.0, 8, 3, m.mark_sampler);
  ASSERT_EQ(tr.events.size(), stream.times.size());
  const auto ts = tr.path.times();
  for (std::size_t i = 0; i < stream.times.size(); ++i) {
    EXPECT_EQ(tr.events[i].time, stream.times[i]);
    EXPECT_EQ(tr.events[i].mark, stream.marks[i]);
    const auto it = std::find(ts.begin(), ts.end(), stream.times[i]);
    ASSERT_NE(it, ts.end());
    const std::size_t k = static_cast<std::size_t>(it - ts.begin());
    EXPECT_TRUE(tr.path.jumps()[k]);
    EXPECT_DOUBLE_EQ(tr.path.states()[k] - tr.path.pre_states()[k], 0.5 * stream.marks[i]);
  }
  for (std::size_t i = 1; i < ts.size(); ++i) EXPECT_GT(ts[i], ts[i - 1]);
}

TEST(Simulate, BitIdenticalReruns) {
  const ModelSpec m = ou(1.0, 1.0, 2.0, 0.5, MarkLaw::normal(0.3, 1.0));
  const SimConfig cfg{0.01, 3.0, 99, 17};
  const Trajectory a = simulate(m, Segment::constant(1.0, 0.2), cfg);
  const Trajectory b = simulate(m, Segment::constant(1.0, 0.2), cfg);
  EXPECT_TRUE(std::equal(a.path.states().begin(), a.path.states().end(), b.path.states().begin(),
                         b.path.states().end()));
}

TEST(Simulate, SegmentAtInitialAndShifted) {
  const Segment xi = Segment::sampled(1.0, 0.01, [](double t) { return t; });
  const ModelSpec m = ou(0.0, 0.0, 0.0);
  const Trajectory tr = simulate(m, xi, {0.01, 1.0, 0, 0});
  EXPECT_TRUE(approx_equal(segment_at(tr, 0.0), xi, 0.0));
  EXPECT_THROW(segment_at(tr, 1.5), Error);
  EXPECT_THROW(segment_at(tr, -0.5), Error);
}

TEST(Simulate, SegmentAtCarriesJump) {
  // Deterministic path with a single jump at 0.5 built directly.
  PathHistory p(Segment::constant(1.0, 0.0));
  const double v0[1] = {1.0}, v1[1] = {2.0}, v2[1] = {3.0};
  p.append(0.5, v0);
  p.jump_last(v1);
  p.append(1.0, v2);
  const Trajectory tr{std::move(p), {}};
  const Segment s = segment_at(tr, 1.0);
  ASSERT_EQ(s.jump_indices().size(), 1u);
  const std::size_t j = s.jump_indices()[0];
  EXPECT_DOUBLE_EQ(s.grid()[j], -0.5);
  EXPECT_EQ(s.pre_value(j)[0], 1.0);
  EXPECT_EQ(s.value(j)[0], 2.0);
}

TEST(Simulate, DivergenceReportsTime) {
  ModelSpec m;
  m.drift = [](const SegmentView& v, std::span<double> o) { o[0] = v.current()[0] * v.current()[0]; };
  m.diffusion = [](const SegmentView&, std::span<double> o) { o[0] = 0.0; };
  m.jump_coeff = [](const SegmentView&) { return 0.0; };
  m.c_moment1 = {0.0};
  validate_model(m);
  try {
    simulate(m, Segment::constant(1.0, 10.0), {0.1, 100.0, 0, 0});
    FAIL();
  } catch (const DivergenceError& e) {
    EXPECT_GT(e.time(), 0.0);
    EXPECT_LT(e.time(), 100.0);
  }
}

TEST(Auxiliary, IdenticalWithoutJumps) {
  const ModelSpec m = ou(1.0, 1.0, 0.0);
  const SimConfig cfg{0.01, 2.0, 12, 4};
  const Trajectory a = simulate(m, Segment::constant(1.0, 1.0), cfg);
  const Trajectory b = simulate_auxiliary(m, Segment::constant(1.0, 1.0), cfg);
  EXPECT_TRUE(std::equal(a.path.states().begin(), a.path.states().end(), b.path.states().begin(),
                         b.path.states().end()));
}

TEST(Auxiliary, CompensatorOnlyOde) {
  const ModelSpec m = ou(1.0, 0.0, 1.0);
  const double dt = 1e-3;
  const Trajectory tr = simulate_auxiliary(m, Segment::constant(1.0, 0.0), {dt, 1.0, 0, 0});
  EXPECT_TRUE(tr.events.empty());
  EXPECT_NEAR(terminal(tr), -(1.0 - std::exp(-1.0)), 5 * dt);
}

TEST(Auxiliary, NoJumpLawMatchesAuxiliaryLaw) {
  const ModelSpec m = ou(1.0, 1.0, 0.5, 0.5);
  std::vector<double> no_jump, aux;
  for (std::uint64_t i = 0; no_jump.size() < 10000; ++i) {
    const Trajectory tr = simulate(m, Segment::constant(1.0, 1.0), {0.02, 1.0, 31, i});
    if (tr.events.empty()) no_jump.push_back(terminal(tr));
  }
  for (std::uint64_t i = 0; i < 10000; ++i)
    aux.push_back(terminal(
        simulate_auxiliary(m, Segment::constant(1.0, 1.0), {0.02, 1.0, 31, 1'000'000 + i})));
  EXPECT_GT(stats::ks_two_sample(no_jump, aux).p_value, 0.01);
}

TEST(Streaming, MatchesFullSimulation) {
  const ModelSpec m = ou(1.0, 1.0, 2.0, 0.5);
  const SimConfig cfg{0.01, 6.0, 3, 2};
  const Trajectory full = simulate(m, Segment::constant(1.0, 1.0), cfg);
  const std::vector<double> times{0.0, 1.0, 2.345, 6.0};
  std::vector<Segment> seen;
  simulate_streaming(m, Segment::constant(1.0, 1.0), cfg, times,
                     [&](std::size_t i, const EulerProcess& p) {
                       seen.push_back(p.history().view_at(times[i]).to_segment());
                     });
  ASSERT_EQ(seen.size(), times.size());
  for (std::size_t i = 0; i < times.size(); ++i)
    EXPECT_TRUE(approx_equal(seen[i], segment_at(full, times[i]), 0.0)) << times[i];
}

TEST(LinearJumpOu, NoJumpsFollowsCompensator) {
  LinearJumpOuConfig spec;
  spec.rate = 0.7;
  spec.h = {JumpKernel::Kind::constant, 2.0};
  const double lambda = 3.0;
  // Find a path with an empty stream on [0, 1].
  std::uint64_t idx = 0;
  while (!sample_jump_stream(0.7, 1.0, 5, idx, nullptr).times.empty()) ++idx;
  const auto y = simulate_linear_jump_ou(lambda, spec, {0.01, 1.0, 5, idx});
  for (double t : {0.25, 0.5, 1.0}) {
    const double expect = -2.0 * 0.7 * (1.0 - std::exp(-lambda * t)) / lambda;
    EXPECT_NEAR(y.traj.path.view_at(t).current()[0], expect, 1e-12);
  }
  EXPECT_NEAR(y.sup_abs, 2.0 * 0.7 * (1.0 - std::exp(-lambda)) / lambda, 1e-12);
}

TEST(LinearJumpOu, SingleJumpClosedForm) {
  LinearJumpOuConfig spec;
  spec.rate = 0.4;
  spec.mark = MarkLaw::normal(0.5, 1.0);
  spec.h = {JumpKernel::Kind::mark, 0.0};
  std::uint64_t idx = 0;
  JumpStream s;
  while ((s = sample_jump_stream(0.4, 1.0, 6, idx, [&](rng::Engine& e) { return spec.mark.sample(e); }))
             .times.size() != 1)
    ++idx;
  const double lambda = 2.0, sj = s.times[0], z = s.marks[0], r1 = 0.4 * 0.5;
  const auto y = simulate_linear_jump_ou(lambda, spec, {0.01, 1.0, 6, idx});
  const double t = 1.0;
  const double expect = z * std::exp(-lambda * (t - sj)) - r1 * (1.0 - std::exp(-lambda * t)) / lambda;
  EXPECT_NEAR(y.traj.path.state()[0], expect, 1e-12);
  EXPECT_THROW(simulate_linear_jump_ou(0.0, spec, {0.01, 1.0, 6, idx}), Error);
}

TEST(LinearJumpOu, SupMomentDecreasesInLambda) {
  LinearJumpOuConfig spec;
  spec.rate = 1.0;
  spec.mark = MarkLaw::normal(0.0, 1.0);
  spec.h = {JumpKernel::Kind::mark, 0.0};
  std::vector<std::vector<double>> sq;
  for (double lambda : {1.0, 4.0, 16.0, 64.0}) {
    sq.emplace_back();
    for (std::uint64_t i = 0; i < 4000; ++i) {
      const double s = simulate_linear_jump_ou(lambda, spec, {0.01, 1.0, 13, i}).sup_abs;
      sq.back().push_back(s * s);
    }
  }
  for (std::size_t k = 0; k + 1 < sq.size(); ++k) {
    const auto d = stats::paired_difference(sq[k], sq[k + 1]);
    EXPECT_GT(d.mean, 2.0 * d.stderr) << k;
  }
}

TEST(SupMoment, ConstantAndIdenticalPaths) {
  ModelSpec m;
  m.drift = [](const SegmentView&, std::span<double> o) { o[0] = 0.0; };
  m.diffusion = [](const SegmentView&, std::span<double> o) { o[0] = 0.0; };
  m.jump_coeff = [](const SegmentView&) { return 0.0; };
  m.c_moment1 = {0.0};
  validate_model(m);
  std::vector<Trajectory> batch;
  batch.push_back(simulate(m, Segment::constant(1.0, -1.5), {0.1, 2.0, 0, 0}));
  batch.push_back(simulate(m, Segment::constant(1.0, -1.5), {0.1, 2.0, 0, 1}));
  const auto e = sup_moment_estimate(batch, 3.0, 0.0, 2.0);
  EXPECT_DOUBLE_EQ(e.mean, 3.375);
  EXPECT_EQ(e.stderr, 0.0);
  EXPECT_THROW(sup_moment_estimate({}, 2.0, 0.0, 1.0), Error);
}
