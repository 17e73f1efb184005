#include <gtest/gtest.h>

#include <cmath>
#include <sstream>
#include <vector>

#include "ergo/error.hpp"
#include "ergo/rng.hpp"
#include "ergo/segment.hpp"

using namespace ergo;

namespace {

Segment unit_step(double at) {
  // 0 before `at`, 1 from `at` on, with the left limit recorded.
  return Segment(1.0, 1, {-1.0, at, 0.0}, {0.0, 1.0, 1.0}, {{1, {0.0}}});
}

// Random scalar segment with a few jumps on an irregular grid.
Segment random_segment(rng::Engine& e, double tau = 1.0) {
  const std::size_t n = 3 + static_cast<std::size_t>(rng::uniform01(e) * 12);
  std::vector<double> grid{-tau};
  for (std::size_t i = 1; i + 1 < n; ++i) grid.push_back(-tau + tau * rng::uniform01(e));
  grid.push_back(0.0);
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  std::vector<double> values;
  std::map<std::size_t, std::vector<double>> pre;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    values.push_back(rng::standard_normal(e));
    if (i > 0 && rng::uniform01(e) < 0.3) pre[i] = {rng::standard_normal(e)};
  }
  return Segment(tau, 1, grid, values, pre);
}

// Brute-force sup distance: evaluate both cadlag paths and their left limits
// on the union of grid points.
double brute_sup_distance(const Segment& a, const Segment& b) {
  std::vector<double> pts(a.grid());
  pts.insert(pts.end(), b.grid().begin(), b.grid().end());
  double m = 0.0;
  auto left = [](const Segment& s, double t) {
    for (std::size_t i = s.size(); i-- > 0;)
      if (s.grid()[i] == t) return s.pre_value(i)[0];
      else if (s.grid()[i] < t) return s.value(i)[0];
    return s.value(0)[0];
  };
  for (double t : pts) {
    m = std::max(m, std::fabs(a.at(t)[0] - b.at(t)[0]));
    m = std::max(m, std::fabs(left(a, t) - left(b, t)));
  }
  return m;
}

}  // namespace

TEST(Segment, RejectsInvalidGrids) {
  EXPECT_THROW(Segment(1.0, 1, {-1.0}, {0.0}), Error);
  EXPECT_THROW(Segment(1.0, 1, {-0.5, 0.0}, {0.0, 0.0}), Error);
  EXPECT_THROW(Segment(1.0, 1, {-1.0, -0.5, -0.5, 0.0}, {0, 0, 0, 0}), Error);
  EXPECT_THROW(Segment(1.0, 1, {-1.0, 0.0}, {0.0, NAN}), Error);
  EXPECT_THROW(Segment(1.0, 1, {-1.0, 0.0}, {0.0, 0.0}, {{0, {1.0}}}), Error);
  EXPECT_THROW(Segment(1.0, 1, {-1.0, 0.0}, {0.0}), Error);
}

TEST(Segment, GridStepsRequireDivisibility) {
  EXPECT_EQ(Segment::grid_steps(1.0, 0.1), 10u);
  EXPECT_EQ(Segment::grid_steps(0.3, 0.1), 3u);
  EXPECT_THROW(Segment::grid_steps(1.0, 0.3), Error);
  EXPECT_THROW(Segment::grid_steps(1.0, 2.0), Error);
}

TEST(Segment, CadlagLookup) {
  const Segment s = unit_step(-0.5);
  EXPECT_EQ(s.at(-0.75)[0], 0.0);
  EXPECT_EQ(s.at(-0.5)[0], 1.0);
  EXPECT_EQ(s.view(true).at(-0.5)[0], 0.0);
  EXPECT_EQ(s.at(0.0)[0], 1.0);
}

TEST(SupNorm, Examples) {
  EXPECT_EQ(sup_norm(Segment::constant(1.0, 0.0)), 0.0);
  EXPECT_EQ(sup_norm(Segment(1.0, 1, {-1.0, -0.5, 0.0}, {1.0, -2.0, 0.5})), 2.0);
  // Values all zero, one pre-jump value 3: a downward jump to 0.
  EXPECT_EQ(sup_norm(Segment(1.0, 1, {-1.0, -0.5, 0.0}, {0.0, 0.0, 0.0}, {{1, {3.0}}})), 3.0);
}

TEST(SupNorm, EuclideanInTwoDimensions) {
  const Segment s(1.0, 2, {-1.0, 0.0}, {3.0, 4.0, 0.0, 1.0});
  EXPECT_DOUBLE_EQ(sup_norm(s), 5.0);
}

TEST(SupDistance, Examples) {
  const Segment a = unit_step(-0.5);
  EXPECT_EQ(sup_distance(a, a), 0.0);
  EXPECT_EQ(sup_distance(Segment::constant(1.0, 1.0), Segment::constant(1.0, 1.25)), 0.25);
  EXPECT_EQ(sup_distance(unit_step(-0.5), unit_step(-0.4)), 1.0);
}

TEST(SupDistance, LeftLimitsCount) {
  // Same right-continuous values, different left limits at the shared point.
  const Segment a(1.0, 1, {-1.0, -0.5, 0.0}, {0.0, 1.0, 1.0}, {{1, {0.0}}});
  const Segment b(1.0, 1, {-1.0, -0.5, 0.0}, {0.0, 1.0, 1.0}, {{1, {0.4}}});
  EXPECT_DOUBLE_EQ(sup_distance(a, b), 0.4);
  const Segment c(1.0, 1, {-1.0, -0.25, 0.0}, {0.0, 1.0, 1.0});
  EXPECT_DOUBLE_EQ(sup_distance(a, c), 1.0);
}

TEST(SupDistance, MismatchedTau) {
  try {
    sup_distance(Segment::constant(1.0, 0.0), Segment::constant(2.0, 0.0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::dimension_mismatch);
  }
}

TEST(SupDistance, MatchesBruteForceAndMetricAxioms) {
  rng::Engine e({11, 0, rng::Substream::sampler});
  for (int trial = 0; trial < 1000; ++trial) {
    const Segment a = random_segment(e), b = random_segment(e), c = random_segment(e);
    const double ab = sup_distance(a, b);
    EXPECT_EQ(ab, brute_sup_distance(a, b));
    EXPECT_EQ(ab, sup_distance(b, a));
    EXPECT_EQ(sup_distance(a, a), 0.0);
    EXPECT_LE(sup_distance(a, c), ab + sup_distance(b, c) + 1e-15);
  }
}

TEST(SlotGrid, ManyMembersAgreeWithPairwise) {
  rng::Engine e({12, 0, rng::Substream::sampler});
  std::vector<Segment> segs;
  for (int i = 0; i < 6; ++i) segs.push_back(random_segment(e));
  std::vector<const Segment*> ptrs;
  for (const auto& s : segs) ptrs.push_back(&s);
  const SlotGrid grid = make_slot_grid(ptrs);
  std::vector<std::vector<double>> dense;
  for (const auto& s : segs) dense.push_back(densify(s, grid));
  for (std::size_t i = 0; i < segs.size(); ++i)
    for (std::size_t j = 0; j < segs.size(); ++j)
      EXPECT_EQ(slot_distance(dense[i], dense[j], 1, grid.slots), sup_distance(segs[i], segs[j]));
}

TEST(TimeChange, DistortionAndInverse) {
  const TimeChange l({-1.0, -0.5, 0.0}, {-1.0, -0.4, 0.0});
  EXPECT_NEAR(l.distortion(), std::log(1.25), 1e-15);
  EXPECT_DOUBLE_EQ(l(-0.5), -0.4);
  EXPECT_DOUBLE_EQ(l.inverse(-0.4), -0.5);
  EXPECT_DOUBLE_EQ(l.inverse(l(-0.8)), -0.8);
  EXPECT_EQ(TimeChange::identity(1.0).distortion(), 0.0);
  EXPECT_THROW(TimeChange({-1.0, -0.5, 0.0}, {-1.0, -1.0, 0.0}), Error);
}

TEST(Skorohod, IdenticalIsZero) {
  const Segment a = unit_step(-0.3);
  EXPECT_EQ(skorohod_upper(a, a), 0.0);
}

TEST(Skorohod, ShiftedStepsMatchTwoKnotBruteForce) {
  const Segment a = unit_step(-0.5), b = unit_step(-0.4);
  const double ours = skorohod_upper(a, b);
  EXPECT_NEAR(ours, std::log(1.25), 1e-12);

  double brute = sup_distance(a, b);
  const int steps = 40;
  for (int i1 = 1; i1 < steps; ++i1)
    for (int i2 = i1 + 1; i2 < steps; ++i2)
      for (int j1 = 1; j1 < steps; ++j1)
        for (int j2 = j1 + 1; j2 < steps; ++j2) {
          const double h = 1.0 / steps;
          const TimeChange l({-1.0, -1.0 + i1 * h, -1.0 + i2 * h, 0.0},
                             {-1.0, -1.0 + j1 * h, -1.0 + j2 * h, 0.0});
          brute = std::min(brute, l.distortion() + sup_distance(l.compose(a), b));
        }
  EXPECT_LE(ours, brute + 1e-12);
}

TEST(Skorohod, BoundedBySupAndSymmetric) {
  rng::Engine e({13, 0, rng::Substream::sampler});
  for (int trial = 0; trial < 1000; ++trial) {
    const Segment a = random_segment(e), b = random_segment(e);
    const double s = skorohod_upper(a, b);
    EXPECT_LE(s, sup_distance(a, b));
    EXPECT_GE(s, 0.0);
    EXPECT_EQ(s, skorohod_upper(b, a));
  }
}

TEST(SegmentCsv, RoundTrip) {
  const Segment s(1.0, 2, {-1.0, -0.3, 0.0}, {0.1, 0.2, 1.0 / 3.0, -2.0, 5.0, 6.0},
                  {{1, {7.0, 8.0}}});
  std::stringstream buf;
  write_segment_csv(buf, s);
  const std::string text = buf.str();
  EXPECT_EQ(text.substr(0, text.find('\n')), "theta,v_1,v_2,is_jump,pre_v_1,pre_v_2");
  const Segment r = read_segment_csv(buf);
  EXPECT_EQ(r.grid(), s.grid());
  EXPECT_EQ(r.values(), s.values());
  EXPECT_EQ(r.pre_values(), s.pre_values());
  EXPECT_EQ(r.jump_flags(), s.jump_flags());
}

TEST(SegmentView, ToSegmentOfWindow) {
  // Stored path X(s) = s on [-1, 2] with a jump at 0.5.
  std::vector<double> times, states, pre;
  std::vector<std::uint8_t> jumps;
  for (int i = -10; i <= 20; ++i) {
    const double t = i / 10.0;
    times.push_back(t);
    states.push_back(t >= 0.5 ? t + 1.0 : t);
    pre.push_back(t);
    jumps.push_back(i == 5 ? 1 : 0);
  }
  const SegmentView v(times, states, pre, jumps, 1, 1.0, 1.0);
  const Segment s = v.to_segment();
  EXPECT_EQ(s.size(), 11u);
  EXPECT_EQ(s.grid().front(), -1.0);
  EXPECT_EQ(s.grid().back(), 0.0);
  EXPECT_EQ(s.value(0)[0], 0.0);
  EXPECT_TRUE(s.is_jump(5));
  EXPECT_NEAR(s.grid()[5], -0.5, 1e-15);
  EXPECT_DOUBLE_EQ(s.pre_value(5)[0], 0.5);
  EXPECT_DOUBLE_EQ(s.value(5)[0], 1.5);
  EXPECT_DOUBLE_EQ(v.sup_norm(), 2.0);
  EXPECT_DOUBLE_EQ(sup_norm(s), 2.0);
}
