#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "ergo/error.hpp"
#include "ergo/transport.hpp"

using namespace ergo;

namespace {

CostMatrix matrix(std::size_t r, std::size_t c, std::vector<double> v) {
  return CostMatrix{r, c, std::move(v)};
}

std::vector<double> uniform(std::size_t n) { return std::vector<double>(n, 1.0 / n); }

double brute_force(const CostMatrix& c) {
  std::vector<std::size_t> perm(c.rows);
  std::iota(perm.begin(), perm.end(), 0);
  double best = INFINITY;
  do {
    double s = 0.0;
    for (std::size_t i = 0; i < c.rows; ++i) s += c(i, perm[i]) / static_cast<double>(c.rows);
    best = std::min(best, s);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

std::vector<Segment> points(std::span<const double> xs) {
  std::vector<Segment> out;
  for (double x : xs) out.push_back(Segment::constant(1.0, x));
  return out;
}

Segment random_segment(std::mt19937_64& gen) {
  std::normal_distribution<double> z(0.0, 0.3);
  std::bernoulli_distribution jump(0.3);
  double x = z(gen);
  std::vector<double> grid, values;
  std::vector<std::uint8_t> flags;
  for (int i = 0; i <= 10; ++i) {
    grid.push_back(i == 10 ? 0.0 : -1.0 + 0.1 * i);
    x += 0.1 * z(gen);
    values.push_back(x);
  }
  std::vector<double> pre = values;
  flags.assign(values.size(), 0);
  for (std::size_t i = 1; i < values.size(); ++i)
    if (jump(gen)) {
      flags[i] = 1;
      values[i] += 2.0 * z(gen);
    }
  return Segment::from_dense(1.0, 1, grid, values, flags, pre);
}

double plan_cost(const TransportPlan& p, const CostMatrix& c) {
  double s = 0.0;
  for (std::size_t k = 0; k < c.data.size(); ++k) s += p.coupling[k] * c.data[k];
  return s;
}

}  // namespace

TEST(Exact, ThreeByThreeExample) {
  const CostMatrix c = matrix(3, 3, {0, 1, 1, 1, 0, 1, 1, 1, 0.2});
  const auto w = uniform(3);
  const TransportPlan p = solve_exact(c, w, w);
  EXPECT_EQ(p.solver, SolverKind::assignment);
  EXPECT_NEAR(p.cost, brute_force(c), 1e-15);
  EXPECT_NEAR(p.cost, 0.2 / 3.0, 1e-15);
  SinkhornOptions o;
  o.epsilon = 1e-3;
  const TransportPlan s = solve_sinkhorn(c, w, w, o);
  EXPECT_NEAR(s.cost, p.cost, 1e-3);
  EXPECT_LE(s.marginal_error, 1e-9);
}

TEST(Exact, MatchesBruteForceOnRandomInstances) {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 200; ++k) {
    const std::size_t n = 1 + k % 8;
    CostMatrix c{n, n, std::vector<double>(n * n)};
    for (double& x : c.data) x = u(gen);
    const auto w = uniform(n);
    const TransportPlan p = solve_exact(c, w, w);
    EXPECT_NEAR(p.cost, brute_force(c), 1e-12) << "instance " << k;
    EXPECT_LE(p.marginal_error, 1e-12);
    EXPECT_NEAR(p.cost, plan_cost(p, c), 1e-12);
  }
}

TEST(Exact, GeneralWeightsMatchExpandedAssignment) {
  // Weights k/N: split atom i into k copies and solve an N x N assignment.
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const std::size_t N = 6;
  for (int rep = 0; rep < 100; ++rep) {
    const std::vector<std::vector<std::size_t>> splits{{1, 2, 3}, {3, 3}, {2, 1, 1, 2}, {4, 2},
                                                       {1, 1, 1, 1, 2}};
    const auto& ra = splits[rep % splits.size()];
    const auto& rb = splits[(rep / 2 + 1) % splits.size()];
    CostMatrix c{ra.size(), rb.size(), std::vector<double>(ra.size() * rb.size())};
    for (double& x : c.data) x = u(gen);
    std::vector<double> a, b;
    std::vector<std::size_t> ia, ib;
    for (std::size_t i = 0; i < ra.size(); ++i) {
      a.push_back(static_cast<double>(ra[i]) / N);
      ia.insert(ia.end(), ra[i], i);
    }
    for (std::size_t j = 0; j < rb.size(); ++j) {
      b.push_back(static_cast<double>(rb[j]) / N);
      ib.insert(ib.end(), rb[j], j);
    }
    const TransportPlan p = solve_exact(c, a, b);
    if (ra != rb) EXPECT_EQ(p.solver, SolverKind::min_cost_flow);
    const CostMatrix big = c.select(ia, ib);
    EXPECT_NEAR(p.cost, brute_force(big), 1e-12);
    EXPECT_LE(p.marginal_error, 1e-9);
  }
}

TEST(Exact, SingleAtomsAndIdentity) {
  const auto a = points(std::vector<double>{0.25});
  const auto b = points(std::vector<double>{0.75});
  const auto far = points(std::vector<double>{5.0});
  EXPECT_DOUBLE_EQ(wasserstein_exact(EmpiricalMeasure::uniform(a), EmpiricalMeasure::uniform(b)).cost, 0.5);
  EXPECT_DOUBLE_EQ(wasserstein_exact(EmpiricalMeasure::uniform(a), EmpiricalMeasure::uniform(far)).cost, 1.0);

  std::mt19937_64 gen(3);
  std::vector<Segment> atoms;
  for (int i = 0; i < 6; ++i) atoms.push_back(random_segment(gen));
  const auto mu = EmpiricalMeasure::uniform(atoms);
  const TransportPlan p = wasserstein_exact(mu, mu);
  EXPECT_EQ(p.cost, 0.0);
  for (std::size_t i = 0; i < 6; ++i) EXPECT_DOUBLE_EQ(p(i, i), 1.0 / 6);
}

TEST(Exact, SortedCouplingInOneDimension) {
  std::mt19937_64 gen(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<double> x(40), y(40);
    for (auto& v : x) v = u(gen);
    for (auto& v : y) v = u(gen);
    const double w = wasserstein_exact(EmpiricalMeasure::uniform(points(x)),
                                       EmpiricalMeasure::uniform(points(y)))
                         .cost;
    std::sort(x.begin(), x.end());
    std::sort(y.begin(), y.end());
    double sorted = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) sorted += std::fabs(x[i] - y[i]) / 40.0;
    EXPECT_NEAR(w, sorted, 1e-12);
  }
}

TEST(Exact, OuJumpTerminalMarginalIsSortedCoupling) {
  BuiltinParams bp;
  const ModelSpec m = make_builtin(BuiltinKind::ou_jump, bp);
  const std::size_t n = 200;
  std::vector<double> x(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = simulate(m, Segment::constant(1.0, 1.0), {0.01, 5.0, 1, i}).path.state()[0];
    y[i] = simulate(m, Segment::constant(1.0, 0.0), {0.01, 5.0, 2, i}).path.state()[0];
  }
  CostMatrix c{n, n, std::vector<double>(n * n)};
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) c.at(i, j) = std::fabs(x[i] - y[j]);
  const double w = solve_exact(c, uniform(n), uniform(n)).cost;
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  double sorted = 0.0;
  for (std::size_t i = 0; i < n; ++i) sorted += std::fabs(x[i] - y[i]) / n;
  EXPECT_NEAR(w, sorted, 1e-9);
}

TEST(Exact, SymmetryAndTriangleInequality) {
  std::mt19937_64 gen(21);
  for (int rep = 0; rep < 500; ++rep) {
    std::vector<Segment> a, b, c;
    const int na = 1 + rep % 4, nb = 1 + (rep / 4) % 4, nc = 1 + (rep / 16) % 4;
    for (int i = 0; i < na; ++i) a.push_back(random_segment(gen));
    for (int i = 0; i < nb; ++i) b.push_back(random_segment(gen));
    for (int i = 0; i < nc; ++i) c.push_back(random_segment(gen));
    const auto ma = EmpiricalMeasure::uniform(a), mb = EmpiricalMeasure::uniform(b),
               mc = EmpiricalMeasure::uniform(c);
    const double ab = wasserstein_exact(ma, mb).cost, bc = wasserstein_exact(mb, mc).cost,
                 ac = wasserstein_exact(ma, mc).cost;
    EXPECT_LE(ac, ab + bc + 1e-12);
    EXPECT_NEAR(ab, wasserstein_exact(mb, ma).cost, 1e-12);
  }
}

TEST(Exact, CapExceeded) {
  const std::size_t n = 5;
  CostMatrix c{n, n, std::vector<double>(n * n, 0.5)};
  try {
    solve_exact(c, uniform(n), uniform(n), 4);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::cap_exceeded);
  }
  EXPECT_EQ(wasserstein_auto(c, uniform(n), uniform(n), 4).solver, SolverKind::sinkhorn);
}

TEST(CostMatrix, KernelPathMatchesPairwiseDistance) {
  std::mt19937_64 gen(4);
  std::vector<Segment> a, b;
  for (int i = 0; i < 7; ++i) a.push_back(random_segment(gen));
  for (int i = 0; i < 5; ++i) b.push_back(random_segment(gen));
  const CostMatrix c = cost_matrix(a, b, GroundMetric::sup_capped);
  const CostMatrix s = cost_matrix(a, b, GroundMetric::skorohod_upper_capped);
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) {
      EXPECT_EQ(c(i, j), std::min(sup_distance(a[i], b[j]), 1.0));
      EXPECT_LE(s(i, j), c(i, j) + 1e-15);
    }
}

TEST(Measure, Validation) {
  EmpiricalMeasure m = EmpiricalMeasure::uniform(points(std::vector<double>{0.0, 1.0}));
  m.weights = {0.7, 0.2};
  EXPECT_THROW(m.validate(), Error);
  m.weights = {1.0, -0.0};
  EXPECT_NO_THROW(m.validate());
  EXPECT_THROW(EmpiricalMeasure::uniform({}).validate(), Error);
  std::vector<Segment> mixed{Segment::constant(1.0, 0.0), Segment::constant(2.0, 0.0)};
  EXPECT_THROW(EmpiricalMeasure::uniform(mixed).validate(), Error);
}

TEST(Sinkhorn, ExtremeEpsilonGivesProductPlan) {
  std::mt19937_64 gen(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  CostMatrix c{4, 5, std::vector<double>(20)};
  for (double& x : c.data) x = u(gen);
  SinkhornOptions o;
  o.epsilon = 1e6;
  const TransportPlan p = solve_sinkhorn(c, uniform(4), uniform(5), o);
  const double mean = std::accumulate(c.data.begin(), c.data.end(), 0.0) / 20.0;
  EXPECT_NEAR(p.cost, mean, 1e-6);
  EXPECT_LE(p.marginal_error, 1e-9);
}

TEST(Sinkhorn, ApproachesExactMonotonically) {
  std::mt19937_64 gen(12);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int rep = 0; rep < 5; ++rep) {
    const std::size_t n = 6, m = 4;
    CostMatrix c{n, m, std::vector<double>(n * m)};
    for (double& x : c.data) x = u(gen);
    std::vector<double> a(n), b(m);
    for (auto& x : a) x = 0.5 + u(gen);
    for (auto& x : b) x = 0.5 + u(gen);
    const double sa = std::accumulate(a.begin(), a.end(), 0.0),
                 sb = std::accumulate(b.begin(), b.end(), 0.0);
    for (auto& x : a) x /= sa;
    for (auto& x : b) x /= sb;
    const double exact = solve_exact(c, a, b).cost;
    double prev = INFINITY;
    for (double eps = 0.2; eps >= 1e-3; eps /= 2) {
      SinkhornOptions o;
      o.epsilon = eps;
      const TransportPlan p = solve_sinkhorn(c, a, b, o);
      EXPECT_TRUE(p.converged);
      EXPECT_LE(p.marginal_error, 1e-9);
      EXPECT_GE(p.cost, exact - 1e-12);
      EXPECT_LE(p.cost, prev + 1e-12);
      prev = p.cost;
    }
    EXPECT_NEAR(prev, exact, 1e-3);
  }
}

TEST(Sinkhorn, ZeroWeightAtoms) {
  const CostMatrix c = matrix(3, 2, {0.1, 0.9, 0.8, 0.2, 0.5, 0.5});
  const std::vector<double> a{0.5, 0.5, 0.0}, b{0.5, 0.5};
  SinkhornOptions o;
  o.epsilon = 1e-3;
  const TransportPlan p = solve_sinkhorn(c, a, b, o);
  EXPECT_NEAR(p.cost, 0.15, 1e-3);
  EXPECT_EQ(p(2, 0), 0.0);
  EXPECT_THROW(solve_sinkhorn(c, a, b, SinkhornOptions{0.0}), Error);
}

TEST(Marginals, EqualStartsGiveZeroCurve) {
  const ModelSpec m = make_builtin(BuiltinKind::ou_jump, {});
  const std::vector<double> times{1.0, 2.0};
  MarginalOptions o;
  o.bootstrap = 10;
  const auto xi = Segment::constant(1.0, 0.5);
  const MarginalCurve c = wasserstein_time_marginals(m, xi, xi, times, 20, {0.01, 2.0, 3, 0}, o);
  for (const auto& p : c.points) {
    EXPECT_EQ(p.w_upper, 0.0);
    EXPECT_EQ(p.stderr_boot, 0.0);
  }
}

TEST(Marginals, CurveDecreasesTowardEquilibrium) {
  const ModelSpec m = make_builtin(BuiltinKind::ou_jump, {});
  const std::vector<double> times{1.0, 2.0, 3.0, 4.0};
  MarginalOptions o;
  o.bootstrap = 30;
  const MarginalCurve c = wasserstein_time_marginals(m, Segment::constant(1.0, 1.0),
                                                     Segment::constant(1.0, 0.0), times, 64,
                                                     {0.01, 4.0, 4, 0}, o);
  const TrendTest t = trend_test(c);
  EXPECT_TRUE(t.final_below_initial);
  EXPECT_LT(t.slope, 0.0);
  std::ostringstream csv;
  write_curve_csv(csv, c);
  EXPECT_EQ(csv.str().substr(0, csv.str().find('\n')), "t,w_upper,stderr_boot,n_samples,solver");
}

TEST(Marginals, TimesBeforeTauRejected) {
  const ModelSpec m = make_builtin(BuiltinKind::ou_jump, {});
  const std::vector<double> times{0.5};
  const auto xi = Segment::constant(1.0, 0.0);
  EXPECT_THROW(wasserstein_time_marginals(m, xi, xi, times, 4, {0.01, 1.0, 0, 0}), Error);
}
