#include <cmath>
#include <limits>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>

#include "ergo/ergodicity.hpp"
#include "ergo/error.hpp"

namespace ergo {

const char* to_string(LyapunovV v) noexcept {
  return v == LyapunovV::current_sq ? "current_sq" : "sup_sq";
}

RatePolicy RatePolicy::builtin(const std::string& f_name, LyapunovV V, double delta, double C1,
                               double C2) {
  RatePolicy p;
  p.f_name = f_name;
  p.V = V;
  p.delta = delta;
  p.C1 = C1;
  p.C2 = C2;
  if (f_name == "linear")
    p.f = [](double u) { return u; };
  else if (f_name == "sqrt")
    p.f = [](double u) { return std::sqrt(u); };
  else if (f_name == "saturating")
    p.f = [](double u) { return u / (1.0 + u); };
  else
    fail(ErrorKind::invalid_policy, "unknown rate function '" + f_name + "'");
  return p;
}

double RatePolicy::value(const SegmentView& s) const noexcept {
  if (V == LyapunovV::current_sq) {
    double v = 0.0;
    for (double x : s.current()) v += x * x;
    return v;
  }
  const double n = s.sup_norm();
  return n * n;
}

void validate_policy(const RatePolicy& p) {
  require(static_cast<bool>(p.f), ErrorKind::invalid_policy, "policy has no f");
  require(std::fabs(p.f(0.0)) <= 1e-12, ErrorKind::invalid_policy, "f(0) must be 0");
  double prev = p.f(0.0);
  for (int k = -24; k <= 32; ++k) {
    const double u = std::pow(10.0, k / 4.0);
    const double v = p.f(u);
    require(std::isfinite(v) && v > prev, ErrorKind::invalid_policy,
            "f must be increasing on the probe grid");
    prev = v;
  }
  require(p.f(1e8) >= 100.0 * p.f(1.0), ErrorKind::invalid_policy,
          "f must grow without bound (f(1e8) >= 100 f(1))");
  require(p.delta > 0.0 && p.delta < 1.0, ErrorKind::invalid_policy, "delta must lie in (0, 1)");
  require(p.C1 > 0.0 && std::isfinite(p.C1) && p.C2 > 0.0 && std::isfinite(p.C2),
          ErrorKind::invalid_policy, "C1 and C2 must be positive");
  require(!p.K || (*p.K >= 0.0 && std::isfinite(*p.K)), ErrorKind::invalid_policy,
          "K must be nonnegative");
}

namespace {

double piece(const RatePolicy& p, double a, double b) {
  auto g = [&](double u) { return 1.0 / p.f(u); };
  return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(g, a, b, 15, 1e-15);
}

}  // namespace

double rate_F(const RatePolicy& p, double x) {
  require(x > 0.0, ErrorKind::invalid_argument, "F is defined for x > 0");
  if (x == 1.0) return 0.0;
  if (x < 1.0) {
    double total = 0.0, hi = 1.0;
    while (hi > x) {
      const double lo = std::max(x, 0.5 * hi);
      total -= piece(p, lo, hi);
      hi = lo;
    }
    return total;
  }
  double total = 0.0, lo = 1.0;
  while (lo < x) {
    const double hi = std::min(x, 2.0 * lo);
    total += piece(p, lo, hi);
    lo = hi;
  }
  return total;
}

double rate_F_inverse(const RatePolicy& p, double s) {
  require(s >= 0.0, ErrorKind::invalid_argument, "F^{-1} needs s >= 0");
  if (s == 0.0) return 1.0;
  // Walk dyadic pieces until the cumulative integral passes s.
  double cum = 0.0, lo = 1.0;
  while (true) {
    const double hi = 2.0 * lo;
    if (!std::isfinite(hi)) return std::numeric_limits<double>::infinity();
    const double w = piece(p, lo, hi);
    if (cum + w >= s) break;
    cum += w;
    lo = hi;
  }
  const double base = cum;
  const double left = lo;
  auto g = [&](double x) { return base + (x > left ? piece(p, left, x) : 0.0) - s; };
  auto tol = [](double a, double b) { return std::fabs(b - a) <= 1e-14 * std::fabs(a); };
  std::uintmax_t iters = 200;
  const double ga = g(left), gb = g(2.0 * left);
  if (ga >= 0.0) return left;
  if (gb <= 0.0) return 2.0 * left;
  const auto r = boost::math::tools::toms748_solve(g, left, 2.0 * left, ga, gb, tol, iters);
  return 0.5 * (r.first + r.second);
}

double rate_bound(const RatePolicy& p, const Segment& xi, double t) {
  validate_policy(p);
  require(t >= 0.0 && std::isfinite(t), ErrorKind::invalid_argument, "t must be >= 0");
  const double V = p.value(xi);
  const double x = rate_F_inverse(p, p.C2 * t);
  const double num = p.C1 * (1.0 + std::pow(p.f(V), p.delta));
  if (!std::isfinite(x)) return 0.0;
  return num / std::pow(p.f(x), p.delta);
}

}  // namespace ergo
