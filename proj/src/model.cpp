#include "ergo/model.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

#include "ergo/error.hpp"
#include "ergo/io.hpp"
#include "ergo/stats.hpp"

namespace ergo {

double MarkLaw::sample(rng::Engine& e) const noexcept {
  return kind == Kind::atom ? a : a + b * rng::standard_normal(e);
}

JumpMoments estimate_jump_moments(const ModelSpec& model, std::size_t samples,
                                  std::uint64_t seed) {
  require(samples >= 2, ErrorKind::invalid_argument, "need at least two mark samples");
  JumpMoments out;
  std::vector<stats::Moments> first(model.n);
  stats::Moments second;
  rng::Engine e({seed, 0, rng::Substream::sampler});
  std::vector<double> c(model.n);
  for (std::size_t i = 0; i < samples; ++i) {
    model.jump_map(model.mark_sampler(e), c);
    double sq = 0.0;
    for (std::size_t k = 0; k < model.n; ++k) {
      first[k].add(c[k]);
      sq += c[k] * c[k];
    }
    second.add(sq);
  }
  const double r = model.jump_rate;
  for (const auto& f : first) {
    out.moment1.push_back(r * f.mean());
    out.moment1_stderr.push_back(r * f.stderr_of_mean());
  }
  out.moment2 = r * second.mean();
  out.moment2_stderr = r * second.stderr_of_mean();
  return out;
}

void validate_model(ModelSpec& model, bool moments_known) {
  require(model.n >= 1 && model.m >= 1, ErrorKind::invalid_model,
          "model dimensions must be positive");
  require(model.tau > 0.0 && std::isfinite(model.tau), ErrorKind::invalid_model,
          "delay tau must be positive and finite");
  require(static_cast<bool>(model.drift) && static_cast<bool>(model.diffusion) &&
              static_cast<bool>(model.jump_coeff),
          ErrorKind::invalid_model, "drift, diffusion and jump coefficient are required");
  require(model.jump_rate >= 0.0 && std::isfinite(model.jump_rate), ErrorKind::invalid_model,
          "jump rate must be finite and nonnegative");
  if (model.jump_rate > 0.0)
    require(static_cast<bool>(model.mark_sampler) && static_cast<bool>(model.jump_map),
            ErrorKind::invalid_model, "a positive jump rate needs a mark sampler and jump map");

  if (!moments_known) {
    if (model.jump_rate == 0.0) {
      model.c_moment1.assign(model.n, 0.0);
      model.c_moment2 = 0.0;
    } else {
      const JumpMoments mc = estimate_jump_moments(model, 100000);
      model.c_moment1 = mc.moment1;
      model.c_moment2 = mc.moment2;
      require(mc.moment2 <= model.K + 3.0 * mc.moment2_stderr, ErrorKind::invalid_model,
              "second jump moment exceeds K beyond three standard errors");
      return;
    }
  }
  require(model.c_moment1.size() == model.n, ErrorKind::invalid_model,
          "c_moment1 must have n components");
  require(model.c_moment2 <= model.K * (1.0 + 1e-12), ErrorKind::invalid_model,
          "second jump moment exceeds K");
}

namespace {

void check_params(const BuiltinParams& p) {
  auto finite = [](double v) { return std::isfinite(v); };
  require(finite(p.a) && finite(p.g1) && finite(p.sigma0) && finite(p.gamma0) &&
              finite(p.c_scale) && finite(p.mark.a) && finite(p.mark.b),
          ErrorKind::invalid_model, "model parameters must be finite");
  require(p.tau > 0.0 && finite(p.tau), ErrorKind::invalid_model, "tau must be positive");
  require(p.jump_rate >= 0.0 && finite(p.jump_rate), ErrorKind::invalid_model,
          "jump_rate must be nonnegative");
  require(p.mark.b >= 0.0, ErrorKind::invalid_model, "mark standard deviation must be >= 0");
  require(p.sigma0 >= 0.0, ErrorKind::invalid_model, "sigma0 must be nonnegative");
  if (!p.relaxed) {
    require(p.a > 0.0, ErrorKind::invalid_model, "mean-reversion rate a must be positive");
    require(p.sigma0 > 0.0, ErrorKind::invalid_model, "sigma0 must be positive");
  }
}

}  // namespace

ModelSpec make_builtin(BuiltinKind kind, const BuiltinParams& p) {
  check_params(p);
  ModelSpec m;
  m.n = m.m = 1;
  m.tau = p.tau;
  m.jump_rate = p.jump_rate;
  m.constant_diffusion = true;

  const double a = p.a, g1 = p.g1, s0 = p.sigma0, g0 = p.gamma0, cs = p.c_scale, tau = p.tau;
  const MarkLaw mark = p.mark;
  m.mark_sampler = [mark](rng::Engine& e) { return mark.sample(e); };
  m.jump_map = [cs](double z, std::span<double> out) { out[0] = cs * z; };
  m.diffusion = [s0](const SegmentView&, std::span<double> out) { out[0] = s0; };
  m.c_moment1 = {p.jump_rate * cs * mark.mean()};
  m.c_moment2 = p.jump_rate * cs * cs * mark.second_moment();

  const double a3 = s0 > 0.0 ? s0 + 1.0 / s0 : std::numeric_limits<double>::infinity();
  const double dissipation = 2.0 * std::max(-a, 0.0);
  if (kind == BuiltinKind::ou_jump) {
    m.name = "ou_jump";
    m.drift = [a](const SegmentView& v, std::span<double> out) { out[0] = -a * v.current()[0]; };
    m.jump_coeff = [g0](const SegmentView&) { return g0; };
    m.K = std::max({m.c_moment2, dissipation, a3});
    m.lyapunov_K = s0 * s0 + g0 * g0 * m.c_moment2;
  } else {
    m.name = "linear_delay";
    m.drift = [a, g1, tau](const SegmentView& v, std::span<double> out) {
      out[0] = -a * v.current()[0] + g1 * std::tanh(v.at(-tau)[0]);
    };
    m.jump_coeff = [g0](const SegmentView& v) { return g0 * std::tanh(v.current()[0]); };
    // Cauchy-Schwarz on the delayed term; tanh is 1-Lipschitz.
    m.K = std::max({m.c_moment2, dissipation + 2.0 * std::fabs(g1) + g0 * g0, a3});
    m.lyapunov_K = s0 * s0 + g0 * g0 * m.c_moment2 + g1 * g1;
  }
  if (p.relaxed) {
    // A3 cannot hold with sigma0 == 0; K keeps the A1 part only.
    if (!std::isfinite(m.K)) m.K = std::max(m.c_moment2, dissipation + 2.0 * std::fabs(g1) + g0 * g0);
  }
  validate_model(m, true);
  return m;
}

// ---------------------------------------------------------------------------
// Segment sampler

namespace {

struct DenseSegment {
  std::vector<double> grid, values, pre;
  std::vector<std::uint8_t> jumps;
};

DenseSegment sample_dense(const SegmentSampler& s, rng::Engine& e) {
  const std::size_t steps = Segment::grid_steps(s.tau, s.dt);
  const std::size_t points = steps + 1;
  DenseSegment d;
  d.grid.resize(points);
  for (std::size_t i = 0; i < points; ++i)
    d.grid[i] = i == steps ? 0.0 : -s.tau + static_cast<double>(i) * s.dt;
  d.values.assign(points * s.dim, 0.0);
  d.jumps.assign(points, 0);

  const double u = rng::uniform01(e);
  for (std::size_t k = 0; k < s.dim; ++k) {
    auto val = [&](std::size_t i) -> double& { return d.values[i * s.dim + k]; };
    if (u < 1.0 / 3.0) {
      // Rough: random walk corrected to random endpoint values.
      const double start = s.scale * (2.0 * rng::uniform01(e) - 1.0);
      const double end = s.scale * (2.0 * rng::uniform01(e) - 1.0);
      double w = 0.0;
      std::vector<double> walk(points, 0.0);
      for (std::size_t i = 1; i < points; ++i) {
        w += s.scale * std::sqrt(s.dt) * rng::standard_normal(e);
        walk[i] = w;
      }
      for (std::size_t i = 0; i < points; ++i) {
        const double frac = static_cast<double>(i) / static_cast<double>(steps);
        val(i) = start + frac * (end - start) + walk[i] - frac * walk.back();
      }
    } else if (u < 2.0 / 3.0) {
      const double amp = s.scale * (rng::uniform01(e) - 0.5);
      const double offset = s.scale * (rng::uniform01(e) - 0.5);
      const double omega = 4.0 * 3.141592653589793 / s.tau * rng::uniform01(e);
      const double phase = 6.283185307179586 * rng::uniform01(e);
      for (std::size_t i = 0; i < points; ++i)
        val(i) = offset + amp * std::sin(omega * d.grid[i] + phase);
    } else {
      double level = s.scale * (2.0 * rng::uniform01(e) - 1.0);
      const std::size_t n_jumps = 1 + static_cast<std::size_t>(3.0 * rng::uniform01(e));
      std::vector<std::size_t> at;
      for (std::size_t j = 0; j < n_jumps; ++j)
        at.push_back(1 + static_cast<std::size_t>(rng::uniform01(e) * static_cast<double>(steps)));
      std::sort(at.begin(), at.end());
      std::size_t next = 0;
      for (std::size_t i = 0; i < points; ++i) {
        while (next < at.size() && at[next] == i) {
          level = s.scale * (2.0 * rng::uniform01(e) - 1.0);
          d.jumps[i] = 1;
          ++next;
        }
        val(i) = level;
      }
    }
  }
  d.pre = d.values;
  for (std::size_t i = 1; i < points; ++i)
    if (d.jumps[i])
      for (std::size_t k = 0; k < s.dim; ++k) d.pre[i * s.dim + k] = d.values[(i - 1) * s.dim + k];
  return d;
}

Segment to_segment(const SegmentSampler& s, DenseSegment d) {
  return Segment::from_dense(s.tau, s.dim, std::move(d.grid), std::move(d.values),
                             std::move(d.jumps), std::move(d.pre));
}

}  // namespace

Segment SegmentSampler::sample(rng::Engine& e) const { return to_segment(*this, sample_dense(*this, e)); }

std::pair<Segment, Segment> SegmentSampler::sample_pair(rng::Engine& e) const {
  DenseSegment phi = sample_dense(*this, e);
  const double u = rng::uniform01(e);
  DenseSegment psi;
  if (u < 1.0 / 3.0) {
    psi = sample_dense(*this, e);
  } else if (u < 2.0 / 3.0) {
    psi = phi;
    const double shift = scale * (rng::uniform01(e) - 0.5);
    for (auto& v : psi.values) v += shift;
    for (auto& v : psi.pre) v += shift;
  } else {
    const DenseSegment pert = sample_dense(*this, e);
    const double eps = 0.5 * rng::uniform01(e);
    psi = phi;
    for (std::size_t i = 0; i < psi.values.size(); ++i) {
      psi.values[i] += eps * pert.values[i];
      psi.pre[i] += eps * pert.pre[i];
    }
    for (std::size_t i = 0; i < psi.jumps.size(); ++i) psi.jumps[i] |= pert.jumps[i];
  }
  return {to_segment(*this, std::move(phi)), to_segment(*this, std::move(psi))};
}

// ---------------------------------------------------------------------------
// Assumption probes

A1Report check_assumption_a1(const ModelSpec& model, const SegmentSampler& sampler,
                             std::size_t trials, std::uint64_t seed) {
  require(trials >= 1, ErrorKind::invalid_argument, "check_assumption_a1: trials must be >= 1");
  require(sampler.dim == model.n && std::fabs(sampler.tau - model.tau) <= time_tolerance(model.tau),
          ErrorKind::dimension_mismatch, "sampler does not match the model");
  rng::Engine e({seed, 0, rng::Substream::sampler});
  A1Report r;
  r.K = model.K;
  const std::size_t n = model.n, nm = model.n * model.m;
  std::vector<double> bp(n), bq(n), sp(nm), sq(nm);
  for (std::size_t t = 0; t < trials; ++t) {
    const auto [phi, psi] = sampler.sample_pair(e);
    const double dist = sup_distance(phi, psi);
    if (dist == 0.0) continue;
    const auto vp = phi.view(), vq = psi.view();
    model.drift(vp, bp);
    model.drift(vq, bq);
    model.diffusion(vp, sp);
    model.diffusion(vq, sq);
    double inner = 0.0;
    for (std::size_t k = 0; k < n; ++k) inner += (vp.current()[k] - vq.current()[k]) * (bp[k] - bq[k]);
    double hs = 0.0;
    for (std::size_t k = 0; k < nm; ++k) hs += (sp[k] - sq[k]) * (sp[k] - sq[k]);
    const double dg = model.jump_coeff(phi.view(true)) - model.jump_coeff(psi.view(true));
    const double lhs = 2.0 * std::max(inner, 0.0) + hs + dg * dg;
    r.k_hat = std::max(r.k_hat, lhs / (dist * dist));
    ++r.trials;
  }
  require(r.trials > 0, ErrorKind::sampling, "check_assumption_a1: every sampled pair was equal");
  r.pass = r.k_hat <= model.K * (1.0 + 1e-12) + 1e-12;
  return r;
}

namespace {

struct SigmaSpectrum {
  double hs = 0.0, inv_hs = 0.0, min_singular = 0.0;
};

SigmaSpectrum spectrum(const ModelSpec& model, const std::vector<double>& sigma) {
  const Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> s(
      sigma.data(), static_cast<Eigen::Index>(model.n), static_cast<Eigen::Index>(model.m));
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(s);
  const auto& sv = svd.singularValues();
  SigmaSpectrum out;
  out.min_singular = sv.minCoeff();
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    out.hs += sv[i] * sv[i];
    out.inv_hs += 1.0 / (sv[i] * sv[i]);
  }
  out.hs = std::sqrt(out.hs);
  out.inv_hs = std::sqrt(out.inv_hs);
  return out;
}

}  // namespace

A3Report check_assumption_a3(const ModelSpec& model, const SegmentSampler& sampler,
                             std::size_t trials, std::uint64_t seed) {
  require(trials >= 1, ErrorKind::invalid_argument, "check_assumption_a3: trials must be >= 1");
  require(model.n == model.m, ErrorKind::invalid_model,
          "invertibility of sigma needs a square diffusion matrix");
  require(sampler.dim == model.n, ErrorKind::dimension_mismatch, "sampler does not match the model");
  rng::Engine e({seed, 0, rng::Substream::sampler});
  A3Report r;
  r.K = model.K;
  r.min_singular = std::numeric_limits<double>::infinity();
  std::vector<double> sigma(model.n * model.m);
  for (std::size_t t = 0; t < trials; ++t) {
    const Segment phi = sampler.sample(e);
    model.diffusion(phi.view(), sigma);
    const SigmaSpectrum s = spectrum(model, sigma);
    r.min_singular = std::min(r.min_singular, s.min_singular);
    ++r.trials;
    if (!(s.min_singular > 1e-10)) {
      ++r.violations;
      continue;
    }
    r.max_value = std::max(r.max_value, s.hs + s.inv_hs);
  }
  r.pass = r.violations == 0 && r.max_value <= model.K * (1.0 + 1e-12);
  return r;
}

std::optional<std::vector<double>> diffusion_inverse(const ModelSpec& model,
                                                     const SegmentView& at) {
  require(model.n == model.m, ErrorKind::invalid_model,
          "invertibility of sigma needs a square diffusion matrix");
  const std::size_t n = model.n;
  std::vector<double> sigma(n * n);
  model.diffusion(at, sigma);
  if (n == 1) {
    if (!(std::fabs(sigma[0]) > 1e-10)) return std::nullopt;
    return std::vector<double>{1.0 / sigma[0]};
  }
  using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const Eigen::Map<const RowMat> s(sigma.data(), static_cast<Eigen::Index>(n),
                                   static_cast<Eigen::Index>(n));
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(s, Eigen::ComputeFullU | Eigen::ComputeFullV);
  if (!(svd.singularValues().minCoeff() > 1e-10)) return std::nullopt;
  const RowMat inv = svd.solve(Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(n),
                                                         static_cast<Eigen::Index>(n)));
  return std::vector<double>(inv.data(), inv.data() + n * n);
}

}  // namespace ergo
