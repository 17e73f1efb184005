#include "ergo/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ergo/error.hpp"
#include "ergo/io.hpp"

namespace ergo {

void validate_sim_config(const SimConfig& cfg, double tau) {
  require(std::isfinite(cfg.dt) && cfg.dt > 0.0, ErrorKind::invalid_argument, "dt must be positive");
  Segment::grid_steps(tau, cfg.dt);
  require(std::isfinite(cfg.horizon) && cfg.horizon >= 0.0, ErrorKind::invalid_argument,
          "horizon must be finite and nonnegative");
}

// ---------------------------------------------------------------------------
// Jumps

JumpClock::JumpClock(std::uint64_t master_seed, std::uint64_t path_index, double rate,
                     std::function<double(rng::Engine&)> mark_sampler)
    : rate_(rate),
      sampler_(std::move(mark_sampler)),
      times_({master_seed, path_index, rng::Substream::jump_times}),
      marks_({master_seed, path_index, rng::Substream::marks}),
      next_(rate > 0.0 ? rng::exponential(times_, rate) : std::numeric_limits<double>::infinity()) {}

double JumpClock::pop() {
  const double mark = sampler_ ? sampler_(marks_) : 0.0;
  next_ += rng::exponential(times_, rate_);
  ++count_;
  return mark;
}

JumpStream sample_jump_stream(double rate, double horizon, std::uint64_t master_seed,
                              std::uint64_t path_index,
                              const std::function<double(rng::Engine&)>& mark_sampler) {
  require(rate >= 0.0 && std::isfinite(rate), ErrorKind::invalid_argument,
          "jump rate must be finite and nonnegative");
  require(horizon >= 0.0, ErrorKind::invalid_argument, "horizon must be nonnegative");
  JumpClock clock(master_seed, path_index, rate, mark_sampler);
  JumpStream s;
  while (clock.peek() <= horizon) {
    s.times.push_back(clock.peek());
    s.marks.push_back(clock.pop());
  }
  return s;
}

// ---------------------------------------------------------------------------
// Noise

NoiseDriver::NoiseDriver(const SimConfig& cfg, std::size_t m, double jump_rate,
                         std::function<double(rng::Engine&)> mark_sampler, bool with_jumps)
    : dt_(cfg.dt),
      m_(m),
      with_jumps_(with_jumps && jump_rate > 0.0),
      brownian_({cfg.master_seed, cfg.path_index, rng::Substream::brownian}),
      bridge_({cfg.master_seed, cfg.path_index, rng::Substream::bridge}),
      clock_(cfg.master_seed, cfg.path_index, with_jumps ? jump_rate : 0.0,
             std::move(mark_sampler)) {}

bool NoiseDriver::next(double until, std::vector<SubStep>& out) {
  out.clear();
  if (now_ >= until - time_tolerance(until)) return false;
  const double t0 = now_;
  const double t1 = std::min(static_cast<double>(k_ + 1) * dt_, until);
  const double h = t1 - t0;
  const std::size_t pairs = (m_ + 1) / 2;

  std::vector<double> total(m_);
  for (std::size_t j = 0; j < m_; j += 2) {
    const auto z = brownian_.normal_pair(k_ * pairs + j / 2);
    total[j] = std::sqrt(h) * z[0];
    if (j + 1 < m_) total[j + 1] = std::sqrt(h) * z[1];
  }

  split_.clear();
  std::vector<double> marks;
  if (with_jumps_) {
    while (clock_.peek() <= t1) {
      split_.push_back(clock_.peek());
      marks.push_back(clock_.pop());
    }
  }

  // Brownian bridge from (t0, 0) to (t1, total) through the jump times.
  std::vector<double> w(m_, 0.0);
  double s_prev = t0;
  for (std::size_t i = 0; i < split_.size(); ++i) {
    const double s = split_[i];
    SubStep step;
    step.t0 = s_prev;
    step.t1 = s;
    step.dW.resize(m_);
    step.jump = true;
    step.mark = marks[i];
    const double rest = t1 - s_prev;
    const double frac = rest > 0.0 ? (s - s_prev) / rest : 1.0;
    const double sd = rest > 0.0 ? std::sqrt((s - s_prev) * (t1 - s) / rest) : 0.0;
    const std::uint64_t base = (static_cast<std::uint64_t>(k_) << 20) + i * pairs;
    for (std::size_t j = 0; j < m_; j += 2) {
      const auto z = bridge_.normal_pair(base + j / 2);
      for (std::size_t q = 0; q < 2 && j + q < m_; ++q) {
        const std::size_t c = j + q;
        const double inc = frac * (total[c] - w[c]) + sd * z[q];
        step.dW[c] = inc;
        w[c] += inc;
      }
    }
    out.push_back(std::move(step));
    s_prev = s;
  }
  if (s_prev < t1) {
    SubStep last;
    last.t0 = s_prev;
    last.t1 = t1;
    last.dW.resize(m_);
    for (std::size_t c = 0; c < m_; ++c) last.dW[c] = total[c] - w[c];
    out.push_back(std::move(last));
  }
  now_ = t1;
  ++k_;
  return true;
}

// ---------------------------------------------------------------------------
// Euler-Maruyama

EulerProcess::EulerProcess(const ModelSpec& model, const Segment& xi, bool keep_history)
    : model_(model), path_(xi), keep_(keep_history) {
  require(std::fabs(xi.tau() - model.tau) <= time_tolerance(model.tau),
          ErrorKind::dimension_mismatch, "initial segment tau differs from the model delay");
  require(xi.dim() == model.n, ErrorKind::dimension_mismatch,
          "initial segment dimension differs from the model");
  drift_.resize(model.n);
  sigma_.resize(model.n * model.m);
  next_.resize(model.n);
  c_.resize(model.n);
}

void EulerProcess::step(double t1, std::span<const double> dW, std::span<const double> extra) {
  const std::size_t n = model_.n, m = model_.m;
  const double h = t1 - path_.time();
  const SegmentView view = path_.view();
  model_.drift(view, drift_);
  if (!sigma_cached_) {
    model_.diffusion(view, sigma_);
    sigma_cached_ = model_.constant_diffusion;
  }
  const bool compensate = model_.jump_rate > 0.0;
  const double g = compensate ? model_.jump_coeff(view) : 0.0;
  const auto x = path_.state();
  for (std::size_t i = 0; i < n; ++i) {
    double v = x[i] + drift_[i] * h;
    for (std::size_t j = 0; j < m; ++j) v += sigma_[i * m + j] * dW[j];
    if (compensate) v -= g * model_.c_moment1[i] * h;
    if (!extra.empty()) v += extra[i] * h;
    next_[i] = v;
  }
  for (double v : next_)
    if (!std::isfinite(v))
      throw DivergenceError(t1, "state became non-finite at t = " + io::format_double(t1));
  path_.append(t1, next_);
}

void EulerProcess::jump(double mark) {
  const double g = model_.jump_coeff(path_.view(true));
  model_.jump_map(mark, c_);
  const auto x = path_.state();
  for (std::size_t i = 0; i < model_.n; ++i) next_[i] = x[i] + g * c_[i];
  for (double v : next_)
    if (!std::isfinite(v))
      throw DivergenceError(path_.time(),
                            "jump produced a non-finite state at t = " + io::format_double(path_.time()));
  path_.jump_last(next_);
}

namespace {

Trajectory run_full(const ModelSpec& model, const Segment& xi, const SimConfig& cfg, bool jumps) {
  validate_sim_config(cfg, model.tau);
  EulerProcess proc(model, xi);
  NoiseDriver noise(cfg, model.m, model.jump_rate, model.mark_sampler, jumps);
  std::vector<JumpEvent> events;
  std::vector<SubStep> steps;
  while (noise.next(cfg.horizon, steps)) {
    for (const SubStep& s : steps) {
      proc.step(s.t1, s.dW);
      if (s.jump) {
        JumpEvent ev{s.t1, s.mark, std::vector<double>(proc.state().begin(), proc.state().end())};
        proc.jump(s.mark);
        events.push_back(std::move(ev));
      }
    }
  }
  return Trajectory{std::move(proc.history()), std::move(events)};
}

}  // namespace

Trajectory simulate(const ModelSpec& model, const Segment& xi, const SimConfig& cfg) {
  return run_full(model, xi, cfg, true);
}

Trajectory simulate_auxiliary(const ModelSpec& model, const Segment& xi, const SimConfig& cfg) {
  return run_full(model, xi, cfg, false);
}

std::size_t simulate_streaming(const ModelSpec& model, const Segment& xi, const SimConfig& cfg,
                               std::span<const double> observe_times,
                               const std::function<void(std::size_t, const EulerProcess&)>& observe,
                               StreamOptions opts) {
  validate_sim_config(cfg, model.tau);
  for (std::size_t i = 0; i < observe_times.size(); ++i) {
    require(observe_times[i] >= 0.0 && observe_times[i] <= cfg.horizon + time_tolerance(cfg.horizon),
            ErrorKind::invalid_argument, "observation time outside [0, horizon]");
    require(i == 0 || observe_times[i] >= observe_times[i - 1], ErrorKind::invalid_argument,
            "observation times must be ascending");
  }
  EulerProcess proc(model, xi, false);
  NoiseDriver noise(cfg, model.m, model.jump_rate, model.mark_sampler, opts.with_jumps);
  std::vector<SubStep> steps;
  std::size_t next_obs = 0;
  auto flush = [&] {
    while (next_obs < observe_times.size() &&
           observe_times[next_obs] <= proc.time() + time_tolerance(proc.time())) {
      observe(next_obs, proc);
      ++next_obs;
    }
  };
  flush();
  while (next_obs < observe_times.size() && noise.next(cfg.horizon, steps)) {
    for (const SubStep& s : steps) {
      proc.step(s.t1, s.dW);
      if (s.jump) proc.jump(s.mark);
    }
    flush();
    const double keep = next_obs < observe_times.size()
                            ? std::min(proc.time(), observe_times[next_obs])
                            : proc.time();
    proc.history().prune_for(keep);
  }
  return noise.jumps();
}

// ---------------------------------------------------------------------------
// Linear jump OU

LinearJumpOuPath simulate_linear_jump_ou(double lambda, const LinearJumpOuConfig& spec,
                                         const SimConfig& cfg) {
  require(lambda > 0.0 && std::isfinite(lambda), ErrorKind::invalid_argument,
          "lambda must be positive");
  require(cfg.dt > 0.0 && cfg.horizon >= 0.0, ErrorKind::invalid_argument, "invalid SimConfig");
  const MarkLaw mark = spec.mark;
  JumpClock clock(cfg.master_seed, cfg.path_index, spec.rate,
                  [mark](rng::Engine& e) { return mark.sample(e); });
  const double m1 = spec.rate * (spec.h.kind == JumpKernel::Kind::constant ? spec.h.value
                                                                           : mark.mean());
  const double level = m1 / lambda;  // Y relaxes towards -level between jumps

  const double tau = std::max(cfg.horizon, cfg.dt);
  LinearJumpOuPath out{Trajectory{PathHistory(Segment::constant(tau, 0.0)), {}}, 0.0};
  double y = 0.0, t = 0.0;
  auto relax = [&](double to) {
    y = (y + level) * std::exp(-lambda * (to - t)) - level;
    t = to;
  };
  std::size_t k = 0;
  while (true) {
    const double grid_next = std::min(static_cast<double>(k + 1) * cfg.dt, cfg.horizon);
    if (t >= cfg.horizon) break;
    while (clock.peek() <= grid_next) {
      const double s = clock.peek();
      const double z = clock.pop();
      relax(s);
      const double pre = y;
      out.sup_abs = std::max(out.sup_abs, std::fabs(pre));
      y += spec.h(z);
      const double pre_v[1] = {pre}, post_v[1] = {y};
      out.traj.path.append(s, pre_v);
      out.traj.path.jump_last(post_v);
      out.traj.events.push_back({s, z, {pre}});
      out.sup_abs = std::max(out.sup_abs, std::fabs(y));
    }
    if (grid_next > t) {
      relax(grid_next);
      const double v[1] = {y};
      out.traj.path.append(grid_next, v);
      out.sup_abs = std::max(out.sup_abs, std::fabs(y));
    }
    ++k;
  }
  return out;
}

// ---------------------------------------------------------------------------

stats::MeanEstimate sup_moment_estimate(std::span<const Trajectory> trajs, double p, double t0,
                                        double t1) {
  require(!trajs.empty(), ErrorKind::invalid_argument, "sup_moment_estimate: empty batch");
  require(p > 0.0 && t0 <= t1, ErrorKind::invalid_argument, "sup_moment_estimate: bad window");
  std::vector<double> sups;
  sups.reserve(trajs.size());
  for (const Trajectory& tr : trajs) {
    const PathHistory& path = tr.path;
    const auto ts = path.times();
    require(t0 >= ts.front() - time_tolerance(t0) && t1 <= path.time() + time_tolerance(t1),
            ErrorKind::invalid_argument, "trajectory does not cover the window");
    const SegmentView v = path.view_at(t1);
    const std::size_t n = path.dim();
    auto norm_at = [&](std::span<const double> x) {
      double s = 0.0;
      for (std::size_t k = 0; k < n; ++k) s += x[k] * x[k];
      return std::sqrt(s);
    };
    std::size_t i = v.index_at(t0);
    const std::size_t last = v.index_at(t1);
    double m = norm_at(path.states().subspan(i * n, n));
    for (++i; i <= last; ++i) {
      m = std::max(m, norm_at(path.states().subspan(i * n, n)));
      if (path.jumps()[i]) m = std::max(m, norm_at(path.pre_states().subspan(i * n, n)));
    }
    sups.push_back(std::pow(m, p));
  }
  return stats::mean_estimate(sups);
}

}  // namespace ergo
