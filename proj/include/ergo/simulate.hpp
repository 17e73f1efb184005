#pragma once

// Euler-Maruyama for delay equations with compound-Poisson jumps inserted at
// their exact times.
//
// Randomness of path `path_index` under `master_seed`:
//   brownian   : grid step k uses counters k * ceil(m/2) + j/2
//   bridge     : Brownian-bridge refinement of step k when jumps split it
//   jump_times : exponential inter-arrival times, sequential
//   marks      : marks, sequential
// The dt-grid Brownian path therefore does not depend on whether jumps are
// simulated, which makes full and auxiliary runs path-wise comparable.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "ergo/model.hpp"
#include "ergo/path.hpp"
#include "ergo/rng.hpp"
#include "ergo/stats.hpp"

namespace ergo {

struct SimConfig {
  double dt = 1e-2;
  double horizon = 1.0;
  std::uint64_t master_seed = 0;
  std::uint64_t path_index = 0;
};

/// Checks 0 < dt <= tau, dt divides tau, horizon >= 0.
void validate_sim_config(const SimConfig& cfg, double tau);

struct JumpStream {
  std::vector<double> times;
  std::vector<double> marks;
};

/// Lazy homogeneous Poisson clock with marks.
class JumpClock {
 public:
  JumpClock(std::uint64_t master_seed, std::uint64_t path_index, double rate,
            std::function<double(rng::Engine&)> mark_sampler);

  /// Time of the next jump (infinity when rate == 0).
  double peek() const noexcept { return next_; }
  /// Consumes the next jump and returns its mark.
  double pop();
  std::size_t consumed() const noexcept { return count_; }

 private:
  double rate_;
  std::function<double(rng::Engine&)> sampler_;
  rng::Engine times_;
  rng::Engine marks_;
  double next_;
  std::size_t count_ = 0;
};

JumpStream sample_jump_stream(double rate, double horizon, std::uint64_t master_seed,
                              std::uint64_t path_index,
                              const std::function<double(rng::Engine&)>& mark_sampler);

/// One integration interval [t0, t1]; `jump` means a jump occurs at t1.
struct SubStep {
  double t0 = 0.0;
  double t1 = 0.0;
  std::vector<double> dW;
  bool jump = false;
  double mark = 0.0;
};

/// Produces the shared noise of one path as a sequence of sub-steps.
class NoiseDriver {
 public:
  NoiseDriver(const SimConfig& cfg, std::size_t m, double jump_rate,
              std::function<double(rng::Engine&)> mark_sampler, bool with_jumps);

  /// Sub-steps of the next dt-grid step, truncated at `until`. Returns
  /// false once `until` has been reached.
  bool next(double until, std::vector<SubStep>& out);
  double time() const noexcept { return now_; }
  std::size_t jumps() const noexcept { return clock_.consumed(); }

 private:
  double dt_;
  std::size_t m_;
  std::size_t k_ = 0;
  double now_ = 0.0;
  bool with_jumps_;
  rng::CounterStream brownian_;
  rng::CounterStream bridge_;
  JumpClock clock_;
  std::vector<double> split_;
};

/// State of one Euler-Maruyama path.
class EulerProcess {
 public:
  EulerProcess(const ModelSpec& model, const Segment& xi, bool keep_history = true);

  const PathHistory& history() const noexcept { return path_; }
  PathHistory& history() noexcept { return path_; }
  double time() const noexcept { return path_.time(); }
  std::span<const double> state() const noexcept { return path_.state(); }

  /// X += b h + sigma dW - gamma c1 h + extra h, coefficients at X_t.
  /// Returns gamma(X_t). Throws DivergenceError on a non-finite state.
  void step(double t1, std::span<const double> dW, std::span<const double> extra = {});

  /// Jump at the current time: X(t) = X(t-) + gamma(X_{t-}) c(z).
  void jump(double mark);

  /// Optional hook called with the diffusion matrix used by the last step.
  const std::vector<double>& last_sigma() const noexcept { return sigma_; }

 private:
  const ModelSpec& model_;
  PathHistory path_;
  bool keep_;
  std::vector<double> drift_, sigma_, next_, c_;
  bool sigma_cached_ = false;
};

/// Full trajectory on [0, horizon] with the event log.
Trajectory simulate(const ModelSpec& model, const Segment& xi, const SimConfig& cfg);

/// Same scheme with the jump stream suppressed and the compensator kept.
Trajectory simulate_auxiliary(const ModelSpec& model, const Segment& xi, const SimConfig& cfg);

/// Streaming integration: `observe(process)` is called at every requested
/// time (ascending, within the horizon) while only a tau-window is stored.
struct StreamOptions {
  bool with_jumps = true;
};
std::size_t simulate_streaming(const ModelSpec& model, const Segment& xi, const SimConfig& cfg,
                               std::span<const double> observe_times,
                               const std::function<void(std::size_t, const EulerProcess&)>& observe,
                               StreamOptions opts = {});

/// Kernels h(t, z) for the linear jump OU testbed.
struct JumpKernel {
  enum class Kind { constant, mark };
  Kind kind = Kind::constant;
  double value = 1.0;
  double operator()(double z) const noexcept { return kind == Kind::constant ? value : z; }
};

struct LinearJumpOuConfig {
  double rate = 1.0;
  MarkLaw mark = MarkLaw::atom(1.0);
  JumpKernel h;
};

struct LinearJumpOuPath {
  Trajectory traj;
  double sup_abs = 0.0;  // sup over [0, horizon] of |Y|
};

/// Y(t) = sum over jumps s <= t of e^{-lambda (t - s)} h(z) minus the
/// compensator, evaluated at grid and jump times.
LinearJumpOuPath simulate_linear_jump_ou(double lambda, const LinearJumpOuConfig& spec,
                                         const SimConfig& cfg);

/// Mean of sup over [t0, t1] of |X|^p across a batch, with standard error.
stats::MeanEstimate sup_moment_estimate(std::span<const Trajectory> trajs, double p, double t0,
                                        double t1);

}  // namespace ergo
