#pragma once

// Shared-noise coupling (X, Y): Y starts at eta, uses the same Brownian
// increments and jump stream as X, and receives the extra drift
// lambda (X(t) - Y(t)). The drift change is absorbed by the Girsanov shift
// theta0 = lambda sigma^{-1}(Y_t) (X(t) - Y(t)).

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ergo/model.hpp"
#include "ergo/simulate.hpp"
#include "ergo/stats.hpp"
#include "ergo/verdict.hpp"

namespace ergo {

class CoupledSimulator {
 public:
  /// With track_girsanov the diffusion of Y must stay invertible; a singular
  /// sigma(Y_t) raises ErrorKind::invalid_model.
  CoupledSimulator(const ModelSpec& model, const Segment& xi, const Segment& eta, double lambda,
                   const SimConfig& cfg, bool track_girsanov = true);

  /// Integrates whole dt-steps until time() >= t (or the horizon).
  void advance_to(double t);

  double time() const noexcept { return x_.time(); }
  const EulerProcess& x() const noexcept { return x_; }
  const EulerProcess& y() const noexcept { return y_; }

  /// 1/2 int_0^t |theta0|^2 ds by the trapezoidal rule.
  double kl() const noexcept { return kl_; }
  /// -int theta0 . dW - 1/2 int |theta0|^2 ds with left-point theta0.
  double log_weight() const noexcept { return log_weight_; }
  /// |theta0|^2 at the end of every sub-step.
  const std::vector<double>& kl_integrand() const noexcept { return integrand_; }
  void record_integrand(bool on) noexcept { record_ = on; }

  /// sup over [t - tau, t] of |X - Y|, left limits included.
  double gap_sup(double t) const;

  /// Drops stored points no longer needed for windows ending at or after t.
  void prune_for(double t);

  std::size_t jumps() const noexcept { return noise_.jumps(); }

  Trajectory take_x();
  Trajectory take_y();

 private:
  void theta(std::span<double> out);

  const ModelSpec& model_;
  double lambda_;
  SimConfig cfg_;
  bool girsanov_;
  EulerProcess x_, y_;
  NoiseDriver noise_;
  std::vector<SubStep> steps_;
  std::vector<JumpEvent> events_x_, events_y_;
  std::vector<double> extra_, theta_left_, theta_right_, sigma_inv_;
  bool sigma_inv_cached_ = false;
  bool record_ = false;
  double kl_ = 0.0;
  double log_weight_ = 0.0;
  std::vector<double> integrand_;
};

struct CoupledRun {
  Trajectory x;
  Trajectory y;
  double lambda = 0.0;
  std::vector<double> kl_integrand_log;
  double kl = 0.0;
  double girsanov_log_weight = 0.0;
};

CoupledRun simulate_coupled(const ModelSpec& model, const Segment& xi, const Segment& eta,
                            double lambda, const SimConfig& cfg);

struct DecayFit {
  double alpha_target = 0.0;
  double lambda_used = 0.0;
  double kappa = 0.0;    // 2 lambda - alpha
  double K_prime = 0.0;  // K + K^2
  double gap0 = 0.0;     // |xi - eta|_inf
  std::vector<double> times;
  std::vector<double> mean_sq, mean_sq_stderr;
  std::vector<double> log_mean_sq, log_stderr;
  std::vector<double> mean_gap, mean_gap_stderr;  // first moment
  std::vector<double> bound;                      // 4 e^{alpha tau} gap0^2 e^{-alpha t}
  double fitted_slope = 0.0;
  double fitted_intercept = 0.0;
  double slope_stderr = 0.0;
  double theoretical_prefactor = 0.0;  // 4 e^{alpha tau}
  bool pass_slope = false;
  bool pass_prefactor = false;
  std::size_t n_paths = 0;
  // Filled when KL tracking was requested.
  std::optional<stats::MeanEstimate> kl;
};

struct DecayOptions {
  double slope_tol_fraction = 0.1;  // slope must be <= -alpha (1 - fraction)
  bool track_kl = false;
  std::size_t min_paths = 100;
};

DecayFit estimate_decay(const ModelSpec& model, const Segment& xi, const Segment& eta,
                        double lambda, double alpha, std::span<const double> times,
                        std::size_t n_paths, const SimConfig& cfg, const DecayOptions& opts = {});

struct LambdaSelection {
  double lambda = 0.0;
  DecayFit pilot;
  std::vector<double> probed;
};

LambdaSelection select_lambda(const ModelSpec& model, const Segment& xi, const Segment& eta,
                              double alpha, std::span<const double> times, std::size_t n_paths,
                              const SimConfig& cfg, double lambda_max = 1024.0);

struct KlReport {
  double kl = 0.0;
  double kl_stderr = 0.0;
  double tv_bound = 0.0;     // sqrt(kl / 2)
  double constant_bound = 0.0;  // lambda K sqrt(C) |xi - eta| / (2 sqrt(alpha)), C = 4 e^{alpha tau}
  std::size_t n = 0;
  double horizon = 0.0;
};

/// Total-variation constant from the coupling argument.
double coupling_tv_constant(double lambda, double K, double alpha, double tau, double gap);

KlReport kl_and_tv(std::span<const double> kl_per_path, double lambda, double K, double alpha,
                   double tau, double gap, double horizon);
KlReport kl_and_tv(std::span<const CoupledRun> runs, const ModelSpec& model, double alpha,
                   const Segment& xi, const Segment& eta);

struct TestFunctional {
  enum class Kind { identity, ball };
  Kind kind = Kind::identity;
  double radius = 1.0;
  double operator()(std::span<const double> x) const noexcept;
};

struct ReweightReport {
  stats::MeanEstimate weighted;
  stats::MeanEstimate plain;
  double z = 0.0;
  std::size_t truncated = 0;
  double max_log_weight = 0.0;
  double mean_weight = 0.0;
  bool pass = false;  // |z| <= 3
};

ReweightReport importance_reweight_check(const ModelSpec& model, const Segment& xi,
                                         const Segment& eta, double lambda,
                                         const TestFunctional& g, std::size_t n_paths,
                                         const SimConfig& cfg);

struct C1PairReport {
  DecayFit decay;
  KlReport kl;
  bool kl_available = false;
  bool pass_first_moment = false;  // E|X_t - Y_t| <= r(t) |xi - eta|
  bool pass_kl = false;
  bool pass = false;
};

struct C1Options {
  std::optional<double> lambda;  // nullopt selects adaptively
  double lambda_max = 1024.0;
  DecayOptions decay;
};

struct C1Report {
  double alpha = 0.0;
  std::vector<C1PairReport> pairs;
  /// inconclusive when the KL item could not be evaluated (singular sigma).
  Verdict verdict = Verdict::inconclusive;
};

C1Report condition_c1_report(const ModelSpec& model,
                             std::span<const std::pair<Segment, Segment>> pairs, double alpha,
                             std::span<const double> times, std::size_t n_paths,
                             const SimConfig& cfg, const C1Options& opts = {});

}  // namespace ergo
