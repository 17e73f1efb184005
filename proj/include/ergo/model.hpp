#pragma once

// Coefficient tuples of delay equations with jumps, built-in instances, and
// empirical probes of the Lipschitz-type and nondegeneracy assumptions.

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ergo/rng.hpp"
#include "ergo/segment.hpp"

namespace ergo {

/// Law of a scalar mark z.
struct MarkLaw {
  enum class Kind { atom, normal };
  Kind kind = Kind::atom;
  double a = 1.0;  // atom value, or mean
  double b = 0.0;  // unused, or standard deviation

  static MarkLaw atom(double v) { return {Kind::atom, v, 0.0}; }
  static MarkLaw normal(double mean, double sd) { return {Kind::normal, mean, sd}; }

  double sample(rng::Engine& e) const noexcept;
  double mean() const noexcept { return a; }
  double second_moment() const noexcept { return kind == Kind::atom ? a * a : a * a + b * b; }
};

using VectorFunctional = std::function<void(const SegmentView&, std::span<double>)>;
using ScalarFunctional = std::function<double(const SegmentView&)>;

struct ModelSpec {
  std::string name;
  std::size_t n = 1;  // state dimension
  std::size_t m = 1;  // Brownian dimension
  double tau = 1.0;

  VectorFunctional drift;      // writes n values
  VectorFunctional diffusion;  // writes n*m values, row-major
  ScalarFunctional jump_coeff;
  double jump_rate = 0.0;
  std::function<double(rng::Engine&)> mark_sampler;
  std::function<void(double, std::span<double>)> jump_map;  // writes n values

  std::vector<double> c_moment1;  // integral of c(z) against the jump measure
  double c_moment2 = 0.0;         // integral of |c(z)|^2
  double K = 0.0;
  /// Constant in the drift inequality for V = |phi(0)|^2, f(u) = u.
  double lyapunov_K = 0.0;
  /// sigma does not depend on the segment; lets callers cache its inverse.
  bool constant_diffusion = false;
};

/// Monte Carlo estimates of the jump moments, used when no closed form is
/// known. `samples` marks are drawn from a fixed stream.
struct JumpMoments {
  std::vector<double> moment1, moment1_stderr;
  double moment2 = 0.0, moment2_stderr = 0.0;
};
JumpMoments estimate_jump_moments(const ModelSpec& model, std::size_t samples,
                                  std::uint64_t seed = 0);

/// Structural checks. With `moments_known == false` the jump moments are
/// estimated and filled in, and K must dominate the second moment within
/// three standard errors.
void validate_model(ModelSpec& model, bool moments_known = true);

enum class BuiltinKind { ou_jump, linear_delay };

struct BuiltinParams {
  double a = 1.0;
  double g1 = 0.0;
  double sigma0 = 1.0;
  double gamma0 = 1.0;
  double c_scale = 1.0;
  double jump_rate = 0.0;
  MarkLaw mark = MarkLaw::atom(1.0);
  double tau = 1.0;
  /// Accept a <= 0 and sigma0 == 0 (negative controls and noise-free
  /// oracles). sigma0 < 0 is always rejected.
  bool relaxed = false;
};

ModelSpec make_builtin(BuiltinKind kind, const BuiltinParams& p);

/// Random segments mixing rough bridge-like paths, sinusoids and step
/// functions with jumps.
struct SegmentSampler {
  double tau = 1.0;
  std::size_t dim = 1;
  double dt = 0.05;
  double scale = 2.0;

  Segment sample(rng::Engine& e) const;
  /// (phi, psi) with psi a random perturbation of phi, or independent.
  std::pair<Segment, Segment> sample_pair(rng::Engine& e) const;
};

struct A1Report {
  double k_hat = 0.0;
  double K = 0.0;
  std::size_t trials = 0;
  bool pass = false;
};

/// Largest observed ratio of the one-sided Lipschitz expression to the
/// squared sup distance.
A1Report check_assumption_a1(const ModelSpec& model, const SegmentSampler& sampler,
                             std::size_t trials, std::uint64_t seed = 0);

struct A3Report {
  double max_value = 0.0;       // max of |sigma|_HS + |sigma^-1|_HS
  double min_singular = 0.0;    // smallest singular value seen
  std::size_t violations = 0;   // samples with a singular sigma
  std::size_t trials = 0;
  double K = 0.0;
  bool pass = false;
};

A3Report check_assumption_a3(const ModelSpec& model, const SegmentSampler& sampler,
                             std::size_t trials, std::uint64_t seed = 0);

/// Inverse of the n x n diffusion matrix at a segment (row-major), or
/// nullopt when the smallest singular value is at most 1e-10.
std::optional<std::vector<double>> diffusion_inverse(const ModelSpec& model,
                                                     const SegmentView& at);

}  // namespace ergo
