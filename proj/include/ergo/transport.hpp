#pragma once

// Optimal transport between empirical measures of segments under a ground
// metric capped at 1.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ergo/model.hpp"
#include "ergo/segment.hpp"
#include "ergo/simulate.hpp"

namespace ergo {

enum class GroundMetric { sup_capped, skorohod_upper_capped };

const char* to_string(GroundMetric m) noexcept;

struct EmpiricalMeasure {
  std::vector<Segment> atoms;
  std::vector<double> weights;
  GroundMetric metric = GroundMetric::sup_capped;

  static EmpiricalMeasure uniform(std::vector<Segment> atoms,
                                  GroundMetric metric = GroundMetric::sup_capped);

  std::size_t size() const noexcept { return atoms.size(); }
  bool is_uniform() const noexcept;
  /// Nonempty, shared tau and dimension, weights >= 0 summing to 1.
  void validate() const;
};

/// Dense row-major cost matrix.
struct CostMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  double operator()(std::size_t i, std::size_t j) const noexcept { return data[i * cols + j]; }
  double& at(std::size_t i, std::size_t j) noexcept { return data[i * cols + j]; }
  CostMatrix transposed() const;
  /// Sub-matrix on the given rows and columns (repeats allowed).
  CostMatrix select(std::span<const std::size_t> r, std::span<const std::size_t> c) const;
};

/// cost_ij = min(rho(a_i, b_j), 1). Sup distances go through one shared
/// SlotGrid and the planar max kernel.
CostMatrix cost_matrix(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu);
CostMatrix cost_matrix(std::span<const Segment> a, std::span<const Segment> b, GroundMetric metric);

enum class SolverKind { assignment, min_cost_flow, sinkhorn };

const char* to_string(SolverKind s) noexcept;

struct TransportPlan {
  double cost = 0.0;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> coupling;  // row-major, rows x cols
  SolverKind solver = SolverKind::assignment;
  std::size_t iterations = 0;
  double epsilon = 0.0;
  bool converged = true;
  /// Max marginal violation of the returned plan.
  double marginal_error = 0.0;

  double operator()(std::size_t i, std::size_t j) const noexcept { return coupling[i * cols + j]; }
};

inline constexpr std::size_t exact_cap = 512;

/// Minimum-cost perfect matching of a square matrix; returns the column
/// assigned to each row.
std::vector<std::size_t> solve_assignment(const CostMatrix& c);

/// Exact discrete transport. Equal-size uniform weights use the assignment
/// solver, anything else successive shortest paths. Throws cap_exceeded
/// above `cap` atoms per side.
TransportPlan solve_exact(const CostMatrix& c, std::span<const double> a, std::span<const double> b,
                          std::size_t cap = exact_cap);

struct SinkhornOptions {
  double epsilon = 1e-2;
  std::size_t max_iter = 10000;
  /// Stop when the column marginal error falls below this.
  double tolerance = 1e-10;
  /// Anneal epsilon from the cost range down to the target.
  bool epsilon_scaling = true;
};

/// Log-domain entropic transport rounded onto the feasible set, so the
/// reported cost is the cost of a genuine coupling.
TransportPlan solve_sinkhorn(const CostMatrix& c, std::span<const double> a,
                             std::span<const double> b, const SinkhornOptions& opts = {});

TransportPlan wasserstein_exact(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                                std::size_t cap = exact_cap);
TransportPlan wasserstein_sinkhorn(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                                   double epsilon, std::size_t max_iter = 10000);

/// Exact when both sides fit under the cap, else entropic with
/// epsilon = 1e-2 * median cost.
TransportPlan wasserstein_auto(const CostMatrix& c, std::span<const double> a,
                               std::span<const double> b, std::size_t cap = exact_cap);

/// Time-marginal distances between two ensembles.
struct MarginalOptions {
  GroundMetric metric = GroundMetric::sup_capped;
  std::size_t bootstrap = 100;
  std::size_t cap = exact_cap;
  /// Against a reference ensemble X_{T_ref} started from the first
  /// initial segment with independent seeds, instead of the second segment.
  bool reference = false;
  double reference_time = 20.0;
  /// Start of the reference ensemble; defaults to the first segment.
  std::optional<Segment> reference_start;
  bool with_jumps = true;
};

struct MarginalPoint {
  double t = 0.0;
  double w_upper = 0.0;
  double stderr_boot = 0.0;
  std::size_t n_samples = 0;
  SolverKind solver = SolverKind::assignment;
};

struct MarginalCurve {
  std::vector<MarginalPoint> points;
};

/// W_{rho ^ 1} between the laws of X_t started at xi and at eta (common
/// random numbers across the two sides), or between X_t^xi and the
/// reference ensemble. Bootstrap standard errors resample sample indices,
/// jointly on both sides for paired ensembles.
MarginalCurve wasserstein_time_marginals(const ModelSpec& model, const Segment& xi,
                                         const Segment& eta, std::span<const double> times,
                                         std::size_t n_samples, const SimConfig& cfg,
                                         const MarginalOptions& opts = {});

struct TrendTest {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
  double z = 0.0;
  bool decreasing = false;
  bool final_below_initial = false;
};

/// Weighted fit of log w_upper against t. Decreasing when slope < 0 with
/// |z| > 3; a curve that reaches 0 counts as decreasing.
TrendTest trend_test(const MarginalCurve& curve);

void write_curve_csv(std::ostream& out, const MarginalCurve& curve);

}  // namespace ergo
