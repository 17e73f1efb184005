#pragma once

// Cadlag segments on [-tau, 0] and the metrics on them.
//
// A segment stores values on a strictly increasing grid and is read with
// last-value (right-continuous) interpolation between grid points. Grid
// points flagged as jumps also carry the left-limit ("pre") value. At an
// unflagged grid point the left limit equals the stored value.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <vector>

namespace ergo {

/// Tolerance used when matching time points.
inline double time_tolerance(double t) noexcept {
  return 1e-12 * std::max(1.0, std::fabs(t));
}

class Segment;

/// Non-owning window X_t = X(t + theta), theta in [-tau, 0], over a stored
/// path. Coefficient functionals receive one of these. With left_limits set
/// it reads X_{t-}: pre-jump values at flagged points.
class SegmentView {
 public:
  SegmentView(std::span<const double> times, std::span<const double> states,
              std::span<const double> pre_states, std::span<const std::uint8_t> jumps,
              std::size_t dim, double now, double tau, bool left_limits = false) noexcept
      : times_(times),
        states_(states),
        pre_(pre_states),
        jumps_(jumps),
        dim_(dim),
        now_(now),
        tau_(tau),
        left_(left_limits) {}

  std::size_t dim() const noexcept { return dim_; }
  double tau() const noexcept { return tau_; }
  /// Absolute time of theta = 0.
  double now() const noexcept { return now_; }
  bool reads_left_limits() const noexcept { return left_; }

  /// Value at theta in [-tau, 0].
  std::span<const double> at(double theta) const noexcept {
    const std::size_t i = index_at(now_ + theta);
    return point(i, left_ && jumps_[i] != 0 &&
                        std::fabs(times_[i] - (now_ + theta)) <= time_tolerance(now_));
  }

  /// phi(0); for a left-limit view this is phi(0-).
  std::span<const double> current() const noexcept { return at(0.0); }

  SegmentView left_limit() const noexcept {
    return SegmentView(times_, states_, pre_, jumps_, dim_, now_, tau_, true);
  }

  /// sup over the window of the Euclidean norm, including pre-jump values.
  double sup_norm() const noexcept;

  /// Materializes the window as a Segment on [-tau, 0].
  Segment to_segment() const;

  /// Index of the last stored point at or before absolute time s.
  std::size_t index_at(double s) const noexcept {
    const double key = s + time_tolerance(s);
    auto it = std::upper_bound(times_.begin(), times_.end(), key);
    if (it == times_.begin()) return 0;
    return static_cast<std::size_t>(it - times_.begin()) - 1;
  }

 private:
  std::span<const double> point(std::size_t i, bool pre) const noexcept {
    const auto& src = pre ? pre_ : states_;
    return src.subspan(i * dim_, dim_);
  }

  std::span<const double> times_;
  std::span<const double> states_;
  std::span<const double> pre_;
  std::span<const std::uint8_t> jumps_;
  std::size_t dim_;
  double now_;
  double tau_;
  bool left_;
};

/// Immutable cadlag path on [-tau, 0].
class Segment {
 public:
  /// Validates: grid strictly increasing from -tau to 0, finite values,
  /// pre_values keys are grid indices > 0.
  Segment(double tau, std::size_t dim, std::vector<double> grid, std::vector<double> values,
          const std::map<std::size_t, std::vector<double>>& pre_values = {});

  /// Dense form: `pre` has the same layout as `values`; entries at
  /// unflagged points are ignored and overwritten with the values.
  static Segment from_dense(double tau, std::size_t dim, std::vector<double> grid,
                            std::vector<double> values, std::vector<std::uint8_t> jumps,
                            std::vector<double> pre);

  static Segment constant(double tau, std::span<const double> value);
  static Segment constant(double tau, double value);

  /// Scalar segment sampled from fn(theta) on a uniform grid of step dt.
  template <class Fn>
  static Segment sampled(double tau, double dt, Fn&& fn) {
    const std::size_t steps = grid_steps(tau, dt);
    std::vector<double> grid(steps + 1), values(steps + 1);
    for (std::size_t i = 0; i <= steps; ++i) {
      grid[i] = i == steps ? 0.0 : -tau + static_cast<double>(i) * dt;
      values[i] = fn(grid[i]);
    }
    return Segment(tau, 1, std::move(grid), std::move(values));
  }

  /// Number of dt steps covering tau; dt must divide tau to within 1e-12.
  static std::size_t grid_steps(double tau, double dt);

  double tau() const noexcept { return tau_; }
  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return grid_.size(); }

  const std::vector<double>& grid() const noexcept { return grid_; }
  const std::vector<double>& values() const noexcept { return values_; }
  const std::vector<double>& pre_values() const noexcept { return pre_; }
  const std::vector<std::uint8_t>& jump_flags() const noexcept { return jumps_; }

  std::span<const double> value(std::size_t i) const noexcept {
    return std::span<const double>(values_).subspan(i * dim_, dim_);
  }
  std::span<const double> pre_value(std::size_t i) const noexcept {
    return std::span<const double>(pre_).subspan(i * dim_, dim_);
  }
  bool is_jump(std::size_t i) const noexcept { return jumps_[i] != 0; }
  std::vector<std::size_t> jump_indices() const;

  SegmentView view(bool left_limits = false) const noexcept {
    return SegmentView(grid_, values_, pre_, jumps_, dim_, 0.0, tau_, left_limits);
  }

  /// Cadlag value at theta.
  std::span<const double> at(double theta) const noexcept { return view().at(theta); }

 private:
  Segment() = default;
  void validate_and_normalize();

  double tau_ = 0.0;
  std::size_t dim_ = 0;
  std::vector<double> grid_;
  std::vector<double> values_;
  std::vector<std::uint8_t> jumps_;
  std::vector<double> pre_;
};

/// Strictly increasing piecewise-linear time change of [-tau, 0] with pinned
/// endpoints.
class TimeChange {
 public:
  TimeChange(std::vector<double> knots, std::vector<double> images);
  static TimeChange identity(double tau);

  /// sup |log((l(t) - l(s)) / (t - s))| = max over pieces of |log slope|.
  double distortion() const noexcept;
  double operator()(double t) const noexcept;
  double inverse(double u) const noexcept;

  const std::vector<double>& knots() const noexcept { return knots_; }
  const std::vector<double>& images() const noexcept { return images_; }

  /// The segment theta -> s(lambda(theta)).
  Segment compose(const Segment& s) const;

 private:
  std::vector<double> knots_;
  std::vector<double> images_;
};

double sup_norm(const Segment& s) noexcept;

/// sup over the merged grid of |a - b|, including left limits at jump points
/// of either segment.
double sup_distance(const Segment& a, const Segment& b);

/// Componentwise |a - b| <= tol on merged grids, left limits included.
bool approx_equal(const Segment& a, const Segment& b, double tol = 1e-12);

struct SkorohodOpts {
  std::size_t max_knots = 4;
  std::vector<double> refinement{0.25, 0.5, 0.75};
};

struct SkorohodResult {
  double value = 0.0;
  TimeChange lambda = TimeChange::identity(1.0);
  /// True when the optimum composed b rather than a.
  bool swapped = false;
};

/// Minimum of distortion + sup deviation over a finite family of time
/// changes that contains the identity; an upper bound on the Skorohod
/// distance that never exceeds sup_distance.
SkorohodResult skorohod_search(const Segment& a, const Segment& b, const SkorohodOpts& opts = {});

inline double skorohod_upper(const Segment& a, const Segment& b, const SkorohodOpts& opts = {}) {
  return skorohod_search(a, b, opts).value;
}

/// Union grid of a set of segments with an extra left-limit slot at every
/// point where any member jumps. Densifying members on a shared SlotGrid
/// turns sup_distance into a flat max-reduction.
struct SlotGrid {
  double tau = 0.0;
  std::size_t dim = 0;
  std::vector<double> points;
  std::vector<std::uint8_t> left_slot;
  std::size_t slots = 0;
};

SlotGrid make_slot_grid(std::span<const Segment* const> members);

/// Planar buffer of length dim * slots (component k at [k * slots, ...)).
std::vector<double> densify(const Segment& s, const SlotGrid& grid);

/// sup_distance between two densified members.
double slot_distance(std::span<const double> a, std::span<const double> b, std::size_t dim,
                     std::size_t slots) noexcept;

void write_segment_csv(std::ostream& out, const Segment& s);
Segment read_segment_csv(std::istream& in);

}  // namespace ergo
