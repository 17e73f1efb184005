#pragma once

// Growing path storage for simulated processes.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "ergo/segment.hpp"

namespace ergo {

/// Stored points (t, X(t)) in increasing time, the initial segment embedded
/// at t in [-tau, 0]. Jump points keep X(t-) alongside X(t).
class PathHistory {
 public:
  explicit PathHistory(const Segment& xi);

  std::size_t dim() const noexcept { return dim_; }
  double tau() const noexcept { return tau_; }
  std::size_t size() const noexcept { return times_.size() - offset_; }

  double time() const noexcept { return times_.back(); }
  std::span<const double> state() const noexcept {
    return std::span<const double>(states_).last(dim_);
  }

  /// Appends a continuous point; t must exceed time().
  void append(double t, std::span<const double> x);

  /// Turns the last point into a jump point: its current value becomes the
  /// left limit and `post` the new value.
  void jump_last(std::span<const double> post);

  /// X_t for the latest stored time.
  SegmentView view(bool left_limits = false) const noexcept { return view_at(time(), left_limits); }
  SegmentView view_at(double t, bool left_limits = false) const noexcept;

  /// Forgets points that can no longer enter a window ending at or after
  /// `t`: everything before the last point at or before t - tau.
  void prune_for(double t);

  std::span<const double> times() const noexcept {
    return std::span<const double>(times_).subspan(offset_);
  }
  std::span<const double> states() const noexcept {
    return std::span<const double>(states_).subspan(offset_ * dim_);
  }
  std::span<const double> pre_states() const noexcept {
    return std::span<const double>(pre_).subspan(offset_ * dim_);
  }
  std::span<const std::uint8_t> jumps() const noexcept {
    return std::span<const std::uint8_t>(jumps_).subspan(offset_);
  }

 private:
  double tau_;
  std::size_t dim_;
  std::size_t offset_ = 0;
  std::vector<double> times_;
  std::vector<double> states_;
  std::vector<double> pre_;
  std::vector<std::uint8_t> jumps_;
};

struct JumpEvent {
  double time = 0.0;
  double mark = 0.0;
  std::vector<double> pre;
};

struct Trajectory {
  PathHistory path;
  std::vector<JumpEvent> events;
};

/// X_t re-indexed to [-tau, 0]; t must lie in [0, last stored time].
Segment segment_at(const Trajectory& traj, double t);
Segment segment_at(const PathHistory& path, double t);

/// CSV with columns t, x_1..x_n, is_jump, mark (mark empty off jumps).
void write_trajectory_csv(std::ostream& out, const Trajectory& traj);

}  // namespace ergo
