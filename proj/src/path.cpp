#include "ergo/path.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>

#include "ergo/error.hpp"
#include "ergo/io.hpp"

namespace ergo {

PathHistory::PathHistory(const Segment& xi)
    : tau_(xi.tau()),
      dim_(xi.dim()),
      times_(xi.grid()),
      states_(xi.values()),
      pre_(xi.pre_values()),
      jumps_(xi.jump_flags()) {}

void PathHistory::append(double t, std::span<const double> x) {
  times_.push_back(t);
  states_.insert(states_.end(), x.begin(), x.end());
  pre_.insert(pre_.end(), x.begin(), x.end());
  jumps_.push_back(0);
}

void PathHistory::jump_last(std::span<const double> post) {
  const std::size_t at = states_.size() - dim_;
  std::copy(states_.begin() + static_cast<std::ptrdiff_t>(at), states_.end(),
            pre_.begin() + static_cast<std::ptrdiff_t>(at));
  std::copy(post.begin(), post.end(), states_.begin() + static_cast<std::ptrdiff_t>(at));
  jumps_.back() = 1;
}

SegmentView PathHistory::view_at(double t, bool left_limits) const noexcept {
  return SegmentView(times(), states(), pre_states(), jumps(), dim_, t, tau_, left_limits);
}

void PathHistory::prune_for(double t) {
  const auto ts = times();
  const double key = t - tau_ + time_tolerance(t);
  auto it = std::upper_bound(ts.begin(), ts.end(), key);
  if (it == ts.begin()) return;
  offset_ += static_cast<std::size_t>(it - ts.begin()) - 1;
  // Compact once the dead prefix dominates; amortized O(1) per point.
  if (offset_ > 1024 && offset_ * 2 > times_.size()) {
    times_.erase(times_.begin(), times_.begin() + static_cast<std::ptrdiff_t>(offset_));
    states_.erase(states_.begin(), states_.begin() + static_cast<std::ptrdiff_t>(offset_ * dim_));
    pre_.erase(pre_.begin(), pre_.begin() + static_cast<std::ptrdiff_t>(offset_ * dim_));
    jumps_.erase(jumps_.begin(), jumps_.begin() + static_cast<std::ptrdiff_t>(offset_));
    offset_ = 0;
  }
}

Segment segment_at(const PathHistory& path, double t) {
  const auto ts = path.times();
  require(t >= ts.front() + path.tau() - time_tolerance(t) && t <= path.time() + time_tolerance(t),
          ErrorKind::invalid_argument,
          "segment_at: t = " + io::format_double(t) + " is outside the stored horizon");
  return path.view_at(t).to_segment();
}

Segment segment_at(const Trajectory& traj, double t) { return segment_at(traj.path, t); }

void write_trajectory_csv(std::ostream& out, const Trajectory& traj) {
  const PathHistory& p = traj.path;
  std::vector<std::string> row{"t"};
  for (std::size_t k = 1; k <= p.dim(); ++k) row.push_back("x_" + std::to_string(k));
  row.emplace_back("is_jump");
  row.emplace_back("mark");
  out << io::csv_row(row);

  std::size_t next_event = 0;
  const auto ts = p.times();
  const auto xs = p.states();
  const auto js = p.jumps();
  for (std::size_t i = 0; i < ts.size(); ++i) {
    row.assign(1, io::format_double(ts[i]));
    for (std::size_t k = 0; k < p.dim(); ++k) row.push_back(io::format_double(xs[i * p.dim() + k]));
    std::string mark;
    if (js[i] && ts[i] > 0.0) {
      while (next_event < traj.events.size() && traj.events[next_event].time < ts[i]) ++next_event;
      if (next_event < traj.events.size() && traj.events[next_event].time == ts[i])
        mark = io::format_double(traj.events[next_event].mark);
    }
    row.emplace_back(js[i] ? "1" : "0");
    row.push_back(mark);
    out << io::csv_row(row);
  }
}

}  // namespace ergo
