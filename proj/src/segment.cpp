#include "ergo/segment.hpp"

#include <bit>
#include <istream>
#include <limits>
#include <ostream>
#include <string>

#include "ergo/error.hpp"
#include "ergo/io.hpp"
#include "ergo/kernels.hpp"

namespace ergo {

// ---------------------------------------------------------------------------
// Segment

Segment::Segment(double tau, std::size_t dim, std::vector<double> grid,
                 std::vector<double> values,
                 const std::map<std::size_t, std::vector<double>>& pre_values)
    : tau_(tau), dim_(dim), grid_(std::move(grid)), values_(std::move(values)) {
  jumps_.assign(grid_.size(), 0);
  pre_ = values_;
  for (const auto& [index, pre] : pre_values) {
    require(index > 0 && index < grid_.size(), ErrorKind::invalid_argument,
            "Segment: pre_values key must be a grid index > 0");
    require(pre.size() == dim_, ErrorKind::dimension_mismatch,
            "Segment: pre_value has wrong dimension");
    jumps_[index] = 1;
    std::copy(pre.begin(), pre.end(), pre_.begin() + static_cast<std::ptrdiff_t>(index * dim_));
  }
  validate_and_normalize();
}

Segment Segment::from_dense(double tau, std::size_t dim, std::vector<double> grid,
                            std::vector<double> values, std::vector<std::uint8_t> jumps,
                            std::vector<double> pre) {
  Segment s;
  s.tau_ = tau;
  s.dim_ = dim;
  s.grid_ = std::move(grid);
  s.values_ = std::move(values);
  s.jumps_ = std::move(jumps);
  s.pre_ = std::move(pre);
  require(s.jumps_.size() == s.grid_.size(), ErrorKind::dimension_mismatch,
          "Segment: jump flag count differs from grid size");
  require(s.pre_.size() == s.values_.size(), ErrorKind::dimension_mismatch,
          "Segment: pre-value buffer differs from value buffer");
  require(s.jumps_.empty() || s.jumps_[0] == 0, ErrorKind::invalid_argument,
          "Segment: the first grid point cannot carry a jump");
  s.validate_and_normalize();
  return s;
}

void Segment::validate_and_normalize() {
  require(tau_ > 0.0 && std::isfinite(tau_), ErrorKind::invalid_argument,
          "Segment: tau must be positive and finite");
  require(dim_ >= 1, ErrorKind::invalid_argument, "Segment: dimension must be >= 1");
  require(grid_.size() >= 2, ErrorKind::invalid_argument,
          "Segment: grid needs both endpoints");
  require(values_.size() == grid_.size() * dim_, ErrorKind::dimension_mismatch,
          "Segment: values.len != grid.len * dim");
  require(std::fabs(grid_.front() + tau_) <= time_tolerance(tau_),
          ErrorKind::invalid_argument, "Segment: grid must start at -tau");
  require(std::fabs(grid_.back()) <= time_tolerance(tau_), ErrorKind::invalid_argument,
          "Segment: grid must end at 0");
  grid_.front() = -tau_;
  grid_.back() = 0.0;
  for (std::size_t i = 1; i < grid_.size(); ++i)
    require(grid_[i] > grid_[i - 1], ErrorKind::invalid_argument,
            "Segment: grid must be strictly increasing");
  for (std::size_t i = 0; i < grid_.size(); ++i) {
    for (std::size_t k = 0; k < dim_; ++k) {
      const std::size_t at = i * dim_ + k;
      require(std::isfinite(values_[at]), ErrorKind::invalid_argument,
              "Segment: values must be finite");
      if (jumps_[i] == 0) {
        pre_[at] = values_[at];
      } else {
        require(std::isfinite(pre_[at]), ErrorKind::invalid_argument,
                "Segment: pre-jump values must be finite");
      }
    }
  }
}

Segment Segment::constant(double tau, std::span<const double> value) {
  std::vector<double> values(value.begin(), value.end());
  values.insert(values.end(), value.begin(), value.end());
  return Segment(tau, value.size(), {-tau, 0.0}, std::move(values));
}

Segment Segment::constant(double tau, double value) {
  const double v[1] = {value};
  return constant(tau, std::span<const double>(v, 1));
}

std::size_t Segment::grid_steps(double tau, double dt) {
  require(dt > 0.0 && dt <= tau * (1.0 + 1e-12), ErrorKind::invalid_argument,
          "grid step must satisfy 0 < dt <= tau");
  const double ratio = tau / dt;
  const auto steps = static_cast<std::size_t>(std::llround(ratio));
  require(steps >= 1 && std::fabs(static_cast<double>(steps) * dt - tau) <=
                            1e-12 * std::max(1.0, tau),
          ErrorKind::invalid_argument, "dt must divide tau to within 1e-12");
  return steps;
}

std::vector<std::size_t> Segment::jump_indices() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < jumps_.size(); ++i)
    if (jumps_[i]) out.push_back(i);
  return out;
}

// ---------------------------------------------------------------------------
// SegmentView

namespace {

double norm(std::span<const double> v) noexcept {
  if (v.size() == 1) return std::fabs(v[0]);
  double acc = 0.0;
  for (double x : v) acc += x * x;
  return std::sqrt(acc);
}

}  // namespace

double SegmentView::sup_norm() const noexcept {
  const std::size_t last = index_at(now_);
  std::size_t i = index_at(now_ - tau_);
  double m = norm(point(i, false));
  for (++i; i <= last; ++i) {
    m = std::max(m, norm(point(i, false)));
    if (jumps_[i]) m = std::max(m, norm(point(i, true)));
  }
  return m;
}

Segment SegmentView::to_segment() const {
  const double start = now_ - tau_;
  const std::size_t first = index_at(start);
  const std::size_t last = index_at(now_);
  const double tol = time_tolerance(now_);

  std::vector<double> grid{-tau_};
  std::vector<double> values(states_.begin() + static_cast<std::ptrdiff_t>(first * dim_),
                             states_.begin() + static_cast<std::ptrdiff_t>((first + 1) * dim_));
  std::vector<std::uint8_t> jumps{0};
  std::vector<double> pre = values;
  for (std::size_t i = first + 1; i <= last; ++i) {
    if (times_[i] <= start + tol) continue;
    const bool final_point = times_[i] >= now_ - tol;
    grid.push_back(final_point ? 0.0 : times_[i] - now_);
    const auto v = point(i, false);
    const auto p = point(i, jumps_[i] != 0);
    values.insert(values.end(), v.begin(), v.end());
    pre.insert(pre.end(), p.begin(), p.end());
    jumps.push_back(jumps_[i]);
  }
  if (grid.back() != 0.0) {
    // Window ends between stored points: the path is flat up to theta = 0.
    const auto v = point(last, false);
    grid.push_back(0.0);
    values.insert(values.end(), v.begin(), v.end());
    pre.insert(pre.end(), v.begin(), v.end());
    jumps.push_back(0);
  }
  return Segment::from_dense(tau_, dim_, std::move(grid), std::move(values), std::move(jumps),
                             std::move(pre));
}

// ---------------------------------------------------------------------------
// TimeChange

TimeChange::TimeChange(std::vector<double> knots, std::vector<double> images)
    : knots_(std::move(knots)), images_(std::move(images)) {
  require(knots_.size() >= 2 && knots_.size() == images_.size(), ErrorKind::invalid_argument,
          "TimeChange: knots and images must have equal length >= 2");
  require(knots_.front() == images_.front() && knots_.back() == 0.0 && images_.back() == 0.0,
          ErrorKind::invalid_argument, "TimeChange: endpoints must be pinned");
  for (std::size_t i = 1; i < knots_.size(); ++i) {
    require(knots_[i] > knots_[i - 1], ErrorKind::invalid_argument,
            "TimeChange: knots must be strictly increasing");
    require(images_[i] > images_[i - 1], ErrorKind::invalid_argument,
            "TimeChange: images must be strictly increasing");
  }
}

TimeChange TimeChange::identity(double tau) { return TimeChange({-tau, 0.0}, {-tau, 0.0}); }

double TimeChange::distortion() const noexcept {
  double d = 0.0;
  for (std::size_t i = 1; i < knots_.size(); ++i) {
    const double slope = (images_[i] - images_[i - 1]) / (knots_[i] - knots_[i - 1]);
    d = std::max(d, std::fabs(std::log(slope)));
  }
  return d;
}

namespace {

double interpolate(const std::vector<double>& xs, const std::vector<double>& ys, double x) {
  if (x <= xs.front()) return ys.front();
  if (x >= xs.back()) return ys.back();
  const auto it = std::upper_bound(xs.begin(), xs.end(), x);
  const std::size_t i = static_cast<std::size_t>(it - xs.begin());
  const double w = (x - xs[i - 1]) / (xs[i] - xs[i - 1]);
  return ys[i - 1] + w * (ys[i] - ys[i - 1]);
}

}  // namespace

double TimeChange::operator()(double t) const noexcept { return interpolate(knots_, images_, t); }

double TimeChange::inverse(double u) const noexcept { return interpolate(images_, knots_, u); }

Segment TimeChange::compose(const Segment& s) const {
  std::vector<double> grid(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) grid[i] = inverse(s.grid()[i]);
  grid.front() = -s.tau();
  grid.back() = 0.0;
  return Segment::from_dense(s.tau(), s.dim(), std::move(grid), s.values(), s.jump_flags(),
                             s.pre_values());
}

// ---------------------------------------------------------------------------
// Metrics

double sup_norm(const Segment& s) noexcept {
  const auto& k = kernels::active();
  if (s.dim() == 1)
    return std::max(k.max_abs(s.values().data(), s.size()),
                    k.max_abs(s.pre_values().data(), s.size()));
  return s.view().sup_norm();
}

namespace {

void check_compatible(const Segment& a, const Segment& b) {
  require(std::fabs(a.tau() - b.tau()) <= time_tolerance(a.tau()),
          ErrorKind::dimension_mismatch, "segments have different delay horizons");
  require(a.dim() == b.dim(), ErrorKind::dimension_mismatch,
          "segments have different state dimensions");
}

bool same_grid(const Segment& a, const Segment& b) noexcept {
  return a.grid() == b.grid();
}

// On a shared grid the left-limit buffers already hold values at unflagged
// points, so comparing both buffers covers every slot of the merged layout.
double shared_grid_distance(const Segment& a, const Segment& b) noexcept {
  const auto& k = kernels::active();
  if (a.dim() == 1)
    return std::max(k.max_abs_diff(a.values().data(), b.values().data(), a.size()),
                    k.max_abs_diff(a.pre_values().data(), b.pre_values().data(), a.size()));
  double m = 0.0;
  const std::size_t n = a.dim();
  for (std::size_t i = 0; i < a.size(); ++i) {
    double v = 0.0, p = 0.0;
    for (std::size_t c = 0; c < n; ++c) {
      const double dv = a.values()[i * n + c] - b.values()[i * n + c];
      const double dp = a.pre_values()[i * n + c] - b.pre_values()[i * n + c];
      v += dv * dv;
      p += dp * dp;
    }
    m = std::max({m, v, p});
  }
  return std::sqrt(m);
}

}  // namespace

SlotGrid make_slot_grid(std::span<const Segment* const> members) {
  require(!members.empty(), ErrorKind::invalid_argument, "make_slot_grid: no members");
  SlotGrid g;
  g.tau = members.front()->tau();
  g.dim = members.front()->dim();

  std::vector<double> all;
  for (const Segment* s : members) {
    check_compatible(*members.front(), *s);
    all.insert(all.end(), s->grid().begin(), s->grid().end());
  }
  std::sort(all.begin(), all.end());
  for (double p : all)
    if (g.points.empty() || p - g.points.back() > time_tolerance(g.tau)) g.points.push_back(p);

  g.left_slot.assign(g.points.size(), 0);
  for (const Segment* s : members) {
    for (std::size_t i : s->jump_indices()) {
      const double t = s->grid()[i];
      auto it = std::upper_bound(g.points.begin(), g.points.end(), t + time_tolerance(g.tau));
      g.left_slot[static_cast<std::size_t>(it - g.points.begin()) - 1] = 1;
    }
  }
  g.slots = g.points.size();
  for (auto f : g.left_slot) g.slots += f;
  return g;
}

std::vector<double> densify(const Segment& s, const SlotGrid& grid) {
  const std::size_t n = s.dim();
  std::vector<double> out(n * grid.slots);
  const double tol = time_tolerance(grid.tau);
  std::size_t idx = 0;
  std::size_t slot = 0;
  for (std::size_t u = 0; u < grid.points.size(); ++u) {
    const double p = grid.points[u];
    while (idx + 1 < s.size() && s.grid()[idx + 1] <= p + tol) ++idx;
    const auto v = s.value(idx);
    for (std::size_t k = 0; k < n; ++k) out[k * grid.slots + slot] = v[k];
    ++slot;
    if (grid.left_slot[u]) {
      const bool own_jump = s.is_jump(idx) && std::fabs(s.grid()[idx] - p) <= tol;
      const auto l = own_jump ? s.pre_value(idx) : v;
      for (std::size_t k = 0; k < n; ++k) out[k * grid.slots + slot] = l[k];
      ++slot;
    }
  }
  return out;
}

double slot_distance(std::span<const double> a, std::span<const double> b, std::size_t dim,
                     std::size_t slots) noexcept {
  const auto& k = kernels::active();
  if (dim == 1) return k.max_abs_diff(a.data(), b.data(), slots);
  return std::sqrt(k.max_sq_diff_planar(a.data(), b.data(), slots, dim));
}

double sup_distance(const Segment& a, const Segment& b) {
  check_compatible(a, b);
  if (same_grid(a, b)) return shared_grid_distance(a, b);
  const Segment* members[2] = {&a, &b};
  const SlotGrid grid = make_slot_grid(members);
  const auto da = densify(a, grid);
  const auto db = densify(b, grid);
  return slot_distance(da, db, a.dim(), grid.slots);
}

bool approx_equal(const Segment& a, const Segment& b, double tol) {
  check_compatible(a, b);
  const Segment* members[2] = {&a, &b};
  const SlotGrid grid = make_slot_grid(members);
  const auto da = densify(a, grid);
  const auto db = densify(b, grid);
  return kernels::active().max_abs_diff(da.data(), db.data(), da.size()) <= tol;
}

// ---------------------------------------------------------------------------
// Skorohod upper bound

namespace {

std::vector<double> dominant_jump_times(const Segment& s, std::size_t k) {
  std::vector<std::pair<double, double>> jumps;  // (size, time)
  for (std::size_t i : s.jump_indices()) {
    const double t = s.grid()[i];
    if (t <= -s.tau() || t >= 0.0) continue;
    double size = 0.0;
    for (std::size_t c = 0; c < s.dim(); ++c) {
      const double d = s.value(i)[c] - s.pre_value(i)[c];
      size += d * d;
    }
    jumps.emplace_back(size, t);
  }
  std::stable_sort(jumps.begin(), jumps.end(),
                   [](const auto& x, const auto& y) { return x.first > y.first; });
  if (jumps.size() > k) jumps.resize(k);
  std::vector<double> times;
  for (const auto& j : jumps) times.push_back(j.second);
  std::sort(times.begin(), times.end());
  return times;
}

void search_direction(const Segment& a, const Segment& b, const SkorohodOpts& opts,
                      bool swapped, SkorohodResult& best) {
  const auto ja = dominant_jump_times(a, opts.max_knots);
  const auto jb = dominant_jump_times(b, opts.max_knots);
  const double tau = a.tau();
  const unsigned na = static_cast<unsigned>(ja.size());
  const unsigned nb = static_cast<unsigned>(jb.size());

  std::vector<double> fractions{1.0};
  fractions.insert(fractions.end(), opts.refinement.begin(), opts.refinement.end());

  for (unsigned ma = 1; ma < (1u << na); ++ma) {
    for (unsigned mb = 1; mb < (1u << nb); ++mb) {
      if (std::popcount(ma) != std::popcount(mb)) continue;
      // a(lambda(t)) should jump where b does: lambda(t_b) = t_a.
      std::vector<double> from, to;
      for (unsigned i = 0; i < na; ++i)
        if (ma & (1u << i)) to.push_back(ja[i]);
      for (unsigned i = 0; i < nb; ++i)
        if (mb & (1u << i)) from.push_back(jb[i]);
      for (double f : fractions) {
        std::vector<double> knots{-tau}, images{-tau};
        bool ok = true;
        for (std::size_t i = 0; i < from.size(); ++i) {
          const double img = from[i] + f * (to[i] - from[i]);
          if (from[i] <= knots.back() || img <= images.back()) {
            ok = false;
            break;
          }
          knots.push_back(from[i]);
          images.push_back(img);
        }
        if (!ok) continue;
        knots.push_back(0.0);
        images.push_back(0.0);
        if (images[images.size() - 2] >= 0.0) continue;
        TimeChange lambda(std::move(knots), std::move(images));
        const double value = lambda.distortion() + sup_distance(lambda.compose(a), b);
        if (value < best.value) {
          best.value = value;
          best.lambda = std::move(lambda);
          best.swapped = swapped;
        }
      }
    }
  }
}

}  // namespace

SkorohodResult skorohod_search(const Segment& a, const Segment& b, const SkorohodOpts& opts) {
  check_compatible(a, b);
  SkorohodResult best;
  best.value = sup_distance(a, b);
  best.lambda = TimeChange::identity(a.tau());
  if (best.value == 0.0) return best;
  search_direction(a, b, opts, false, best);
  search_direction(b, a, opts, true, best);
  return best;
}

// ---------------------------------------------------------------------------
// CSV

void write_segment_csv(std::ostream& out, const Segment& s) {
  std::vector<std::string> header{"theta"};
  for (std::size_t k = 1; k <= s.dim(); ++k) header.push_back("v_" + std::to_string(k));
  header.emplace_back("is_jump");
  for (std::size_t k = 1; k <= s.dim(); ++k) header.push_back("pre_v_" + std::to_string(k));
  out << io::csv_row(header);
  for (std::size_t i = 0; i < s.size(); ++i) {
    std::vector<std::string> row{io::format_double(s.grid()[i])};
    for (double v : s.value(i)) row.push_back(io::format_double(v));
    row.emplace_back(s.is_jump(i) ? "1" : "0");
    for (double v : s.pre_value(i)) row.push_back(io::format_double(v));
    out << io::csv_row(row);
  }
}

Segment read_segment_csv(std::istream& in) {
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), ErrorKind::io, "segment CSV: missing header");
  const auto header = io::split(io::trim(line), ',');
  require(header.size() >= 4 && header.size() % 2 == 0 && header.front() == "theta",
          ErrorKind::io, "segment CSV: malformed header");
  const std::size_t dim = (header.size() - 2) / 2;

  std::vector<double> grid, values, pre;
  std::vector<std::uint8_t> jumps;
  while (std::getline(in, line)) {
    if (io::trim(line).empty()) continue;
    const auto f = io::split(io::trim(line), ',');
    require(f.size() == header.size(), ErrorKind::io, "segment CSV: wrong field count");
    grid.push_back(io::parse_double(f[0]));
    for (std::size_t k = 0; k < dim; ++k) values.push_back(io::parse_double(f[1 + k]));
    jumps.push_back(io::trim(f[1 + dim]) == "1" ? 1 : 0);
    for (std::size_t k = 0; k < dim; ++k) pre.push_back(io::parse_double(f[2 + dim + k]));
  }
  require(grid.size() >= 2, ErrorKind::io, "segment CSV: needs at least two rows");
  const double tau = -grid.front();
  return Segment::from_dense(tau, dim, std::move(grid), std::move(values), std::move(jumps),
                             std::move(pre));
}

}  // namespace ergo
