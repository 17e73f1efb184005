#include <algorithm>
#include <cmath>
#include <numeric>

#include "ergo/error.hpp"
#include "ergo/parallel.hpp"
#include "ergo/transport.hpp"

namespace ergo {

const char* to_string(GroundMetric m) noexcept {
  switch (m) {
    case GroundMetric::sup_capped: return "sup_capped";
    case GroundMetric::skorohod_upper_capped: return "skorohod_upper_capped";
  }
  return "unknown";
}

const char* to_string(SolverKind s) noexcept {
  switch (s) {
    case SolverKind::assignment: return "assignment";
    case SolverKind::min_cost_flow: return "min_cost_flow";
    case SolverKind::sinkhorn: return "sinkhorn";
  }
  return "unknown";
}

EmpiricalMeasure EmpiricalMeasure::uniform(std::vector<Segment> atoms, GroundMetric metric) {
  EmpiricalMeasure m;
  const std::size_t n = atoms.size();
  m.atoms = std::move(atoms);
  m.weights.assign(n, n ? 1.0 / static_cast<double>(n) : 0.0);
  m.metric = metric;
  return m;
}

bool EmpiricalMeasure::is_uniform() const noexcept {
  if (weights.empty()) return true;
  const double w = 1.0 / static_cast<double>(weights.size());
  return std::all_of(weights.begin(), weights.end(), [&](double x) { return x == w; });
}

void EmpiricalMeasure::validate() const {
  require(!atoms.empty(), ErrorKind::invalid_argument, "empirical measure has no atoms");
  require(weights.size() == atoms.size(), ErrorKind::dimension_mismatch,
          "weights and atoms differ in length");
  double total = 0.0;
  for (double w : weights) {
    require(std::isfinite(w) && w >= 0.0, ErrorKind::invalid_argument, "negative weight");
    total += w;
  }
  require(std::fabs(total - 1.0) <= 1e-12, ErrorKind::invalid_argument,
          "weights do not sum to 1");
  for (const Segment& s : atoms) {
    require(s.dim() == atoms.front().dim(), ErrorKind::dimension_mismatch,
            "atoms differ in dimension");
    require(std::fabs(s.tau() - atoms.front().tau()) <= time_tolerance(s.tau()),
            ErrorKind::dimension_mismatch, "atoms differ in tau");
  }
}

CostMatrix CostMatrix::transposed() const {
  CostMatrix t{cols, rows, std::vector<double>(data.size())};
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) t.data[j * rows + i] = data[i * cols + j];
  return t;
}

CostMatrix CostMatrix::select(std::span<const std::size_t> r, std::span<const std::size_t> c) const {
  CostMatrix s{r.size(), c.size(), std::vector<double>(r.size() * c.size())};
  for (std::size_t i = 0; i < r.size(); ++i)
    for (std::size_t j = 0; j < c.size(); ++j) s.data[i * c.size() + j] = (*this)(r[i], c[j]);
  return s;
}

CostMatrix cost_matrix(std::span<const Segment> a, std::span<const Segment> b, GroundMetric metric) {
  require(!a.empty() && !b.empty(), ErrorKind::invalid_argument, "cost_matrix: empty side");
  CostMatrix c{a.size(), b.size(), std::vector<double>(a.size() * b.size())};

  if (metric == GroundMetric::skorohod_upper_capped) {
    parallel_for(a.size(), [&](std::size_t i) {
      for (std::size_t j = 0; j < b.size(); ++j)
        c.at(i, j) = std::min(skorohod_upper(a[i], b[j]), 1.0);
    });
    return c;
  }

  std::vector<const Segment*> members;
  members.reserve(a.size() + b.size());
  for (const Segment& s : a) members.push_back(&s);
  for (const Segment& s : b) members.push_back(&s);
  const SlotGrid grid = make_slot_grid(members);
  std::vector<std::vector<double>> dense(members.size());
  parallel_for(members.size(), [&](std::size_t k) { dense[k] = densify(*members[k], grid); });

  const std::size_t dim = grid.dim;
  parallel_for(a.size(), [&](std::size_t i) {
    for (std::size_t j = 0; j < b.size(); ++j)
      c.at(i, j) = std::min(slot_distance(dense[i], dense[a.size() + j], dim, grid.slots), 1.0);
  });
  return c;
}

CostMatrix cost_matrix(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu) {
  mu.validate();
  nu.validate();
  require(mu.metric == nu.metric, ErrorKind::invalid_argument, "measures use different metrics");
  require(mu.atoms.front().dim() == nu.atoms.front().dim(), ErrorKind::dimension_mismatch,
          "measures differ in dimension");
  return cost_matrix(mu.atoms, nu.atoms, mu.metric);
}

}  // namespace ergo
