#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "ergo/error.hpp"
#include "ergo/transport.hpp"

namespace ergo {

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();
// Flow and residual amounts below this are treated as zero.
constexpr double flow_eps = 1e-15;

void finish(TransportPlan& p, const CostMatrix& c, std::span<const double> a,
            std::span<const double> b) {
  double cost = 0.0;
  for (std::size_t k = 0; k < p.coupling.size(); ++k) cost += p.coupling[k] * c.data[k];
  p.cost = cost;
  double err = 0.0;
  std::vector<double> col(p.cols, 0.0);
  for (std::size_t i = 0; i < p.rows; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < p.cols; ++j) {
      row += p(i, j);
      col[j] += p(i, j);
    }
    err = std::max(err, std::fabs(row - a[i]));
  }
  for (std::size_t j = 0; j < p.cols; ++j) err = std::max(err, std::fabs(col[j] - b[j]));
  p.marginal_error = err;
}

// Successive shortest paths on the dense bipartite residual graph with
// Johnson potentials. Rows are sources, columns sinks.
TransportPlan min_cost_flow(const CostMatrix& c, std::span<const double> a,
                            std::span<const double> b) {
  const std::size_t n = c.rows, m = c.cols;
  std::vector<double> flow(n * m, 0.0), supply(a.begin(), a.end()), demand(b.begin(), b.end());
  std::vector<double> pr(n, 0.0), pc(m, inf);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) pc[j] = std::min(pc[j], c(i, j));

  std::vector<double> dr(n), dc(m);
  std::vector<std::size_t> prev_r(n), prev_c(m);  // predecessor column of a row, row of a column
  std::vector<std::uint8_t> done_r(n), done_c(m);
  std::size_t iterations = 0;

  auto remaining = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  };

  while (remaining(supply) > 1e-14 && remaining(demand) > 1e-14) {
    ++iterations;
    std::fill(dr.begin(), dr.end(), inf);
    std::fill(dc.begin(), dc.end(), inf);
    std::fill(done_r.begin(), done_r.end(), 0);
    std::fill(done_c.begin(), done_c.end(), 0);
    for (std::size_t i = 0; i < n; ++i)
      if (supply[i] > flow_eps) dr[i] = 0.0;

    // Dense Dijkstra over n + m nodes.
    while (true) {
      double best = inf;
      std::size_t node = 0;
      bool is_row = true;
      for (std::size_t i = 0; i < n; ++i)
        if (!done_r[i] && dr[i] < best) best = dr[i], node = i, is_row = true;
      for (std::size_t j = 0; j < m; ++j)
        if (!done_c[j] && dc[j] < best) best = dc[j], node = j, is_row = false;
      if (best == inf) break;
      if (is_row) {
        done_r[node] = 1;
        for (std::size_t j = 0; j < m; ++j) {
          if (done_c[j]) continue;
          const double d = best + std::max(0.0, c(node, j) + pr[node] - pc[j]);
          if (d < dc[j]) dc[j] = d, prev_c[j] = node;
        }
      } else {
        done_c[node] = 1;
        for (std::size_t i = 0; i < n; ++i) {
          if (done_r[i] || flow[i * m + node] <= flow_eps) continue;
          const double d = best + std::max(0.0, -c(i, node) + pc[node] - pr[i]);
          if (d < dr[i]) dr[i] = d, prev_r[i] = node;
        }
      }
    }

    std::size_t sink = m;
    for (std::size_t j = 0; j < m; ++j)
      if (demand[j] > flow_eps && (sink == m || dc[j] < dc[sink])) sink = j;
    require(sink < m && dc[sink] < inf, ErrorKind::precondition,
            "min_cost_flow: no augmenting path");

    // Bottleneck along the path back to a source row.
    double push = demand[sink];
    std::size_t j = sink;
    while (true) {
      const std::size_t i = prev_c[j];
      if (dr[i] == 0.0 && supply[i] > flow_eps) {
        push = std::min(push, supply[i]);
        break;
      }
      const std::size_t jp = prev_r[i];
      push = std::min(push, flow[i * m + jp]);
      j = jp;
    }
    j = sink;
    while (true) {
      const std::size_t i = prev_c[j];
      flow[i * m + j] += push;
      if (dr[i] == 0.0 && supply[i] > flow_eps) {
        supply[i] -= push;
        if (supply[i] <= flow_eps) supply[i] = 0.0;
        break;
      }
      const std::size_t jp = prev_r[i];
      flow[i * m + jp] -= push;
      if (flow[i * m + jp] <= flow_eps) flow[i * m + jp] = 0.0;
      j = jp;
    }
    demand[sink] -= push;
    if (demand[sink] <= flow_eps) demand[sink] = 0.0;

    for (std::size_t i = 0; i < n; ++i)
      if (dr[i] < inf) pr[i] += dr[i];
    for (std::size_t k = 0; k < m; ++k)
      if (dc[k] < inf) pc[k] += dc[k];
  }

  TransportPlan p;
  p.rows = n;
  p.cols = m;
  p.coupling = std::move(flow);
  p.solver = SolverKind::min_cost_flow;
  p.iterations = iterations;
  return p;
}

}  // namespace

// Hungarian method with row/column potentials, O(n^3).
std::vector<std::size_t> solve_assignment(const CostMatrix& c) {
  require(c.rows == c.cols, ErrorKind::dimension_mismatch, "assignment needs a square matrix");
  const std::size_t n = c.rows;
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  std::vector<std::uint8_t> used(n + 1);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = c(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) minv[j] = cur, way[j] = j0;
        if (minv[j] < delta) delta = minv[j], j1 = j;
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<std::size_t> assign(n);
  for (std::size_t j = 1; j <= n; ++j) assign[p[j] - 1] = j - 1;
  return assign;
}

TransportPlan solve_exact(const CostMatrix& c, std::span<const double> a, std::span<const double> b,
                          std::size_t cap) {
  require(a.size() == c.rows && b.size() == c.cols, ErrorKind::dimension_mismatch,
          "weights do not match the cost matrix");
  require(c.rows > 0 && c.cols > 0, ErrorKind::invalid_argument, "empty transport problem");
  if (c.rows > cap || c.cols > cap)
    fail(ErrorKind::cap_exceeded, "exact transport is capped at " + std::to_string(cap) +
                                      " atoms per side; use the entropic solver");

  const std::size_t n = c.rows;
  const double w = 1.0 / static_cast<double>(n);
  const bool uniform = c.rows == c.cols &&
                       std::all_of(a.begin(), a.end(), [&](double x) { return x == w; }) &&
                       std::all_of(b.begin(), b.end(), [&](double x) { return x == w; });
  TransportPlan p;
  if (uniform) {
    const auto assign = solve_assignment(c);
    p.rows = p.cols = n;
    p.coupling.assign(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) p.coupling[i * n + assign[i]] = w;
    p.solver = SolverKind::assignment;
    p.iterations = n;
  } else {
    p = min_cost_flow(c, a, b);
  }
  finish(p, c, a, b);
  return p;
}

TransportPlan wasserstein_exact(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                                std::size_t cap) {
  mu.validate();
  nu.validate();
  if (mu.size() > cap || nu.size() > cap)
    fail(ErrorKind::cap_exceeded, "exact transport is capped at " + std::to_string(cap) +
                                      " atoms per side; use the entropic solver");
  return solve_exact(cost_matrix(mu, nu), mu.weights, nu.weights, cap);
}

}  // namespace ergo
