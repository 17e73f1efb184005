#include <algorithm>
#include <cmath>
#include <limits>

#include "ergo/error.hpp"
#include "ergo/kernels.hpp"
#include "ergo/transport.hpp"

namespace ergo {

namespace {

struct Dual {
  std::vector<double> f, g;
};

// Row sums of the plan a_i b_j exp((f_i + g_j - C_ij) / eps) minus a.
double row_error(const CostMatrix& c, const std::vector<double>& la, const std::vector<double>& lb,
                 const Dual& d, double eps, std::vector<double>& scratch, std::vector<double>& out) {
  const auto& k = kernels::active();
  for (std::size_t j = 0; j < c.cols; ++j) scratch[j] = d.g[j] + eps * lb[j];
  k.row_logsumexp(c.data.data(), c.rows, c.cols, scratch.data(), 1.0 / eps, out.data());
  double err = 0.0;
  for (std::size_t i = 0; i < c.rows; ++i)
    err += std::fabs(std::exp(la[i] + d.f[i] / eps + out[i]) - std::exp(la[i]));
  return err;
}

TransportPlan sinkhorn_positive(const CostMatrix& c, std::span<const double> a,
                                std::span<const double> b, const SinkhornOptions& opts) {
  const std::size_t n = c.rows, m = c.cols;
  const CostMatrix ct = c.transposed();
  const auto& k = kernels::active();
  std::vector<double> la(n), lb(m);
  for (std::size_t i = 0; i < n; ++i) la[i] = std::log(a[i]);
  for (std::size_t j = 0; j < m; ++j) lb[j] = std::log(b[j]);

  const auto [lo, hi] = std::minmax_element(c.data.begin(), c.data.end());
  const double range = *hi - *lo;
  double eps = opts.epsilon_scaling ? std::max(opts.epsilon, range) : opts.epsilon;

  Dual d{std::vector<double>(n, 0.0), std::vector<double>(m, 0.0)};
  std::vector<double> sr(m), sc(n), out_r(n), out_c(m);
  std::size_t iter = 0;
  bool converged = false;
  while (true) {
    const bool last = eps <= opts.epsilon;
    const double tol = last ? opts.tolerance : std::max(opts.tolerance, 1e-6);
    bool stage_done = false;
    while (iter < opts.max_iter) {
      ++iter;
      for (std::size_t j = 0; j < m; ++j) sr[j] = d.g[j] + eps * lb[j];
      k.row_logsumexp(c.data.data(), n, m, sr.data(), 1.0 / eps, out_r.data());
      for (std::size_t i = 0; i < n; ++i) d.f[i] = -eps * out_r[i];
      for (std::size_t i = 0; i < n; ++i) sc[i] = d.f[i] + eps * la[i];
      k.row_logsumexp(ct.data.data(), m, n, sc.data(), 1.0 / eps, out_c.data());
      for (std::size_t j = 0; j < m; ++j) d.g[j] = -eps * out_c[j];
      if (iter % 5 == 0 && row_error(c, la, lb, d, eps, sr, out_r) < tol) {
        stage_done = true;
        break;
      }
    }
    if (last) {
      converged = stage_done;
      break;
    }
    if (!stage_done) break;
    eps = std::max(opts.epsilon, 0.5 * eps);
  }

  // Plan and rounding onto the transport polytope.
  TransportPlan p;
  p.rows = n;
  p.cols = m;
  p.coupling.resize(n * m);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j)
      p.coupling[i * m + j] = std::exp((d.f[i] + d.g[j] - c(i, j)) / eps + la[i] + lb[j]);

  for (std::size_t i = 0; i < n; ++i) {
    double r = 0.0;
    for (std::size_t j = 0; j < m; ++j) r += p.coupling[i * m + j];
    const double x = r > 0.0 ? std::min(a[i] / r, 1.0) : 1.0;
    for (std::size_t j = 0; j < m; ++j) p.coupling[i * m + j] *= x;
  }
  std::vector<double> col(m, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) col[j] += p.coupling[i * m + j];
  for (std::size_t j = 0; j < m; ++j) {
    const double y = col[j] > 0.0 ? std::min(b[j] / col[j], 1.0) : 1.0;
    for (std::size_t i = 0; i < n; ++i) p.coupling[i * m + j] *= y;
  }
  std::vector<double> er(n), ec(m, 0.0);
  double mass = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double r = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      r += p.coupling[i * m + j];
      ec[j] += p.coupling[i * m + j];
    }
    er[i] = std::max(0.0, a[i] - r);
    mass += er[i];
  }
  for (std::size_t j = 0; j < m; ++j) ec[j] = std::max(0.0, b[j] - ec[j]);
  if (mass > 0.0)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < m; ++j) p.coupling[i * m + j] += er[i] * ec[j] / mass;

  p.solver = SolverKind::sinkhorn;
  p.iterations = iter;
  p.epsilon = eps;
  p.converged = converged;
  return p;
}

}  // namespace

TransportPlan solve_sinkhorn(const CostMatrix& c, std::span<const double> a,
                             std::span<const double> b, const SinkhornOptions& opts) {
  require(opts.epsilon > 0.0 && std::isfinite(opts.epsilon), ErrorKind::invalid_argument,
          "sinkhorn epsilon must be positive");
  require(a.size() == c.rows && b.size() == c.cols, ErrorKind::dimension_mismatch,
          "weights do not match the cost matrix");
  require(c.rows > 0 && c.cols > 0, ErrorKind::invalid_argument, "empty transport problem");

  // Zero-weight atoms carry no mass; solve on the support and scatter back.
  std::vector<std::size_t> ri, ci;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i] > 0.0) ri.push_back(i);
  for (std::size_t j = 0; j < b.size(); ++j)
    if (b[j] > 0.0) ci.push_back(j);
  std::vector<double> as, bs;
  for (std::size_t i : ri) as.push_back(a[i]);
  for (std::size_t j : ci) bs.push_back(b[j]);
  const bool full = ri.size() == a.size() && ci.size() == b.size();
  TransportPlan sub = full ? sinkhorn_positive(c, a, b, opts)
                           : sinkhorn_positive(c.select(ri, ci), as, bs, opts);

  TransportPlan p = sub;
  if (!full) {
    p.rows = c.rows;
    p.cols = c.cols;
    p.coupling.assign(c.rows * c.cols, 0.0);
    for (std::size_t u = 0; u < ri.size(); ++u)
      for (std::size_t v = 0; v < ci.size(); ++v)
        p.coupling[ri[u] * c.cols + ci[v]] = sub.coupling[u * ci.size() + v];
  }

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
  return p;
}

TransportPlan wasserstein_sinkhorn(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                                   double epsilon, std::size_t max_iter) {
  SinkhornOptions opts;
  opts.epsilon = epsilon;
  opts.max_iter = max_iter;
  return solve_sinkhorn(cost_matrix(mu, nu), mu.weights, nu.weights, opts);
}

TransportPlan wasserstein_auto(const CostMatrix& c, std::span<const double> a,
                               std::span<const double> b, std::size_t cap) {
  if (c.rows <= cap && c.cols <= cap) return solve_exact(c, a, b, cap);
  std::vector<double> sorted = c.data;
  auto mid = sorted.begin() + static_cast<std::ptrdiff_t>(sorted.size() / 2);
  std::nth_element(sorted.begin(), mid, sorted.end());
  SinkhornOptions opts;
  opts.epsilon = *mid > 0.0 ? 1e-2 * *mid : 1e-4;
  return solve_sinkhorn(c, a, b, opts);
}

}  // namespace ergo
