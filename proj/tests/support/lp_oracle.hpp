#pragma once

// Dense tableau simplex for
//   min tau sum u+ + (1 - tau) sum u-   s.t.  X (b+ - b-) + u+ - u- = y,  all >= 0
// with Bland's rule. Slow and simple on purpose: it shares no code with the
// library solver.

#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <vector>

namespace qmar::testing {

struct LpResult {
  double objective = 0.0;
  std::vector<double> theta;
};

inline LpResult lp_quantile_oracle(const std::vector<std::vector<double>>& x, const std::vector<double>& y,
                                   double tau) {
  const std::size_t n = y.size();
  const std::size_t k = x.empty() ? 0 : x[0].size();
  const std::size_t cols = 2 * k + 2 * n;
  std::vector<std::vector<long double>> a(n, std::vector<long double>(cols + 1, 0.0L));
  std::vector<long double> cost(cols, 0.0L);
  for (std::size_t i = 0; i < n; ++i) {
    cost[2 * k + i] = tau;
    cost[2 * k + n + i] = 1.0 - tau;
  }
  std::vector<std::size_t> basis(n);
  for (std::size_t i = 0; i < n; ++i) {
    const long double sign = y[i] < 0.0 ? -1.0L : 1.0L;
    for (std::size_t j = 0; j < k; ++j) {
      a[i][j] = sign * x[i][j];
      a[i][k + j] = -sign * x[i][j];
    }
    a[i][2 * k + i] = sign;
    a[i][2 * k + n + i] = -sign;
    a[i][cols] = sign * y[i];
    basis[i] = y[i] < 0.0 ? 2 * k + n + i : 2 * k + i;
  }

  constexpr long double eps = 1e-13L;
  for (std::size_t iter = 0; iter < 100000; ++iter) {
    std::size_t enter = cols;
    for (std::size_t j = 0; j < cols && enter == cols; ++j) {
      long double reduced = cost[j];
      for (std::size_t i = 0; i < n; ++i) reduced -= cost[basis[i]] * a[i][j];
      if (reduced < -eps) enter = j;
    }
    if (enter == cols) break;
    std::size_t leave = n;
    long double best = std::numeric_limits<long double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
      if (a[i][enter] <= eps) continue;
      const long double ratio = a[i][cols] / a[i][enter];
      if (ratio < best - eps || (std::fabs(ratio - best) <= eps && leave < n && basis[i] < basis[leave])) {
        best = ratio;
        leave = i;
      }
    }
    if (leave == n) throw std::runtime_error("oracle LP unbounded");
    const long double pivot = a[leave][enter];
    for (auto& v : a[leave]) v /= pivot;
    for (std::size_t i = 0; i < n; ++i) {
      if (i == leave || a[i][enter] == 0.0L) continue;
      const long double f = a[i][enter];
      for (std::size_t j = 0; j <= cols; ++j) a[i][j] -= f * a[leave][j];
    }
    basis[leave] = enter;
  }

  LpResult out;
  out.theta.assign(k, 0.0);
  long double obj = 0.0L;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t b = basis[i];
    obj += cost[b] * a[i][cols];
    if (b < k) out.theta[b] += static_cast<double>(a[i][cols]);
    else if (b < 2 * k) out.theta[b - k] -= static_cast<double>(a[i][cols]);
  }
  out.objective = static_cast<double>(obj);
  return out;
}

}  // namespace qmar::testing
