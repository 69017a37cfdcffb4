#include "qmar/quantile_solver.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <sstream>
#include <string>

#include <Eigen/Dense>

#include "qmar/error.hpp"
#include "qmar/rng.hpp"

namespace qmar {

std::string_view to_string(SolverStatus status) noexcept {
  return status == SolverStatus::optimal ? "optimal" : "degenerate-optimal";
}

double check_loss(double u, double tau) { return u * (tau - (u < 0.0 ? 1.0 : 0.0)); }

double srar_of(std::vector<double> residuals, double tau) {
  for (double& r : residuals) r = check_loss(r, tau);
  std::sort(residuals.begin(), residuals.end());
  double total = 0.0;
  for (double v : residuals) total += v;
  return total;
}

std::vector<bool> RegressionProblem::nonnegative_regressor_mask() const {
  std::vector<bool> mask(rows(), true);
  for (Eigen::Index i = 0; i < design.rows(); ++i)
    for (Eigen::Index j = 1; j < design.cols(); ++j)
      if (design(i, j) < 0.0) mask[static_cast<std::size_t>(i)] = false;
  return mask;
}

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

struct Vertex {
  std::vector<Index> basis;  // local row indices
  VectorXd theta;
  VectorXd residuals;
  bool primal_degenerate = false;
  bool dual_degenerate = false;
  std::size_t iterations = 0;
};

// Rows ordered by content, so theta does not depend on how the problem's
// rows happen to be ordered.
bool row_less(const MatrixXd& x, const VectorXd& y, Index a, Index b) {
  if (y(a) != y(b)) return y(a) < y(b);
  for (Index j = 0; j < x.cols(); ++j)
    if (x(a, j) != x(b, j)) return x(a, j) < x(b, j);
  return a < b;
}

VectorXd basis_solution(const MatrixXd& x, const VectorXd& y, std::vector<Index> basis) {
  std::sort(basis.begin(), basis.end(), [&](Index a, Index b) { return row_less(x, y, a, b); });
  const Index k = x.cols();
  MatrixXd xb(k, k);
  VectorXd yb(k);
  for (Index j = 0; j < k; ++j) {
    xb.row(j) = x.row(basis[static_cast<std::size_t>(j)]);
    yb(j) = y(basis[static_cast<std::size_t>(j)]);
  }
  return xb.partialPivLu().solve(yb);
}

std::vector<Index> default_basis(const MatrixXd& x) {
  Eigen::ColPivHouseholderQR<MatrixXd> qr(x.transpose());
  const auto& perm = qr.colsPermutation().indices();
  std::vector<Index> basis(static_cast<std::size_t>(x.cols()));
  for (Index j = 0; j < x.cols(); ++j) basis[static_cast<std::size_t>(j)] = perm(j);
  return basis;
}

bool usable_basis(const MatrixXd& x, const std::vector<Index>& basis) {
  const Index k = x.cols();
  if (static_cast<Index>(basis.size()) != k) return false;
  MatrixXd xb(k, k);
  for (Index j = 0; j < k; ++j) xb.row(j) = x.row(basis[static_cast<std::size_t>(j)]);
  Eigen::FullPivLU<MatrixXd> lu(xb);
  lu.setThreshold(1e-10);
  return lu.isInvertible();
}

struct Breakpoint {
  double t;
  double weight;
  Index row;
};

// The simplex works on vertices of the check-loss polytope: each vertex is
// determined by k observations fitted exactly. An edge frees one of them in
// either direction; the step along it is the weighted median of the
// breakpoints where other residuals change sign.
Vertex descend(const MatrixXd& x, const VectorXd& y, double tau, std::vector<Index> basis,
               std::size_t max_iterations) {
  const Index n = x.rows();
  const Index k = x.cols();
  std::vector<char> in_basis(static_cast<std::size_t>(n), 0);
  MatrixXd xb(k, k);
  VectorXd yb(k);
  MatrixXd dirs(n, k);
  VectorXd r(n);
  VectorXd tol(n);
  std::vector<Breakpoint> heap;
  heap.reserve(static_cast<std::size_t>(n));

  Vertex v;
  for (std::size_t iter = 0;; ++iter) {
    if (iter > max_iterations) throw NumericalError("quantile solver exceeded its iteration limit");
    std::fill(in_basis.begin(), in_basis.end(), 0);
    for (Index j = 0; j < k; ++j) {
      const Index row = basis[static_cast<std::size_t>(j)];
      in_basis[static_cast<std::size_t>(row)] = 1;
      xb.row(j) = x.row(row);
      yb(j) = y(row);
    }
    Eigen::PartialPivLU<MatrixXd> lu(xb);
    const VectorXd theta = lu.solve(yb);
    const MatrixXd binv = lu.inverse();
    if (!binv.allFinite()) throw NumericalError("quantile solver reached a singular basis");
    dirs.noalias() = x * binv;  // dirs(i, j) = x_i' d_j, d_j = column j of X_B^{-1}
    r = y - x * theta;
    for (Index i = 0; i < n; ++i) tol(i) = 1e-11 * (std::abs(y(i)) + (x.row(i).cwiseAbs() * theta.cwiseAbs()).value());

    bool primal_degenerate = false;
    for (Index i = 0; i < n; ++i) {
      if (in_basis[static_cast<std::size_t>(i)]) {
        r(i) = 0.0;
      } else if (std::abs(r(i)) <= tol(i)) {
        primal_degenerate = true;
      }
    }

    // Directional derivative along +-d_j. Moving +d_j pushes the residual of
    // basic row j negative (cost 1 - tau per unit), -d_j positive (tau).
    double best = 0.0;
    Index best_j = -1;
    double best_sign = 0.0;
    bool dual_degenerate = false;
    for (Index j = 0; j < k; ++j) {
      double plus = 1.0 - tau;
      double minus = tau;
      double scale = 1.0;
      for (Index i = 0; i < n; ++i) {
        if (in_basis[static_cast<std::size_t>(i)]) continue;
        const double a = dirs(i, j);
        scale += std::abs(a);
        if (std::abs(r(i)) <= tol(i)) {
          plus += std::max((1.0 - tau) * a, -tau * a);
          minus += std::max(-(1.0 - tau) * a, tau * a);
        } else if (r(i) > 0.0) {
          plus -= tau * a;
          minus += tau * a;
        } else {
          plus += (1.0 - tau) * a;
          minus -= (1.0 - tau) * a;
        }
      }
      const double dtol = 1e-11 * scale;
      if (std::abs(plus) <= dtol || std::abs(minus) <= dtol) dual_degenerate = true;
      if (plus < -dtol && plus < best) {
        best = plus;
        best_j = j;
        best_sign = 1.0;
      }
      if (minus < -dtol && minus < best) {
        best = minus;
        best_j = j;
        best_sign = -1.0;
      }
    }

    if (best_j < 0) {
      v.basis = basis;
      v.theta = theta;
      v.residuals = r;
      v.primal_degenerate = primal_degenerate;
      v.dual_degenerate = dual_degenerate;
      v.iterations = iter;
      return v;
    }

    // Line search: residual i moves as r_i - t * s_i and crosses zero at
    // t_i = r_i / s_i; each crossing raises the slope by |s_i|.
    heap.clear();
    for (Index i = 0; i < n; ++i) {
      if (in_basis[static_cast<std::size_t>(i)] || std::abs(r(i)) <= tol(i)) continue;
      const double s = best_sign * dirs(i, best_j);
      if (s == 0.0 || (r(i) > 0.0) != (s > 0.0)) continue;
      heap.push_back({r(i) / s, std::abs(s), i});
    }
    const auto later = [](const Breakpoint& a, const Breakpoint& b) {
      return a.t != b.t ? a.t > b.t : a.row > b.row;
    };
    std::make_heap(heap.begin(), heap.end(), later);
    double slope = best;
    Index entering = -1;
    while (!heap.empty()) {
      std::pop_heap(heap.begin(), heap.end(), later);
      const Breakpoint bp = heap.back();
      heap.pop_back();
      slope += bp.weight;
      if (slope >= 0.0) {
        entering = bp.row;
        break;
      }
    }
    if (entering < 0) throw NumericalError("quantile solver found a descent direction without a breakpoint");
    basis[static_cast<std::size_t>(best_j)] = entering;
  }
}

void check_finite(const RegressionProblem& problem) {
  if (!problem.design.allFinite()) throw DomainError("design matrix contains non-finite entries");
  if (!problem.response.allFinite()) throw DomainError("response contains non-finite entries");
}

Vertex perturbed_descent(const MatrixXd& x, const VectorXd& y, double tau, const Vertex& start,
                         std::size_t max_iterations) {
  double scale = 1.0;
  for (Index i = 0; i < y.size(); ++i) scale = std::max(scale, std::abs(y(i)));
  VectorXd yp = y;
  for (Index i = 0; i < y.size(); ++i) {
    std::uint64_t h = mix64(std::bit_cast<std::uint64_t>(y(i)) + static_cast<std::uint64_t>(i));
    for (Index j = 0; j < x.cols(); ++j) h = mix64(h ^ std::bit_cast<std::uint64_t>(x(i, j)));
    const double xi = (static_cast<double>(h >> 11) * 0x1.0p-53) * 2.0 - 1.0;
    yp(i) += 1e-9 * scale * xi;
  }
  return descend(x, yp, tau, start.basis, max_iterations);
}

}  // namespace

QuantileFit solve(const RegressionProblem& problem, double tau, const SolveOptions& options) {
  if (!(tau >= 0.0 && tau <= 1.0)) throw DomainError("quantile level must lie in [0,1]");
  const std::size_t n = problem.rows();
  const std::size_t k = problem.columns();
  if (k == 0) throw DomainError("design matrix has no columns");
  if (static_cast<std::size_t>(problem.response.size()) != n)
    throw DomainError("response length does not match the design rows");
  if (problem.row_mask && problem.row_mask->size() != n)
    throw DomainError("row mask length does not match the design rows");
  check_finite(problem);

  const double level = tau == 0.0 ? kEndpointShift : (tau == 1.0 ? 1.0 - kEndpointShift : tau);

  std::vector<std::size_t> used;
  used.reserve(n);
  for (std::size_t i = 0; i < n; ++i)
    if (!problem.row_mask || (*problem.row_mask)[i]) used.push_back(i);
  if (used.size() <= k)
    throw InsufficientDataError("only " + std::to_string(used.size()) + " usable rows for " + std::to_string(k) +
                                    " coefficients",
                                used.size());

  const auto m = static_cast<Index>(used.size());
  MatrixXd x(m, static_cast<Index>(k));
  VectorXd y(m);
  for (Index i = 0; i < m; ++i) {
    x.row(i) = problem.design.row(static_cast<Index>(used[static_cast<std::size_t>(i)]));
    y(i) = problem.response(static_cast<Index>(used[static_cast<std::size_t>(i)]));
  }

  {
    Eigen::ColPivHouseholderQR<MatrixXd> qr(x);
    qr.setThreshold(kRankTolerance);
    const Index rank = qr.rank();
    if (rank < static_cast<Index>(k)) {
      std::vector<std::size_t> dependent;
      for (Index j = rank; j < static_cast<Index>(k); ++j)
        dependent.push_back(static_cast<std::size_t>(qr.colsPermutation().indices()(j)));
      std::sort(dependent.begin(), dependent.end());
      std::ostringstream msg;
      msg << "design matrix is rank deficient (rank " << rank << " of " << k << "); dependent column(s):";
      for (auto c : dependent) msg << ' ' << c;
      throw DegeneracyError(msg.str(), dependent);
    }
  }

  std::vector<Index> start;
  if (options.initial_basis) {
    std::vector<Index> local_of(n, -1);
    for (Index i = 0; i < m; ++i) local_of[used[static_cast<std::size_t>(i)]] = i;
    bool ok = options.initial_basis->size() == k;
    for (std::size_t row : ok ? *options.initial_basis : std::vector<std::size_t>{}) {
      if (row >= n || local_of[row] < 0 || std::find(start.begin(), start.end(), local_of[row]) != start.end()) {
        ok = false;
        break;
      }
      start.push_back(local_of[row]);
    }
    if (!ok || !usable_basis(x, start)) start.clear();
  }
  if (start.empty()) start = default_basis(x);

  const std::size_t cap = options.max_iterations ? options.max_iterations : 50 * (used.size() + k) + 100;
  Vertex vertex = descend(x, y, level, start, cap);
  std::size_t iterations = vertex.iterations;
  bool degenerate = vertex.dual_degenerate;
  if (vertex.primal_degenerate) {
    // Ties among residuals: settle on a basis that is optimal for a slightly
    // perturbed response, which is also optimal for the original one.
    const Vertex moved = perturbed_descent(x, y, level, vertex, cap);
    iterations += moved.iterations;
    const VectorXd theta = basis_solution(x, y, moved.basis);
    const VectorXd res = y - x * theta;
    std::vector<double> a(res.data(), res.data() + res.size());
    std::vector<double> b(vertex.residuals.data(), vertex.residuals.data() + vertex.residuals.size());
    if (srar_of(a, level) <= srar_of(b, level)) vertex.basis = moved.basis;
    degenerate = true;
  }

  QuantileFit fit;
  fit.tau = tau;
  fit.tau_effective = level;
  fit.theta = basis_solution(x, y, vertex.basis);
  fit.used_rows = used;
  fit.n_effective = used.size();
  fit.residuals.resize(used.size());
  for (Index i = 0; i < m; ++i) {
    double fitted = 0.0;
    for (Index j = 0; j < x.cols(); ++j) fitted += x(i, j) * fit.theta(j);
    fit.residuals[static_cast<std::size_t>(i)] = y(i) - fitted;
  }
  for (Index b : vertex.basis) fit.residuals[static_cast<std::size_t>(b)] = 0.0;
  fit.srar = srar_of(fit.residuals, level);
  fit.status = degenerate ? SolverStatus::degenerate_optimal : SolverStatus::optimal;
  for (Index b : vertex.basis) fit.basis.push_back(used[static_cast<std::size_t>(b)]);
  std::sort(fit.basis.begin(), fit.basis.end());
  fit.iterations = iterations;
  return fit;
}

QuantileFit solve_restricted(const RegressionProblem& problem, double tau, const SolveOptions& options) {
  RegressionProblem masked = problem;
  if (!masked.row_mask) masked.row_mask = problem.nonnegative_regressor_mask();
  return solve(masked, tau, options);
}

}  // namespace qmar
