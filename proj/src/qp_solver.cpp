#include "crossway/qp_solver.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace crossway {

namespace {

using SpMat = Eigen::SparseMatrix<double>;
using Vec = Eigen::VectorXd;

constexpr double kRhoEqScale = 1e3;
constexpr double kInf = 1e30;

double inf_norm(const Vec& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

// Violation of l <= w <= u, per component max.
double bound_violation(const Vec& w, const Vec& l, const Vec& u) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    worst = std::max(worst, std::max(l[i] - w[i], w[i] - u[i]));
  }
  return std::max(worst, 0.0);
}

struct Scaling {
  Vec d;      // variable scaling, size n
  Vec e;      // constraint scaling, size m
  double c = 1.0;  // cost scaling
};

// Modified Ruiz equilibration of [P A'; A 0] plus cost normalization.
Scaling ruiz_equilibrate(SpMat& P, Vec& q, SpMat& A, Vec& l, Vec& u, int iters) {
  const Eigen::Index n = P.rows(), m = A.rows();
  Scaling sc;
  sc.d = Vec::Ones(n);
  sc.e = Vec::Ones(m);
  for (int it = 0; it < iters; ++it) {
    Vec col_norm = Vec::Zero(n);
    for (int k = 0; k < P.outerSize(); ++k) {
      for (SpMat::InnerIterator v(P, k); v; ++v) {
        col_norm[v.col()] = std::max(col_norm[v.col()], std::abs(v.value()));
      }
    }
    Vec row_norm_a = Vec::Zero(m);
    for (int k = 0; k < A.outerSize(); ++k) {
      for (SpMat::InnerIterator v(A, k); v; ++v) {
        col_norm[v.col()] = std::max(col_norm[v.col()], std::abs(v.value()));
        row_norm_a[v.row()] = std::max(row_norm_a[v.row()], std::abs(v.value()));
      }
    }
    Vec dd(n), ee(m);
    for (Eigen::Index i = 0; i < n; ++i) {
      dd[i] = col_norm[i] > 1e-12 ? 1.0 / std::sqrt(col_norm[i]) : 1.0;
    }
    for (Eigen::Index i = 0; i < m; ++i) {
      ee[i] = row_norm_a[i] > 1e-12 ? 1.0 / std::sqrt(row_norm_a[i]) : 1.0;
    }
    P = dd.asDiagonal() * P * dd.asDiagonal();
    A = ee.asDiagonal() * A * dd.asDiagonal();
    q = q.cwiseProduct(dd);
    l = l.cwiseProduct(ee);
    u = u.cwiseProduct(ee);
    sc.d = sc.d.cwiseProduct(dd);
    sc.e = sc.e.cwiseProduct(ee);

    // Cost normalization keeps the P/q magnitudes near one.
    double p_mean = 0.0;
    int nnz = 0;
    for (int k = 0; k < P.outerSize(); ++k) {
      for (SpMat::InnerIterator v(P, k); v; ++v) {
        p_mean += std::abs(v.value());
        ++nnz;
      }
    }
    p_mean = nnz ? p_mean / nnz : 0.0;
    const double gamma = 1.0 / std::max({p_mean, inf_norm(q), 1e-6});
    if (std::abs(gamma - 1.0) > 1e-12) {
      P *= gamma;
      q *= gamma;
      sc.c *= gamma;
    }
  }
  return sc;
}

struct Kkt {
  Eigen::SimplicialLDLT<SpMat> ldlt;

  void factorize(const SpMat& P, const SpMat& A, double sigma, const Vec& rho) {
    const Eigen::Index n = P.rows(), m = A.rows();
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(P.nonZeros() + 2 * A.nonZeros() + n + m);
    for (int k = 0; k < P.outerSize(); ++k) {
      for (SpMat::InnerIterator v(P, k); v; ++v) {
        trips.emplace_back(v.row(), v.col(), v.value());
      }
    }
    for (Eigen::Index i = 0; i < n; ++i) trips.emplace_back(i, i, sigma);
    for (int k = 0; k < A.outerSize(); ++k) {
      for (SpMat::InnerIterator v(A, k); v; ++v) {
        trips.emplace_back(n + v.row(), v.col(), v.value());
        trips.emplace_back(v.col(), n + v.row(), v.value());
      }
    }
    for (Eigen::Index i = 0; i < m; ++i) {
      trips.emplace_back(n + i, n + i, -1.0 / rho[i]);
    }
    SpMat kkt(n + m, n + m);
    kkt.setFromTriplets(trips.begin(), trips.end());
    ldlt.compute(kkt);
    if (ldlt.info() != Eigen::Success) {
      throw std::runtime_error("KKT factorization failed");
    }
  }
};

}  // namespace

QpResult QpSolver::solve(const SpMat& P_in, const Vec& q_in, const SpMat& A_in,
                         const Vec& l_in, const Vec& u_in,
                         const Vec* x_warm) const {
  const Eigen::Index n = P_in.rows(), m = A_in.rows();
  if (q_in.size() != n || A_in.cols() != n || l_in.size() != m || u_in.size() != m) {
    throw std::invalid_argument("inconsistent QP dimensions");
  }

  SpMat P = P_in, A = A_in;
  Vec q = q_in, l = l_in, u = u_in;
  Scaling sc;
  if (settings_.scaling_iterations > 0) {
    sc = ruiz_equilibrate(P, q, A, l, u, settings_.scaling_iterations);
  } else {
    sc.d = Vec::Ones(n);
    sc.e = Vec::Ones(m);
  }

  Vec rho_vec(m);
  double rho = settings_.rho;
  auto fill_rho = [&]() {
    for (Eigen::Index i = 0; i < m; ++i) {
      const bool eq = u[i] - l[i] < 1e-12;
      rho_vec[i] = eq ? rho * kRhoEqScale : rho;
    }
  };
  fill_rho();

  Kkt kkt;
  kkt.factorize(P, A, settings_.sigma, rho_vec);

  Vec x = Vec::Zero(n);
  if (x_warm && x_warm->size() == n) x = x_warm->cwiseQuotient(sc.d);
  Vec z = (A * x).cwiseMax(l).cwiseMin(u);
  Vec y = Vec::Zero(m);

  Vec rhs(n + m), xz_tilde(n + m);
  QpResult result;

  const auto unscaled_residuals = [&](const Vec& xs, const Vec& ys,
                                      double& prim, double& dual) {
    // Undo scaling: x_orig = D x_s, y_orig = c^-1 E y_s.
    const Vec x_orig = sc.d.cwiseProduct(xs);
    const Vec y_orig = sc.e.cwiseProduct(ys) / sc.c;
    const Vec ax = A_in * x_orig;
    prim = bound_violation(ax, l_in, u_in);
    dual = inf_norm(P_in * x_orig + q_in + A_in.transpose() * y_orig);
  };

  int it = 0;
  int last_refactor = 0;
  for (; it < settings_.max_iterations; ++it) {
    rhs.head(n) = settings_.sigma * x - q;
    rhs.tail(m) = z - y.cwiseQuotient(rho_vec);
    xz_tilde = kkt.ldlt.solve(rhs);
    const auto x_tilde = xz_tilde.head(n);
    const Vec nu = xz_tilde.tail(m);
    const Vec z_tilde = z + (nu - y).cwiseQuotient(rho_vec);

    const double a = settings_.alpha;
    const Vec x_next = a * x_tilde + (1.0 - a) * x;
    const Vec z_relax = a * z_tilde + (1.0 - a) * z;
    const Vec z_next = (z_relax + y.cwiseQuotient(rho_vec)).cwiseMax(l).cwiseMin(u);
    y += rho_vec.cwiseProduct(z_relax - z_next);
    x = x_next;
    z = z_next;

    if ((it + 1) % settings_.check_interval != 0) continue;
    double prim = 0.0, dual = 0.0;
    unscaled_residuals(x, y, prim, dual);
    if (prim <= settings_.eps_feas && dual <= settings_.eps_dual) {
      result.status = QpStatus::Solved;
      ++it;
      break;
    }
    if (settings_.adaptive_rho && it - last_refactor >= 200) {
      // Scaled residuals drive the rho update, as in operator-splitting
      // practice: large primal-to-dual ratio wants a larger step.
      const double sp = bound_violation(A * x, l, u);
      const double sd = inf_norm(P * x + q + A.transpose() * y);
      const double ratio = std::sqrt((sp + 1e-12) / (sd + 1e-12));
      if (ratio > 5.0 || ratio < 0.2) {
        rho = std::clamp(rho * ratio, 1e-6, 1e6);
        fill_rho();
        kkt.factorize(P, A, settings_.sigma, rho_vec);
        last_refactor = it;
      }
    }
  }

  Vec x_orig = sc.d.cwiseProduct(x);
  Vec y_orig = sc.e.cwiseProduct(y) / sc.c;

  if (settings_.polish) {
    // Active-set refinement: solve the equality-constrained QP on the
    // constraints the ADMM iterate pins at a bound.
    const Vec ax = A_in * x_orig;
    std::vector<int> active;
    std::vector<double> target;
    for (Eigen::Index i = 0; i < m; ++i) {
      const bool eq = u_in[i] - l_in[i] < 1e-12;
      const double tol = 10.0 * settings_.eps_feas;
      if (eq || (y_orig[i] < -1e-9 && ax[i] - l_in[i] < tol)) {
        active.push_back(static_cast<int>(i));
        target.push_back(l_in[i]);
      } else if (y_orig[i] > 1e-9 && u_in[i] - ax[i] < tol) {
        active.push_back(static_cast<int>(i));
        target.push_back(u_in[i]);
      }
    }
    const Eigen::Index ma = static_cast<Eigen::Index>(active.size());
    // Regularized KKT of the equality-constrained subproblem; iterative
    // refinement below works the regularization back out.
    SpMat At = A_in.transpose();
    std::vector<Eigen::Triplet<double>> trips;
    for (int k = 0; k < P_in.outerSize(); ++k) {
      for (SpMat::InnerIterator v(P_in, k); v; ++v) {
        trips.emplace_back(v.row(), v.col(), v.value());
      }
    }
    constexpr double kReg = 1e-9;
    for (Eigen::Index i = 0; i < n; ++i) trips.emplace_back(i, i, kReg);
    for (Eigen::Index r = 0; r < ma; ++r) {
      for (SpMat::InnerIterator v(At, active[r]); v; ++v) {
        trips.emplace_back(n + r, v.row(), v.value());
        trips.emplace_back(v.row(), n + r, v.value());
      }
      trips.emplace_back(n + r, n + r, -kReg);
    }
    SpMat kkt_pol(n + ma, n + ma);
    kkt_pol.setFromTriplets(trips.begin(), trips.end());
    Eigen::SimplicialLDLT<SpMat> ldlt(kkt_pol);
    if (ldlt.info() == Eigen::Success) {
      Vec rhs_pol(n + ma);
      rhs_pol.head(n) = -q_in;
      for (Eigen::Index r = 0; r < ma; ++r) rhs_pol[n + r] = target[r];

      const auto apply_unreg = [&](const Vec& sol) {
        Vec out = Vec::Zero(n + ma);
        out.head(n) = P_in * sol.head(n);
        for (Eigen::Index r = 0; r < ma; ++r) {
          double dot = 0.0;
          for (SpMat::InnerIterator v(At, active[r]); v; ++v) {
            dot += v.value() * sol[v.row()];
            out[v.row()] += v.value() * sol[n + r];
          }
          out[n + r] = dot;
        }
        return out;
      };

      Vec sol = ldlt.solve(rhs_pol);
      for (int refine = 0; refine < 3; ++refine) {
        sol += ldlt.solve(rhs_pol - apply_unreg(sol));
      }
      const Vec x_pol = sol.head(n);
      const double viol = bound_violation(A_in * x_pol, l_in, u_in);
      const double obj_pol = 0.5 * x_pol.dot(P_in * x_pol) + q_in.dot(x_pol);
      const double obj_admm = 0.5 * x_orig.dot(P_in * x_orig) + q_in.dot(x_orig);
      if (viol <= settings_.eps_feas && obj_pol <= obj_admm + 1e-9) {
        x_orig = x_pol;
        y_orig = Vec::Zero(m);
        for (Eigen::Index r = 0; r < ma; ++r) y_orig[active[r]] = sol[n + r];
        result.polished = true;
      }
    }
  }

  result.x = x_orig;
  result.y = y_orig;
  result.iterations = it;
  unscaled_residuals(x_orig.cwiseQuotient(sc.d), (sc.c * y_orig).cwiseQuotient(sc.e),
                     result.primal_residual, result.dual_residual);
  result.objective = 0.5 * x_orig.dot(P_in * x_orig) + q_in.dot(x_orig);
  if (result.primal_residual <= settings_.eps_feas) result.status = QpStatus::Solved;
  return result;
}

}  // namespace crossway
