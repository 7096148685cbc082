#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace crossway {

/// Operator-splitting (ADMM) solver for
///   min 0.5 x'Px + q'x   s.t.  l <= Ax <= u
/// Single sparse quasi-definite KKT factorization, cheap iterations,
/// deterministic given inputs. Equality rows are expressed as l == u.
struct QpSettings {
  int max_iterations = 20000;
  double eps_feas = 1e-4;      // max constraint violation, natural units
  double eps_dual = 1e-4;      // dual residual (unscaled)
  double sigma = 1e-6;         // primal regularization
  double alpha = 1.6;          // over-relaxation
  double rho = 0.1;            // ADMM step, adapted during the run
  int check_interval = 25;     // iterations between convergence checks
  bool adaptive_rho = true;
  bool polish = true;          // active-set refinement of the ADMM iterate
  int scaling_iterations = 10; // Ruiz equilibration passes (0 disables)
};

enum class QpStatus { Solved, MaxIterations };

struct QpResult {
  QpStatus status = QpStatus::MaxIterations;
  Eigen::VectorXd x;
  Eigen::VectorXd y;  // multipliers for l <= Ax <= u
  double objective = 0.0;
  double primal_residual = 0.0;  // max violation of l <= Ax <= u
  double dual_residual = 0.0;
  int iterations = 0;
  bool polished = false;
};

class QpSolver {
 public:
  explicit QpSolver(QpSettings settings = {}) : settings_(settings) {}

  /// P must be symmetric positive semidefinite. Rows of A with l == u are
  /// treated as equalities (tighter penalty weight).
  QpResult solve(const Eigen::SparseMatrix<double>& P, const Eigen::VectorXd& q,
                 const Eigen::SparseMatrix<double>& A, const Eigen::VectorXd& l,
                 const Eigen::VectorXd& u,
                 const Eigen::VectorXd* x_warm = nullptr) const;

  const QpSettings& settings() const { return settings_; }

 private:
  QpSettings settings_;
};

}  // namespace crossway
