#pragma once

#include <Eigen/Core>
#include <optional>

namespace hopper {

// min 1/2 x' H x + g' x  s.t.  Aeq x = beq,  lb <= x <= ub
// H symmetric PSD; +-inf bounds mark unconstrained coordinates.
struct QpProblem {
  Eigen::MatrixXd H;
  Eigen::VectorXd g;
  Eigen::MatrixXd Aeq;
  Eigen::VectorXd beq;
  Eigen::VectorXd lb;
  Eigen::VectorXd ub;
};

enum class QpStatus { Solved, MaxIterations, NumericalFailure };

struct QpSolution {
  Eigen::VectorXd zstar;
  Eigen::VectorXd nu;  // equality multipliers
  Eigen::VectorXd mu;  // box multipliers (>=0 at upper bounds, <=0 at lower)
  double eq_residual = 0.0;
  double box_violation = 0.0;
  double stationarity_residual = 0.0;
  int iterations = 0;
  double rho_final = 0.0;  // adapted penalty at exit; a good warm rho next call
  QpStatus status = QpStatus::NumericalFailure;
};

struct QpSettings {
  double tol = 1e-6;
  int max_iter = 4000;
  double rho = 0.1;    // initial splitting penalty
  double alpha = 1.6;  // over-relaxation
  bool polish = true;  // active-set refinement of the converged iterate
  // Rebalance rho from the primal/dual residual ratio every few dozen
  // iterations (refactorizing when it moves far). Dramatically improves
  // convergence when the active set or problem scaling is awkward.
  bool adaptive_rho = true;
};

struct QpWarmStart {
  Eigen::VectorXd x;
  Eigen::VectorXd y;  // consensus dual
};

// Operator-splitting solver: alternating an equality-constrained proximal
// step (one cached dense factorization per call) with an over-relaxed box
// projection. Deterministic: identical inputs give bit-identical outputs.
QpSolution solve_qp(const QpProblem& p, const QpSettings& s = {},
                    const QpWarmStart* warm = nullptr);

// Independent KKT residual recomputation, used by tests to cross-check the
// residuals the solver reports. sign_violation is how far any multiplier is
// on the wrong side for its active bound (0 when all signs are consistent).
struct KktResiduals {
  double eq = 0.0;
  double box = 0.0;
  double stationarity = 0.0;
  double sign_violation = 0.0;
};

KktResiduals kkt_residuals(const QpProblem& p, const Eigen::VectorXd& x,
                           const Eigen::VectorXd& nu, const Eigen::VectorXd& mu);

}  // namespace hopper
