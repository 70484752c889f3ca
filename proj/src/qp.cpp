#include "hopper/qp.hpp"

#include <Eigen/Cholesky>
#include <Eigen/LU>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>
#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "hopper/errors.hpp"

namespace hopper {

namespace {

double inf_norm(const Eigen::VectorXd& v) {
  return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff();
}

Eigen::VectorXd clamp(const Eigen::VectorXd& v, const Eigen::VectorXd& lb,
                      const Eigen::VectorXd& ub) {
  return v.cwiseMax(lb).cwiseMin(ub);
}

// Solver for the proximal equality-constrained subproblem
//   min 1/2 x'(H + rho I)x - r'x  s.t. Aeq x = beq
// factorized once per solve_qp call. Uses a Schur complement on the
// equality multipliers; when H is diagonal (the FTOCP Hessian is) the inner
// solve is a diagonal scale, otherwise a cached dense Cholesky.
class EqualityKkt {
 public:
  // The sparse path kicks in for diagonal H with a mostly-empty equality
  // Jacobian (receding-horizon problems are block-banded and ~3% dense);
  // sparse Cholesky then makes refactorization cheap enough to do freely.
  EqualityKkt(const QpProblem& p, const Eigen::SparseMatrix<double>* Asp, double rho)
      : A_(p.Aeq), Asp_(Asp), m_(p.Aeq.rows()) {
    diagonal_ = p.H.isDiagonal(0.0);
    if (diagonal_) {
      dinv_ = (p.H.diagonal().array() + rho).inverse();
    } else {
      Eigen::MatrixXd Ht = p.H;
      Ht.diagonal().array() += rho;
      hchol_.compute(Ht);
      if (hchol_.info() != Eigen::Success) {
        ok_ = false;
        return;
      }
    }
    if (m_ == 0) return;
    if (diagonal_ && Asp_ != nullptr) {
      Eigen::SparseMatrix<double> W = *Asp_;
      const Eigen::VectorXd scale = dinv_.sqrt().matrix();
      for (int k = 0; k < W.outerSize(); ++k)
        for (Eigen::SparseMatrix<double>::InnerIterator itr(W, k); itr; ++itr)
          itr.valueRef() *= scale(itr.col());
      Eigen::SparseMatrix<double> S = (W * W.transpose()).pruned();
      sparse_schur_.compute(S);
      if (sparse_schur_.info() != Eigen::Success) ok_ = false;
      return;
    }
    Eigen::MatrixXd S(m_, m_);
    if (diagonal_) {
      const Eigen::MatrixXd W = A_ * dinv_.cwiseSqrt().matrix().asDiagonal();
      S.setZero();
      S.selfadjointView<Eigen::Lower>().rankUpdate(W);
    } else {
      const Eigen::MatrixXd W = hchol_.matrixL().solve(A_.transpose());
      S.setZero();
      S.selfadjointView<Eigen::Lower>().rankUpdate(W.transpose());
    }
    schur_.compute(S);
    if (schur_.info() != Eigen::Success) ok_ = false;
  }

  bool ok() const { return ok_; }

  Eigen::VectorXd hsolve(const Eigen::VectorXd& r) const {
    if (diagonal_) return dinv_.matrix().asDiagonal() * r;
    return hchol_.solve(r);
  }

  // Returns x; nu (if any equalities) is written to *nu_out.
  Eigen::VectorXd solve(const Eigen::VectorXd& r, const Eigen::VectorXd& beq,
                        Eigen::VectorXd* nu_out) const {
    if (m_ == 0) {
      nu_out->resize(0);
      return hsolve(r);
    }
    const Eigen::VectorXd t = hsolve(r);
    if (diagonal_ && Asp_ != nullptr) {
      *nu_out = sparse_schur_.solve(*Asp_ * t - beq);
      return t - hsolve(Asp_->transpose() * *nu_out);
    }
    *nu_out = schur_.solve(A_ * t - beq);
    return t - hsolve(A_.transpose() * *nu_out);
  }

 private:
  const Eigen::MatrixXd& A_;
  const Eigen::SparseMatrix<double>* Asp_ = nullptr;
  Eigen::Index m_;
  bool diagonal_ = false;
  bool ok_ = true;
  Eigen::ArrayXd dinv_;
  Eigen::LLT<Eigen::MatrixXd> hchol_;
  Eigen::LLT<Eigen::MatrixXd> schur_;
  Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> sparse_schur_;
};

// Sparsify the equality Jacobian when it is worth it; returns nullopt for
// dense or empty A so callers fall back to the dense kernels.
std::optional<Eigen::SparseMatrix<double>> maybe_sparse(const Eigen::MatrixXd& A) {
  const Eigen::Index m = A.rows(), n = A.cols();
  if (m == 0 || m * n < 10000) return std::nullopt;
  Eigen::Index nnz = 0;
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < m; ++i)
      if (A(i, j) != 0.0) ++nnz;
  if (4 * nnz > m * n) return std::nullopt;  // denser than 25%: not worth it
  Eigen::SparseMatrix<double> S(m, n);
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(nnz);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < m; ++i)
      if (A(i, j) != 0.0) trip.emplace_back(i, j, A(i, j));
  S.setFromTriplets(trip.begin(), trip.end());
  return S;
}

void validate(const QpProblem& p) {
  const Eigen::Index n = p.H.rows();
  if (p.H.cols() != n || p.g.size() != n || p.lb.size() != n || p.ub.size() != n ||
      p.Aeq.cols() != (p.Aeq.rows() > 0 ? n : p.Aeq.cols()) ||
      p.beq.size() != p.Aeq.rows())
    throw DimensionMismatch("solve_qp: inconsistent problem dimensions");
}

// Active-set refinement: pin coordinates the splitting iteration says are at
// their bounds, solve the resulting equality-only KKT exactly, and keep the
// result if it is KKT-consistent. Recovers tight solutions from the modest
// first-order tolerance.
struct PolishResult {
  Eigen::VectorXd x, nu, mu;
  bool ok = false;
};

PolishResult polish(const QpProblem& p, const Eigen::VectorXd& x_admm,
                    const Eigen::VectorXd& y, double tol) {
  const Eigen::Index n = p.H.rows();
  const Eigen::Index m = p.Aeq.rows();
  std::vector<Eigen::Index> at_lb, at_ub;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (std::isfinite(p.lb(i)) && x_admm(i) <= p.lb(i) + 10 * tol && y(i) < 0)
      at_lb.push_back(i);
    else if (std::isfinite(p.ub(i)) && x_admm(i) >= p.ub(i) - 10 * tol && y(i) > 0)
      at_ub.push_back(i);
  }
  const Eigen::Index na = static_cast<Eigen::Index>(at_lb.size() + at_ub.size());
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n + m + na, n + m + na);
  Eigen::VectorXd rhs(n + m + na);
  K.topLeftCorner(n, n) = p.H;
  K.block(0, n, n, m) = p.Aeq.transpose();
  K.block(n, 0, m, n) = p.Aeq;
  rhs.head(n) = -p.g;
  rhs.segment(n, m) = p.beq;
  Eigen::Index row = n + m;
  for (Eigen::Index i : at_lb) {
    K(row, i) = 1.0;
    K(i, row) = 1.0;
    rhs(row++) = p.lb(i);
  }
  for (Eigen::Index i : at_ub) {
    K(row, i) = 1.0;
    K(i, row) = 1.0;
    rhs(row++) = p.ub(i);
  }

  PolishResult out;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(K);
  const Eigen::VectorXd sol = lu.solve(rhs);
  if (!sol.allFinite() || (K * sol - rhs).cwiseAbs().maxCoeff() > 1e-8) return out;

  out.x = sol.head(n);
  out.nu = sol.segment(n, m);
  out.mu = Eigen::VectorXd::Zero(n);
  row = n + m;
  for (Eigen::Index i : at_lb) out.mu(i) = sol(row++);
  for (Eigen::Index i : at_ub) out.mu(i) = sol(row++);
  // Multiplier signs and primal feasibility decide whether the guess stood.
  for (Eigen::Index i : at_lb)
    if (out.mu(i) > tol) return out;
  for (Eigen::Index i : at_ub)
    if (out.mu(i) < -tol) return out;
  if ((out.x - clamp(out.x, p.lb, p.ub)).cwiseAbs().maxCoeff() > tol) return out;
  out.ok = true;
  return out;
}

}  // namespace

QpSolution solve_qp(const QpProblem& p, const QpSettings& s, const QpWarmStart* warm) {
  validate(p);
  const Eigen::Index n = p.H.rows();

  QpSolution sol;
  double rho = s.rho;
  const std::optional<Eigen::SparseMatrix<double>> Asp = maybe_sparse(p.Aeq);
  const Eigen::SparseMatrix<double>* Asp_ptr = Asp ? &*Asp : nullptr;
  std::optional<EqualityKkt> kkt;
  kkt.emplace(p, Asp_ptr, rho);
  if (!kkt->ok()) {
    sol.zstar = Eigen::VectorXd::Zero(n);
    sol.status = QpStatus::NumericalFailure;
    return sol;
  }

  Eigen::VectorXd x = warm ? warm->x : Eigen::VectorXd::Zero(n);
  Eigen::VectorXd w = clamp(x, p.lb, p.ub);
  Eigen::VectorXd y = warm ? warm->y : Eigen::VectorXd::Zero(n);
  Eigen::VectorXd nu;

  // Residuals are compared against tolerances scaled by the magnitudes of
  // the quantities they balance; the scales are refreshed periodically.
  constexpr int kCheckEvery = 25;
  constexpr double kRhoMin = 1e-6, kRhoMax = 1e6, kRhoTrigger = 5.0;
  double prim_scale = 1.0, dual_scale = 1.0;
  auto refresh_scales = [&] {
    prim_scale = std::max(1.0, std::max(inf_norm(x), inf_norm(w)));
    dual_scale = std::max({1.0, inf_norm(p.H * x), inf_norm(p.g), inf_norm(y)});
  };

  int it = 0;
  bool converged = false;
  double r_prim = std::numeric_limits<double>::infinity();
  double r_dual = r_prim;
  for (; it < s.max_iter; ++it) {
    x = kkt->solve(rho * w - y - p.g, p.beq, &nu);
    if (!x.allFinite()) {
      sol.zstar = w;
      sol.status = QpStatus::NumericalFailure;
      sol.iterations = it;
      return sol;
    }
    const Eigen::VectorXd xhat = s.alpha * x + (1.0 - s.alpha) * w;
    const Eigen::VectorXd w_prev = w;
    w = clamp(xhat + y / rho, p.lb, p.ub);
    y += rho * (xhat - w);
    r_prim = inf_norm(x - w);
    r_dual = rho * inf_norm(w - w_prev);

    if (it % kCheckEvery == 0) refresh_scales();
    if (r_prim <= s.tol * prim_scale && r_dual <= s.tol * dual_scale) {
      ++it;
      converged = true;
      break;
    }

    if (s.adaptive_rho && it > 0 && it % kCheckEvery == 0) {
      const double rp = r_prim / prim_scale;
      const double rd = std::max(r_dual / dual_scale, 1e-300);
      const double proposal =
          std::clamp(rho * std::sqrt(rp / rd), kRhoMin, kRhoMax);
      if (proposal > kRhoTrigger * rho || proposal < rho / kRhoTrigger) {
        rho = proposal;
        kkt.emplace(p, Asp_ptr, rho);
        if (!kkt->ok()) {
          sol.zstar = w;
          sol.status = QpStatus::NumericalFailure;
          sol.iterations = it;
          return sol;
        }
      }
    }
  }

  sol.zstar = x;
  sol.nu = nu;
  sol.mu = y;
  sol.iterations = it;
  sol.rho_final = rho;

  if (s.polish && converged) {
    const PolishResult pol = polish(p, x, y, s.tol);
    if (pol.ok) {
      sol.zstar = pol.x;
      sol.nu = pol.nu;
      sol.mu = pol.mu;
    }
  }

  refresh_scales();
  const KktResiduals res = kkt_residuals(p, sol.zstar, sol.nu, sol.mu);
  sol.eq_residual = res.eq;
  sol.box_violation = res.box;
  sol.stationarity_residual = res.stationarity;
  sol.status = (res.eq <= s.tol * prim_scale && res.box <= s.tol * prim_scale &&
                res.stationarity <= 10 * s.tol * dual_scale)
                   ? QpStatus::Solved
                   : QpStatus::MaxIterations;
  return sol;
}

KktResiduals kkt_residuals(const QpProblem& p, const Eigen::VectorXd& x,
                           const Eigen::VectorXd& nu, const Eigen::VectorXd& mu) {
  KktResiduals out;
  if (p.Aeq.rows() > 0) out.eq = inf_norm(p.Aeq * x - p.beq);
  out.box = std::max(inf_norm((x - p.ub).cwiseMax(0.0)), inf_norm((p.lb - x).cwiseMax(0.0)));
  Eigen::VectorXd grad = p.H * x + p.g;
  if (p.Aeq.rows() > 0 && nu.size() == p.Aeq.rows()) grad += p.Aeq.transpose() * nu;
  if (mu.size() == x.size()) grad += mu;
  out.stationarity = inf_norm(grad);
  // A multiplier may only push toward the interior from its own bound.
  double sv = 0.0;
  if (mu.size() == x.size()) {
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      const double d_ub = std::isfinite(p.ub(i)) ? p.ub(i) - x(i) : 1e100;
      const double d_lb = std::isfinite(p.lb(i)) ? x(i) - p.lb(i) : 1e100;
      if (mu(i) > 0) sv = std::max(sv, std::min(mu(i), d_ub));
      if (mu(i) < 0) sv = std::max(sv, std::min(-mu(i), d_lb));
    }
  }
  out.sign_violation = sv;
  return out;
}

}  // namespace hopper
