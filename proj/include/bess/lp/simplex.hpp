#pragma once

#include <algorithm>
#include <cmath>

#include "bess/lp/linear_program.hpp"

namespace bess::lp {

struct SimplexOptions {
  double feasibility_tol = 1e-9;
  double optimality_tol = 1e-9;
  double pivot_tol = 1e-9;
  int refactor_every = 64;
  int degenerate_streak_for_bland = 50;
  int max_iterations = 0;  // 0 = 50 * (rows + columns)
};

namespace detail {

/// Bounded-variable primal simplex on an explicit tableau T = B^-1 [A  -I]. Column j < n is a
/// structural variable, column n + i the activity of row i, so the only equalities are
/// A x - s = 0 and every restriction becomes a variable bound. Phase one minimizes the sum of
/// bound violations of the basic variables; a violating variable may move up to the bound it
/// violates but not beyond, so infeasibility never grows.
template <typename Scalar>
class BoundedSimplex {
 public:
  using Vector = typename LinearProgram<Scalar>::Vector;
  using Matrix = typename LinearProgram<Scalar>::Matrix;
  using RowVector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

  BoundedSimplex(const LinearProgram<Scalar>& lp, const Vector& lower, const Vector& upper,
                 const SimplexOptions& opt)
      : lp_(lp), opt_(opt), m_(lp.rows()), n_(lp.variables()), N_(m_ + n_) {
    lo_.resize(N_);
    hi_.resize(N_);
    lo_.head(n_) = lower;
    hi_.head(n_) = upper;
    lo_.tail(m_) = lp.row_lower;
    hi_.tail(m_) = lp.row_upper;
    cost_ = Vector::Zero(N_);
    const Scalar scale = lp.objective.size() > 0 ? lp.objective.cwiseAbs().maxCoeff() : Scalar(0);
    const Scalar sign = lp.sense == Sense::maximize ? Scalar(-1) : Scalar(1);
    cost_.head(n_) = scale > 0 ? (sign / scale) * lp.objective : lp.objective;
    K_.resize(m_, N_);
    K_.leftCols(n_) = lp.A;
    K_.rightCols(m_) = -Matrix::Identity(m_, m_);
    x_ = Vector::Zero(N_);
  }

  LpResult<Scalar> run(const Basis* warm) {
    LpResult<Scalar> out;
    if (!(warm && install(*warm))) install_slack_basis();
    const int limit = opt_.max_iterations > 0 ? opt_.max_iterations : 50 * static_cast<int>(N_ + 1);
    int since_refactor = 0;
    int degenerate = 0;
    int iter = 0;
    for (; iter < limit; ++iter) {
      if (since_refactor >= opt_.refactor_every) {
        if (!refactor()) install_slack_basis();
        since_refactor = 0;
      }
      const bool phase_one = set_phase_costs();
      const Eigen::Index enter = choose_entering(degenerate >= opt_.degenerate_streak_for_bland);
      if (enter < 0) {
        // Confirm on a fresh factorization before declaring termination.
        if (since_refactor > 0) {
          if (!refactor()) install_slack_basis();
          since_refactor = 0;
          --iter;
          continue;
        }
        out.status = phase_one ? Status::infeasible : Status::optimal;
        break;
      }
      const Scalar dir = reduced_(enter) < 0 ? Scalar(1) : Scalar(-1);
      Eigen::Index leave_row = -1;
      Scalar step = 0;
      int leave_to_upper = 0;
      ratio_test(enter, dir, phase_one, degenerate >= opt_.degenerate_streak_for_bland, leave_row, step,
                 leave_to_upper);
      if (!std::isfinite(static_cast<double>(step))) {
        out.status = phase_one ? Status::infeasible : Status::unbounded;
        break;
      }
      degenerate = step <= Scalar(1e-12) ? degenerate + 1 : 0;
      // Move the entering variable and every basic variable along the edge.
      x_(enter) += dir * step;
      for (Eigen::Index i = 0; i < m_; ++i) x_(basic_[i]) -= dir * step * T_(i, enter);
      if (leave_row < 0) {
        x_(enter) = dir > 0 ? hi_(enter) : lo_(enter);  // bound flip
        continue;
      }
      const Eigen::Index leaving = basic_[leave_row];
      if (leave_to_upper != 0) x_(leaving) = leave_to_upper > 0 ? hi_(leaving) : lo_(leaving);
      pivot(leave_row, enter);
      ++since_refactor;
    }
    if (iter >= limit) out.status = Status::iteration_limit;
    out.iterations = iter;
    out.x = x_.head(n_);
    out.objective = lp_.objective.dot(out.x);
    out.reduced_costs = reduced_.transpose();
    out.basis.basic.assign(basic_.begin(), basic_.end());
    out.basis.at_upper.resize(static_cast<std::size_t>(N_));
    for (Eigen::Index j = 0; j < N_; ++j)
      out.basis.at_upper[static_cast<std::size_t>(j)] =
          std::isfinite(static_cast<double>(hi_(j))) && x_(j) >= hi_(j) ? 1 : 0;
    return out;
  }

 private:
  static bool finite(Scalar v) { return std::isfinite(static_cast<double>(v)); }

  Scalar tol_for(Scalar bound) const { return Scalar(opt_.feasibility_tol) * (Scalar(1) + std::abs(bound)); }

  void place_nonbasic(Eigen::Index j, bool prefer_upper) {
    if (prefer_upper && finite(hi_(j)))
      x_(j) = hi_(j);
    else if (finite(lo_(j)))
      x_(j) = lo_(j);
    else if (finite(hi_(j)))
      x_(j) = hi_(j);
    else
      x_(j) = 0;
  }

  void install_slack_basis() {
    basic_.resize(static_cast<std::size_t>(m_));
    pos_.assign(static_cast<std::size_t>(N_), -1);
    for (Eigen::Index i = 0; i < m_; ++i) {
      basic_[i] = n_ + i;
      pos_[static_cast<std::size_t>(n_ + i)] = static_cast<int>(i);
    }
    for (Eigen::Index j = 0; j < n_; ++j) place_nonbasic(j, false);
    refactor();
  }

  bool install(const Basis& b) {
    if (static_cast<Eigen::Index>(b.basic.size()) != m_ || static_cast<Eigen::Index>(b.at_upper.size()) != N_)
      return false;
    basic_.assign(b.basic.begin(), b.basic.end());
    pos_.assign(static_cast<std::size_t>(N_), -1);
    for (Eigen::Index i = 0; i < m_; ++i) {
      if (basic_[i] < 0 || basic_[i] >= N_ || pos_[static_cast<std::size_t>(basic_[i])] >= 0) return false;
      pos_[static_cast<std::size_t>(basic_[i])] = static_cast<int>(i);
    }
    for (Eigen::Index j = 0; j < N_; ++j)
      if (pos_[static_cast<std::size_t>(j)] < 0) place_nonbasic(j, b.at_upper[static_cast<std::size_t>(j)] != 0);
    return refactor();
  }

  /// Recomputes the tableau and the basic values from the basis columns.
  bool refactor() {
    if (m_ == 0) {
      T_.resize(0, N_);
      return true;
    }
    Matrix B(m_, m_);
    for (Eigen::Index i = 0; i < m_; ++i) B.col(i) = K_.col(basic_[i]);
    Eigen::FullPivLU<Matrix> lu(B);
    lu.setThreshold(Scalar(1e-11));
    if (!lu.isInvertible()) return false;
    T_ = lu.solve(K_);
    Vector xn = x_;
    for (Eigen::Index i = 0; i < m_; ++i) xn(basic_[i]) = 0;
    const Vector xb = -lu.solve(Vector(K_ * xn));
    for (Eigen::Index i = 0; i < m_; ++i) x_(basic_[i]) = xb(i);
    return true;
  }

  /// Fills phase_cost_ (phase one when any basic variable violates a bound) and the reduced costs.
  bool set_phase_costs() {
    bool infeasible = false;
    phase_cost_ = Vector::Zero(N_);
    for (Eigen::Index i = 0; i < m_; ++i) {
      const Eigen::Index j = basic_[i];
      if (x_(j) < lo_(j) - tol_for(lo_(j))) {
        phase_cost_(j) = -1;
        infeasible = true;
      } else if (x_(j) > hi_(j) + tol_for(hi_(j))) {
        phase_cost_(j) = 1;
        infeasible = true;
      }
    }
    if (!infeasible) phase_cost_ = cost_;
    Vector cb(m_);
    for (Eigen::Index i = 0; i < m_; ++i) cb(i) = phase_cost_(basic_[i]);
    reduced_ = phase_cost_.transpose() - cb.transpose() * T_;
    return infeasible;
  }

  Eigen::Index choose_entering(bool bland) const {
    Eigen::Index best = -1;
    Scalar best_score = 0;
    const Scalar tol = Scalar(opt_.optimality_tol);
    for (Eigen::Index j = 0; j < N_; ++j) {
      if (pos_[static_cast<std::size_t>(j)] >= 0) continue;
      const Scalar d = reduced_(j);
      const bool can_up = x_(j) < hi_(j) - tol_for(hi_(j)) || !finite(hi_(j));
      const bool can_down = x_(j) > lo_(j) + tol_for(lo_(j)) || !finite(lo_(j));
      Scalar score = 0;
      if (d < -tol && can_up) score = -d;
      if (d > tol && can_down) score = d;
      if (score <= 0) continue;
      if (bland) return j;
      if (score > best_score) {
        best_score = score;
        best = j;
      }
    }
    return best;
  }

  void ratio_test(Eigen::Index enter, Scalar dir, bool phase_one, bool bland, Eigen::Index& leave_row, Scalar& step,
                  int& leave_to_upper) const {
    step = finite(hi_(enter)) && finite(lo_(enter)) ? hi_(enter) - lo_(enter) : kInfinity<Scalar>;
    leave_row = -1;
    leave_to_upper = 0;
    Scalar best_alpha = 0;
    for (Eigen::Index i = 0; i < m_; ++i) {
      const Scalar alpha = T_(i, enter);
      if (std::abs(alpha) <= Scalar(opt_.pivot_tol)) continue;
      const Eigen::Index j = basic_[i];
      const Scalar rate = -dir * alpha;  // change of x_j per unit step
      Scalar lo = lo_(j);
      Scalar hi = hi_(j);
      if (phase_one) {
        // A violating variable may travel up to the bound it violates.
        if (x_(j) < lo - tol_for(lo)) {
          hi = lo;
          lo = -kInfinity<Scalar>;
        } else if (x_(j) > hi + tol_for(hi)) {
          lo = hi;
          hi = kInfinity<Scalar>;
        }
      }
      Scalar limit;
      int side;
      if (rate > 0) {
        if (!finite(hi)) continue;
        limit = std::max(Scalar(0), (hi - x_(j)) / rate);
        side = hi == hi_(j) ? 1 : -1;
      } else {
        if (!finite(lo)) continue;
        limit = std::max(Scalar(0), (lo - x_(j)) / rate);
        side = lo == lo_(j) ? -1 : 1;
      }
      bool take = false;
      if (!finite(step)) {
        take = true;
      } else {
        const Scalar tie = Scalar(1e-12) * (Scalar(1) + std::abs(step));
        if (limit < step - tie)
          take = true;
        else if (limit <= step + tie && leave_row >= 0)
          take = bland ? basic_[i] < basic_[leave_row] : std::abs(alpha) > best_alpha;
      }
      if (take) {
        step = limit;
        leave_row = i;
        leave_to_upper = side;
        best_alpha = std::abs(alpha);
      }
    }
  }

  void pivot(Eigen::Index r, Eigen::Index enter) {
    const Scalar piv = T_(r, enter);
    const RowVector prow = T_.row(r) / piv;
    Vector col = T_.col(enter);
    col(r) = 0;
    T_.noalias() -= col * prow;
    T_.row(r) = prow;
    const Eigen::Index leaving = basic_[r];
    pos_[static_cast<std::size_t>(leaving)] = -1;
    basic_[r] = enter;
    pos_[static_cast<std::size_t>(enter)] = static_cast<int>(r);
  }

  const LinearProgram<Scalar>& lp_;
  SimplexOptions opt_;
  Eigen::Index m_, n_, N_;
  Vector lo_, hi_, cost_, phase_cost_, x_;
  RowVector reduced_;
  Matrix K_, T_;
  std::vector<Eigen::Index> basic_;
  std::vector<int> pos_;
};

}  // namespace detail

/// Solves the continuous relaxation with the variable bounds replaced by (lower, upper).
template <typename Scalar>
LpResult<Scalar> solve_lp(const LinearProgram<Scalar>& lp, const typename LinearProgram<Scalar>::Vector& lower,
                          const typename LinearProgram<Scalar>::Vector& upper, const SimplexOptions& options = {},
                          const Basis* warm = nullptr) {
  for (Eigen::Index j = 0; j < lp.variables(); ++j)
    if (!(lower(j) <= upper(j))) {
      LpResult<Scalar> r;
      r.x = lower;
      return r;
    }
  detail::BoundedSimplex<Scalar> simplex(lp, lower, upper, options);
  return simplex.run(warm);
}

/// Solves the continuous relaxation of lp (integrality ignored).
template <typename Scalar>
LpResult<Scalar> solve_lp(const LinearProgram<Scalar>& lp, const SimplexOptions& options = {},
                          const Basis* warm = nullptr) {
  lp.check();
  return solve_lp(lp, lp.lower, lp.upper, options, warm);
}

}  // namespace bess::lp
