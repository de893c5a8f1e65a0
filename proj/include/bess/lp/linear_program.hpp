#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <vector>

#include "bess/core/error.hpp"

namespace bess::lp {

enum class Sense { minimize, maximize };
enum class Status { optimal, infeasible, unbounded, iteration_limit, node_limit };

const char* to_string(Status s);

template <typename Scalar>
inline constexpr Scalar kInfinity = std::numeric_limits<Scalar>::infinity();

/// Dense linear program with bounded variables and ranged rows:
///   optimize c'x  subject to  row_lower <= A x <= row_upper,  lower <= x <= upper,
/// with `integer[j]` marking variables restricted to integral values.
template <typename Scalar = double>
struct LinearProgram {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  Sense sense = Sense::maximize;
  Vector objective;
  Vector lower;
  Vector upper;
  Matrix A;
  Vector row_lower;
  Vector row_upper;
  std::vector<bool> integer;

  Eigen::Index variables() const { return objective.size(); }
  Eigen::Index rows() const { return A.rows(); }

  /// Throws DomainError on inconsistent dimensions or inverted bounds.
  void check() const {
    const auto n = variables();
    if (lower.size() != n || upper.size() != n || A.cols() != n || static_cast<Eigen::Index>(integer.size()) != n)
      throw DomainError("linear program: column dimensions disagree");
    if (row_lower.size() != rows() || row_upper.size() != rows())
      throw DomainError("linear program: row dimensions disagree");
    for (Eigen::Index j = 0; j < n; ++j)
      if (!(lower(j) <= upper(j))) throw DomainError("linear program: empty variable bounds");
    for (Eigen::Index i = 0; i < rows(); ++i)
      if (!(row_lower(i) <= row_upper(i))) throw DomainError("linear program: empty row bounds");
  }
};

/// Incremental construction of a LinearProgram from sparse coefficients.
template <typename Scalar = double>
class ProgramBuilder {
 public:
  explicit ProgramBuilder(Sense sense = Sense::maximize) : sense_(sense) {}

  int add_variable(Scalar lo, Scalar hi, Scalar cost, bool integral = false) {
    lower_.push_back(lo);
    upper_.push_back(hi);
    cost_.push_back(cost);
    integer_.push_back(integral);
    return static_cast<int>(cost_.size()) - 1;
  }

  int add_row(Scalar lo, Scalar hi) {
    row_lower_.push_back(lo);
    row_upper_.push_back(hi);
    return static_cast<int>(row_lower_.size()) - 1;
  }

  /// Adds v to A(row, col); repeated calls accumulate.
  void add_coefficient(int row, int col, Scalar v) { entries_.push_back({row, col, v}); }

  int variables() const { return static_cast<int>(cost_.size()); }
  int rows() const { return static_cast<int>(row_lower_.size()); }

  LinearProgram<Scalar> build() const {
    LinearProgram<Scalar> lp;
    lp.sense = sense_;
    const auto n = static_cast<Eigen::Index>(cost_.size());
    const auto m = static_cast<Eigen::Index>(row_lower_.size());
    lp.objective = Eigen::Map<const typename LinearProgram<Scalar>::Vector>(cost_.data(), n);
    lp.lower = Eigen::Map<const typename LinearProgram<Scalar>::Vector>(lower_.data(), n);
    lp.upper = Eigen::Map<const typename LinearProgram<Scalar>::Vector>(upper_.data(), n);
    lp.row_lower = Eigen::Map<const typename LinearProgram<Scalar>::Vector>(row_lower_.data(), m);
    lp.row_upper = Eigen::Map<const typename LinearProgram<Scalar>::Vector>(row_upper_.data(), m);
    lp.A = LinearProgram<Scalar>::Matrix::Zero(m, n);
    for (const auto& e : entries_) lp.A(e.row, e.col) += e.value;
    lp.integer = integer_;
    return lp;
  }

 private:
  struct Entry {
    int row;
    int col;
    Scalar value;
  };
  Sense sense_;
  std::vector<Scalar> cost_, lower_, upper_, row_lower_, row_upper_;
  std::vector<bool> integer_;
  std::vector<Entry> entries_;
};

/// Simplex basis over the structural columns followed by one slack per row.
struct Basis {
  std::vector<int> basic;
  std::vector<char> at_upper;
  bool empty() const { return basic.empty(); }
};

template <typename Scalar = double>
struct LpResult {
  Status status = Status::infeasible;
  typename LinearProgram<Scalar>::Vector x;
  Scalar objective = 0;
  Basis basis;
  /// Reduced costs of the structural columns followed by the row activities, in the solver's
  /// internal form (minimization, objective scaled by its largest coefficient).
  typename LinearProgram<Scalar>::Vector reduced_costs;
  int iterations = 0;
};

/// Largest violation of variable bounds, row bounds or integrality by x.
template <typename Scalar>
Scalar max_violation(const LinearProgram<Scalar>& lp, const typename LinearProgram<Scalar>::Vector& x,
                     bool check_integrality = false) {
  Scalar worst = 0;
  for (Eigen::Index j = 0; j < lp.variables(); ++j) {
    worst = std::max({worst, lp.lower(j) - x(j), x(j) - lp.upper(j)});
    if (check_integrality && lp.integer[static_cast<std::size_t>(j)])
      worst = std::max<Scalar>(worst, std::abs(x(j) - std::round(x(j))));
  }
  const typename LinearProgram<Scalar>::Vector activity = lp.A * x;
  for (Eigen::Index i = 0; i < lp.rows(); ++i)
    worst = std::max({worst, lp.row_lower(i) - activity(i), activity(i) - lp.row_upper(i)});
  return worst;
}

}  // namespace bess::lp
