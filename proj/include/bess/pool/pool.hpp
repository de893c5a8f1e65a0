#pragma once

#include <filesystem>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bess/core/time.hpp"
#include "bess/fcr/physics.hpp"
#include "bess/lp/linear_program.hpp"

namespace bess::pool {

/// The 28 static FCR strategies, order-stable. Below 10 MW of power the levels 8 and 5 are
/// scaled to floor(0.8 * P) and floor(0.5 * P).
std::vector<fcr::FcrStrategy> default_catalogue(const fcr::BessSpec& spec);

/// Compact CSV-safe identifier, e.g. "8-8-8-0-0-5".
std::string strategy_id(const fcr::FcrStrategy& s);
fcr::FcrStrategy parse_strategy_id(std::string_view id);

/// Daily profits of every strategy; rows are days, columns strategies. NaN marks a missing
/// backtest.
struct ProfitMatrix {
  std::vector<Date> days;
  std::vector<fcr::FcrStrategy> strategies;
  Eigen::MatrixXd fcr;
  Eigen::MatrixXd idm;

  ProfitMatrix() = default;
  ProfitMatrix(std::vector<Date> days, std::vector<fcr::FcrStrategy> strategies);

  Eigen::MatrixXd total() const { return fcr + idm; }
  Eigen::Index day_count() const { return static_cast<Eigen::Index>(days.size()); }
  Eigen::Index strategy_count() const { return static_cast<Eigen::Index>(strategies.size()); }
  bool complete() const;
  /// Throws ValidationError on shape mismatches, duplicate days or strategies, or missing entries.
  void validate() const;
  /// Rows [first, first + count) as a new matrix.
  ProfitMatrix slice(Eigen::Index first, Eigen::Index count) const;
};

/// The matrix without the days that miss any backtest.
ProfitMatrix drop_incomplete_days(const ProfitMatrix& m);

struct PoolSelection {
  std::vector<int> members;  // column indices, ascending
  double objective = 0.0;    // sum over days of the best member's profit
};

/// Exact maximizer of sum_d max_{X in pool} profits(d, X) over pools of size S. Among equal
/// objectives the lexicographically smallest index set is returned. Throws DomainError unless
/// 1 <= S <= columns.
PoolSelection select_pool(const Eigen::MatrixXd& profits, int pool_size);
PoolSelection select_pool(const ProfitMatrix& m, int pool_size);

/// Value of a given pool.
double pool_value(const Eigen::MatrixXd& profits, const std::vector<int>& members);

/// The selection problem as a mixed-integer program: binaries y_X, weights w_dX in [0, 1] with
/// sum_X w_dX = 1, w_dX <= y_X and sum_X y_X = S. Columns are y first, then w day-major.
lp::LinearProgram<double> pool_program(const Eigen::MatrixXd& profits, int pool_size);

/// Solves pool_program by branch and bound; meant for small instances.
PoolSelection solve_pool_program(const Eigen::MatrixXd& profits, int pool_size);

/// Best member per day, ties to the earliest column.
std::vector<int> label_days(const Eigen::MatrixXd& profits, const std::vector<int>& members);

/// CSV `date,strategy_id,pi_fcr,pi_idm,pi_total`, days ascending, strategies in matrix order.
void write_profit_matrix(std::ostream& out, const ProfitMatrix& m);
void write_profit_matrix(const std::filesystem::path& path, const ProfitMatrix& m);
ProfitMatrix read_profit_matrix(std::istream& in);
ProfitMatrix read_profit_matrix(const std::filesystem::path& path);

}  // namespace bess::pool
