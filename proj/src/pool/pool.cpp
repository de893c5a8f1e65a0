#include "bess/pool/pool.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <set>

#include "bess/core/csv.hpp"
#include "bess/core/error.hpp"
#include "bess/lp/branch_and_bound.hpp"

namespace bess::pool {

std::vector<fcr::FcrStrategy> default_catalogue(const fcr::BessSpec& spec) {
  static constexpr std::array<std::array<int, 6>, 28> kTable{{
      {5, 5, 5, 8, 8, 8}, {8, 8, 8, 5, 5, 5}, {8, 8, 8, 0, 0, 0}, {8, 8, 8, 0, 0, 5}, {8, 8, 8, 0, 0, 8},
      {8, 8, 8, 0, 5, 0}, {8, 8, 8, 0, 5, 5}, {8, 8, 8, 0, 5, 8}, {8, 8, 8, 0, 8, 0}, {8, 8, 8, 0, 8, 5},
      {8, 8, 8, 0, 8, 8}, {8, 8, 8, 5, 0, 0}, {8, 8, 8, 5, 0, 5}, {8, 8, 8, 5, 0, 8}, {8, 8, 8, 5, 5, 0},
      {8, 8, 8, 5, 5, 8}, {8, 8, 8, 5, 8, 0}, {8, 8, 8, 5, 8, 5}, {8, 8, 8, 5, 8, 8}, {8, 8, 8, 8, 0, 0},
      {8, 8, 8, 8, 0, 5}, {8, 8, 8, 8, 0, 8}, {8, 8, 8, 8, 5, 0}, {8, 8, 8, 8, 5, 5}, {8, 8, 8, 8, 5, 8},
      {8, 8, 8, 8, 8, 0}, {8, 8, 8, 8, 8, 5}, {8, 8, 8, 8, 8, 8},
  }};
  spec.validate();
  const bool literal = spec.power_cap >= 10.0;
  const int high = literal ? 8 : static_cast<int>(std::floor(fcr::kMaxBidShare * spec.power_cap + 1e-9));
  const int mid = literal ? 5 : static_cast<int>(std::floor(0.5 * spec.power_cap + 1e-9));
  std::vector<fcr::FcrStrategy> out;
  for (const auto& row : kTable) {
    fcr::FcrStrategy s;
    for (std::size_t i = 0; i < 6; ++i) s.x[i] = row[i] == 8 ? high : row[i] == 5 ? mid : 0;
    out.push_back(s);
  }
  return out;
}

std::string strategy_id(const fcr::FcrStrategy& s) {
  std::string out;
  for (std::size_t i = 0; i < 6; ++i) {
    if (i) out += '-';
    out += std::to_string(s.x[i]);
  }
  return out;
}

fcr::FcrStrategy parse_strategy_id(std::string_view id) {
  const auto parts = csv::split(id, '-');
  if (parts.size() != 6) throw ValidationError("strategy id needs six blocks: " + std::string(id));
  fcr::FcrStrategy s;
  for (std::size_t i = 0; i < 6; ++i) {
    const auto& p = parts[i];
    if (p.empty() || !std::all_of(p.begin(), p.end(), [](char c) { return c >= '0' && c <= '9'; }))
      throw ValidationError("malformed strategy id: " + std::string(id));
    s.x[i] = std::stoi(p);
  }
  return s;
}

ProfitMatrix::ProfitMatrix(std::vector<Date> d, std::vector<fcr::FcrStrategy> s)
    : days(std::move(d)), strategies(std::move(s)) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  fcr = Eigen::MatrixXd::Constant(day_count(), strategy_count(), nan);
  idm = Eigen::MatrixXd::Constant(day_count(), strategy_count(), nan);
}

bool ProfitMatrix::complete() const { return fcr.allFinite() && idm.allFinite(); }

void ProfitMatrix::validate() const {
  if (fcr.rows() != day_count() || fcr.cols() != strategy_count() || idm.rows() != day_count() ||
      idm.cols() != strategy_count())
    throw ValidationError("profit matrix shape does not match its days and strategies");
  for (std::size_t d = 1; d < days.size(); ++d)
    if (!(days[d - 1] < days[d])) throw ValidationError("profit matrix days must be strictly increasing");
  std::set<fcr::FcrStrategy> seen(strategies.begin(), strategies.end());
  if (seen.size() != strategies.size()) throw ValidationError("profit matrix has duplicate strategies");
  if (!complete()) throw ValidationError("profit matrix has missing backtests; drop those days first");
}

ProfitMatrix ProfitMatrix::slice(Eigen::Index first, Eigen::Index count) const {
  if (first < 0 || count < 0 || first + count > day_count()) throw DomainError("profit matrix slice out of range");
  ProfitMatrix out;
  out.days.assign(days.begin() + first, days.begin() + first + count);
  out.strategies = strategies;
  out.fcr = fcr.middleRows(first, count);
  out.idm = idm.middleRows(first, count);
  return out;
}

ProfitMatrix drop_incomplete_days(const ProfitMatrix& m) {
  std::vector<Eigen::Index> keep;
  for (Eigen::Index d = 0; d < m.day_count(); ++d)
    if (m.fcr.row(d).allFinite() && m.idm.row(d).allFinite()) keep.push_back(d);
  ProfitMatrix out;
  out.strategies = m.strategies;
  out.fcr.resize(static_cast<Eigen::Index>(keep.size()), m.strategy_count());
  out.idm.resize(static_cast<Eigen::Index>(keep.size()), m.strategy_count());
  for (std::size_t k = 0; k < keep.size(); ++k) {
    out.days.push_back(m.days[static_cast<std::size_t>(keep[k])]);
    out.fcr.row(static_cast<Eigen::Index>(k)) = m.fcr.row(keep[k]);
    out.idm.row(static_cast<Eigen::Index>(k)) = m.idm.row(keep[k]);
  }
  return out;
}

double pool_value(const Eigen::MatrixXd& profits, const std::vector<int>& members) {
  if (members.empty()) return 0.0;
  double total = 0.0;
  for (Eigen::Index d = 0; d < profits.rows(); ++d) {
    double best = -std::numeric_limits<double>::infinity();
    for (const int j : members) best = std::max(best, profits(d, j));
    total += best;
  }
  return total;
}

namespace {

void check_pool_size(const Eigen::MatrixXd& profits, int pool_size) {
  if (pool_size < 1 || pool_size > profits.cols())
    throw DomainError("pool size must be within 1.." + std::to_string(profits.cols()));
  if (!profits.allFinite()) throw ValidationError("profit matrix has missing or non-finite entries");
}

/// Depth-first search over columns in descending column-sum order. The bound completes the
/// current pool with every column not yet decided, which can only raise each day's maximum.
class PoolSearch {
 public:
  PoolSearch(const Eigen::MatrixXd& p, int size) : p_(p), size_(size) {
    const auto n = static_cast<int>(p.cols());
    order_.resize(static_cast<std::size_t>(n));
    std::iota(order_.begin(), order_.end(), 0);
    const Eigen::VectorXd sums = p.colwise().sum().transpose();
    std::stable_sort(order_.begin(), order_.end(), [&](int a, int b) { return sums(a) > sums(b); });
    suffix_.resize(static_cast<std::size_t>(n) + 1);
    suffix_[static_cast<std::size_t>(n)] =
        Eigen::VectorXd::Constant(p.rows(), -std::numeric_limits<double>::infinity());
    for (int k = n - 1; k >= 0; --k)
      suffix_[static_cast<std::size_t>(k)] =
          suffix_[static_cast<std::size_t>(k) + 1].cwiseMax(p.col(order_[static_cast<std::size_t>(k)]));
    scale_ = 1.0 + p.cwiseAbs().sum();
  }

  PoolSelection run() {
    Eigen::VectorXd cur = Eigen::VectorXd::Constant(p_.rows(), -std::numeric_limits<double>::infinity());
    std::vector<int> chosen;
    visit(0, cur, chosen);
    std::sort(best_.members.begin(), best_.members.end());
    return best_;
  }

 private:
  bool ties(double a, double b) const { return std::abs(a - b) <= 1e-12 * scale_; }

  void offer(const std::vector<int>& chosen, double value) {
    std::vector<int> sorted = chosen;
    std::sort(sorted.begin(), sorted.end());
    if (!found_ || value > best_.objective + 1e-12 * scale_ ||
        (ties(value, best_.objective) && sorted < best_.members)) {
      best_.members = std::move(sorted);
      best_.objective = pool_value(p_, best_.members);
      found_ = true;
    }
  }

  void visit(int k, const Eigen::VectorXd& cur, std::vector<int>& chosen) {
    const int n = static_cast<int>(order_.size());
    const int need = size_ - static_cast<int>(chosen.size());
    if (need == 0) {
      offer(chosen, cur.sum());
      return;
    }
    if (n - k < need) return;
    if (found_) {
      const double bound = cur.cwiseMax(suffix_[static_cast<std::size_t>(k)]).sum();
      if (bound < best_.objective - 1e-12 * scale_) return;
    }
    const int j = order_[static_cast<std::size_t>(k)];
    chosen.push_back(j);
    visit(k + 1, cur.cwiseMax(p_.col(j)), chosen);
    chosen.pop_back();
    visit(k + 1, cur, chosen);
  }

  const Eigen::MatrixXd& p_;
  int size_;
  std::vector<int> order_;
  std::vector<Eigen::VectorXd> suffix_;
  double scale_ = 1.0;
  PoolSelection best_;
  bool found_ = false;
};

}  // namespace

PoolSelection select_pool(const Eigen::MatrixXd& profits, int pool_size) {
  check_pool_size(profits, pool_size);
  return PoolSearch(profits, pool_size).run();
}

PoolSelection select_pool(const ProfitMatrix& m, int pool_size) {
  m.validate();
  return select_pool(m.total(), pool_size);
}

lp::LinearProgram<double> pool_program(const Eigen::MatrixXd& profits, int pool_size) {
  check_pool_size(profits, pool_size);
  const auto days = static_cast<int>(profits.rows());
  const auto n = static_cast<int>(profits.cols());
  lp::ProgramBuilder<double> b(lp::Sense::maximize);
  for (int j = 0; j < n; ++j) b.add_variable(0.0, 1.0, 0.0, true);
  for (int d = 0; d < days; ++d)
    for (int j = 0; j < n; ++j) b.add_variable(0.0, 1.0, profits(d, j));
  auto w = [&](int d, int j) { return n + d * n + j; };
  for (int d = 0; d < days; ++d) {
    const int r = b.add_row(1.0, 1.0);
    for (int j = 0; j < n; ++j) b.add_coefficient(r, w(d, j), 1.0);
  }
  for (int d = 0; d < days; ++d)
    for (int j = 0; j < n; ++j) {
      const int r = b.add_row(-lp::kInfinity<double>, 0.0);
      b.add_coefficient(r, w(d, j), 1.0);
      b.add_coefficient(r, j, -1.0);
    }
  const int r = b.add_row(pool_size, pool_size);
  for (int j = 0; j < n; ++j) b.add_coefficient(r, j, 1.0);
  return b.build();
}

PoolSelection solve_pool_program(const Eigen::MatrixXd& profits, int pool_size) {
  const auto program = pool_program(profits, pool_size);
  const auto res = lp::branch_and_bound(program);
  if (res.status != lp::Status::optimal) throw Error("pool program not solved: " + std::string(lp::to_string(res.status)));
  PoolSelection out;
  for (Eigen::Index j = 0; j < profits.cols(); ++j)
    if (res.x(j) > 0.5) out.members.push_back(static_cast<int>(j));
  out.objective = res.objective;
  return out;
}

std::vector<int> label_days(const Eigen::MatrixXd& profits, const std::vector<int>& members) {
  if (members.empty()) throw DomainError("cannot label days with an empty pool");
  std::vector<int> sorted = members;
  std::sort(sorted.begin(), sorted.end());
  std::vector<int> labels(static_cast<std::size_t>(profits.rows()));
  for (Eigen::Index d = 0; d < profits.rows(); ++d) {
    int best = sorted.front();
    for (const int j : sorted)
      if (profits(d, j) > profits(d, best)) best = j;
    labels[static_cast<std::size_t>(d)] = best;
  }
  return labels;
}

void write_profit_matrix(std::ostream& out, const ProfitMatrix& m) {
  csv::write_row(out, {"date", "strategy_id", "pi_fcr", "pi_idm", "pi_total"});
  for (Eigen::Index d = 0; d < m.day_count(); ++d)
    for (Eigen::Index j = 0; j < m.strategy_count(); ++j) {
      if (!std::isfinite(m.fcr(d, j)) || !std::isfinite(m.idm(d, j))) continue;
      csv::write_row(out, {format_date(m.days[static_cast<std::size_t>(d)]),
                           strategy_id(m.strategies[static_cast<std::size_t>(j)]), csv::format_double(m.fcr(d, j)),
                           csv::format_double(m.idm(d, j)), csv::format_double(m.fcr(d, j) + m.idm(d, j))});
    }
}

void write_profit_matrix(const std::filesystem::path& path, const ProfitMatrix& m) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  write_profit_matrix(out, m);
}

ProfitMatrix read_profit_matrix(std::istream& in) {
  csv::Reader reader(in);
  reader.require_header({"date", "strategy_id", "pi_fcr", "pi_idm", "pi_total"});
  struct Entry {
    Date day;
    fcr::FcrStrategy strategy;
    double fcr, idm;
  };
  std::vector<Entry> entries;
  std::vector<fcr::FcrStrategy> strategies;
  std::set<fcr::FcrStrategy> seen;
  std::set<Date> days;
  std::vector<std::string> f;
  while (reader.next(f)) {
    if (f.size() != 5) throw IngestionError("profit matrix row needs 5 fields", reader.row());
    Entry e{parse_date(f[0]), parse_strategy_id(f[1]), csv::parse_double(f[2], reader.row()),
            csv::parse_double(f[3], reader.row())};
    const double total = csv::parse_double(f[4], reader.row());
    if (std::abs(total - (e.fcr + e.idm)) > 1e-6 * (1.0 + std::abs(total)))
      throw IngestionError("pi_total differs from pi_fcr + pi_idm", reader.row());
    if (seen.insert(e.strategy).second) strategies.push_back(e.strategy);
    days.insert(e.day);
    entries.push_back(e);
  }
  ProfitMatrix m({days.begin(), days.end()}, strategies);
  std::map<Date, Eigen::Index> row;
  for (const auto d : m.days) row.emplace(d, static_cast<Eigen::Index>(row.size()));
  std::map<fcr::FcrStrategy, Eigen::Index> col;
  for (const auto& s : strategies) col.emplace(s, static_cast<Eigen::Index>(col.size()));
  for (const auto& e : entries) {
    const auto r = row.at(e.day), c = col.at(e.strategy);
    if (std::isfinite(m.fcr(r, c))) throw IngestionError("duplicate profit entry for " + format_date(e.day), 0);
    m.fcr(r, c) = e.fcr;
    m.idm(r, c) = e.idm;
  }
  return m;
}

ProfitMatrix read_profit_matrix(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IngestionError("cannot open " + path.string(), 0);
  return read_profit_matrix(in);
}

}  // namespace bess::pool
