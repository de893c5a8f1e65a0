#include "bess/backtest/backtest.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "bess/backtest/parallel.hpp"
#include "bess/core/error.hpp"
#include "bess/core/random.hpp"
#include "bess/market/synthetic.hpp"

namespace bess::backtest {
namespace {

int argmax_first(const Eigen::Ref<const Eigen::RowVectorXd>& v, const std::vector<int>& among) {
  int best = among.front();
  for (const int j : among)
    if (v(j) > v(best)) best = j;
  return best;
}

std::vector<int> all_columns(Eigen::Index n) {
  std::vector<int> cols(static_cast<std::size_t>(n));
  for (Eigen::Index j = 0; j < n; ++j) cols[static_cast<std::size_t>(j)] = static_cast<int>(j);
  return cols;
}

bool same_profit(double a, double b) { return std::abs(a - b) <= 1e-9 * std::max(1.0, std::abs(a)); }

lcs::FeatureTable window_features(const lcs::FeatureTable& all, const std::vector<Date>& days) {
  lcs::FeatureTable t;
  t.days = days;
  t.names = all.names;
  t.values.resize(static_cast<Eigen::Index>(days.size()), all.values.cols());
  for (std::size_t i = 0; i < days.size(); ++i) t.values.row(static_cast<Eigen::Index>(i)) = all.values.row(all.row_of(days[i]));
  return t;
}

/// Settings the cached matrix depends on.
std::string cache_key(const BacktestConfig& c) {
  static const char* const relevant[] = {"data_dir",  "regime",       "first_day",          "seed",
                                         "window",    "oos_days",     "product_duration_h", "snapshot_interval_min",
                                         "cadence_min", "max_snapshot_age_min", "gate_closure_min", "open_hour",
                                         "depth",     "soc_fraction", "power_mw",           "energy_mwh",
                                         "eta_ch",    "eta_dis",      "alpha_lo",           "alpha_hi",
                                         "kappa",     "cycle_budget", "min_trade_mw"};
  std::ostringstream ss;
  ss << "bess-profit-cache v1\n";
  for (const auto& [k, v] : c.key_values())
    if (std::find_if(std::begin(relevant), std::end(relevant), [&](const char* r) { return k == r; }) !=
        std::end(relevant))
      ss << k << '=' << v << '\n';
  return ss.str();
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

rolling::DayResult run_strategy_day(const market::MarketDataset& data, Date day, const fcr::FcrStrategy& strategy,
                                    const fcr::BessSpec& spec, const rolling::RiConfig& ri) {
  rolling::DayInputs in;
  in.day = day;
  in.snapshots = data.snapshots;
  in.frequency = data.exogenous.frequency.values.empty() ? nullptr : &data.exogenous.frequency;
  const auto it = data.exogenous.fcr_clearing.find(day);
  if (it == data.exogenous.fcr_clearing.end()) throw DataError("FCR clearing prices missing for " + format_date(day));
  in.fcr_prices = it->second;
  try {
    return rolling::run_day(in, strategy, spec, ri);
  } catch (const DataError& e) {
    throw DataError(format_date(day) + " " + fcr::to_string(strategy) + ": " + e.what());
  }
}

pool::ProfitMatrix compute_profit_matrix(const market::MarketDataset& data, const std::vector<Date>& days,
                                         const std::vector<fcr::FcrStrategy>& strategies, const fcr::BessSpec& spec,
                                         const rolling::RiConfig& ri, int threads, RunStats* stats) {
  pool::ProfitMatrix m(days, strategies);
  const std::size_t cols = strategies.size();
  std::vector<RunStats> per(days.size() * cols);
  parallel_for(per.size(), threads, [&](std::size_t task) {
    const std::size_t d = task / cols;
    const std::size_t s = task % cols;
    const auto r = run_strategy_day(data, days[d], strategies[s], spec, ri);
    m.fcr(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(s)) = r.pi_fcr;
    m.idm(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(s)) = r.pi_idm;
    auto& st = per[task];
    st.runs = 1;
    st.infeasible_solves = r.infeasible_solves;
    st.violations = static_cast<int>(r.violations.size());
    st.rounding_rejections = static_cast<int>(
        std::count_if(r.iterations.begin(), r.iterations.end(), [](const auto& it) { return it.rounding_rejected; }));
  });
  if (stats)
    for (const auto& st : per) {
      stats->runs += st.runs;
      stats->infeasible_solves += st.infeasible_solves;
      stats->violations += st.violations;
      stats->rounding_rejections += st.rounding_rejections;
    }
  return m;
}

lcs::TrainedModel train_for_day(const pool::ProfitMatrix& matrix, const lcs::FeatureTable& features, Date day,
                                const PipelineOptions& o, const std::optional<lcs::GbdtParams>& incumbent,
                                std::vector<int>* pool_members) {
  // The window is the last `window` rows strictly before the decision day.
  const Eigen::Index r = std::lower_bound(matrix.days.begin(), matrix.days.end(), day) - matrix.days.begin();
  if (r < o.window)
    throw ConfigurationError("fewer than " + std::to_string(o.window) + " backtested days before " + format_date(day));
  const auto window = matrix.slice(r - o.window, o.window);
  const auto selection = pool::select_pool(window, o.pool_size);
  const Eigen::MatrixXd total = window.total();
  const auto best = pool::label_days(total, selection.members);

  std::vector<int> y;
  for (const int col : best)
    y.push_back(static_cast<int>(std::find(selection.members.begin(), selection.members.end(), col) -
                                 selection.members.begin()));
  Eigen::MatrixXd profits(total.rows(), static_cast<Eigen::Index>(selection.members.size()));
  std::vector<fcr::FcrStrategy> labels;
  for (std::size_t k = 0; k < selection.members.size(); ++k) {
    profits.col(static_cast<Eigen::Index>(k)) = total.col(selection.members[k]);
    labels.push_back(window.strategies[static_cast<std::size_t>(selection.members[k])]);
  }
  if (pool_members) *pool_members = selection.members;
  const auto seed = derive_seed(o.seed, {0x6c6373ULL, static_cast<std::uint64_t>(day.time_since_epoch().count())});
  return lcs::tune_and_train(window_features(features, window.days), y, profits, labels, seed, incumbent, o.tuning);
}

LcsHistory run_lcs(const pool::ProfitMatrix& matrix, const lcs::FeatureTable& features, const PipelineOptions& o) {
  LcsHistory h;
  std::optional<lcs::GbdtParams> incumbent;
  const Eigen::MatrixXd total = matrix.total();
  const auto columns = all_columns(matrix.strategy_count());
  for (Eigen::Index r = o.window; r < matrix.day_count(); ++r) {
    const Date day = matrix.days[static_cast<std::size_t>(r)];
    std::vector<int> members;
    const auto model = train_for_day(matrix, features, day, o, incumbent, &members);
    const int k = lcs::predict_class(model, features, features.row_of(day));
    const Eigen::RowVectorXd window_sum = total.middleRows(r - o.window, o.window).colwise().sum();
    h.days.push_back(day);
    h.pools.push_back(members);
    h.lcs.push_back(members[static_cast<std::size_t>(k)]);
    h.db.push_back(argmax_first(window_sum, columns));
    h.params.push_back(model.params);
    h.validation_profit.push_back(model.validation_profit);
    incumbent = model.params;
  }
  return h;
}

const BenchmarkRow& BenchmarkReport::row(const std::string& name) const {
  for (const auto& r : rows)
    if (r.name == name) return r;
  throw DomainError("no benchmark row named " + name);
}

BenchmarkReport benchmarks(const BenchmarkInputs& in) {
  const auto& m = in.oos;
  m.validate();
  const Eigen::Index days = m.day_count();
  const auto n = static_cast<std::size_t>(days);
  if (in.pools.size() != n || in.lcs.size() != n || (in.db && in.db->size() != n))
    throw DomainError("one decision per out-of-sample day required");
  const Eigen::MatrixXd total = m.total();
  const auto columns = all_columns(m.strategy_count());

  BenchmarkReport rep;
  rep.days = m.days;
  rep.pool_size = in.pool_size;
  rep.oos = m;
  rep.pools = in.pools;

  auto from_columns = [&](std::string name, const std::vector<int>& cols) {
    BenchmarkRow row;
    row.name = std::move(name);
    row.fcr.resize(days);
    row.idm.resize(days);
    for (Eigen::Index d = 0; d < days; ++d) {
      const int c = cols[static_cast<std::size_t>(d)];
      row.choices.push_back(m.strategies[static_cast<std::size_t>(c)]);
      row.fcr(d) = m.fcr(d, c);
      row.idm(d) = m.idm(d, c);
    }
    return row;
  };

  std::vector<int> cv28;
  std::vector<int> cvs;
  for (Eigen::Index d = 0; d < days; ++d) {
    cv28.push_back(argmax_first(total.row(d), columns));
    cvs.push_back(argmax_first(total.row(d), in.pools[static_cast<std::size_t>(d)]));
  }
  rep.rows.push_back(from_columns("CV-" + std::to_string(m.strategy_count()), cv28));
  rep.rows.push_back(from_columns("CV-" + std::to_string(in.pool_size), cvs));
  rep.rows.push_back(from_columns("LCS", in.lcs));
  if (in.db) rep.rows.push_back(from_columns("DB", *in.db));
  if (in.sb) rep.rows.push_back(from_columns("SB", std::vector<int>(n, *in.sb)));
  if (in.only_fcr) rep.rows.push_back(from_columns("Only-FCR", std::vector<int>(n, *in.only_fcr)));
  if (in.only_idm) {
    BenchmarkRow row;
    row.name = "Only-IDM";
    row.choices.assign(n, fcr::FcrStrategy{});
    row.fcr = in.only_idm->first;
    row.idm = in.only_idm->second;
    if (row.fcr.size() != days || row.idm.size() != days) throw DomainError("Only-IDM needs one profit per day");
    rep.rows.push_back(std::move(row));
  }

  for (auto& row : rep.rows) {
    row.total_fcr = row.fcr.sum();
    row.total_idm = row.idm.sum();
    row.total = row.total_fcr + row.total_idm;
  }
  const auto& ref28 = rep.rows[0];
  const auto& refs = rep.rows[1];
  const auto& lcs_row = rep.rows[2];
  const Eigen::VectorXd daily28 = ref28.fcr + ref28.idm;
  const Eigen::VectorXd dailys = refs.fcr + refs.idm;
  const Eigen::VectorXd daily_lcs = lcs_row.fcr + lcs_row.idm;
  const double scale = days > 0 ? 100.0 / static_cast<double>(days) : 0.0;
  std::vector<BenchmarkRow> rows = rep.rows;
  for (auto& row : rows) {
    const Eigen::VectorXd daily = row.fcr + row.idm;
    int eq28 = 0;
    int eqs = 0;
    int beats = 0;
    for (Eigen::Index d = 0; d < days; ++d) {
      eq28 += same_profit(daily(d), daily28(d));
      eqs += same_profit(daily(d), dailys(d));
      beats += daily(d) > daily_lcs(d) && !same_profit(daily(d), daily_lcs(d));
    }
    row.equals_cv28_pct = eq28 * scale;
    row.equals_cv_s_pct = eqs * scale;
    row.beats_lcs_pct = beats * scale;
    row.shortfall_pct = ref28.total != 0.0 ? (row.total - ref28.total) / std::abs(ref28.total) * 100.0 : 0.0;
  }
  rows[0].shortfall_pct = 0.0;
  rep.rows = std::move(rows);
  return rep;
}

market::MarketDataset load_market(const BacktestConfig& c) {
  if (c.data_dir.empty())
    return market::synthesize_market(c.seed, c.window + c.oos_days, c.regime, c.synthetic_options());
  return market::load_dataset(c.data_dir, c.snapshot_schema());
}

std::vector<Date> backtest_days(const BacktestConfig& c) {
  std::vector<Date> days;
  for (Date d = c.first_day; d <= c.last_day(); d += std::chrono::days{1}) days.push_back(d);
  return days;
}

lcs::FeatureTable feature_table(const market::MarketDataset& data, const std::vector<Date>& days, Date origin) {
  lcs::FeatureOptions o;
  o.origin = origin;
  return lcs::build_interactions(lcs::build_feature_table(data.exogenous, days, o), o);
}

pool::ProfitMatrix catalogue_matrix(const BacktestConfig& c, const market::MarketDataset& data, RunStats* stats) {
  const auto days = backtest_days(c);
  const auto strategies = pool::default_catalogue(c.spec);
  if (!c.profit_cache.empty()) {
    const auto key_path = std::filesystem::path(c.profit_cache.string() + ".key");
    if (std::filesystem::exists(c.profit_cache) && std::filesystem::exists(key_path) &&
        read_file(key_path) == cache_key(c)) {
      auto cached = pool::read_profit_matrix(c.profit_cache);
      if (cached.days == days && cached.strategies == strategies && cached.complete()) return cached;
    }
  }
  auto m = compute_profit_matrix(data, days, strategies, c.spec, c.ri_config(), c.threads, stats);
  if (!c.profit_cache.empty()) {
    if (c.profit_cache.has_parent_path()) std::filesystem::create_directories(c.profit_cache.parent_path());
    pool::write_profit_matrix(c.profit_cache, m);
    std::ofstream(c.profit_cache.string() + ".key") << cache_key(c);
  }
  return m;
}

BacktestResult run_backtest(const BacktestConfig& c) {
  c.validate();
  const auto data = load_market(c);
  BacktestResult res;
  res.matrix = catalogue_matrix(c, data, &res.stats);
  const auto days = backtest_days(c);
  const auto features = feature_table(data, days, c.first_day);
  res.history = run_lcs(res.matrix, features, PipelineOptions{c.window, c.pool_size, c.seed, c.tuning});

  BenchmarkInputs in;
  in.oos = res.matrix.slice(c.window, c.oos_days);
  in.pool_size = c.pool_size;
  in.pools = res.history.pools;
  in.lcs = res.history.lcs;
  if (c.bench_db) in.db = res.history.db;
  if (c.bench_sb) {
    // Fixed before the first out-of-sample day: the best strategy of the first window.
    const Eigen::RowVectorXd sums = res.matrix.total().topRows(c.window).colwise().sum();
    in.sb = argmax_first(sums, all_columns(res.matrix.strategy_count()));
  }
  if (c.bench_only_fcr) {
    const int level = static_cast<int>(std::floor(fcr::kMaxBidShare * c.spec.power_cap + 1e-9));
    fcr::FcrStrategy full;
    full.x.fill(std::min(level, 8));
    const auto it = std::find(res.matrix.strategies.begin(), res.matrix.strategies.end(), full);
    if (it == res.matrix.strategies.end()) throw ConfigurationError("catalogue lacks the all-FCR strategy");
    in.only_fcr = static_cast<int>(it - res.matrix.strategies.begin());
  }
  if (c.bench_only_idm) {
    const auto zero = compute_profit_matrix(data, in.oos.days, {fcr::FcrStrategy{}}, c.spec, c.ri_config(),
                                            c.threads, &res.stats);
    in.only_idm = std::make_pair(Eigen::VectorXd(zero.fcr.col(0)), Eigen::VectorXd(zero.idm.col(0)));
  }
  res.report = benchmarks(in);
  return res;
}

}  // namespace bess::backtest
