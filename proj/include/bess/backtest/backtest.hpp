#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bess/backtest/config.hpp"
#include "bess/lcs/classifier.hpp"
#include "bess/market/io.hpp"
#include "bess/pool/pool.hpp"
#include "bess/rolling/rolling.hpp"

namespace bess::backtest {

/// Aggregate health of a batch of day runs.
struct RunStats {
  int runs = 0;
  int infeasible_solves = 0;
  int violations = 0;
  int rounding_rejections = 0;
};

/// Runs the rolling intrinsic for every (day, strategy) pair on a worker pool. Rows follow
/// `days`, columns `strategies`. Snapshot gaps raise a DataError naming the day.
pool::ProfitMatrix compute_profit_matrix(const market::MarketDataset& data, const std::vector<Date>& days,
                                         const std::vector<fcr::FcrStrategy>& strategies, const fcr::BessSpec& spec,
                                         const rolling::RiConfig& ri, int threads, RunStats* stats = nullptr);

/// One rolling intrinsic day with the inputs taken from a dataset.
rolling::DayResult run_strategy_day(const market::MarketDataset& data, Date day, const fcr::FcrStrategy& strategy,
                                    const fcr::BessSpec& spec, const rolling::RiConfig& ri);

/// Daily decisions of the learned classifier over the out-of-sample span.
struct LcsHistory {
  std::vector<Date> days;                       // out-of-sample days
  std::vector<std::vector<int>> pools;          // matrix columns of the selected pool per day
  std::vector<int> lcs;                         // matrix column chosen by the classifier
  std::vector<int> db;                          // best column over the training window
  std::vector<lcs::GbdtParams> params;          // winning hyperparameters per day
  std::vector<double> validation_profit;
};

struct PipelineOptions {
  int window = 90;
  int pool_size = 3;
  std::uint64_t seed = 7;
  lcs::TuningOptions tuning;
};

/// Walks forward over every matrix day that has a full window before it: selects the pool on
/// the window, labels the days, tunes and trains, predicts. Only rows before each decision day
/// are read from `matrix`. `features` must hold a row for each decision and window day.
LcsHistory run_lcs(const pool::ProfitMatrix& matrix, const lcs::FeatureTable& features, const PipelineOptions& options);

/// Trains the classifier that decides `day` from the last `window` matrix rows before it.
lcs::TrainedModel train_for_day(const pool::ProfitMatrix& matrix, const lcs::FeatureTable& features, Date day,
                                const PipelineOptions& options, const std::optional<lcs::GbdtParams>& incumbent,
                                std::vector<int>* pool_members = nullptr);

struct BenchmarkRow {
  std::string name;
  std::vector<fcr::FcrStrategy> choices;  // per day
  Eigen::VectorXd fcr;                    // per day, EUR
  Eigen::VectorXd idm;
  double total_fcr = 0.0;
  double total_idm = 0.0;
  double total = 0.0;
  double shortfall_pct = 0.0;       // relative to CV-28
  double equals_cv_s_pct = 0.0;     // days choosing the CV-S strategy
  double equals_cv28_pct = 0.0;
  double beats_lcs_pct = 0.0;       // days with a strictly larger profit than LCS
};

struct BenchmarkReport {
  std::vector<Date> days;
  int pool_size = 0;
  std::vector<BenchmarkRow> rows;  // CV-28, CV-S, LCS, then the enabled baselines
  pool::ProfitMatrix oos;          // catalogue profits over the out-of-sample days
  std::vector<std::vector<int>> pools;

  const BenchmarkRow& row(const std::string& name) const;
};

/// Inputs of benchmarks(): per-day decisions as matrix columns, optional rows via toggles.
struct BenchmarkInputs {
  pool::ProfitMatrix oos;
  int pool_size = 0;
  std::vector<std::vector<int>> pools;
  std::vector<int> lcs;
  std::optional<std::vector<int>> db;
  std::optional<int> sb;                  // static column
  std::optional<int> only_fcr;            // column of the all-maximum strategy
  /// Profits of the all-zero strategy per day (fcr, idm); not a catalogue member.
  std::optional<std::pair<Eigen::VectorXd, Eigen::VectorXd>> only_idm;
};

BenchmarkReport benchmarks(const BenchmarkInputs& in);

/// Everything a run produced.
struct BacktestResult {
  BenchmarkReport report;
  pool::ProfitMatrix matrix;  // every strategy over training and out-of-sample days
  LcsHistory history;
  RunStats stats;
};

/// Loads or synthesizes the data, fills the profit matrix (from the cache when it matches),
/// runs the classifier pipeline and the benchmarks.
BacktestResult run_backtest(const BacktestConfig& config);

/// Loads `config.data_dir` or synthesizes the market described by the config.
market::MarketDataset load_market(const BacktestConfig& config);

/// Days [first_day, last_day] of the config.
std::vector<Date> backtest_days(const BacktestConfig& config);

/// Feature table with interactions for `days`.
lcs::FeatureTable feature_table(const market::MarketDataset& data, const std::vector<Date>& days, Date origin);

/// Profit matrix of the catalogue over the config's days, read from config.profit_cache when it
/// covers them and computed (and cached) otherwise.
pool::ProfitMatrix catalogue_matrix(const BacktestConfig& config, const market::MarketDataset& data,
                                    RunStats* stats = nullptr);

}  // namespace bess::backtest
