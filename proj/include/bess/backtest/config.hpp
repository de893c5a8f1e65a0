#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <istream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "bess/core/time.hpp"
#include "bess/fcr/physics.hpp"
#include "bess/lcs/classifier.hpp"
#include "bess/market/synthetic.hpp"
#include "bess/rolling/rolling.hpp"

namespace bess::backtest {

/// Environment variables `BESS_<KEY>` (key upper-cased) override file values.
inline constexpr const char* kEnvPrefix = "BESS_";

struct BacktestConfig {
  // Data. An empty data_dir means a synthetic market generated from seed and regime.
  std::filesystem::path data_dir;
  market::Regime regime = market::Regime::mixed;
  Date first_day = Date{std::chrono::year{2024} / 1 / 1};  // first day with a backtest
  std::uint64_t seed = 7;
  int window = 90;     // training days N
  int oos_days = 30;   // out-of-sample days after the first window
  int pool_size = 3;   // S

  // Market and trading loop.
  double product_duration_h = 1.0;
  Minutes snapshot_interval{30};  // synthetic data only
  Minutes cadence{30};
  Minutes max_snapshot_age{30};
  Minutes gate_closure = market::kDefaultGateClosure;
  int open_hour = 19;
  int depth = market::kDefaultDepth;
  double soc_fraction = 0.5;  // initial and terminal SoC as a share of the energy capacity

  fcr::BessSpec spec;
  lcs::TuningOptions tuning;

  // Execution.
  int threads = 0;  // 0 = hardware concurrency
  std::filesystem::path out_dir = "report";
  std::filesystem::path profit_cache;  // read if present, written otherwise
  bool bench_sb = true;
  bool bench_db = true;
  bool bench_only_fcr = true;
  bool bench_only_idm = true;

  /// Throws ConfigurationError on an inconsistent combination.
  void validate() const;
  Date oos_first() const { return first_day + std::chrono::days{window}; }
  Date last_day() const { return first_day + std::chrono::days{window + oos_days - 1}; }
  rolling::RiConfig ri_config() const;
  market::SyntheticOptions synthetic_options() const;
  market::SnapshotSchema snapshot_schema() const { return {depth, gate_closure}; }
  /// Every key with its current value, in documentation order.
  std::vector<std::pair<std::string, std::string>> key_values() const;
};

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;
/// Reads the process environment.
std::optional<std::string> process_env(const std::string& name);

/// `key = value` lines; `#` starts a comment; blank lines are ignored. Unknown keys and
/// malformed values throw ConfigurationError naming the line.
BacktestConfig parse_config(std::istream& in, const EnvLookup& env = process_env);
BacktestConfig load_config(const std::filesystem::path& path, const EnvLookup& env = process_env);
/// Defaults with environment overrides only.
BacktestConfig default_config(const EnvLookup& env = process_env);

/// Applies one setting; a ConfigurationError names the key.
void set_value(BacktestConfig& config, const std::string& key, const std::string& value);

}  // namespace bess::backtest
