#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "bess/backtest/backtest.hpp"
#include "bess/backtest/config.hpp"

namespace bess::backtest {

/// Files written by emit_reports, in writing order.
std::vector<std::string> report_files();

/// Per-row weekly profit sums over consecutive 7-day chunks from the first day (the last chunk
/// may be shorter), min-max normalized across rows within each week. A week where every row
/// earned the same maps to 1 for all rows. Result: weeks x rows.
Eigen::MatrixXd weekly_normalized(const BenchmarkReport& report);

/// Writes strategies.csv, benchmarks.csv, cumulative.csv, weekly_normalized.csv,
/// decisions.csv, profit_matrix.csv and run_manifest.json into `dir`. The content is a pure
/// function of the inputs; nothing time- or host-dependent is recorded.
void emit_reports(const BacktestResult& result, const BacktestConfig& config, const std::filesystem::path& dir);

/// Human-readable benchmark table read back from a report directory.
std::string summarize_reports(const std::filesystem::path& dir);

}  // namespace bess::backtest
