#include "bess/backtest/report.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "bess/core/csv.hpp"
#include "bess/core/error.hpp"

namespace bess::backtest {
namespace {

std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error("cannot write " + p.string());
  return out;
}

void close_out(std::ofstream& out, const std::filesystem::path& p) {
  out.close();
  if (!out) throw Error("failed writing " + p.string());
}

std::string num(double v) { return csv::format_double(v); }

std::string cv_s_column(int s) { return "equals_cv" + std::to_string(s) + "_pct"; }

}  // namespace

std::vector<std::string> report_files() {
  return {"strategies.csv", "benchmarks.csv", "cumulative.csv", "weekly_normalized.csv",
          "decisions.csv",  "profit_matrix.csv", "run_manifest.json"};
}

Eigen::MatrixXd weekly_normalized(const BenchmarkReport& rep) {
  const Eigen::Index days = static_cast<Eigen::Index>(rep.days.size());
  const Eigen::Index weeks = (days + 6) / 7;
  const Eigen::Index rows = static_cast<Eigen::Index>(rep.rows.size());
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(weeks, rows);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto& row = rep.rows[static_cast<std::size_t>(r)];
    for (Eigen::Index d = 0; d < days; ++d) w(d / 7, r) += row.fcr(d) + row.idm(d);
  }
  for (Eigen::Index k = 0; k < weeks; ++k) {
    const double lo = w.row(k).minCoeff();
    const double hi = w.row(k).maxCoeff();
    if (hi > lo)
      w.row(k) = (w.row(k).array() - lo) / (hi - lo);
    else
      w.row(k).setOnes();
  }
  return w;
}

void emit_reports(const BacktestResult& res, const BacktestConfig& config, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const auto& rep = res.report;
  const Eigen::Index days = static_cast<Eigen::Index>(rep.days.size());

  {
    const auto p = dir / "strategies.csv";
    auto out = open_out(p);
    csv::write_row(out, {"strategy_id", "pi_fcr", "pi_idm", "pi_total", "best_days", "pool_days"});
    const Eigen::MatrixXd total = rep.oos.total();
    std::vector<int> best(rep.oos.strategies.size(), 0);
    std::vector<int> pooled(rep.oos.strategies.size(), 0);
    for (Eigen::Index d = 0; d < days; ++d) {
      Eigen::Index b = 0;
      for (Eigen::Index j = 1; j < total.cols(); ++j)
        if (total(d, j) > total(d, b)) b = j;
      ++best[static_cast<std::size_t>(b)];
      for (const int j : rep.pools[static_cast<std::size_t>(d)]) ++pooled[static_cast<std::size_t>(j)];
    }
    for (std::size_t j = 0; j < rep.oos.strategies.size(); ++j) {
      const auto jj = static_cast<Eigen::Index>(j);
      const double f = rep.oos.fcr.col(jj).sum();
      const double i = rep.oos.idm.col(jj).sum();
      csv::write_row(out, {pool::strategy_id(rep.oos.strategies[j]), num(f), num(i), num(f + i),
                           std::to_string(best[j]), std::to_string(pooled[j])});
    }
    close_out(out, p);
  }
  {
    const auto p = dir / "benchmarks.csv";
    auto out = open_out(p);
    csv::write_row(out, {"benchmark", "pi_fcr", "pi_idm", "pi_total", "shortfall_vs_cv28_pct",
                         cv_s_column(rep.pool_size), "equals_cv28_pct", "beats_lcs_pct"});
    for (const auto& r : rep.rows)
      csv::write_row(out, {r.name, num(r.total_fcr), num(r.total_idm), num(r.total), num(r.shortfall_pct),
                           num(r.equals_cv_s_pct), num(r.equals_cv28_pct), num(r.beats_lcs_pct)});
    close_out(out, p);
  }
  {
    const auto p = dir / "cumulative.csv";
    auto out = open_out(p);
    std::vector<std::string> header{"date"};
    for (const auto& r : rep.rows) header.push_back(r.name);
    csv::write_row(out, header);
    std::vector<double> acc(rep.rows.size(), 0.0);
    for (Eigen::Index d = 0; d < days; ++d) {
      std::vector<std::string> row{format_date(rep.days[static_cast<std::size_t>(d)])};
      for (std::size_t r = 0; r < rep.rows.size(); ++r) {
        acc[r] += rep.rows[r].fcr(d) + rep.rows[r].idm(d);
        row.push_back(num(acc[r]));
      }
      csv::write_row(out, row);
    }
    close_out(out, p);
  }
  {
    const auto p = dir / "weekly_normalized.csv";
    auto out = open_out(p);
    std::vector<std::string> header{"week_start"};
    for (const auto& r : rep.rows) header.push_back(r.name);
    csv::write_row(out, header);
    const auto w = weekly_normalized(rep);
    for (Eigen::Index k = 0; k < w.rows(); ++k) {
      std::vector<std::string> row{format_date(rep.days[static_cast<std::size_t>(7 * k)])};
      for (Eigen::Index r = 0; r < w.cols(); ++r) row.push_back(num(w(k, r)));
      csv::write_row(out, row);
    }
    close_out(out, p);
  }
  {
    const auto p = dir / "decisions.csv";
    auto out = open_out(p);
    std::vector<std::string> header{"date", "pool"};
    for (const auto& r : rep.rows) header.push_back(r.name);
    csv::write_row(out, header);
    for (Eigen::Index d = 0; d < days; ++d) {
      const auto dd = static_cast<std::size_t>(d);
      std::string pool;
      for (const int j : rep.pools[dd]) {
        if (!pool.empty()) pool += '|';
        pool += pool::strategy_id(rep.oos.strategies[static_cast<std::size_t>(j)]);
      }
      std::vector<std::string> row{format_date(rep.days[dd]), pool};
      for (const auto& r : rep.rows) row.push_back(pool::strategy_id(r.choices[dd]));
      csv::write_row(out, row);
    }
    close_out(out, p);
  }
  pool::write_profit_matrix(dir / "profit_matrix.csv", res.matrix);
  {
    const auto p = dir / "run_manifest.json";
    nlohmann::ordered_json j;
    j["tool"] = "bess";
    j["version"] = BESS_VERSION;
    auto& cfg = j["config"] = nlohmann::ordered_json::object();
    for (const auto& [k, v] : config.key_values())
      if (k != "out_dir" && k != "profit_cache" && k != "threads") cfg[k] = v;
    j["seeds"] = {{"market", config.data_dir.empty() ? nlohmann::ordered_json(config.seed) : nlohmann::ordered_json()},
                  {"training", config.seed}};
    j["span"] = {{"first_day", format_date(config.first_day)},
                 {"oos_first", format_date(config.oos_first())},
                 {"last_day", format_date(config.last_day())}};
    auto& params = j["hyperparameters"] = nlohmann::ordered_json::array();
    for (std::size_t d = 0; d < res.history.days.size(); ++d)
      params.push_back({{"date", format_date(res.history.days[d])},
                        {"params", res.history.params[d]},
                        {"validation_profit", res.history.validation_profit[d]}});
    j["files"] = report_files();
    auto out = open_out(p);
    out << j.dump(2) << '\n';
    close_out(out, p);
  }
}

std::string summarize_reports(const std::filesystem::path& dir) {
  const auto p = dir / "benchmarks.csv";
  std::ifstream in(p);
  if (!in) throw IngestionError("cannot open " + p.string());
  csv::Reader reader(in);
  const auto& header = reader.header();
  if (header.size() != 8 || header[0] != "benchmark") throw IngestionError("unexpected header in " + p.string());
  std::ostringstream ss;
  char line[256];
  std::snprintf(line, sizeof line, "%-10s %14s %14s %14s %10s %10s %10s %10s\n", "benchmark", "FCR EUR", "IDM EUR",
                "total EUR", "vs CV-28", "=CV-S", "=CV-28", ">LCS");
  ss << line;
  std::vector<std::string> f;
  while (reader.next(f)) {
    if (f.size() != 8) throw IngestionError("wrong field count", reader.row());
    std::vector<double> v;
    for (std::size_t i = 1; i < 8; ++i) v.push_back(csv::parse_double(f[i], reader.row()));
    std::snprintf(line, sizeof line, "%-10s %14.2f %14.2f %14.2f %9.2f%% %9.1f%% %9.1f%% %9.1f%%\n", f[0].c_str(),
                  v[0], v[1], v[2], v[3], v[4], v[5], v[6]);
    ss << line;
  }
  return ss.str();
}

}  // namespace bess::backtest
