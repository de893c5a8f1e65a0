#include <chrono>
#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "bess/backtest/backtest.hpp"
#include "bess/backtest/config.hpp"
#include "bess/backtest/report.hpp"
#include "bess/core/error.hpp"
#include "bess/market/io.hpp"
#include "bess/market/synthetic.hpp"
#include "bess/pool/pool.hpp"

using namespace bess;

namespace {

backtest::BacktestConfig config_from(const std::string& path) {
  return path.empty() ? backtest::default_config() : backtest::load_config(path);
}

void print_stats(const backtest::RunStats& s) {
  std::fprintf(stderr, "day runs %d, infeasible solves %d, logged violations %d, rounding rejections %d\n", s.runs,
               s.infeasible_solves, s.violations, s.rounding_rejections);
}

int cmd_backtest(const std::string& config_path, const std::string& out) {
  auto config = backtest::load_config(config_path);
  if (!out.empty()) config.out_dir = out;
  const auto t0 = std::chrono::steady_clock::now();
  const auto result = backtest::run_backtest(config);
  backtest::emit_reports(result, config, config.out_dir);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  print_stats(result.stats);
  std::fprintf(stderr, "finished in %.1f s; reports in %s\n", secs, config.out_dir.string().c_str());
  std::cout << backtest::summarize_reports(config.out_dir);
  return 0;
}

int cmd_simulate(std::uint64_t seed, int days, const std::string& regime, const std::string& out,
                 const std::string& first_day, double duration) {
  market::SyntheticOptions o;
  o.first_day = parse_date(first_day);
  o.product_duration_h = duration;
  const auto data = market::synthesize_market(seed, days, market::parse_regime(regime), o);
  market::write_dataset(out, data);
  std::cout << "wrote " << days << " " << regime << " days (" << data.snapshots.size() << " snapshots) to " << out
            << "\n";
  return 0;
}

int cmd_train(const std::string& config_path, const std::string& asof_text, const std::string& out) {
  const auto config = config_from(config_path);
  const Date asof = parse_date(asof_text);
  const auto data = backtest::load_market(config);
  std::vector<Date> days;
  for (Date d = asof - std::chrono::days{config.window}; d < asof; d += std::chrono::days{1}) days.push_back(d);

  pool::ProfitMatrix matrix;
  bool cached = false;
  if (!config.profit_cache.empty() && std::filesystem::exists(config.profit_cache)) {
    const auto all = pool::read_profit_matrix(config.profit_cache);
    const auto it = std::lower_bound(all.days.begin(), all.days.end(), days.front());
    const auto first = it - all.days.begin();
    if (first + config.window <= all.day_count() && all.days[static_cast<std::size_t>(first)] == days.front() &&
        all.days[static_cast<std::size_t>(first + config.window - 1)] == days.back()) {
      matrix = all.slice(first, config.window);
      cached = true;
    }
  }
  if (!cached) {
    backtest::RunStats stats;
    matrix = backtest::compute_profit_matrix(data, days, pool::default_catalogue(config.spec), config.spec,
                                             config.ri_config(), config.threads, &stats);
    print_stats(stats);
  }
  auto feature_days = days;
  feature_days.push_back(asof);
  const auto features = backtest::feature_table(data, feature_days, config.first_day);
  std::vector<int> members;
  const backtest::PipelineOptions options{config.window, config.pool_size, config.seed, config.tuning};
  const auto model = backtest::train_for_day(matrix, features, asof, options, std::nullopt, &members);
  const auto decision = lcs::predict(model, features, asof);
  const std::string path = out.empty() ? "model_" + format_date(asof) + ".json" : out;
  lcs::save_model(path, model);
  std::cout << "pool:";
  for (const auto& s : model.labels) std::cout << " " << fcr::to_string(s);
  std::cout << "\ndecision for " << format_date(asof) << ": " << fcr::to_string(decision) << "\nmodel: " << path
            << " (" << model.columns.size() << " features, validation profit " << model.validation_profit << ")\n";
  return 0;
}

int cmd_select_pool(int s, const std::string& matrix_path, int last_days) {
  auto m = pool::read_profit_matrix(matrix_path);
  if (last_days > 0 && last_days < m.day_count()) m = m.slice(m.day_count() - last_days, last_days);
  const auto sel = pool::select_pool(m, s);
  const Eigen::MatrixXd total = m.total();
  std::cout << "pool of " << s << " over " << m.day_count() << " days, objective " << sel.objective << " EUR\n";
  for (const int j : sel.members)
    std::cout << "  " << fcr::to_string(m.strategies[static_cast<std::size_t>(j)]) << "  column sum "
              << total.col(j).sum() << "\n";
  std::cout << "best single strategy: " << pool::select_pool(m, 1).objective << " EUR\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Battery FCR and intraday backtesting engine"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out;
  auto* backtest = app.add_subcommand("backtest", "rolling-horizon backtest with benchmarks and reports");
  backtest->add_option("--config", config_path, "key = value configuration file")->required()->check(CLI::ExistingFile);
  backtest->add_option("--out", out, "report directory (overrides out_dir)");

  std::uint64_t seed = 7;
  int days = 30;
  std::string regime = "mixed";
  std::string first_day = "2024-01-01";
  double duration = 1.0;
  std::string data_out = "data";
  auto* simulate = app.add_subcommand("simulate", "write a synthetic market dataset");
  simulate->add_option("--seed", seed, "random seed");
  simulate->add_option("--days", days, "number of delivery days")->check(CLI::PositiveNumber);
  simulate->add_option("--regime", regime, "block-spread, alternating or mixed");
  simulate->add_option("--first-day", first_day, "first delivery day");
  simulate->add_option("--product-duration", duration, "product length in hours (0.25, 0.5, 1)");
  simulate->add_option("--out", data_out, "output directory");

  std::string asof;
  std::string model_out;
  auto* train = app.add_subcommand("train", "train the classifier that decides one day");
  train->add_option("--asof", asof, "decision day YYYY-MM-DD")->required();
  train->add_option("--config", config_path, "configuration file (defaults and BESS_ variables otherwise)");
  train->add_option("--out", model_out, "model file");

  int pool_size = 3;
  std::string matrix_path = "report/profit_matrix.csv";
  int last_days = 0;
  auto* select = app.add_subcommand("select-pool", "optimal strategy pool of a profit matrix");
  select->add_option("--s", pool_size, "pool size")->required();
  select->add_option("--matrix", matrix_path, "profit matrix CSV");
  select->add_option("--last", last_days, "use only the last N days");

  std::string from;
  auto* report = app.add_subcommand("report", "print the benchmark table of a report directory");
  report->add_option("--from", from, "report directory")->required();

  CLI11_PARSE(app, argc, argv);
  try {
    if (*backtest) return cmd_backtest(config_path, out);
    if (*simulate) return cmd_simulate(seed, days, regime, data_out, first_day, duration);
    if (*train) return cmd_train(config_path, asof, model_out);
    if (*select) return cmd_select_pool(pool_size, matrix_path, last_days);
    if (*report) {
      std::cout << backtest::summarize_reports(from);
      return 0;
    }
  } catch (const bess::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
  return 1;
}
