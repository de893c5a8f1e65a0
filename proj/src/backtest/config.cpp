#include "bess/backtest/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>

#include "bess/core/csv.hpp"
#include "bess/core/error.hpp"

namespace bess::backtest {
namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

double to_double(const std::string& v) {
  std::size_t used = 0;
  const double d = std::stod(v, &used);
  if (used != v.size()) throw std::invalid_argument(v);
  return d;
}

long long to_int(const std::string& v) {
  std::size_t used = 0;
  const long long i = std::stoll(v, &used);
  if (used != v.size()) throw std::invalid_argument(v);
  return i;
}

bool to_bool(const std::string& v) {
  if (v == "1" || v == "true" || v == "on" || v == "yes") return true;
  if (v == "0" || v == "false" || v == "off" || v == "no") return false;
  throw std::invalid_argument(v);
}

std::string from_bool(bool b) { return b ? "true" : "false"; }
std::string from_double(double d) { return csv::format_double(d); }

struct Key {
  const char* name;
  std::function<void(BacktestConfig&, const std::string&)> set;
  std::function<std::string(const BacktestConfig&)> get;
};

template <typename T>
Key number(const char* name, T BacktestConfig::*field) {
  return {name,
          [field](BacktestConfig& c, const std::string& v) {
            if constexpr (std::is_floating_point_v<T>)
              c.*field = to_double(v);
            else
              c.*field = static_cast<T>(to_int(v));
          },
          [field](const BacktestConfig& c) {
            if constexpr (std::is_floating_point_v<T>)
              return from_double(c.*field);
            else
              return std::to_string(c.*field);
          }};
}

Key spec_number(const char* name, double fcr::BessSpec::*field) {
  return {name, [field](BacktestConfig& c, const std::string& v) { c.spec.*field = to_double(v); },
          [field](const BacktestConfig& c) { return from_double(c.spec.*field); }};
}

Key minutes(const char* name, Minutes BacktestConfig::*field) {
  return {name, [field](BacktestConfig& c, const std::string& v) { c.*field = Minutes{to_int(v)}; },
          [field](const BacktestConfig& c) { return std::to_string((c.*field).count()); }};
}

Key flag(const char* name, bool BacktestConfig::*field) {
  return {name, [field](BacktestConfig& c, const std::string& v) { c.*field = to_bool(v); },
          [field](const BacktestConfig& c) { return from_bool(c.*field); }};
}

Key path(const char* name, std::filesystem::path BacktestConfig::*field) {
  return {name, [field](BacktestConfig& c, const std::string& v) { c.*field = v; },
          [field](const BacktestConfig& c) { return (c.*field).string(); }};
}

const std::vector<Key>& keys() {
  static const std::vector<Key> table = {
      path("data_dir", &BacktestConfig::data_dir),
      {"regime", [](BacktestConfig& c, const std::string& v) { c.regime = market::parse_regime(v); },
       [](const BacktestConfig& c) { return std::string(market::to_string(c.regime)); }},
      {"first_day", [](BacktestConfig& c, const std::string& v) { c.first_day = parse_date(v); },
       [](const BacktestConfig& c) { return format_date(c.first_day); }},
      {"seed", [](BacktestConfig& c, const std::string& v) { c.seed = std::stoull(v); },
       [](const BacktestConfig& c) { return std::to_string(c.seed); }},
      number("window", &BacktestConfig::window),
      number("oos_days", &BacktestConfig::oos_days),
      number("pool_size", &BacktestConfig::pool_size),
      number("product_duration_h", &BacktestConfig::product_duration_h),
      minutes("snapshot_interval_min", &BacktestConfig::snapshot_interval),
      minutes("cadence_min", &BacktestConfig::cadence),
      minutes("max_snapshot_age_min", &BacktestConfig::max_snapshot_age),
      minutes("gate_closure_min", &BacktestConfig::gate_closure),
      number("open_hour", &BacktestConfig::open_hour),
      number("depth", &BacktestConfig::depth),
      number("soc_fraction", &BacktestConfig::soc_fraction),
      spec_number("power_mw", &fcr::BessSpec::power_cap),
      spec_number("energy_mwh", &fcr::BessSpec::energy_cap),
      spec_number("eta_ch", &fcr::BessSpec::eta_ch),
      spec_number("eta_dis", &fcr::BessSpec::eta_dis),
      spec_number("alpha_lo", &fcr::BessSpec::alpha_lo),
      spec_number("alpha_hi", &fcr::BessSpec::alpha_hi),
      spec_number("kappa", &fcr::BessSpec::kappa),
      spec_number("cycle_budget", &fcr::BessSpec::cycle_budget),
      spec_number("min_trade_mw", &fcr::BessSpec::min_trade),
      {"folds", [](BacktestConfig& c, const std::string& v) { c.tuning.folds = static_cast<int>(to_int(v)); },
       [](const BacktestConfig& c) { return std::to_string(c.tuning.folds); }},
      {"validation_days",
       [](BacktestConfig& c, const std::string& v) { c.tuning.validation_days = static_cast<int>(to_int(v)); },
       [](const BacktestConfig& c) { return std::to_string(c.tuning.validation_days); }},
      {"candidates", [](BacktestConfig& c, const std::string& v) { c.tuning.candidates = static_cast<int>(to_int(v)); },
       [](const BacktestConfig& c) { return std::to_string(c.tuning.candidates); }},
      {"correlation_threshold",
       [](BacktestConfig& c, const std::string& v) { c.tuning.correlation_threshold = to_double(v); },
       [](const BacktestConfig& c) { return from_double(c.tuning.correlation_threshold); }},
      number("threads", &BacktestConfig::threads),
      path("out_dir", &BacktestConfig::out_dir),
      path("profit_cache", &BacktestConfig::profit_cache),
      flag("bench_sb", &BacktestConfig::bench_sb),
      flag("bench_db", &BacktestConfig::bench_db),
      flag("bench_only_fcr", &BacktestConfig::bench_only_fcr),
      flag("bench_only_idm", &BacktestConfig::bench_only_idm),
  };
  return table;
}

std::string env_name(const std::string& key) {
  std::string name = kEnvPrefix;
  for (const char c : key) name.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  return name;
}

void apply_env(BacktestConfig& c, const EnvLookup& env) {
  if (!env) return;
  for (const auto& k : keys())
    if (const auto v = env(env_name(k.name))) set_value(c, k.name, trim(*v));
}

}  // namespace

void set_value(BacktestConfig& c, const std::string& key, const std::string& value) {
  const auto& table = keys();
  const auto it = std::find_if(table.begin(), table.end(), [&](const Key& k) { return key == k.name; });
  if (it == table.end()) throw ConfigurationError("unknown configuration key '" + key + "'");
  try {
    it->set(c, value);
  } catch (const Error& e) {
    throw ConfigurationError("bad value '" + value + "' for " + key + ": " + e.what());
  } catch (const std::exception&) {
    throw ConfigurationError("bad value '" + value + "' for " + key);
  }
}

void BacktestConfig::validate() const {
  spec.validate();
  if (window <= tuning.folds * tuning.validation_days)
    throw ConfigurationError("window must exceed folds * validation_days (" +
                             std::to_string(tuning.folds * tuning.validation_days) + ")");
  if (oos_days < 1) throw ConfigurationError("need at least one out-of-sample day");
  if (pool_size < 1 || pool_size > 28) throw ConfigurationError("pool_size must lie in 1..28");
  if (!(soc_fraction >= spec.alpha_lo && soc_fraction <= spec.alpha_hi))
    throw ConfigurationError("soc_fraction must lie within [alpha_lo, alpha_hi]");
  if (cadence <= Minutes{0}) throw ConfigurationError("cadence_min must be positive");
  if (threads < 0) throw ConfigurationError("threads must be non-negative");
  if (tuning.candidates < 1) throw ConfigurationError("candidates must be positive");
  market::validate(market::DeliveryPeriod{start_of(first_day), product_duration_h});
}

rolling::RiConfig BacktestConfig::ri_config() const {
  rolling::RiConfig r;
  r.cadence = cadence;
  r.open_hour = open_hour;
  r.gate_closure = gate_closure;
  r.product_duration_h = product_duration_h;
  r.initial_soc = r.terminal_soc = soc_fraction * spec.energy_cap;
  r.max_snapshot_age = max_snapshot_age;
  return r;
}

market::SyntheticOptions BacktestConfig::synthetic_options() const {
  market::SyntheticOptions o;
  o.first_day = first_day;
  o.product_duration_h = product_duration_h;
  o.snapshot_interval = snapshot_interval;
  o.open_hour = open_hour;
  o.gate_closure = gate_closure;
  o.depth = depth;
  return o;
}

std::vector<std::pair<std::string, std::string>> BacktestConfig::key_values() const {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& k : keys()) out.emplace_back(k.name, k.get(*this));
  return out;
}

std::optional<std::string> process_env(const std::string& name) {
  if (const char* v = std::getenv(name.c_str())) return std::string(v);
  return std::nullopt;
}

BacktestConfig parse_config(std::istream& in, const EnvLookup& env) {
  BacktestConfig c;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    const std::string body = trim(line.substr(0, hash));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos)
      throw ConfigurationError("line " + std::to_string(number) + ": expected key = value");
    try {
      set_value(c, trim(body.substr(0, eq)), trim(body.substr(eq + 1)));
    } catch (const ConfigurationError& e) {
      throw ConfigurationError("line " + std::to_string(number) + ": " + e.what());
    }
  }
  apply_env(c, env);
  c.validate();
  return c;
}

BacktestConfig load_config(const std::filesystem::path& p, const EnvLookup& env) {
  std::ifstream in(p);
  if (!in) throw ConfigurationError("cannot open config file " + p.string());
  return parse_config(in, env);
}

BacktestConfig default_config(const EnvLookup& env) {
  BacktestConfig c;
  apply_env(c, env);
  c.validate();
  return c;
}

}  // namespace bess::backtest
