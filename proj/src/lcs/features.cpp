#include "bess/lcs/features.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "bess/core/csv.hpp"
#include "bess/core/error.hpp"
#include "bess/fcr/physics.hpp"

namespace bess::lcs {
namespace {

constexpr int kBlocks = 6;
constexpr int kCalendar = 8;

const char* const kCalendarNames[kCalendar] = {"weekday",    "weekend",    "day_of_year", "trend",
                                               "annual_sin", "annual_cos", "weekly_sin",  "weekly_cos"};

std::string block_name(const std::string& group, const std::string& key, int block, const char* stat) {
  return group + "_" + key + "_b" + std::to_string(block) + "_" + stat;
}

/// Appends mean and population standard deviation of each EFA block of `day`.
void append_block_stats(const market::UniformSeries& s, Date day, const std::string& what, Eigen::VectorXd& out,
                        Eigen::Index& pos) {
  const Timestamp from = start_of(day);
  const Timestamp to = start_of(day + std::chrono::days{1});
  if (s.values.empty() || !s.covers(from, to) || (from - s.start) % s.step != Seconds{0})
    throw DataError(what + " missing for " + format_date(day));
  for (int k = 1; k <= kBlocks; ++k) {
    const auto block = fcr::efa_block(day, k);
    double sum = 0.0;
    double sq = 0.0;
    int n = 0;
    for (Timestamp t = block.start; t < block.end; t += s.step) {
      const double v = s.at(t);
      if (!std::isfinite(v)) throw DataError(what + " has a non-finite value at " + format_timestamp(t));
      sum += v;
      sq += v * v;
      ++n;
    }
    const double mean = sum / n;
    out(pos++) = mean;
    out(pos++) = std::sqrt(std::max(0.0, sq / n - mean * mean));
  }
}

Eigen::Index base_size(const FeatureOptions& o) {
  return static_cast<Eigen::Index>(2 * kBlocks * (o.zones.size() + o.forecast_kinds.size()) + kBlocks + kCalendar);
}

}  // namespace

std::vector<std::string> base_feature_names(const FeatureOptions& o) {
  std::vector<std::string> names;
  for (const auto& z : o.zones)
    for (int k = 1; k <= kBlocks; ++k) {
      names.push_back(block_name("daa", z, k, "mean"));
      names.push_back(block_name("daa", z, k, "std"));
    }
  for (const auto& f : o.forecast_kinds)
    for (int k = 1; k <= kBlocks; ++k) {
      names.push_back(block_name("ppf", f, k, "mean"));
      names.push_back(block_name("ppf", f, k, "std"));
    }
  for (int k = 1; k <= kBlocks; ++k) names.push_back("fcr_lag_b" + std::to_string(k));
  for (const char* c : kCalendarNames) names.emplace_back(c);
  return names;
}

std::vector<std::string> interaction_names(const FeatureOptions& o) {
  std::vector<std::string> names;
  auto products = [&](const std::string& group, const std::vector<std::string>& keys) {
    for (const auto& key : keys)
      for (int k = 1; k <= kBlocks; ++k)
        for (int lag = 1; lag <= kBlocks; ++lag)
          names.push_back(block_name(group, key, k, "mean") + "*fcr_lag_b" + std::to_string(lag));
  };
  products("daa", o.zones);
  products("ppf", o.forecast_kinds);
  return names;
}

Eigen::VectorXd build_features(const market::ExogenousSeries& exo, Date day, const FeatureOptions& o) {
  Eigen::VectorXd f(base_size(o));
  Eigen::Index pos = 0;
  for (const auto& z : o.zones) {
    const auto it = exo.daa_prices.find(z);
    if (it == exo.daa_prices.end()) throw DataError("day-ahead prices for zone " + z + " missing");
    append_block_stats(it->second, day, "day-ahead prices for zone " + z, f, pos);
  }
  for (const auto& k : o.forecast_kinds) {
    const auto it = exo.forecasts.find(k);
    if (it == exo.forecasts.end()) throw DataError("forecast " + k + " missing");
    append_block_stats(it->second, day, "forecast " + k, f, pos);
  }
  const Date prev = day - std::chrono::days{1};
  const auto lag = exo.fcr_clearing.find(prev);
  if (lag == exo.fcr_clearing.end()) throw DataError("FCR clearing prices missing for " + format_date(prev));
  for (const double p : lag->second) f(pos++) = p;

  const int weekday = weekday_index(day);
  const int doy = day_of_year(day);
  const double annual = 2.0 * std::numbers::pi * doy / 365.0;
  const double weekly = 2.0 * std::numbers::pi * weekday / 7.0;
  f(pos++) = weekday;
  f(pos++) = (weekday == 0 || weekday == 6) ? 1.0 : 0.0;
  f(pos++) = doy;
  f(pos++) = static_cast<double>((day - o.origin).count());
  f(pos++) = std::sin(annual);
  f(pos++) = std::cos(annual);
  f(pos++) = std::sin(weekly);
  f(pos++) = std::cos(weekly);
  return f;
}

std::uint64_t FeatureTable::schema_hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](std::string_view s) {
    for (const unsigned char c : s) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
    h ^= 0xff;
    h *= 0x100000001b3ULL;
  };
  mix("bess-features-v" + std::to_string(kFeatureVersion));
  for (const auto& n : names) mix(n);
  return h;
}

Eigen::Index FeatureTable::row_of(Date day) const {
  const auto it = std::lower_bound(days.begin(), days.end(), day);
  if (it == days.end() || *it != day) throw DataError("no features for " + format_date(day));
  return it - days.begin();
}

FeatureTable build_feature_table(const market::ExogenousSeries& exo, const std::vector<Date>& days,
                                 const FeatureOptions& o) {
  FeatureTable t;
  t.days = days;
  t.names = base_feature_names(o);
  t.values.resize(static_cast<Eigen::Index>(days.size()), static_cast<Eigen::Index>(t.names.size()));
  for (std::size_t d = 0; d < days.size(); ++d) {
    if (d > 0 && !(days[d - 1] < days[d])) throw DomainError("feature days must strictly increase");
    t.values.row(static_cast<Eigen::Index>(d)) = build_features(exo, days[d], o).transpose();
  }
  return t;
}

FeatureTable build_interactions(const FeatureTable& base, const FeatureOptions& o) {
  const auto expected = base_feature_names(o);
  if (base.names != expected) throw SchemaMismatchError("interactions need the base feature layout");
  const Eigen::Index n_daa = static_cast<Eigen::Index>(o.zones.size()) * kBlocks;
  const Eigen::Index n_ppf = static_cast<Eigen::Index>(o.forecast_kinds.size()) * kBlocks;
  const Eigen::Index lag_col = 2 * (n_daa + n_ppf);
  const auto extra = interaction_names(o);

  FeatureTable t;
  t.days = base.days;
  t.names = base.names;
  t.names.insert(t.names.end(), extra.begin(), extra.end());
  t.values.resize(base.values.rows(), static_cast<Eigen::Index>(t.names.size()));
  t.values.leftCols(base.values.cols()) = base.values;
  Eigen::Index col = base.values.cols();
  // Means sit at even offsets of the block-stat groups.
  for (Eigen::Index m = 0; m < n_daa + n_ppf; ++m)
    for (Eigen::Index lag = 0; lag < kBlocks; ++lag)
      t.values.col(col++) = base.values.col(2 * m).cwiseProduct(base.values.col(lag_col + lag));
  return t;
}

std::vector<int> filter_features(const Eigen::MatrixXd& x, double threshold) {
  if (x.rows() < 2) throw DomainError("feature filtering needs at least two days");
  const Eigen::RowVectorXd mean = x.colwise().mean();
  Eigen::MatrixXd z = x.rowwise() - mean;
  std::vector<int> candidates;
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const double norm = z.col(j).norm();
    const double scale = std::max(1.0, std::abs(mean(j))) * std::sqrt(static_cast<double>(x.rows()));
    if (norm > 1e-12 * scale) {
      z.col(j) /= norm;
      candidates.push_back(static_cast<int>(j));
    }
  }
  std::vector<int> kept;
  for (const int j : candidates) {
    bool keep = true;
    for (const int k : kept)
      if (std::abs(z.col(j).dot(z.col(k))) > threshold) {
        keep = false;
        break;
      }
    if (keep) kept.push_back(j);
  }
  return kept;
}

void write_feature_csv(std::ostream& out, const FeatureTable& t) {
  std::vector<std::string> row{"date"};
  row.insert(row.end(), t.names.begin(), t.names.end());
  csv::write_row(out, row);
  for (std::size_t d = 0; d < t.days.size(); ++d) {
    row.assign(1, format_date(t.days[d]));
    for (Eigen::Index j = 0; j < t.values.cols(); ++j)
      row.push_back(csv::format_double(t.values(static_cast<Eigen::Index>(d), j)));
    csv::write_row(out, row);
  }
}

}  // namespace bess::lcs
