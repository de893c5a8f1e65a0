#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bess/core/time.hpp"
#include "bess/market/types.hpp"

namespace bess::lcs {

inline constexpr int kFeatureVersion = 1;
inline constexpr double kCorrelationThreshold = 0.94;

struct FeatureOptions {
  std::vector<std::string> zones{market::kDefaultZones.begin(), market::kDefaultZones.end()};
  std::vector<std::string> forecast_kinds{market::kForecastKinds.begin(), market::kForecastKinds.end()};
  /// Day with trend index 0.
  Date origin = Date{std::chrono::year{2024} / 1 / 1};
};

/// Base feature layout in schema order: day-ahead block mean/std per zone, forecast block
/// mean/std per kind, the six previous-day FCR clearing prices, then eight calendar values.
std::vector<std::string> base_feature_names(const FeatureOptions& options);

/// Interaction layout: every day-ahead block mean and every forecast block mean times every FCR
/// lag, in that order.
std::vector<std::string> interaction_names(const FeatureOptions& options);

/// Base features of delivery day `day`. They read the day-ahead prices and forecasts published
/// for `day`, the FCR clearing of `day - 1` and the calendar; nothing else. Throws DataError
/// naming the first missing series.
Eigen::VectorXd build_features(const market::ExogenousSeries& exogenous, Date day, const FeatureOptions& options);

/// Rows are days, columns follow `names`.
struct FeatureTable {
  std::vector<Date> days;
  std::vector<std::string> names;
  Eigen::MatrixXd values;

  /// FNV-1a over the version and the column names.
  std::uint64_t schema_hash() const;
  /// Index of the row for `day`; DataError when absent.
  Eigen::Index row_of(Date day) const;
};

/// Base features for each day.
FeatureTable build_feature_table(const market::ExogenousSeries& exogenous, const std::vector<Date>& days,
                                 const FeatureOptions& options);

/// Base columns followed by the interaction products.
FeatureTable build_interactions(const FeatureTable& base, const FeatureOptions& options);

/// Columns kept after dropping zero-variance columns and then, scanning in schema order, every
/// column whose absolute Pearson correlation with an already kept column exceeds `threshold`.
/// Needs at least two rows.
std::vector<int> filter_features(const Eigen::MatrixXd& values, double threshold = kCorrelationThreshold);

/// `date,<name>...` with shortest round-trip numbers.
void write_feature_csv(std::ostream& out, const FeatureTable& table);

}  // namespace bess::lcs
