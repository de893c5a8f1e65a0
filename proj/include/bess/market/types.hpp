#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "bess/core/time.hpp"

namespace bess::market {

inline constexpr double kMinOrderVolume = 0.1;  // MW
inline constexpr double kMinPrice = -9999.0;   // EUR/MWh
inline constexpr double kMaxPrice = 9999.0;
inline constexpr int kDefaultDepth = 4;
inline constexpr Minutes kDefaultGateClosure{30};

/// Direction of a resting order. The numeric value is the order's sign in the book
/// (bid = -1, ask = +1).
enum class Side : int { bid = -1, ask = +1 };

inline constexpr int sign(Side s) { return static_cast<int>(s); }
inline constexpr Side opposite(Side s) { return s == Side::bid ? Side::ask : Side::bid; }
Side parse_side(std::string_view text);
std::string_view to_string(Side s);

using OrderId = std::uint64_t;

/// A delivery product: [start, start + duration).
struct DeliveryPeriod {
  Timestamp start;
  double duration_h = 0.25;

  Timestamp end() const { return add_hours(start, duration_h); }
  Timestamp gate_closure(Minutes lead) const { return start - lead; }
  friend bool operator==(const DeliveryPeriod&, const DeliveryPeriod&) = default;
  friend auto operator<=>(const DeliveryPeriod& a, const DeliveryPeriod& b) { return a.start <=> b.start; }
};

/// Throws DomainError unless duration is 0.25, 0.5 or 1 h and start lies on that grid.
void validate(const DeliveryPeriod& p);

struct Order {
  OrderId id = 0;
  Side side = Side::bid;
  double limit_price = 0.0;  // EUR/MWh
  double quantity = 0.0;     // MW
  friend bool operator==(const Order&, const Order&) = default;
};

/// Throws ValidationError on price range or volume-grid violations.
void validate(const Order& o);

/// Bid and ask ladders of one product. Bids descending, asks ascending by price.
struct ProductBook {
  DeliveryPeriod product;
  std::vector<Order> bids;
  std::vector<Order> asks;

  const std::vector<Order>& ladder(Side s) const { return s == Side::bid ? bids : asks; }
  std::vector<Order>& ladder(Side s) { return s == Side::bid ? bids : asks; }
  bool empty() const { return bids.empty() && asks.empty(); }
  friend bool operator==(const ProductBook&, const ProductBook&) = default;
};

struct OrderBookSnapshot {
  Timestamp timestamp;
  std::map<Timestamp, ProductBook> books;  // keyed by product start

  const ProductBook* find(const DeliveryPeriod& p) const;
  friend bool operator==(const OrderBookSnapshot&, const OrderBookSnapshot&) = default;
};

/// Sorts both ladders, truncates to `depth` per side and checks every snapshot invariant:
/// ladder order, no crossed book, per-order validity and gate closure `lead`.
void normalize(OrderBookSnapshot& snap, int depth, Minutes lead);

/// Regularly sampled series on a uniform grid.
struct UniformSeries {
  Timestamp start;
  Seconds step{3600};
  std::vector<double> values;

  Timestamp end() const { return start + step * static_cast<long long>(values.size()); }
  bool covers(Timestamp from, Timestamp to) const { return from >= start && to <= end(); }
  /// Value of the sample whose interval contains ts; DataError outside the grid.
  double at(Timestamp ts) const;
  friend bool operator==(const UniformSeries&, const UniformSeries&) = default;
};

inline const std::array<std::string, 4> kDefaultZones{"DE-LU", "IT-North", "NO2", "SE4"};
inline const std::array<std::string, 4> kForecastKinds{"solar", "wind-on", "wind-off", "load"};

/// Exogenous inputs: day-ahead prices by zone, renewable/load forecasts by kind, FCR clearing
/// prices per (day, EFA block) and the grid-frequency deviation.
struct ExogenousSeries {
  std::map<std::string, UniformSeries> daa_prices;  // zone -> hourly EUR/MWh
  std::map<std::string, UniformSeries> forecasts;   // kind -> hourly MW
  std::map<Date, std::array<double, 6>> fcr_clearing;  // EUR/MW per EFA block
  UniformSeries frequency;  // delta f in Hz, default 10 s sampling

  friend bool operator==(const ExogenousSeries&, const ExogenousSeries&) = default;
};

}  // namespace bess::market
