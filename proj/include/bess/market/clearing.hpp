#pragma once

#include <optional>
#include <vector>

#include "bess/market/types.hpp"

namespace bess::market {

struct Fill {
  OrderId order_id = 0;
  double quantity = 0.0;  // MW
  double price = 0.0;     // EUR/MWh
  friend bool operator==(const Fill&, const Fill&) = default;
};

/// Matches an incoming order of `aggressor` side against the opposing ladder of `book` in price
/// priority, consuming resting volume in place (partially matched orders keep the remainder,
/// exhausted ones are removed). Orders priced worse than `limit` are not touched.
std::vector<Fill> clear(ProductBook& book, Side aggressor, double quantity,
                        std::optional<double> limit = std::nullopt);

/// Same as `clear` on a copy of the snapshot's book for `product`; the snapshot is not modified.
/// Throws DomainError for an unknown product or a negative quantity.
std::vector<Fill> clear_against_snapshot(const OrderBookSnapshot& snapshot, const DeliveryPeriod& product,
                                         Side aggressor, double quantity,
                                         std::optional<double> limit = std::nullopt);

double filled_quantity(const std::vector<Fill>& fills);

}  // namespace bess::market
