#include "bess/market/clearing.hpp"

#include <algorithm>

#include "bess/core/error.hpp"

namespace bess::market {

std::vector<Fill> clear(ProductBook& book, Side aggressor, double quantity, std::optional<double> limit) {
  if (!(quantity >= 0.0)) throw DomainError("clearing quantity must be non-negative");
  std::vector<Fill> fills;
  auto& ladder = book.ladder(opposite(aggressor));
  double remaining = quantity;
  std::size_t consumed = 0;
  for (auto& resting : ladder) {
    if (remaining <= 0.0) break;
    if (limit) {
      const bool admissible = aggressor == Side::bid ? resting.limit_price <= *limit : resting.limit_price >= *limit;
      if (!admissible) break;
    }
    const double q = std::min(remaining, resting.quantity);
    fills.push_back({resting.id, q, resting.limit_price});
    remaining -= q;
    resting.quantity -= q;
    if (resting.quantity <= 1e-12) ++consumed;
  }
  ladder.erase(ladder.begin(), ladder.begin() + static_cast<std::ptrdiff_t>(consumed));
  return fills;
}

std::vector<Fill> clear_against_snapshot(const OrderBookSnapshot& snapshot, const DeliveryPeriod& product,
                                         Side aggressor, double quantity, std::optional<double> limit) {
  if (!(quantity >= 0.0)) throw DomainError("clearing quantity must be non-negative");
  const ProductBook* book = snapshot.find(product);
  if (!book) throw DomainError("product " + format_timestamp(product.start) + " not in snapshot");
  ProductBook copy = *book;
  return clear(copy, aggressor, quantity, limit);
}

double filled_quantity(const std::vector<Fill>& fills) {
  double total = 0.0;
  for (const auto& f : fills) total += f.quantity;
  return total;
}

}  // namespace bess::market
