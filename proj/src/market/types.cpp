#include "bess/market/types.hpp"

#include <algorithm>
#include <cmath>

#include "bess/core/error.hpp"

namespace bess::market {

Side parse_side(std::string_view text) {
  if (text == "bid" || text == "buy" || text == "-1") return Side::bid;
  if (text == "ask" || text == "sell" || text == "1" || text == "+1") return Side::ask;
  throw DomainError("unknown order side '" + std::string(text) + "'");
}

std::string_view to_string(Side s) { return s == Side::bid ? "bid" : "ask"; }

void validate(const DeliveryPeriod& p) {
  if (!(p.duration_h == 0.25 || p.duration_h == 0.5 || p.duration_h == 1.0))
    throw DomainError("delivery duration must be 0.25, 0.5 or 1 h");
  const long long step = static_cast<long long>(p.duration_h * 3600.0);
  if (p.start.time_since_epoch().count() % step != 0)
    throw DomainError("delivery start " + format_timestamp(p.start) + " not aligned to its duration grid");
}

void validate(const Order& o) {
  if (!(o.limit_price >= kMinPrice && o.limit_price <= kMaxPrice))
    throw ValidationError("limit price outside [-9999, 9999]");
  const double ticks = o.quantity / kMinOrderVolume;
  if (!(o.quantity >= kMinOrderVolume - 1e-9) || std::abs(ticks - std::round(ticks)) > 1e-6)
    throw ValidationError("order quantity must be a positive multiple of 0.1 MW");
}

const ProductBook* OrderBookSnapshot::find(const DeliveryPeriod& p) const {
  const auto it = books.find(p.start);
  if (it == books.end() || it->second.product.duration_h != p.duration_h) return nullptr;
  return &it->second;
}

void normalize(OrderBookSnapshot& snap, int depth, Minutes lead) {
  for (auto& [start, book] : snap.books) {
    validate(book.product);
    if (!(book.product.start - lead > snap.timestamp))
      throw ValidationError("product " + format_timestamp(start) + " is past gate closure at " +
                            format_timestamp(snap.timestamp));
    auto by_price_desc = [](const Order& a, const Order& b) { return a.limit_price > b.limit_price; };
    auto by_price_asc = [](const Order& a, const Order& b) { return a.limit_price < b.limit_price; };
    std::stable_sort(book.bids.begin(), book.bids.end(), by_price_desc);
    std::stable_sort(book.asks.begin(), book.asks.end(), by_price_asc);
    if (depth > 0) {
      if (book.bids.size() > static_cast<std::size_t>(depth)) book.bids.resize(depth);
      if (book.asks.size() > static_cast<std::size_t>(depth)) book.asks.resize(depth);
    }
    for (const auto& o : book.bids) {
      if (o.side != Side::bid) throw ValidationError("ask order on bid ladder");
      validate(o);
    }
    for (const auto& o : book.asks) {
      if (o.side != Side::ask) throw ValidationError("bid order on ask ladder");
      validate(o);
    }
    if (!book.bids.empty() && !book.asks.empty() && book.bids.front().limit_price >= book.asks.front().limit_price)
      throw ValidationError("crossed book for product " + format_timestamp(start) + " at " +
                            format_timestamp(snap.timestamp));
  }
}

double UniformSeries::at(Timestamp ts) const {
  if (ts < start || ts >= end()) throw DataError("series has no sample at " + format_timestamp(ts));
  return values[static_cast<std::size_t>((ts - start) / step)];
}

}  // namespace bess::market
