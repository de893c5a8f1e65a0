#include "bess/market/io.hpp"

#include <fstream>

#include "bess/core/csv.hpp"
#include "bess/core/error.hpp"

namespace bess::market {
namespace {

template <typename F>
auto with_row(std::size_t row, F&& f) {
  try {
    return f();
  } catch (const IngestionError&) {
    throw;
  } catch (const Error& e) {
    throw IngestionError(e.what(), row);
  }
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IngestionError("cannot open " + path.string());
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

// Appends one sample to a uniform series, inferring the step from the second sample.
void append_uniform(UniformSeries& s, Timestamp ts, double value, std::size_t row, const std::string& what) {
  if (s.values.empty()) {
    s.start = ts;
  } else if (s.values.size() == 1) {
    if (ts <= s.start) throw IngestionError(what + ": timestamps must increase", row);
    s.step = ts - s.start;
  } else if (ts != s.end()) {
    throw IngestionError(what + ": gap or irregular sampling at " + format_timestamp(ts), row);
  }
  s.values.push_back(value);
}

}  // namespace

std::vector<OrderBookSnapshot> read_snapshots(std::istream& in, const SnapshotSchema& schema) {
  csv::Reader reader(in);
  const std::vector<std::string> base{"timestamp", "product_start", "duration_h", "side", "price", "quantity", "order_id"};
  auto with_qualifier = base;
  with_qualifier.push_back("qualifier");
  if (reader.header() != with_qualifier) reader.require_header(base);

  std::vector<OrderBookSnapshot> out;
  std::vector<std::string> f;
  std::size_t snapshot_first_row = 0;
  auto finish = [&] {
    if (out.empty()) return;
    try {
      normalize(out.back(), schema.depth, schema.gate_closure);
    } catch (const ValidationError& e) {
      throw ValidationError(std::string(e.what()) + " (snapshot starting at row " +
                            std::to_string(snapshot_first_row) + ")");
    }
  };
  while (reader.next(f)) {
    const std::size_t row = reader.row();
    const Timestamp ts = with_row(row, [&] { return parse_timestamp(f[0]); });
    if (out.empty() || ts != out.back().timestamp) {
      if (!out.empty() && ts < out.back().timestamp)
        throw IngestionError("snapshot timestamps must strictly increase", row);
      finish();
      out.push_back(OrderBookSnapshot{ts, {}});
      snapshot_first_row = row;
    }
    DeliveryPeriod product{with_row(row, [&] { return parse_timestamp(f[1]); }), csv::parse_double(f[2], row)};
    with_row(row, [&] { validate(product); return 0; });
    Order o;
    o.side = with_row(row, [&] { return parse_side(f[3]); });
    o.limit_price = csv::parse_double(f[4], row);
    o.quantity = csv::parse_double(f[5], row);
    const long long id = csv::parse_int(f[6], row);
    if (id < 0) throw IngestionError("order_id must be non-negative", row);
    o.id = static_cast<OrderId>(id);
    auto& book = out.back().books[product.start];
    if (book.bids.empty() && book.asks.empty()) book.product = product;
    if (book.product.duration_h != product.duration_h)
      throw IngestionError("conflicting durations for one product", row);
    book.ladder(o.side).push_back(o);
  }
  finish();
  return out;
}

std::vector<OrderBookSnapshot> load_snapshots(const std::filesystem::path& path, const SnapshotSchema& schema) {
  auto in = open_in(path);
  return read_snapshots(in, schema);
}

void write_snapshots(std::ostream& out, const std::vector<OrderBookSnapshot>& snapshots) {
  csv::write_row(out, {"timestamp", "product_start", "duration_h", "side", "price", "quantity", "order_id"});
  for (const auto& snap : snapshots) {
    const std::string ts = format_timestamp(snap.timestamp);
    for (const auto& [start, book] : snap.books) {
      const std::string ps = format_timestamp(start);
      const std::string dur = csv::format_double(book.product.duration_h);
      for (const Side side : {Side::bid, Side::ask})
        for (const auto& o : book.ladder(side))
          csv::write_row(out, {ts, ps, dur, std::string(to_string(side)), csv::format_double(o.limit_price),
                               csv::format_double(o.quantity), std::to_string(o.id)});
    }
  }
}

std::map<std::string, UniformSeries> read_keyed_series(std::istream& in) {
  csv::Reader reader(in);
  reader.require_header({"timestamp", "key", "value"});
  std::map<std::string, UniformSeries> out;
  std::vector<std::string> f;
  while (reader.next(f)) {
    const std::size_t row = reader.row();
    const Timestamp ts = with_row(row, [&] { return parse_timestamp(f[0]); });
    if (f[1].empty()) throw IngestionError("empty series key", row);
    append_uniform(out[f[1]], ts, csv::parse_double(f[2], row), row, "series '" + f[1] + "'");
  }
  return out;
}

void write_keyed_series(std::ostream& out, const std::map<std::string, UniformSeries>& series) {
  csv::write_row(out, {"timestamp", "key", "value"});
  for (const auto& [key, s] : series)
    for (std::size_t i = 0; i < s.values.size(); ++i)
      csv::write_row(out, {format_timestamp(s.start + s.step * static_cast<long long>(i)), key,
                           csv::format_double(s.values[i])});
}

UniformSeries read_frequency(std::istream& in) {
  csv::Reader reader(in);
  reader.require_header({"timestamp", "delta_f_hz"});
  UniformSeries s;
  s.step = Seconds{10};
  std::vector<std::string> f;
  while (reader.next(f)) {
    const std::size_t row = reader.row();
    append_uniform(s, with_row(row, [&] { return parse_timestamp(f[0]); }), csv::parse_double(f[1], row), row,
                   "frequency");
  }
  return s;
}

void write_frequency(std::ostream& out, const UniformSeries& frequency) {
  csv::write_row(out, {"timestamp", "delta_f_hz"});
  for (std::size_t i = 0; i < frequency.values.size(); ++i)
    csv::write_row(out, {format_timestamp(frequency.start + frequency.step * static_cast<long long>(i)),
                         csv::format_double(frequency.values[i])});
}

std::map<Date, std::array<double, 6>> read_fcr_clearing(std::istream& in) {
  csv::Reader reader(in);
  reader.require_header({"date", "efa_block", "price_eur_mw"});
  std::map<Date, std::array<double, 6>> out;
  std::map<Date, unsigned> seen;
  std::vector<std::string> f;
  while (reader.next(f)) {
    const std::size_t row = reader.row();
    const Date d = with_row(row, [&] { return parse_date(f[0]); });
    const long long block = csv::parse_int(f[1], row);
    if (block < 1 || block > 6) throw IngestionError("efa_block must be in 1..6", row);
    const unsigned bit = 1u << (block - 1);
    if (seen[d] & bit) throw IngestionError("duplicate clearing price", row);
    seen[d] |= bit;
    out[d][static_cast<std::size_t>(block - 1)] = csv::parse_double(f[2], row);
  }
  for (const auto& [d, mask] : seen)
    if (mask != 0x3f) throw IngestionError("day " + format_date(d) + " lacks clearing prices for some EFA blocks");
  return out;
}

void write_fcr_clearing(std::ostream& out, const std::map<Date, std::array<double, 6>>& clearing) {
  csv::write_row(out, {"date", "efa_block", "price_eur_mw"});
  for (const auto& [d, prices] : clearing)
    for (std::size_t k = 0; k < 6; ++k)
      csv::write_row(out, {format_date(d), std::to_string(k + 1), csv::format_double(prices[k])});
}

MarketDataset load_dataset(const std::filesystem::path& dir, const SnapshotSchema& schema) {
  MarketDataset data;
  data.snapshots = load_snapshots(dir / "snapshots.csv", schema);
  {
    auto in = open_in(dir / "daa.csv");
    data.exogenous.daa_prices = read_keyed_series(in);
  }
  {
    auto in = open_in(dir / "forecasts.csv");
    data.exogenous.forecasts = read_keyed_series(in);
  }
  {
    auto in = open_in(dir / "fcr_clearing.csv");
    data.exogenous.fcr_clearing = read_fcr_clearing(in);
  }
  {
    auto in = open_in(dir / "frequency.csv");
    data.exogenous.frequency = read_frequency(in);
  }
  return data;
}

void write_dataset(const std::filesystem::path& dir, const MarketDataset& data) {
  std::filesystem::create_directories(dir);
  {
    auto out = open_out(dir / "snapshots.csv");
    write_snapshots(out, data.snapshots);
  }
  {
    auto out = open_out(dir / "daa.csv");
    write_keyed_series(out, data.exogenous.daa_prices);
  }
  {
    auto out = open_out(dir / "forecasts.csv");
    write_keyed_series(out, data.exogenous.forecasts);
  }
  {
    auto out = open_out(dir / "fcr_clearing.csv");
    write_fcr_clearing(out, data.exogenous.fcr_clearing);
  }
  {
    auto out = open_out(dir / "frequency.csv");
    write_frequency(out, data.exogenous.frequency);
  }
}

}  // namespace bess::market
