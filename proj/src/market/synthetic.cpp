#include "bess/market/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "bess/core/error.hpp"
#include "bess/core/random.hpp"

namespace bess::market {
namespace {

enum Stream : std::uint64_t { kDayFactors = 1, kProduct, kBook, kDaa, kForecast, kFcr, kFrequency };

struct DayFactors {
  double blend = 1.0;      // weight of the block-spread shape
  double amplitude = 0.0;  // EUR/MWh
  double scale = 1.0;      // latent amplitude factor, drives the wind forecast
  double sun = 1.0;        // latent irradiance factor, drives the solar forecast
};

/// Price shape at `hour`; the alternating part flips sign every `period_h` hours.
double shape(const DayFactors& f, double hour, double period_h) {
  const double block = -std::sin(std::numbers::pi * (hour + 0.5) / 12.0);
  const double alternating = (static_cast<long>(std::floor(hour / period_h + 1e-9)) % 2 == 0) ? 1.0 : -1.0;
  return f.amplitude * (f.blend * block + (1.0 - f.blend) * alternating);
}

double round_cents(double p) { return std::round(p * 100.0) / 100.0; }

long long epoch_seconds(Timestamp ts) { return ts.time_since_epoch().count(); }

}  // namespace

Regime parse_regime(std::string_view text) {
  if (text == "block-spread") return Regime::block_spread;
  if (text == "alternating") return Regime::alternating;
  if (text == "mixed") return Regime::mixed;
  throw DomainError("unknown regime '" + std::string(text) + "' (block-spread, alternating, mixed)");
}

std::string_view to_string(Regime r) {
  switch (r) {
    case Regime::block_spread: return "block-spread";
    case Regime::alternating: return "alternating";
    case Regime::mixed: return "mixed";
  }
  return "?";
}

MarketDataset synthesize_market(std::uint64_t seed, int day_count, Regime regime, const SyntheticOptions& o) {
  if (day_count < 1) throw DomainError("day_count must be at least 1");
  validate(DeliveryPeriod{start_of(o.first_day), o.product_duration_h});
  if (o.snapshot_interval <= Minutes{0}) throw DomainError("snapshot interval must be positive");
  if (o.depth < 1) throw DomainError("depth must be at least 1");
  if (o.open_hour < 0 || o.open_hour > 23) throw DomainError("open_hour must be within 0..23");

  const auto days = static_cast<std::size_t>(day_count);
  std::vector<DayFactors> factors(days);
  {
    Rng rng(derive_seed(seed, {kDayFactors}));
    double log_scale = rng.normal(0.0, o.amplitude_log_sd);
    for (std::size_t d = 0; d < days; ++d) {
      if (d > 0)
        log_scale = o.amplitude_ar * log_scale +
                    std::sqrt(1.0 - o.amplitude_ar * o.amplitude_ar) * rng.normal(0.0, o.amplitude_log_sd);
      auto& f = factors[d];
      f.scale = std::exp(log_scale);
      f.amplitude = o.amplitude * f.scale;
      const double u = rng.uniform();
      f.blend = regime == Regime::block_spread ? 1.0 : regime == Regime::alternating ? 0.0 : u;
      f.sun = 0.5 + f.blend;
    }
  }

  MarketDataset data;
  const double dur = o.product_duration_h;
  const int per_day = static_cast<int>(std::lround(24.0 / dur));

  // Product fundamentals: one level per delivery product.
  std::vector<double> fundamental(days * static_cast<std::size_t>(per_day));
  for (std::size_t d = 0; d < days; ++d) {
    Rng rng(derive_seed(seed, {kProduct, d}));
    for (int j = 0; j < per_day; ++j)
      fundamental[d * per_day + j] =
          o.base_price + shape(factors[d], j * dur, dur) + rng.normal(0.0, o.product_noise_sd);
  }

  // Snapshot stream on a fixed grid from the first opening to the last tradeable instant.
  struct Quote {
    Rng rng;
    double wander;
  };
  std::map<Timestamp, Quote> quotes;
  const Timestamp first_open = start_of(o.first_day) - std::chrono::hours{24 - o.open_hour};
  const Timestamp last_start = add_hours(start_of(o.first_day + std::chrono::days{day_count}), -dur);
  OrderId next_id = 1;
  for (Timestamp tau = first_open; last_start - o.gate_closure > tau; tau += o.snapshot_interval) {
    OrderBookSnapshot snap{tau, {}};
    const Date today = date_of(tau);
    const bool next_open = tau >= start_of(today) + std::chrono::hours{o.open_hour};
    const Date horizon_end = today + std::chrono::days{next_open ? 2 : 1};
    const long long step = static_cast<long long>(dur * 3600.0);
    const long long earliest = (epoch_seconds(tau + o.gate_closure) / step + 1) * step;
    for (Timestamp start = std::max(start_of(o.first_day), Timestamp{Seconds{earliest}});
         start < start_of(horizon_end) && start <= last_start; start = add_hours(start, dur)) {
      const auto d = static_cast<std::size_t>((date_of(start) - o.first_day).count());
      const int j = static_cast<int>(std::lround(hours_between(start_of(date_of(start)), start) / dur));
      auto it = quotes.find(start);
      if (it == quotes.end()) {
        Rng rng(derive_seed(seed, {kBook, static_cast<std::uint64_t>(epoch_seconds(start))}));
        const double w0 = rng.normal(0.0, o.quote_sd);
        it = quotes.emplace(start, Quote{std::move(rng), w0}).first;
      } else {
        auto& q = it->second;
        q.wander = o.quote_ar * q.wander + std::sqrt(1.0 - o.quote_ar * o.quote_ar) * q.rng.normal(0.0, o.quote_sd);
      }
      auto& q = it->second;
      const double mid = fundamental[d * per_day + j] + q.wander;
      const double half_spread = 1.0 + 0.5 * q.rng.uniform();
      ProductBook book;
      book.product = DeliveryPeriod{start, dur};
      double bid = round_cents(mid - half_spread);
      double ask = round_cents(mid + half_spread);
      for (int level = 0; level < o.depth; ++level) {
        book.bids.push_back(Order{next_id++, Side::bid, std::clamp(bid, kMinPrice, kMaxPrice),
                                  static_cast<double>(q.rng.uniform_int(10, 50)) / 10.0});
        book.asks.push_back(Order{next_id++, Side::ask, std::clamp(ask, kMinPrice, kMaxPrice),
                                  static_cast<double>(q.rng.uniform_int(10, 50)) / 10.0});
        bid = round_cents(bid - 0.5 - q.rng.uniform());
        ask = round_cents(ask + 0.5 + q.rng.uniform());
      }
      snap.books.emplace(start, std::move(book));
    }
    // Products past their last snapshot no longer need state.
    while (!quotes.empty() && !(quotes.begin()->first - o.gate_closure > tau)) quotes.erase(quotes.begin());
    if (!snap.books.empty()) data.snapshots.push_back(std::move(snap));
  }

  // Day-ahead prices: the home zone tracks the intraday shape, neighbours only partially.
  auto& exo = data.exogenous;
  const Timestamp t0 = start_of(o.first_day);
  const std::array<double, 4> coupling{1.0, 0.6, 0.2, 0.4};
  for (std::size_t z = 0; z < kDefaultZones.size(); ++z) {
    Rng rng(derive_seed(seed, {kDaa, z}));
    UniformSeries s{t0, Seconds{3600}, {}};
    for (std::size_t d = 0; d < days; ++d) {
      const double offset = rng.normal(0.0, 5.0);
      for (int h = 0; h < 24; ++h)
        s.values.push_back(round_cents(o.base_price + offset + coupling[z] * shape(factors[d], h, 1.0) +
                                       rng.normal(0.0, 3.0)));
    }
    exo.daa_prices[kDefaultZones[z]] = std::move(s);
  }

  // Forecasts: wind follows the latent amplitude factor, solar the latent shape blend.
  for (std::size_t k = 0; k < kForecastKinds.size(); ++k) {
    Rng rng(derive_seed(seed, {kForecast, k}));
    UniformSeries s{t0, Seconds{3600}, {}};
    for (std::size_t d = 0; d < days; ++d) {
      const auto& f = factors[d];
      for (int h = 0; h < 24; ++h) {
        double v = 0.0;
        const std::string& kind = kForecastKinds[k];
        if (kind == "solar") {
          const double bell = std::max(0.0, std::sin(std::numbers::pi * (h - 6.0) / 12.0));
          v = 8000.0 * f.sun * bell * (1.0 + 0.05 * rng.normal());
        } else if (kind == "wind-on") {
          v = 12000.0 * f.scale * (1.0 + 0.1 * rng.normal());
        } else if (kind == "wind-off") {
          v = 2000.0 + 1500.0 * f.scale + 300.0 * rng.normal();
        } else {
          v = 55000.0 + 10000.0 * std::sin(std::numbers::pi * (h - 6.0) / 12.0) + 1500.0 * rng.normal();
        }
        s.values.push_back(std::round(std::max(v, 0.0)));
      }
    }
    exo.forecasts[kForecastKinds[k]] = std::move(s);
  }

  // FCR clearing prices per EFA block, persistent from day to day.
  {
    Rng rng(derive_seed(seed, {kFcr}));
    const std::array<double, 6> profile{1.1, 0.9, 1.0, 1.0, 1.05, 0.95};
    double level = rng.normal(0.0, o.fcr_log_sd);
    for (int d = -1; d < day_count; ++d) {
      if (d > -1) level = o.fcr_ar * level + std::sqrt(1.0 - o.fcr_ar * o.fcr_ar) * rng.normal(0.0, o.fcr_log_sd);
      std::array<double, 6> prices{};
      for (std::size_t k = 0; k < 6; ++k)
        prices[k] = round_cents(o.fcr_level * std::exp(level) * profile[k] * std::exp(0.1 * rng.normal()));
      exo.fcr_clearing[o.first_day + std::chrono::days{d}] = prices;
    }
  }

  // Grid frequency: AR(1) deviation at the sampling step, demeaned per day.
  if (o.with_frequency) {
    Rng rng(derive_seed(seed, {kFrequency}));
    const auto per_day_samples = static_cast<std::size_t>(86400 / o.frequency_step.count());
    const double innovation = o.frequency_sd * std::sqrt(1.0 - o.frequency_ar * o.frequency_ar);
    UniformSeries s{t0, o.frequency_step, {}};
    s.values.reserve(per_day_samples * days);
    double x = rng.normal(0.0, o.frequency_sd);
    for (std::size_t d = 0; d < days; ++d) {
      const std::size_t first = s.values.size();
      double sum = 0.0;
      for (std::size_t i = 0; i < per_day_samples; ++i) {
        x = o.frequency_ar * x + rng.normal(0.0, innovation);
        s.values.push_back(x);
        sum += x;
      }
      const double mean = sum / static_cast<double>(per_day_samples);
      for (std::size_t i = first; i < s.values.size(); ++i)
        s.values[i] -= mean;
    }
    exo.frequency = std::move(s);
  }
  return data;
}

}  // namespace bess::market
