#pragma once

#include <cstdint>
#include <string_view>

#include "bess/market/io.hpp"

namespace bess::market {

/// Shape of the intraday price curve. `block_spread`: cheap first half-day, expensive second
/// half. `alternating`: high/low alternation from one product to the next, starting high at
/// midnight. `mixed`: a random per-day blend of the two.
enum class Regime { block_spread, alternating, mixed };

Regime parse_regime(std::string_view text);
std::string_view to_string(Regime r);

struct SyntheticOptions {
  Date first_day = Date{std::chrono::year{2024} / 1 / 1};
  double product_duration_h = 1.0;
  Minutes snapshot_interval{30};
  /// Products of day d open for trading at this hour of day d-1.
  int open_hour = 19;
  Minutes gate_closure = kDefaultGateClosure;
  int depth = kDefaultDepth;

  double base_price = 50.0;          // EUR/MWh
  double amplitude = 15.0;           // mean half-amplitude of the regime shape, EUR/MWh
  double amplitude_log_sd = 0.45;    // dispersion of the daily amplitude factor
  double amplitude_ar = 0.6;         // day-to-day persistence of that factor
  double product_noise_sd = 2.0;     // idiosyncratic per-product level noise
  double quote_sd = 2.0;             // stationary sd of the per-product mid-price wander
  double quote_ar = 0.9;             // persistence of that wander between snapshots

  double fcr_level = 12.0;           // EUR/MW per EFA block
  double fcr_log_sd = 0.35;
  double fcr_ar = 0.7;

  Seconds frequency_step{10};
  double frequency_ar = 0.967;
  double frequency_sd = 0.025;       // stationary sd in Hz
  bool with_frequency = true;
};

/// Pure function of (seed, day_count, regime, options). FCR clearing prices are also produced for
/// the day before `first_day` so every generated day has a lagged price.
MarketDataset synthesize_market(std::uint64_t seed, int day_count, Regime regime, const SyntheticOptions& options = {});

}  // namespace bess::market
