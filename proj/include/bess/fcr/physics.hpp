#pragma once

#include <array>
#include <span>
#include <string>
#include <string_view>

#include "bess/core/time.hpp"
#include "bess/market/types.hpp"

namespace bess::fcr {

inline constexpr double kDeadband = 0.01;    // Hz
inline constexpr double kFullActivation = 0.2;  // Hz
inline constexpr double kMaxBidShare = 0.8;  // share of the power rating that may be offered

/// Physical and regulatory battery parameters.
struct BessSpec {
  double power_cap = 10.0;   // MW
  double energy_cap = 10.0;  // MWh
  double eta_ch = 0.95;
  double eta_dis = 0.95;
  double alpha_lo = 0.01;
  double alpha_hi = 0.985;
  double kappa = 3.0;         // EUR/MWh of delivered schedule
  double cycle_budget = 2.0;  // cycles per day
  double min_trade = 0.1;     // MW

  /// Throws ConfigurationError when an invariant is violated.
  void validate() const;
  friend bool operator==(const BessSpec&, const BessSpec&) = default;
};

/// One of six four-hour windows of a delivery day; index 1..6.
struct EfaBlock {
  int index = 1;
  Timestamp start;
  Timestamp end;
};

EfaBlock efa_block(Date day, int index);
/// 1..6 for the block containing ts.
int efa_block_index(Timestamp ts);

/// FCR capacity per EFA block in whole MW.
struct FcrStrategy {
  std::array<int, 6> x{};

  int operator[](int block_index) const { return x[static_cast<std::size_t>(block_index - 1)]; }
  int at(Timestamp ts) const { return (*this)[efa_block_index(ts)]; }
  /// Throws DomainError unless every component lies in [0, floor(0.8 * power_cap)].
  void validate(const BessSpec& spec) const;
  friend bool operator==(const FcrStrategy&, const FcrStrategy&) = default;
  friend auto operator<=>(const FcrStrategy&, const FcrStrategy&) = default;
};

/// "(8,8,8,0,0,5)".
std::string to_string(const FcrStrategy& s);
FcrStrategy parse_strategy(std::string_view text);

/// Activated power for a frequency deviation: positive absorbs energy from the grid.
constexpr double fcr_activation(double delta_f, double p_bid) {
  const double mag = delta_f < 0 ? -delta_f : delta_f;
  if (mag <= kDeadband) return 0.0;
  if (mag > kFullActivation) return delta_f < 0 ? -p_bid : p_bid;
  return delta_f / kFullActivation * p_bid;
}

/// Closed SoC interval in MWh.
struct Envelope {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double c, double tol = 0.0) const { return c >= lo - tol && c <= hi + tol; }
  friend bool operator==(const Envelope&, const Envelope&) = default;
};

/// SoC interval that keeps a commitment of x_bid MW deliverable for 15 minutes either way.
/// Throws InfeasibleStrategyError when the interval is empty.
Envelope soc_envelope(const BessSpec& spec, double x_bid);

/// IDM power headroom left next to an FCR commitment.
inline double power_headroom(const BessSpec& spec, double x_bid) { return spec.power_cap - x_bid; }

/// Stored-energy effect of one activation sample: P * eta(P), with eta = eta_ch when charging and
/// 1 / eta_dis when discharging.
inline double stored_power(double p, const BessSpec& spec) {
  return p > 0 ? p * spec.eta_ch : p < 0 ? p / spec.eta_dis : 0.0;
}

/// Riemann-sum drift (MWh, positive = SoC gained) of a sample path spanning duration_h hours.
double energy_drift(std::span<const double> delta_f, double p_bid, const BessSpec& spec, double duration_h);

/// Drift over [from, to) from a uniformly sampled deviation series, K taken from the sampling
/// grid. Throws IngestionError when the series does not cover the interval or it is off-grid.
double energy_drift(const market::UniformSeries& frequency, Timestamp from, Timestamp to, double p_bid,
                    const BessSpec& spec);

/// Same, with the commitment taken per sample from the strategy's active EFA block.
double energy_drift(const market::UniformSeries& frequency, Timestamp from, Timestamp to,
                    const FcrStrategy& strategy, const BessSpec& spec);

/// Capacity revenue sum_k P_k X_k of a zero-priced quantity bid.
double fcr_revenue(const FcrStrategy& strategy, const std::array<double, 6>& clearing);
/// Throws DataError if the day has no clearing prices.
double fcr_revenue(const FcrStrategy& strategy, const market::ExogenousSeries& exogenous, Date day);

}  // namespace bess::fcr
