#pragma once

#include <map>
#include <ostream>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bess/fcr/physics.hpp"
#include "bess/intrinsic/intrinsic.hpp"
#include "bess/market/types.hpp"

namespace bess::rolling {

struct RiConfig {
  Minutes cadence{1};
  /// Products of day d become tradeable at this hour of day d-1.
  int open_hour = 19;
  Minutes gate_closure = market::kDefaultGateClosure;
  double product_duration_h = 0.25;
  double initial_soc = 2.0;   // MWh at the start of the delivery day
  double terminal_soc = 2.0;  // MWh required at its end
  /// A solve whose most recent snapshot is older than this is a gap in the stream.
  Minutes max_snapshot_age{15};
  intrinsic::SolveOptions solver;
};

/// One executed fill.
struct TradeRecord {
  Timestamp solve_time;
  Timestamp product_start;
  market::Side resting_side = market::Side::ask;  // ask = we bought, bid = we sold
  double price = 0.0;
  double mw = 0.0;
  double cash = 0.0;  // EUR, positive when we sell
};

struct Violation {
  Timestamp time;
  Timestamp product_start;
  std::string kind;  // "soc_envelope", "power_limit", "terminal_level"
  double value = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};

/// Outcome of one re-solve.
struct Iteration {
  Timestamp time;
  int tradeable = 0;
  intrinsic::SolveStatus status = intrinsic::SolveStatus::optimal;
  bool executed = false;
  bool rounding_rejected = false;
  double cash = 0.0;
  double incremental_value = 0.0;  // cash minus the change in planned degradation
};

struct DayResult {
  Date day;
  fcr::FcrStrategy strategy;
  double pi_fcr = 0.0;
  double pi_idm = 0.0;
  double pi_total = 0.0;
  double degradation = 0.0;  // realized, EUR
  double throughput = 0.0;   // delivered schedule energy, MWh
  int infeasible_solves = 0;
  std::vector<std::pair<Timestamp, double>> soc;  // drift-corrected c_0 after each solve
  std::vector<TradeRecord> trades;
  std::vector<Violation> violations;
  std::vector<Iteration> iterations;
  std::map<Timestamp, double> positions;  // final net position per product
};

/// Mutable state of rolling-intrinsic trading for one delivery day.
struct RiState {
  std::map<Timestamp, double> positions;  // b_t^0 of every product seen so far
  double soc = 0.0;                       // drift-corrected c_0
  double profit = 0.0;                    // realized
  double cycles_left = 0.0;
  Timestamp drift_until;                  // frequency samples before this instant are accounted
};

/// Inputs for one delivery day.
struct DayInputs {
  Date day;
  std::span<const market::OrderBookSnapshot> snapshots;  // time ordered
  const market::UniformSeries* frequency = nullptr;      // may be null when the strategy is all zero
  std::array<double, 6> fcr_prices{};
};

/// Rounds each quantity to the nearest multiple of delta, then clamps to [0, cap].
std::vector<double> round_trades(const std::vector<double>& q, const std::vector<double>& cap, double delta);
double round_trade(double q, double cap, double delta);

/// Adds the FCR drift over [state.drift_until, to), restricted to [day_from, day_to), to c_0.
void apply_drift(RiState& state, const market::UniformSeries* frequency, Timestamp to, Timestamp day_from,
                 Timestamp day_to, const fcr::FcrStrategy& strategy, const fcr::BessSpec& spec);

/// Products of `day` that are still tradeable at `now`.
std::vector<market::DeliveryPeriod> tradeable_products(Date day, Timestamp now, const RiConfig& config);

/// Rolling-intrinsic trading of one delivery day. Throws DataError on a snapshot gap; an
/// infeasible intrinsic is counted and logged.
DayResult run_day(const DayInputs& inputs, const fcr::FcrStrategy& strategy, const fcr::BessSpec& spec,
                  const RiConfig& config);

/// Independent replay of the trade log: sum of cash flows minus degradation on the final
/// net positions.
double replay_profit(const DayResult& result, double kappa, double delta_h);

void write_trade_log(std::ostream& out, const std::vector<TradeRecord>& trades);
std::string to_json(const DayResult& result);

}  // namespace bess::rolling
