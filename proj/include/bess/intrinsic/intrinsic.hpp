#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "bess/fcr/physics.hpp"
#include "bess/lp/branch_and_bound.hpp"
#include "bess/market/types.hpp"

namespace bess::intrinsic {

/// Sign of an order in the position balance: taking liquidity from an ask buys energy (+1),
/// hitting a bid sells it (-1).
inline double position_sign(market::Side resting) { return resting == market::Side::ask ? 1.0 : -1.0; }

/// One tradeable delivery period t with its prior position and limits.
struct Period {
  market::DeliveryPeriod product;
  double prior = 0.0;     // b_t^0, MW
  double power_lo = 0.0;  // MW, <= 0
  double power_hi = 0.0;  // MW, >= 0
  double soc_lo = 0.0;    // MWh
  double soc_hi = 0.0;    // MWh
};

/// A resting order the battery can take, attached to the index of its period.
struct InstanceOrder {
  market::OrderId id = 0;
  int period = 0;
  market::Side side = market::Side::ask;
  double price = 0.0;     // EUR/MWh
  double quantity = 0.0;  // MW available
};

struct IntrinsicInstance {
  double delta_h = 0.25;
  std::vector<Period> periods;  // in delivery order
  std::vector<InstanceOrder> orders;
  double initial_soc = 0.0;   // drift-corrected c_0, MWh
  double terminal_soc = 0.0;  // C_T, MWh
  double cycles_left = 0.0;   // remaining cycle budget
  double energy_cap = 0.0;    // MWh
  double eta_ch = 1.0;
  double eta_dis = 1.0;
  double kappa = 0.0;  // EUR/MWh

  /// Throws DomainError when the instance is malformed.
  void validate() const;
};

struct TradePlan {
  std::vector<double> q;    // matched MW per order
  std::vector<double> b;    // net position per period, MW (positive = charging)
  std::vector<double> soc;  // SoC at the end of each period, MWh
  double cash = 0.0;        // trading cash flow, EUR
  double degradation = 0.0; // planned degradation of the whole schedule, EUR
  double objective = 0.0;   // cash - degradation
};

enum class SolveStatus { optimal, infeasible, failed };

struct SolveResult {
  SolveStatus status = SolveStatus::infeasible;
  TradePlan plan;
  bool fast_path = false;
  int nodes = 0;
};

struct SolveOptions {
  lp::MilpOptions milp;
  bool fast_path = true;
  bool tie_break = true;
};

/// Calendar context for one solve: which products are tradeable and what must hold at the end.
struct BuildContext {
  std::vector<market::DeliveryPeriod> tradeable;
  double terminal_soc = 2.0;
  double cycles_left = 2.0;
};

/// Collects the orders of the tradeable products from the snapshot and derives every period's
/// bounds from the EFA block it falls into. Missing priors count as 0. Throws
/// InfeasibleStrategyError when a block's SoC envelope is empty.
IntrinsicInstance build_instance(const market::OrderBookSnapshot& snapshot,
                                 const std::map<Timestamp, double>& prior_positions, double soc,
                                 const fcr::FcrStrategy& strategy, const fcr::BessSpec& spec,
                                 const BuildContext& context);

/// The mixed-integer program: variables q_i, b_t^+, b_t^-, and (with binaries) delta_t.
lp::LinearProgram<double> formulate(const IntrinsicInstance& inst, bool with_binaries);

/// Cash flow, planned degradation, positions and SoC implied by matched quantities q.
TradePlan evaluate(const IntrinsicInstance& inst, const std::vector<double>& q);

/// Largest violation of any constraint by the plan (bounds on q, power and SoC limits, terminal
/// level, cycle budget).
double max_violation(const IntrinsicInstance& inst, const TradePlan& plan);

/// Exact solve: optimizes cash minus planned degradation; among optimal plans takes one with the
/// least matched volume. Infeasibility is a status, never an exception.
SolveResult solve(const IntrinsicInstance& inst, const SolveOptions& options = {});

std::string to_json(const IntrinsicInstance& inst);
IntrinsicInstance instance_from_json(const std::string& text);
void dump_instance(const IntrinsicInstance& inst, const std::filesystem::path& path);
IntrinsicInstance load_instance(const std::filesystem::path& path);

}  // namespace bess::intrinsic
