#pragma once

// Brute-force reference for small intrinsic instances: enumerates every order quantity on a
// fixed grid, derives the unique schedule (a period either charges or discharges, so
// b+ = max(b, 0) and b- = max(-b, 0)) and keeps the best plan satisfying every constraint.
// Periods are enumerated in delivery order so partial schedules that already leave the power
// or SoC limits are cut early.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "bess/core/random.hpp"
#include "bess/intrinsic/intrinsic.hpp"

namespace bess::testing {

struct OracleResult {
  double objective = -std::numeric_limits<double>::infinity();
  std::vector<double> q;
  bool feasible = false;
};

class GridOracle {
 public:
  GridOracle(const intrinsic::IntrinsicInstance& inst, double step, double tol)
      : inst_(inst), step_(step), tol_(tol), by_period_(inst.periods.size()), q_(inst.orders.size(), 0.0) {
    for (std::size_t i = 0; i < inst.orders.size(); ++i)
      by_period_[static_cast<std::size_t>(inst.orders[i].period)].push_back(i);
  }

  OracleResult run() {
    if (inst_.periods.empty()) return OracleResult{0.0, {}, true};
    enumerate(0, inst_.initial_soc, 0.0, 0.0);
    return best_;
  }

 private:
  // Odometer over the orders of period t; each combination closes the period.
  void enumerate(std::size_t t, double soc, double throughput, double value) {
    const auto& ids = by_period_[t];
    std::vector<int> level(ids.size(), 0), top(ids.size());
    for (std::size_t k = 0; k < ids.size(); ++k)
      top[k] = static_cast<int>(std::floor(inst_.orders[ids[k]].quantity / step_ + 1e-9));
    while (true) {
      for (std::size_t k = 0; k < ids.size(); ++k) q_[ids[k]] = level[k] * step_;
      close(t, soc, throughput, value);
      std::size_t k = 0;
      while (k < ids.size() && ++level[k] > top[k]) level[k++] = 0;
      if (k == ids.size()) break;
    }
    for (const auto i : ids) q_[i] = 0.0;
  }

  void close(std::size_t t, double soc, double throughput, double value) {
    const double dt = inst_.delta_h;
    const auto& p = inst_.periods[t];
    double b = p.prior;
    for (const auto i : by_period_[t]) {
      const double s = intrinsic::position_sign(inst_.orders[i].side);
      b += s * q_[i];
      value -= dt * s * inst_.orders[i].price * q_[i];
    }
    if (b < p.power_lo - tol_ || b > p.power_hi + tol_) return;
    soc += b > 0 ? dt * inst_.eta_ch * b : dt * b / inst_.eta_dis;
    throughput += dt * std::abs(b);
    value -= inst_.kappa * dt * std::abs(b);
    if (throughput > 2.0 * inst_.energy_cap * inst_.cycles_left + tol_) return;
    if (t + 1 == inst_.periods.size()) {
      if (std::abs(soc - inst_.terminal_soc) > tol_) return;
      if (value > best_.objective) best_ = OracleResult{value, q_, true};
      return;
    }
    if (soc < p.soc_lo - tol_ || soc > p.soc_hi + tol_) return;
    enumerate(t + 1, soc, throughput, value);
  }

  const intrinsic::IntrinsicInstance& inst_;
  double step_;
  double tol_;
  std::vector<std::vector<std::size_t>> by_period_;
  std::vector<double> q_;
  OracleResult best_;
};

inline OracleResult grid_oracle(const intrinsic::IntrinsicInstance& inst, double step, double tol = 1e-9) {
  return GridOracle(inst, step, tol).run();
}

/// Random small instance on integer data. For efficiencies in {0.5, 1} every vertex of the
/// problem with fixed charge/discharge pattern has matched quantities on a quarter grid (half
/// grid unless discharging is lossy), so the grid oracle is exact for these instances.
struct OracleInstance {
  intrinsic::IntrinsicInstance inst;
  double step = 0.5;
};

inline OracleInstance random_oracle_instance(Rng& rng, bool allow_negative_prices) {
  OracleInstance out;
  auto& inst = out.inst;
  inst.delta_h = 1.0;
  const int T = static_cast<int>(rng.uniform_int(1, 4));
  const int eta_mode = static_cast<int>(rng.uniform_int(0, 2));
  inst.eta_ch = eta_mode == 1 ? 0.5 : 1.0;
  inst.eta_dis = eta_mode == 2 ? 0.5 : 1.0;
  out.step = eta_mode == 2 ? 0.25 : 0.5;
  const std::array<double, 3> kappas{0.0, 1.0, 3.0};
  inst.kappa = kappas[static_cast<std::size_t>(rng.uniform_int(0, 2))];
  inst.energy_cap = 10.0;
  inst.cycles_left = 100.0;
  const Timestamp t0 = parse_timestamp("2024-06-01T00:00:00Z");
  for (int t = 0; t < T; ++t) {
    intrinsic::Period p;
    p.product = market::DeliveryPeriod{t0 + std::chrono::hours{t}, 1.0};
    p.power_hi = static_cast<double>(rng.uniform_int(1, 3));
    p.power_lo = -p.power_hi;
    p.soc_lo = static_cast<double>(rng.uniform_int(0, 1));
    p.soc_hi = p.soc_lo + static_cast<double>(rng.uniform_int(1, 4));
    p.prior = static_cast<double>(rng.uniform_int(-1, 1));
    inst.periods.push_back(p);
  }
  const auto& last = inst.periods.back();
  inst.terminal_soc = static_cast<double>(rng.uniform_int(static_cast<long long>(last.soc_lo),
                                                          static_cast<long long>(last.soc_hi)));
  inst.initial_soc = static_cast<double>(rng.uniform_int(static_cast<long long>(inst.periods.front().soc_lo),
                                                         static_cast<long long>(inst.periods.front().soc_hi)));
  const int n_orders = static_cast<int>(rng.uniform_int(0, eta_mode == 2 ? 5 : 6));
  for (int i = 0; i < n_orders; ++i) {
    intrinsic::InstanceOrder o;
    o.id = static_cast<market::OrderId>(i + 1);
    o.period = static_cast<int>(rng.uniform_int(0, T - 1));
    o.side = rng.uniform() < 0.5 ? market::Side::ask : market::Side::bid;
    o.price = static_cast<double>(rng.uniform_int(allow_negative_prices ? -40 : 0, 100));
    o.quantity = static_cast<double>(rng.uniform_int(1, 2));
    inst.orders.push_back(o);
  }
  return out;
}

/// Two periods, an ask (20 EUR, 2 MW) in the first and a bid (100 EUR, 2 MW) in the second,
/// lossless, c_0 = C_T = 0 with [0, 2] MWh and +-2 MW.
inline intrinsic::IntrinsicInstance spread_instance(double kappa) {
  intrinsic::IntrinsicInstance inst;
  inst.delta_h = 1.0;
  inst.eta_ch = inst.eta_dis = 1.0;
  inst.kappa = kappa;
  inst.energy_cap = 2.0;
  inst.cycles_left = 10.0;
  inst.initial_soc = inst.terminal_soc = 0.0;
  const Timestamp t0 = parse_timestamp("2024-06-01T10:00:00Z");
  for (int t = 0; t < 2; ++t)
    inst.periods.push_back(intrinsic::Period{{t0 + std::chrono::hours{t}, 1.0}, 0.0, -2.0, 2.0, 0.0, 2.0});
  inst.orders.push_back({1, 0, market::Side::ask, 20.0, 2.0});
  inst.orders.push_back({2, 1, market::Side::bid, 100.0, 2.0});
  return inst;
}

}  // namespace bess::testing
