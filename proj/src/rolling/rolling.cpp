#include "bess/rolling/rolling.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>

#include <json.hpp>

#include "bess/core/csv.hpp"
#include "bess/core/error.hpp"

namespace bess::rolling {
namespace {

/// Slack on power, SoC and throughput limits when checking executed schedules (MW or MWh).
constexpr double kLimitTol = 1e-7;

/// Worst excess of a schedule over each family of limits; the terminal period is judged
/// against its envelope, since the rounding residue never matches C_T exactly.
struct Excess {
  double power = 0.0;
  double soc = 0.0;
  double cycles = 0.0;
};

Excess excess_of(const intrinsic::IntrinsicInstance& inst, const intrinsic::TradePlan& plan) {
  Excess e;
  double throughput = 0.0;
  for (std::size_t t = 0; t < inst.periods.size(); ++t) {
    const auto& p = inst.periods[t];
    e.power = std::max({e.power, p.power_lo - plan.b[t], plan.b[t] - p.power_hi});
    e.soc = std::max({e.soc, p.soc_lo - plan.soc[t], plan.soc[t] - p.soc_hi});
    throughput += inst.delta_h * std::abs(plan.b[t]);
  }
  e.cycles = throughput - 2.0 * inst.energy_cap * inst.cycles_left;
  return e;
}

/// Searches implementable quantities near the fractional optimum for the best cash minus
/// degradation within the limits loosened by `allowed`. In each period every quantity off the
/// lot grid goes to the lot below or above it, and additionally one quantity may move by up to
/// two further lots. Dynamic programme over periods with the SoC as state; states within
/// 1e-9 MWh are merged and at most kMaxStates survive each period.
std::optional<std::vector<double>> best_rounding(const intrinsic::IntrinsicInstance& inst,
                                                 const std::vector<double>& raw, const std::vector<double>& cap,
                                                 double delta, const Excess& allowed, double terminal_target,
                                                 double terminal_band) {
  constexpr std::size_t kMaxStates = 256;
  constexpr std::size_t kMaxOpen = 4;
  const double dt = inst.delta_h;
  const double power_slack = std::max(allowed.power, 0.0) + kLimitTol;
  const double soc_slack = std::max(allowed.soc, 0.0) + kLimitTol;
  const double throughput_cap =
      2.0 * inst.energy_cap * inst.cycles_left + std::max(allowed.cycles, 0.0) + kLimitTol;
  const std::size_t periods = inst.periods.size();

  const std::vector<double> nearest = round_trades(raw, cap, delta);
  std::vector<std::vector<std::size_t>> members(periods), open(periods);
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const auto t = static_cast<std::size_t>(inst.orders[i].period);
    members[t].push_back(i);
    const double x = raw[i] / delta;
    if (std::abs(x - std::round(x)) > 1e-9 && raw[i] < cap[i] - 1e-9 && open[t].size() < kMaxOpen)
      open[t].push_back(i);
  }

  struct Option {
    std::vector<double> q;  // quantities of the period's orders, in `members` order
    double b, value, energy;
  };
  struct State {
    double soc, value, throughput;
    std::size_t parent, option;
  };
  std::vector<std::vector<Option>> choices(periods);
  std::vector<std::vector<State>> layers;
  std::vector<State> states{{inst.initial_soc, 0.0, 0.0, 0, 0}};
  for (std::size_t t = 0; t < periods; ++t) {
    const auto& p = inst.periods[t];
    const auto& idx = members[t];
    auto& options = choices[t];
    auto consider = [&](const std::vector<double>& qt) {
      double b = p.prior, cash = 0.0;
      for (std::size_t k = 0; k < idx.size(); ++k) {
        if (qt[k] <= 0) continue;
        const auto& o = inst.orders[idx[k]];
        const double sign = intrinsic::position_sign(o.side);
        b += sign * qt[k];
        cash -= dt * sign * o.price * qt[k];
      }
      if (b < p.power_lo - power_slack || b > p.power_hi + power_slack) return;
      const double value = cash - inst.kappa * dt * std::abs(b);
      for (auto& o : options)
        if (std::abs(o.b - b) <= 1e-12) {
          if (value > o.value) {
            o.q = qt;
            o.value = value;
          }
          return;
        }
      options.push_back({qt, b, value, b > 0 ? dt * inst.eta_ch * b : dt * b / inst.eta_dis});
    };
    for (std::uint32_t mask = 0; mask < (1u << open[t].size()); ++mask) {
      std::vector<double> qt(idx.size());
      for (std::size_t k = 0; k < idx.size(); ++k) qt[k] = nearest[idx[k]];
      for (std::size_t m = 0; m < open[t].size(); ++m) {
        const std::size_t i = open[t][m];
        const auto k = static_cast<std::size_t>(std::find(idx.begin(), idx.end(), i) - idx.begin());
        qt[k] = (mask >> m) & 1u ? std::min(std::ceil(raw[i] / delta) * delta, cap[i])
                                 : std::floor(raw[i] / delta) * delta;
      }
      consider(qt);
      for (std::size_t k = 0; k < idx.size(); ++k)
        for (const double step : {-2.0, -1.0, 1.0, 2.0}) {
          auto moved = qt;
          moved[k] = std::clamp(std::round(qt[k] / delta + step) * delta, 0.0, cap[idx[k]]);
          if (moved[k] != qt[k]) consider(moved);
        }
    }

    const bool last = t + 1 == periods;
    std::vector<State> next;
    for (std::size_t s = 0; s < states.size(); ++s)
      for (std::size_t k = 0; k < options.size(); ++k) {
        const auto& o = options[k];
        const double soc = states[s].soc + o.energy;
        const double throughput = states[s].throughput + dt * std::abs(o.b);
        if (throughput > throughput_cap) continue;
        if (soc < p.soc_lo - soc_slack || soc > p.soc_hi + soc_slack) continue;
        if (last && std::abs(soc - terminal_target) > terminal_band + kLimitTol) continue;
        next.push_back({soc, states[s].value + o.value, throughput, s, k});
      }
    if (next.empty()) return std::nullopt;
    std::sort(next.begin(), next.end(), [](const State& a, const State& b) { return a.soc < b.soc; });
    std::vector<State> merged;
    for (const auto& st : next) {
      if (!merged.empty() && st.soc - merged.back().soc <= 1e-9) {
        if (st.value > merged.back().value) merged.back() = st;
      } else {
        merged.push_back(st);
      }
    }
    if (merged.size() > kMaxStates) {
      // Thin out evenly across the SoC range so that every reachable level stays represented.
      const double lo = merged.front().soc, width = (merged.back().soc - lo) / kMaxStates;
      std::vector<State> thinned;
      std::size_t bucket = std::numeric_limits<std::size_t>::max();
      for (const auto& st : merged) {
        const auto b = std::min(kMaxStates - 1, static_cast<std::size_t>((st.soc - lo) / width));
        if (b != bucket) {
          thinned.push_back(st);
          bucket = b;
        } else if (st.value > thinned.back().value) {
          thinned.back() = st;
        }
      }
      merged = std::move(thinned);
    }
    layers.push_back(merged);
    states = std::move(merged);
  }

  std::vector<double> q(raw.size(), 0.0);
  std::size_t s = 0;
  for (std::size_t k = 1; k < states.size(); ++k)
    if (states[k].value > states[s].value) s = k;
  for (std::size_t t = periods; t-- > 0;) {
    const State& st = layers[t][s];
    const auto& o = choices[t][st.option];
    for (std::size_t k = 0; k < members[t].size(); ++k) q[members[t][k]] = o.q[k];
    s = st.parent;
  }
  return q;
}

bool all_zero(const fcr::FcrStrategy& s) {
  return std::all_of(s.x.begin(), s.x.end(), [](int v) { return v == 0; });
}

}  // namespace

double round_trade(double q, double cap, double delta) {
  const double r = std::round(q / delta) * delta;
  return std::clamp(r, 0.0, cap);
}

std::vector<double> round_trades(const std::vector<double>& q, const std::vector<double>& cap, double delta) {
  if (!(delta > 0)) throw DomainError("minimum trade size must be positive");
  std::vector<double> out(q.size());
  for (std::size_t i = 0; i < q.size(); ++i) out[i] = round_trade(q[i], cap[i], delta);
  return out;
}

void apply_drift(RiState& state, const market::UniformSeries* frequency, Timestamp to, Timestamp day_from,
                 Timestamp day_to, const fcr::FcrStrategy& strategy, const fcr::BessSpec& spec) {
  const Timestamp from = std::max(state.drift_until, day_from);
  const Timestamp until = std::min(to, day_to);
  if (until > from && !all_zero(strategy)) {
    if (!frequency) throw DataError("frequency series required for a nonzero FCR commitment");
    state.soc += fcr::energy_drift(*frequency, from, until, strategy, spec);
  }
  state.drift_until = std::max(state.drift_until, std::max(from, until));
}

std::vector<market::DeliveryPeriod> tradeable_products(Date day, Timestamp now, const RiConfig& config) {
  std::vector<market::DeliveryPeriod> out;
  const Timestamp open = start_of(day) - std::chrono::hours{24 - config.open_hour};
  if (now < open) return out;
  const int count = static_cast<int>(std::lround(24.0 / config.product_duration_h));
  for (int k = 0; k < count; ++k) {
    const market::DeliveryPeriod p{add_hours(start_of(day), k * config.product_duration_h), config.product_duration_h};
    if (p.start - config.gate_closure > now) out.push_back(p);
  }
  return out;
}

DayResult run_day(const DayInputs& in, const fcr::FcrStrategy& strategy, const fcr::BessSpec& spec,
                  const RiConfig& cfg) {
  spec.validate();
  strategy.validate(spec);
  if (cfg.cadence <= Minutes{0}) throw ConfigurationError("re-solve cadence must be positive");
  if (cfg.open_hour < 0 || cfg.open_hour > 23) throw ConfigurationError("open_hour must be within 0..23");
  if (!all_zero(strategy) && !in.frequency) throw DataError("no frequency series for " + format_date(in.day));
  const double dt = cfg.product_duration_h;
  const double delta = spec.min_trade;
  const Timestamp day_from = start_of(in.day);
  const Timestamp day_to = start_of(in.day + std::chrono::days{1});
  const Timestamp open = day_from - std::chrono::hours{24 - cfg.open_hour};

  DayResult res;
  res.day = in.day;
  res.strategy = strategy;
  res.pi_fcr = fcr::fcr_revenue(strategy, in.fcr_prices);

  RiState st;
  st.soc = cfg.initial_soc;
  // The budget covers the day's products as a whole. Resetting it at midnight would forgive the
  // energy of the first product, whose gate closes before midnight.
  st.cycles_left = spec.cycle_budget;
  st.drift_until = day_from;
  const int products_per_day = static_cast<int>(std::lround(24.0 / dt));
  const Timestamp last_start = add_hours(day_from, (products_per_day - 1) * dt);

  auto retire = [&](const market::DeliveryPeriod& p, Timestamp now) {
    const double b = st.positions[p.start];
    st.soc += b > 0 ? dt * spec.eta_ch * b : dt * b / spec.eta_dis;
    const double deg = spec.kappa * dt * std::abs(b);
    st.profit -= deg;
    res.degradation += deg;
    res.throughput += dt * std::abs(b);
    st.cycles_left -= dt * std::abs(b) / (2.0 * spec.energy_cap);
    const int x = strategy.at(p.start);
    const double headroom = fcr::power_headroom(spec, x);
    if (std::abs(b) > headroom + 1e-9) res.violations.push_back({now, p.start, "power_limit", b, -headroom, headroom});
    const auto env = fcr::soc_envelope(spec, x);
    if (!env.contains(st.soc, 1e-6)) res.violations.push_back({now, p.start, "soc_envelope", st.soc, env.lo, env.hi});
    if (p.start == last_start && std::abs(st.soc - cfg.terminal_soc) > delta * dt + 1e-9)
      res.violations.push_back({now, p.start, "terminal_level", st.soc, cfg.terminal_soc, cfg.terminal_soc});
  };

  std::vector<market::DeliveryPeriod> previous = tradeable_products(in.day, open, cfg);
  auto first = std::upper_bound(in.snapshots.begin(), in.snapshots.end(), open,
                                [](Timestamp t, const market::OrderBookSnapshot& s) { return t < s.timestamp; });
  std::size_t cursor = first == in.snapshots.begin() ? 0 : static_cast<std::size_t>(first - in.snapshots.begin()) - 1;
  for (Timestamp tau = open;; tau += cfg.cadence) {
    const auto current = tradeable_products(in.day, tau, cfg);
    apply_drift(st, in.frequency, tau, day_from, day_to, strategy, spec);
    for (const auto& p : previous)
      if (std::find(current.begin(), current.end(), p) == current.end()) retire(p, tau);
    previous = current;
    if (current.empty()) break;

    // Latest snapshot at or before tau.
    while (cursor + 1 < in.snapshots.size() && in.snapshots[cursor + 1].timestamp <= tau) ++cursor;
    if (in.snapshots.empty() || in.snapshots[cursor].timestamp > tau ||
        tau - in.snapshots[cursor].timestamp > cfg.max_snapshot_age)
      throw DataError("order-book stream has a gap at " + format_timestamp(tau));
    const auto& snap = in.snapshots[cursor];

    Iteration it;
    it.time = tau;
    it.tradeable = static_cast<int>(current.size());
    const intrinsic::BuildContext ctx{current, cfg.terminal_soc, std::max(0.0, st.cycles_left)};
    auto inst = intrinsic::build_instance(snap, st.positions, st.soc, strategy, spec, ctx);
    const auto hold = intrinsic::evaluate(inst, std::vector<double>(inst.orders.size(), 0.0));
    // A terminal level that earlier rounding left within one lot of C_T is kept rather than
    // bought back; further away it only has to come back to within one lot.
    const double band = delta * dt;
    const double terminal_gap = hold.soc.empty() ? 0.0 : std::abs(hold.soc.back() - cfg.terminal_soc);
    if (!inst.periods.empty()) {
      const auto& last = inst.periods.back();
      inst.terminal_soc = std::clamp(std::clamp(hold.soc.back(), cfg.terminal_soc - band, cfg.terminal_soc + band),
                                     last.soc_lo, last.soc_hi);
    }
    const auto sol = intrinsic::solve(inst, cfg.solver);
    it.status = sol.status;
    if (sol.status != intrinsic::SolveStatus::optimal) {
      ++res.infeasible_solves;
      res.iterations.push_back(it);
      res.soc.emplace_back(tau, st.soc);
      continue;
    }

    std::vector<double> cap(inst.orders.size());
    for (std::size_t i = 0; i < cap.size(); ++i) cap[i] = inst.orders[i].quantity;
    const Excess before = excess_of(inst, hold);
    // Rounded trades may not add a violation the current schedule does not already have. A
    // trade that loses money is only taken when it shrinks an existing violation.
    auto acceptable = [&](const intrinsic::TradePlan& plan, double value) {
      const Excess after = excess_of(inst, plan);
      const bool no_worse = after.power <= std::max(before.power, 0.0) + kLimitTol &&
                            after.soc <= std::max(before.soc, 0.0) + kLimitTol &&
                            after.cycles <= std::max(before.cycles, 0.0) + kLimitTol;
      const double shrink = std::max(before.power, 0.0) + std::max(before.soc, 0.0) + std::max(before.cycles, 0.0) -
                            std::max(after.power, 0.0) - std::max(after.soc, 0.0) - std::max(after.cycles, 0.0);
      const bool terminal_ok = plan.soc.empty() || std::abs(plan.soc.back() - cfg.terminal_soc) <=
                                                        std::max(terminal_gap, band) + kLimitTol;
      return no_worse && terminal_ok && (value >= -1e-9 || shrink > kLimitTol);
    };

    std::vector<double> q = round_trades(sol.plan.q, cap, delta);
    bool any = std::any_of(q.begin(), q.end(), [](double v) { return v > 0; });
    if (any) {
      auto plan = intrinsic::evaluate(inst, q);
      double value = plan.cash - (plan.degradation - hold.degradation);
      if (!acceptable(plan, value)) {
        // Nearest rounding broke a limit; pick the best combination of lots below and above.
        any = false;
        if (auto repaired = best_rounding(inst, sol.plan.q, cap, delta, before, cfg.terminal_soc,
                                        std::max(terminal_gap, band))) {
          plan = intrinsic::evaluate(inst, *repaired);
          value = plan.cash - (plan.degradation - hold.degradation);
          if (acceptable(plan, value)) {
            q = std::move(*repaired);
            any = std::any_of(q.begin(), q.end(), [](double v) { return v > 0; });
          }
        }
        it.rounding_rejected = !any;
      }
      if (any) {
        for (std::size_t i = 0; i < q.size(); ++i) {
          if (q[i] <= 0) continue;
          const auto& o = inst.orders[i];
          const double cash = -dt * intrinsic::position_sign(o.side) * o.price * q[i];
          res.trades.push_back({tau, inst.periods[static_cast<std::size_t>(o.period)].product.start, o.side, o.price,
                                q[i], cash});
        }
        for (std::size_t t = 0; t < inst.periods.size(); ++t) st.positions[inst.periods[t].product.start] = plan.b[t];
        st.profit += plan.cash;
        it.executed = true;
        it.cash = plan.cash;
        it.incremental_value = value;
      }
    }
    res.iterations.push_back(it);
    res.soc.emplace_back(tau, st.soc);
  }

  // Drift after the last gate closure still moves the battery until the end of the day.
  apply_drift(st, in.frequency, day_to, day_from, day_to, strategy, spec);
  res.soc.emplace_back(day_to, st.soc);
  res.pi_idm = st.profit;
  res.pi_total = res.pi_fcr + res.pi_idm;
  res.positions = st.positions;
  return res;
}

double replay_profit(const DayResult& result, double kappa, double delta_h) {
  std::map<Timestamp, double> net;
  double cash = 0.0;
  for (const auto& t : result.trades) {
    const double s = intrinsic::position_sign(t.resting_side);
    net[t.product_start] += s * t.mw;
    cash -= delta_h * s * t.price * t.mw;
  }
  double degradation = 0.0;
  for (const auto& [start, b] : net) degradation += kappa * delta_h * std::abs(b);
  return cash - degradation;
}

void write_trade_log(std::ostream& out, const std::vector<TradeRecord>& trades) {
  csv::write_row(out, {"solve_time", "product_start", "side", "price", "mw", "cash_eur"});
  for (const auto& t : trades)
    csv::write_row(out, {format_timestamp(t.solve_time), format_timestamp(t.product_start),
                         t.resting_side == market::Side::ask ? "buy" : "sell", csv::format_double(t.price),
                         csv::format_double(t.mw), csv::format_double(t.cash)});
}

std::string to_json(const DayResult& r) {
  nlohmann::ordered_json j;
  j["day"] = format_date(r.day);
  j["strategy"] = fcr::to_string(r.strategy);
  j["pi_fcr"] = r.pi_fcr;
  j["pi_idm"] = r.pi_idm;
  j["pi_total"] = r.pi_total;
  j["degradation"] = r.degradation;
  j["throughput_mwh"] = r.throughput;
  j["infeasible_solves"] = r.infeasible_solves;
  j["trades"] = r.trades.size();
  auto& soc = j["soc"] = nlohmann::ordered_json::array();
  for (const auto& [ts, c] : r.soc) soc.push_back({format_timestamp(ts), c});
  auto& v = j["violations"] = nlohmann::ordered_json::array();
  for (const auto& x : r.violations)
    v.push_back({{"time", format_timestamp(x.time)},
                 {"product_start", format_timestamp(x.product_start)},
                 {"kind", x.kind},
                 {"value", x.value},
                 {"lo", x.lo},
                 {"hi", x.hi}});
  return j.dump(2);
}

}  // namespace bess::rolling
