#include "bess/fcr/physics.hpp"

#include <algorithm>
#include <cmath>

#include "bess/core/csv.hpp"
#include "bess/core/error.hpp"

namespace bess::fcr {

void BessSpec::validate() const {
  if (!(power_cap > 0)) throw ConfigurationError("power_cap must be positive");
  if (!(energy_cap > 0)) throw ConfigurationError("energy_cap must be positive");
  if (!(eta_ch > 0 && eta_ch <= 1 && eta_dis > 0 && eta_dis <= 1))
    throw ConfigurationError("efficiencies must lie in (0, 1]");
  if (!(alpha_lo >= 0 && alpha_lo < alpha_hi && alpha_hi <= 1))
    throw ConfigurationError("SoC fractions must satisfy 0 <= alpha_lo < alpha_hi <= 1");
  if (!(kappa >= 0)) throw ConfigurationError("kappa must be non-negative");
  if (!(cycle_budget > 0)) throw ConfigurationError("cycle_budget must be positive");
  if (!(min_trade > 0)) throw ConfigurationError("min_trade must be positive");
}

EfaBlock efa_block(Date day, int index) {
  if (index < 1 || index > 6) throw DomainError("EFA block index must be within 1..6");
  const Timestamp start = start_of(day) + std::chrono::hours{4 * (index - 1)};
  return EfaBlock{index, start, start + std::chrono::hours{4}};
}

int efa_block_index(Timestamp ts) {
  const auto secs = (ts - start_of(date_of(ts))).count();
  return static_cast<int>(secs / (4 * 3600)) + 1;
}

void FcrStrategy::validate(const BessSpec& spec) const {
  const int cap = static_cast<int>(std::floor(kMaxBidShare * spec.power_cap + 1e-9));
  for (const int v : x)
    if (v < 0 || v > cap)
      throw DomainError("strategy " + to_string(*this) + " exceeds the FCR cap of " + std::to_string(cap) + " MW");
}

std::string to_string(const FcrStrategy& s) {
  std::string out = "(";
  for (std::size_t i = 0; i < 6; ++i) {
    if (i) out += ',';
    out += std::to_string(s.x[i]);
  }
  return out + ")";
}

FcrStrategy parse_strategy(std::string_view text) {
  if (!text.empty() && text.front() == '(') text.remove_prefix(1);
  if (!text.empty() && text.back() == ')') text.remove_suffix(1);
  const auto parts = csv::split(text, ',');
  if (parts.size() != 6) throw DomainError("strategy needs six components: '" + std::string(text) + "'");
  FcrStrategy s;
  for (std::size_t i = 0; i < 6; ++i) {
    try {
      s.x[i] = static_cast<int>(csv::parse_int(parts[i], 0));
    } catch (const IngestionError&) {
      throw DomainError("strategy component '" + parts[i] + "' is not an integer");
    }
  }
  return s;
}

Envelope soc_envelope(const BessSpec& spec, double x_bid) {
  const Envelope e{std::max(spec.alpha_lo * spec.energy_cap, x_bid / 4.0),
                   std::min(spec.alpha_hi * spec.energy_cap, spec.energy_cap - x_bid / 4.0)};
  if (e.lo > e.hi)
    throw InfeasibleStrategyError("empty SoC envelope for an FCR bid of " + csv::format_double(x_bid) + " MW on " +
                                  csv::format_double(spec.energy_cap) + " MWh");
  return e;
}

double energy_drift(std::span<const double> delta_f, double p_bid, const BessSpec& spec, double duration_h) {
  if (delta_f.empty()) throw DomainError("energy_drift needs at least one sample");
  double sum = 0.0;
  for (const double df : delta_f) sum += stored_power(fcr_activation(df, p_bid), spec);
  return duration_h / static_cast<double>(delta_f.size()) * sum;
}

namespace {

template <typename BidAt>
double drift_on_grid(const market::UniformSeries& f, Timestamp from, Timestamp to, const BessSpec& spec,
                     BidAt bid_at) {
  if (to < from) throw DomainError("drift interval ends before it starts");
  if (to == from) return 0.0;
  if (!f.covers(from, to))
    throw IngestionError("frequency series does not cover " + format_timestamp(from) + " .. " + format_timestamp(to));
  if ((from - f.start) % f.step != Seconds{0} || (to - f.start) % f.step != Seconds{0})
    throw IngestionError("drift interval is not aligned to the frequency sampling grid");
  const auto first = static_cast<std::size_t>((from - f.start) / f.step);
  const auto last = static_cast<std::size_t>((to - f.start) / f.step);
  const double step_h = static_cast<double>(f.step.count()) / 3600.0;
  double sum = 0.0;
  for (std::size_t k = first; k < last; ++k) {
    const Timestamp ts = f.start + f.step * static_cast<long long>(k);
    sum += stored_power(fcr_activation(f.values[k], bid_at(ts)), spec);
  }
  return step_h * sum;
}

}  // namespace

double energy_drift(const market::UniformSeries& frequency, Timestamp from, Timestamp to, double p_bid,
                    const BessSpec& spec) {
  return drift_on_grid(frequency, from, to, spec, [p_bid](Timestamp) { return p_bid; });
}

double energy_drift(const market::UniformSeries& frequency, Timestamp from, Timestamp to,
                    const FcrStrategy& strategy, const BessSpec& spec) {
  return drift_on_grid(frequency, from, to, spec,
                       [&strategy](Timestamp ts) { return static_cast<double>(strategy.at(ts)); });
}

double fcr_revenue(const FcrStrategy& strategy, const std::array<double, 6>& clearing) {
  double sum = 0.0;
  for (std::size_t k = 0; k < 6; ++k) sum += clearing[k] * strategy.x[k];
  return sum;
}

double fcr_revenue(const FcrStrategy& strategy, const market::ExogenousSeries& exogenous, Date day) {
  const auto it = exogenous.fcr_clearing.find(day);
  if (it == exogenous.fcr_clearing.end()) throw DataError("no FCR clearing prices for " + format_date(day));
  return fcr_revenue(strategy, it->second);
}

}  // namespace bess::fcr
