#include "bess/intrinsic/intrinsic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "bess/core/error.hpp"

namespace bess::intrinsic {
namespace {

constexpr double kComplementarityTol = 1e-9;

struct Layout {
  int orders = 0;
  int periods = 0;
  int q(int i) const { return i; }
  int bp(int t) const { return orders + t; }
  int bm(int t) const { return orders + periods + t; }
  int delta(int t) const { return orders + 2 * periods + t; }
};

bool complementary(const IntrinsicInstance& inst, const Layout& lay, const Eigen::VectorXd& x) {
  for (int t = 0; t < lay.periods; ++t) {
    const double scale = 1.0 + std::max(inst.periods[static_cast<std::size_t>(t)].power_hi,
                                        -inst.periods[static_cast<std::size_t>(t)].power_lo);
    if (std::min(x(lay.bp(t)), x(lay.bm(t))) > kComplementarityTol * scale) return false;
  }
  return true;
}

std::vector<double> extract_q(const IntrinsicInstance& inst, const Eigen::VectorXd& x) {
  std::vector<double> q(inst.orders.size());
  for (std::size_t i = 0; i < q.size(); ++i) {
    double v = std::clamp(x(static_cast<Eigen::Index>(i)), 0.0, inst.orders[i].quantity);
    if (v < 1e-12) v = 0.0;
    q[i] = v;
  }
  return q;
}

}  // namespace

void IntrinsicInstance::validate() const {
  if (!(delta_h > 0)) throw DomainError("instance: delta must be positive");
  if (!(eta_ch > 0 && eta_ch <= 1 && eta_dis > 0 && eta_dis <= 1))
    throw DomainError("instance: efficiencies outside (0, 1]");
  if (!(kappa >= 0)) throw DomainError("instance: negative degradation cost");
  if (!(cycles_left >= 0)) throw DomainError("instance: negative cycle budget");
  if (!(energy_cap > 0)) throw DomainError("instance: energy capacity must be positive");
  for (std::size_t t = 0; t < periods.size(); ++t) {
    const auto& p = periods[t];
    if (!(p.power_lo <= 0 && p.power_hi >= 0)) throw DomainError("instance: power bounds must bracket zero");
    if (!(p.soc_lo <= p.soc_hi)) throw DomainError("instance: empty SoC bounds");
    if (t > 0 && !(periods[t - 1].product.start < p.product.start))
      throw DomainError("instance: periods must be in delivery order");
  }
  if (!periods.empty()) {
    const auto& last = periods.back();
    if (!(terminal_soc >= last.soc_lo - 1e-12 && terminal_soc <= last.soc_hi + 1e-12))
      throw DomainError("instance: terminal level outside the last period's SoC bounds");
  }
  for (const auto& o : orders) {
    if (o.period < 0 || o.period >= static_cast<int>(periods.size()))
      throw DomainError("instance: order refers to an unknown period");
    if (!(o.quantity >= 0)) throw DomainError("instance: negative order quantity");
  }
}

IntrinsicInstance build_instance(const market::OrderBookSnapshot& snapshot,
                                 const std::map<Timestamp, double>& prior_positions, double soc,
                                 const fcr::FcrStrategy& strategy, const fcr::BessSpec& spec,
                                 const BuildContext& context) {
  IntrinsicInstance inst;
  inst.initial_soc = soc;
  inst.terminal_soc = context.terminal_soc;
  inst.cycles_left = std::max(0.0, context.cycles_left);
  inst.energy_cap = spec.energy_cap;
  inst.eta_ch = spec.eta_ch;
  inst.eta_dis = spec.eta_dis;
  inst.kappa = spec.kappa;
  if (!context.tradeable.empty()) inst.delta_h = context.tradeable.front().duration_h;
  auto products = context.tradeable;
  std::sort(products.begin(), products.end());
  for (const auto& product : products) {
    if (product.duration_h != inst.delta_h) throw DomainError("one product granularity per instance");
    const int x = strategy.at(product.start);
    const auto env = fcr::soc_envelope(spec, x);
    Period p;
    p.product = product;
    const auto it = prior_positions.find(product.start);
    p.prior = it == prior_positions.end() ? 0.0 : it->second;
    p.power_hi = fcr::power_headroom(spec, x);
    p.power_lo = -p.power_hi;
    p.soc_lo = env.lo;
    p.soc_hi = env.hi;
    const int index = static_cast<int>(inst.periods.size());
    inst.periods.push_back(p);
    if (const auto* book = snapshot.find(product)) {
      for (const market::Side side : {market::Side::ask, market::Side::bid})
        for (const auto& o : book->ladder(side))
          inst.orders.push_back(InstanceOrder{o.id, index, side, o.limit_price, o.quantity});
    }
  }
  return inst;
}

lp::LinearProgram<double> formulate(const IntrinsicInstance& inst, bool with_binaries) {
  const double inf = lp::kInfinity<double>;
  const Layout lay{static_cast<int>(inst.orders.size()), static_cast<int>(inst.periods.size())};
  const double dt = inst.delta_h;
  lp::ProgramBuilder<double> b(lp::Sense::maximize);
  for (const auto& o : inst.orders) b.add_variable(0.0, o.quantity, -dt * position_sign(o.side) * o.price);
  for (const auto& p : inst.periods) b.add_variable(0.0, p.power_hi, -inst.kappa * dt);
  for (const auto& p : inst.periods) b.add_variable(0.0, -p.power_lo, -inst.kappa * dt);
  if (with_binaries)
    for (std::size_t t = 0; t < inst.periods.size(); ++t) b.add_variable(0.0, 1.0, 0.0, true);

  // Power balance: b_t^+ - b_t^- - sum_i s_i q_i = b_t^0.
  std::vector<int> balance(inst.periods.size());
  for (int t = 0; t < lay.periods; ++t) {
    const double prior = inst.periods[static_cast<std::size_t>(t)].prior;
    balance[static_cast<std::size_t>(t)] = b.add_row(prior, prior);
    b.add_coefficient(balance[static_cast<std::size_t>(t)], lay.bp(t), 1.0);
    b.add_coefficient(balance[static_cast<std::size_t>(t)], lay.bm(t), -1.0);
  }
  for (int i = 0; i < lay.orders; ++i) {
    const auto& o = inst.orders[static_cast<std::size_t>(i)];
    b.add_coefficient(balance[static_cast<std::size_t>(o.period)], lay.q(i), -position_sign(o.side));
  }
  if (with_binaries) {
    for (int t = 0; t < lay.periods; ++t) {
      const auto& p = inst.periods[static_cast<std::size_t>(t)];
      int r = b.add_row(-inf, 0.0);  // b_t^+ <= b_hi * delta_t
      b.add_coefficient(r, lay.bp(t), 1.0);
      b.add_coefficient(r, lay.delta(t), -p.power_hi);
      r = b.add_row(-inf, -p.power_lo);  // b_t^- <= -b_lo * (1 - delta_t)
      b.add_coefficient(r, lay.bm(t), 1.0);
      b.add_coefficient(r, lay.delta(t), -p.power_lo);
    }
  }
  // Stored energy after each period, relative to c_0; the last one is pinned to C_T.
  for (int t = 0; t < lay.periods; ++t) {
    const auto& p = inst.periods[static_cast<std::size_t>(t)];
    const bool last = t + 1 == lay.periods;
    const int r = last ? b.add_row(inst.terminal_soc - inst.initial_soc, inst.terminal_soc - inst.initial_soc)
                       : b.add_row(p.soc_lo - inst.initial_soc, p.soc_hi - inst.initial_soc);
    for (int a = 0; a <= t; ++a) {
      b.add_coefficient(r, lay.bp(a), dt * inst.eta_ch);
      b.add_coefficient(r, lay.bm(a), -dt / inst.eta_dis);
    }
  }
  // Throughput within the remaining cycle budget.
  if (lay.periods > 0) {
    const int r = b.add_row(-inf, 2.0 * inst.energy_cap * inst.cycles_left);
    for (int t = 0; t < lay.periods; ++t) {
      b.add_coefficient(r, lay.bp(t), dt);
      b.add_coefficient(r, lay.bm(t), dt);
    }
  }
  auto program = b.build();

  // A period whose orders can only move b_t away from zero in the direction of b_t^0 never
  // needs both legs, so the unused leg and its binary are fixed up front. This removes the
  // simultaneous charge and discharge that the relaxation would otherwise use to dump energy.
  std::vector<bool> can_buy(inst.periods.size(), false), can_sell(inst.periods.size(), false);
  for (const auto& o : inst.orders) {
    if (o.quantity <= 0) continue;
    (position_sign(o.side) > 0 ? can_buy : can_sell)[static_cast<std::size_t>(o.period)] = true;
  }
  for (int t = 0; t < lay.periods; ++t) {
    const auto k = static_cast<std::size_t>(t);
    const double prior = inst.periods[k].prior;
    if (prior >= 0 && !can_sell[k]) {
      program.lower(lay.bm(t)) = program.upper(lay.bm(t)) = 0.0;
      if (with_binaries) program.lower(lay.delta(t)) = program.upper(lay.delta(t)) = 1.0;
    } else if (prior <= 0 && !can_buy[k]) {
      program.lower(lay.bp(t)) = program.upper(lay.bp(t)) = 0.0;
      if (with_binaries) program.lower(lay.delta(t)) = program.upper(lay.delta(t)) = 0.0;
    }
  }
  return program;
}

TradePlan evaluate(const IntrinsicInstance& inst, const std::vector<double>& q) {
  TradePlan plan;
  plan.q = q;
  plan.b.resize(inst.periods.size());
  plan.soc.resize(inst.periods.size());
  for (std::size_t t = 0; t < inst.periods.size(); ++t) plan.b[t] = inst.periods[t].prior;
  const double dt = inst.delta_h;
  for (std::size_t i = 0; i < inst.orders.size(); ++i) {
    const auto& o = inst.orders[i];
    const double s = position_sign(o.side);
    plan.b[static_cast<std::size_t>(o.period)] += s * q[i];
    plan.cash -= dt * s * o.price * q[i];
  }
  double c = inst.initial_soc;
  for (std::size_t t = 0; t < inst.periods.size(); ++t) {
    const double bt = plan.b[t];
    c += bt > 0 ? dt * inst.eta_ch * bt : dt * bt / inst.eta_dis;
    plan.soc[t] = c;
    plan.degradation += inst.kappa * dt * std::abs(bt);
  }
  plan.objective = plan.cash - plan.degradation;
  return plan;
}

double max_violation(const IntrinsicInstance& inst, const TradePlan& plan) {
  double worst = 0.0;
  for (std::size_t i = 0; i < inst.orders.size(); ++i)
    worst = std::max({worst, -plan.q[i], plan.q[i] - inst.orders[i].quantity});
  double throughput = 0.0;
  for (std::size_t t = 0; t < inst.periods.size(); ++t) {
    const auto& p = inst.periods[t];
    worst = std::max({worst, p.power_lo - plan.b[t], plan.b[t] - p.power_hi});
    if (t + 1 < inst.periods.size())
      worst = std::max({worst, p.soc_lo - plan.soc[t], plan.soc[t] - p.soc_hi});
    else
      worst = std::max(worst, std::abs(plan.soc[t] - inst.terminal_soc));
    throughput += inst.delta_h * std::abs(plan.b[t]);
  }
  return std::max(worst, throughput - 2.0 * inst.energy_cap * inst.cycles_left);
}

SolveResult solve(const IntrinsicInstance& inst, const SolveOptions& options) {
  inst.validate();
  SolveResult out;
  const Layout lay{static_cast<int>(inst.orders.size()), static_cast<int>(inst.periods.size())};
  if (lay.periods == 0) {
    out.status = SolveStatus::optimal;
    out.plan = evaluate(inst, {});
    return out;
  }

  bool use_fast = options.fast_path && inst.kappa >= 0 &&
                  std::all_of(inst.orders.begin(), inst.orders.end(), [](const auto& o) { return o.price >= 0; });
  lp::LinearProgram<double> program;
  lp::LpResult<double> vertex;  // optimal vertex of the continuous problem with the pattern fixed
  bool have_vertex = false;
  if (use_fast) {
    program = formulate(inst, false);
    vertex = lp::solve_lp(program, options.milp.simplex);
    if (vertex.status == lp::Status::infeasible) return out;
    if (vertex.status == lp::Status::optimal && complementary(inst, lay, vertex.x)) {
      out.fast_path = true;
      have_vertex = true;
    }
  }
  if (!out.fast_path) {
    program = formulate(inst, true);
    const auto milp = lp::branch_and_bound(program, options.milp);
    out.nodes = milp.nodes;
    if (milp.status == lp::Status::infeasible) return out;
    if (milp.status != lp::Status::optimal) {
      out.status = SolveStatus::failed;
      return out;
    }
    // Re-solve with the charge/discharge pattern fixed to recover an optimal basis.
    for (int t = 0; t < lay.periods; ++t) {
      const double d = std::round(milp.x(lay.delta(t)));
      program.lower(lay.delta(t)) = program.upper(lay.delta(t)) = d;
    }
    vertex = lp::solve_lp(program, options.milp.simplex);
    have_vertex = vertex.status == lp::Status::optimal;
    if (!have_vertex) vertex.x = milp.x;
  }
  Eigen::VectorXd x = vertex.x;

  // Second pass over the optimal face: columns and rows with a nonzero reduced cost stay at
  // their bound, so every point considered keeps the optimal objective; among those the one
  // with the least matched volume is taken.
  bool traded = false;
  for (int i = 0; i < lay.orders; ++i) traded = traded || x(lay.q(i)) > 1e-9;
  if (options.tie_break && traded && have_vertex) {
    lp::LinearProgram<double> face = program;
    const Eigen::Index n = face.variables();
    std::vector<char> basic(static_cast<std::size_t>(n + face.rows()), 0);
    for (const int j : vertex.basis.basic) basic[static_cast<std::size_t>(j)] = 1;
    const double dual_tol = 1e-9;
    for (Eigen::Index j = 0; j < n + face.rows(); ++j) {
      if (basic[static_cast<std::size_t>(j)] || std::abs(vertex.reduced_costs(j)) <= dual_tol) continue;
      const bool up = vertex.basis.at_upper[static_cast<std::size_t>(j)] != 0;
      if (j < n) {
        face.lower(j) = face.upper(j) = up ? program.upper(j) : program.lower(j);
      } else {
        const Eigen::Index i = j - n;
        face.row_lower(i) = face.row_upper(i) = up ? program.row_upper(i) : program.row_lower(i);
      }
    }
    face.sense = lp::Sense::minimize;
    face.objective.setZero();
    face.objective.head(lay.orders).setOnes();
    const auto res = lp::solve_lp(face, options.milp.simplex, &vertex.basis);
    if (res.status == lp::Status::optimal && complementary(inst, lay, res.x)) x = res.x;
  }

  out.plan = evaluate(inst, extract_q(inst, x));
  out.status = SolveStatus::optimal;
  return out;
}

std::string to_json(const IntrinsicInstance& inst) {
  nlohmann::ordered_json j;
  j["format"] = "bess-intrinsic-instance";
  j["version"] = 1;
  j["delta_h"] = inst.delta_h;
  j["initial_soc"] = inst.initial_soc;
  j["terminal_soc"] = inst.terminal_soc;
  j["cycles_left"] = inst.cycles_left;
  j["energy_cap"] = inst.energy_cap;
  j["eta_ch"] = inst.eta_ch;
  j["eta_dis"] = inst.eta_dis;
  j["kappa"] = inst.kappa;
  auto& periods = j["periods"] = nlohmann::ordered_json::array();
  for (const auto& p : inst.periods)
    periods.push_back({{"start", format_timestamp(p.product.start)},
                       {"duration_h", p.product.duration_h},
                       {"prior", p.prior},
                       {"power_lo", p.power_lo},
                       {"power_hi", p.power_hi},
                       {"soc_lo", p.soc_lo},
                       {"soc_hi", p.soc_hi}});
  auto& orders = j["orders"] = nlohmann::ordered_json::array();
  for (const auto& o : inst.orders)
    orders.push_back({{"id", o.id},
                      {"period", o.period},
                      {"side", std::string(market::to_string(o.side))},
                      {"price", o.price},
                      {"quantity", o.quantity}});
  return j.dump(2);
}

IntrinsicInstance instance_from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    if (j.value("format", "") != "bess-intrinsic-instance") throw IngestionError("not an intrinsic instance dump");
    IntrinsicInstance inst;
    inst.delta_h = j.at("delta_h").get<double>();
    inst.initial_soc = j.at("initial_soc").get<double>();
    inst.terminal_soc = j.at("terminal_soc").get<double>();
    inst.cycles_left = j.at("cycles_left").get<double>();
    inst.energy_cap = j.at("energy_cap").get<double>();
    inst.eta_ch = j.at("eta_ch").get<double>();
    inst.eta_dis = j.at("eta_dis").get<double>();
    inst.kappa = j.at("kappa").get<double>();
    for (const auto& p : j.at("periods"))
      inst.periods.push_back(Period{{parse_timestamp(p.at("start").get<std::string>()), p.at("duration_h").get<double>()},
                                    p.at("prior").get<double>(),
                                    p.at("power_lo").get<double>(),
                                    p.at("power_hi").get<double>(),
                                    p.at("soc_lo").get<double>(),
                                    p.at("soc_hi").get<double>()});
    for (const auto& o : j.at("orders"))
      inst.orders.push_back(InstanceOrder{o.at("id").get<market::OrderId>(), o.at("period").get<int>(),
                                          market::parse_side(o.at("side").get<std::string>()),
                                          o.at("price").get<double>(), o.at("quantity").get<double>()});
    inst.validate();
    return inst;
  } catch (const nlohmann::json::exception& e) {
    throw IngestionError(std::string("malformed instance dump: ") + e.what());
  }
}

void dump_instance(const IntrinsicInstance& inst, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << to_json(inst) << '\n';
}

IntrinsicInstance load_instance(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IngestionError("cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return instance_from_json(buf.str());
}

}  // namespace bess::intrinsic
