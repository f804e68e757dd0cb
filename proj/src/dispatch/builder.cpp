#include "builder.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace lineloss {

namespace {
constexpr double kTieBreak = 1e-6;
}

CostSegments piecewise_cost(const Generator& gen, int segments) {
  CostSegments out;
  const CostCurve& c = gen.cost;
  const double lo = gen.pmin;
  const double hi = gen.pmax;
  out.base_cost = c.evaluate(lo);
  if (hi <= lo) return out;

  if (c.kind == CostCurve::Kind::kPiecewiseLinear) {
    std::vector<double> breaks = {lo};
    for (const auto& [p, cost] : c.points) {
      if (p > lo && p < hi) breaks.push_back(p);
    }
    breaks.push_back(hi);
    for (std::size_t k = 0; k + 1 < breaks.size(); ++k) {
      const double w = breaks[k + 1] - breaks[k];
      if (w <= 0.0) continue;
      out.widths.push_back(w);
      out.prices.push_back((c.evaluate(breaks[k + 1]) - c.evaluate(breaks[k])) / w);
    }
    return out;
  }

  const std::size_t degree = c.coefficients.empty() ? 0 : c.coefficients.size() - 1;
  const bool quadratic = degree == 2 && c.coefficients[0] != 0.0;
  const int pieces = quadratic ? std::max(1, segments) : 1;
  const double w = (hi - lo) / pieces;
  for (int k = 0; k < pieces; ++k) {
    const double a = lo + k * w;
    const double b = k + 1 == pieces ? hi : a + w;
    out.widths.push_back(b - a);
    out.prices.push_back((c.evaluate(b) - c.evaluate(a)) / (b - a));
  }
  return out;
}

namespace detail {

double flow_span(const PowerNetwork& net, int branch) {
  // No branch can carry more than the total generating capacity.
  double total = 0.0;
  for (const Generator& g : net.generators()) {
    if (g.in_service) total += std::max(g.pmax, 0.0);
  }
  const Branch& br = net.branches()[branch];
  return br.limited() ? std::min(br.rate, total) : total;
}

DispatchModel build_generation(const PowerNetwork& net, Method method,
                               Variant variant, const DispatchOptions& options) {
  DispatchModel dm;
  dm.method = method;
  dm.variant = variant;
  const int count = static_cast<int>(net.num_generators());
  dm.pg.assign(count, -1);
  dm.segments.assign(count, {});
  double offset = 0.0;
  for (int g = 0; g < count; ++g) {
    const Generator& gen = net.generators()[g];
    if (!gen.in_service) continue;
    const std::string tag = std::to_string(g + 1);
    dm.pg[g] = dm.model.add_variable("pg" + tag, gen.pmin, gen.pmax);
    const CostSegments seg = piecewise_cost(gen, options.cost_segments);
    offset += seg.base_cost;
    // Scaling prices by a distinct factor per generator makes otherwise
    // identical units distinguishable so the optimal dispatch is unique.
    const double tie = 1.0 + kTieBreak * (g + 1) / count;
    lp::LinearExpr link = {{dm.pg[g], 1.0}};
    for (std::size_t k = 0; k < seg.widths.size(); ++k) {
      const int s = dm.model.add_variable(
          "seg" + tag + "_" + std::to_string(k + 1), 0.0, seg.widths[k],
          seg.prices[k] * tie);
      dm.segments[g].push_back(s);
      link.push_back({s, -1.0});
    }
    if (!seg.widths.empty()) {
      dm.model.add_linear_constraint(link, lp::Sense::kEqual, gen.pmin,
                                     "cost" + tag);
    }
  }
  dm.model.set_objective_offset(offset);
  return dm;
}

namespace {

int add_penalized(DispatchModel& dm, const std::string& name, double price) {
  const int v = dm.model.add_variable(name, 0.0, lp::kInf, price);
  return v;
}

}  // namespace

void build_angle_network(DispatchModel& dm, const PowerNetwork& net, bool lossy,
                         const DispatchOptions& options) {
  lp::Model& m = dm.model;
  const int n = static_cast<int>(net.num_buses());
  const int e = static_cast<int>(net.num_branches());
  const int slack = net.slack_bus();
  const bool soft_thermal = options.transmission_penalty > 0.0;
  const bool soft_balance = options.balance_penalty > 0.0;

  dm.theta.assign(n, -1);
  for (int i = 0; i < n; ++i) {
    const double bound = i == slack ? 0.0 : lp::kInf;
    dm.theta[i] = m.add_variable("theta" + std::to_string(net.buses()[i].external_id),
                                 -bound, bound);
  }
  dm.p_fwd.assign(e, -1);
  dm.p_bwd.assign(e, -1);
  dm.thermal_slack.assign(e, -1);
  for (int k = 0; k < e; ++k) {
    const Branch& br = net.branches()[k];
    if (!br.in_service) continue;
    const std::string tag = std::to_string(k + 1);
    const double t = br.limited() && !soft_thermal ? br.rate : lp::kInf;
    dm.p_fwd[k] = m.add_variable("pf" + tag, -t, t);
    if (lossy) dm.p_bwd[k] = m.add_variable("pb" + tag, -t, t);
    const double b = br.susceptance();
    m.add_linear_constraint({{dm.p_fwd[k], 1.0},
                             {dm.theta[br.from_bus], -b},
                             {dm.theta[br.to_bus], b}},
                            lp::Sense::kEqual, 0.0, "flow" + tag);
    if (br.limited() && soft_thermal) {
      const int v = add_penalized(dm, "thermal" + tag, options.transmission_penalty);
      dm.thermal_slack[k] = v;
      for (int f : {dm.p_fwd[k], dm.p_bwd[k]}) {
        if (f < 0) continue;
        m.add_linear_constraint({{f, 1.0}, {v, -1.0}}, lp::Sense::kLessEqual,
                                br.rate);
        m.add_linear_constraint({{f, 1.0}, {v, 1.0}}, lp::Sense::kGreaterEqual,
                                -br.rate);
      }
    }
  }

  std::vector<lp::LinearExpr> balance(n);
  for (std::size_t g = 0; g < net.num_generators(); ++g) {
    if (dm.pg[g] >= 0) balance[net.generators()[g].bus].push_back({dm.pg[g], 1.0});
  }
  for (int k = 0; k < e; ++k) {
    if (dm.p_fwd[k] < 0) continue;
    const Branch& br = net.branches()[k];
    balance[br.from_bus].push_back({dm.p_fwd[k], -1.0});
    if (lossy) {
      balance[br.to_bus].push_back({dm.p_bwd[k], -1.0});
    } else {
      balance[br.to_bus].push_back({dm.p_fwd[k], 1.0});
    }
  }
  dm.balance_rows.assign(n, -1);
  for (int i = 0; i < n; ++i) {
    const std::string tag = std::to_string(net.buses()[i].external_id);
    if (soft_balance) {
      const int up = add_penalized(dm, "short" + tag, options.balance_penalty);
      const int down = add_penalized(dm, "surplus" + tag, options.balance_penalty);
      balance[i].push_back({up, 1.0});
      balance[i].push_back({down, -1.0});
      dm.balance_slack_up.push_back(up);
      dm.balance_slack_down.push_back(down);
    }
    dm.balance_rows[i] = m.add_linear_constraint(
        balance[i], lp::Sense::kEqual, net.buses()[i].pd, "balance" + tag);
  }
}

void build_ptdf_balance(DispatchModel& dm, const PowerNetwork& net,
                        bool with_total_loss, const DispatchOptions& options) {
  lp::Model& m = dm.model;
  lp::LinearExpr balance;
  for (std::size_t g = 0; g < net.num_generators(); ++g) {
    if (dm.pg[g] >= 0) balance.push_back({dm.pg[g], 1.0});
  }
  if (with_total_loss) {
    dm.total_loss = m.add_variable("ltot", 0.0, lp::kInf);
    balance.push_back({dm.total_loss, -1.0});
  }
  if (options.balance_penalty > 0.0) {
    const int up = add_penalized(dm, "short", options.balance_penalty);
    const int down = add_penalized(dm, "surplus", options.balance_penalty);
    balance.push_back({up, 1.0});
    balance.push_back({down, -1.0});
    dm.balance_slack_up.push_back(up);
    dm.balance_slack_down.push_back(down);
  }
  dm.balance_rows = {m.add_linear_constraint(balance, lp::Sense::kEqual,
                                             net.total_load(), "balance")};
  dm.thermal_slack.assign(net.num_branches(), -1);
}

void add_ptdf_thermal_row(DispatchModel& dm, const PowerNetwork& net,
                          const SusceptanceSystem& sys, int branch,
                          const std::vector<double>& dist,
                          const DispatchOptions& options) {
  const Branch& br = net.branches()[branch];
  const std::vector<double>& phi = sys.ptdf_row(branch);
  lp::LinearExpr expr;
  for (std::size_t g = 0; g < net.num_generators(); ++g) {
    const int v = dm.pg[g];
    const double coef = phi[net.generators()[g].bus];
    if (v >= 0 && coef != 0.0) expr.push_back({v, coef});
  }
  double load_flow = 0.0;
  for (std::size_t i = 0; i < net.num_buses(); ++i) {
    load_flow += phi[i] * net.buses()[i].pd;
  }
  if (dm.total_loss >= 0 && !dist.empty()) {
    double phi_d = 0.0;
    for (std::size_t i = 0; i < dist.size(); ++i) phi_d += phi[i] * dist[i];
    if (phi_d != 0.0) expr.push_back({dm.total_loss, -phi_d});
  }
  const std::string tag = std::to_string(branch + 1);
  if (options.transmission_penalty > 0.0) {
    const int v = add_penalized(dm, "thermal" + tag, options.transmission_penalty);
    dm.thermal_slack[branch] = v;
    lp::LinearExpr up = expr;
    up.push_back({v, -1.0});
    lp::LinearExpr down = expr;
    down.push_back({v, 1.0});
    dm.model.add_linear_constraint(up, lp::Sense::kLessEqual, br.rate + load_flow,
                                   "thermal_hi" + tag);
    dm.model.add_linear_constraint(down, lp::Sense::kGreaterEqual,
                                   -br.rate + load_flow, "thermal_lo" + tag);
  } else {
    dm.model.add_range_constraint(expr, -br.rate + load_flow, br.rate + load_flow,
                                  "thermal" + tag);
  }
  dm.thermal_rows.push_back(branch);
}

lp::SolveResult solve_with_lazy(DispatchModel& dm, const DispatchOptions& options,
                                const lp::SolveResult* warm,
                                DispatchSolution& sol) {
  lp::SolveResult res = dm.model.solve(options.solver, warm);
  sol.solve_seconds += res.stats.seconds;
  if (!options.lazy) return res;
  for (int round = 0; res.optimal(); ++round) {
    if (round >= options.max_lazy_rounds) {
      sol.flags.push_back("lazy_round_limit");
      break;
    }
    if (options.lazy(dm, res) == 0) break;
    ++sol.lazy_rounds;
    lp::SolveResult next = dm.model.solve(options.solver, &res);
    sol.solve_seconds += next.stats.seconds;
    res = std::move(next);
  }
  return res;
}

std::vector<double> injections(const PowerNetwork& net,
                               const std::vector<double>& pg) {
  std::vector<double> p(net.num_buses(), 0.0);
  for (std::size_t i = 0; i < net.num_buses(); ++i) p[i] = -net.buses()[i].pd;
  for (std::size_t g = 0; g < net.num_generators(); ++g) {
    if (net.generators()[g].in_service) p[net.generators()[g].bus] += pg[g];
  }
  return p;
}

void extract_generation(const DispatchModel& dm, const PowerNetwork& net,
                        const lp::SolveResult& res, DispatchSolution& sol) {
  sol.status = res.status;
  if (!res.message.empty()) sol.message = res.message;
  if (!res.optimal()) {
    sol.objective = lp::kInf;
    return;
  }
  sol.objective = res.objective;
  sol.lp_values = res.x;
  sol.pg.assign(net.num_generators(), 0.0);
  for (std::size_t g = 0; g < net.num_generators(); ++g) {
    if (dm.pg[g] >= 0) sol.pg[g] = res.x[dm.pg[g]];
  }
  sol.injection = injections(net, sol.pg);
}

void extract_angle_flows(const DispatchModel& dm, const PowerNetwork& net,
                         const lp::SolveResult& res, bool lossy,
                         DispatchSolution& sol) {
  if (!res.optimal()) return;
  const std::size_t e = net.num_branches();
  sol.angles.assign(net.num_buses(), 0.0);
  for (std::size_t i = 0; i < net.num_buses(); ++i) sol.angles[i] = res.x[dm.theta[i]];
  sol.p_fwd.assign(e, 0.0);
  sol.p_bwd.assign(e, 0.0);
  sol.loss_est.assign(e, 0.0);
  sol.total_loss = 0.0;
  for (std::size_t k = 0; k < e; ++k) {
    if (dm.p_fwd[k] < 0) continue;
    sol.p_fwd[k] = res.x[dm.p_fwd[k]];
    if (lossy) {
      sol.p_bwd[k] = res.x[dm.p_bwd[k]];
      sol.loss_est[k] = sol.p_fwd[k] + sol.p_bwd[k];
    } else {
      sol.p_bwd[k] = -sol.p_fwd[k];
    }
    sol.total_loss += sol.loss_est[k];
  }
}

}  // namespace detail
}  // namespace lineloss
