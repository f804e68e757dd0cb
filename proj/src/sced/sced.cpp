#include "lineloss/sced.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>
#include <string>

#include "lineloss/kernels.hpp"

namespace lineloss {

namespace {

constexpr double kShortfallTolerance = 1e-7;

double per_unit_price(double per_mwh, double base_mva) {
  return per_mwh > 0.0 ? per_mwh * base_mva : 0.0;
}

int largest_unit(const PowerNetwork& net) {
  int best = -1;
  for (std::size_t g = 0; g < net.num_generators(); ++g) {
    const Generator& gen = net.generators()[g];
    if (!gen.in_service) continue;
    if (best < 0 || gen.pmax > net.generators()[best].pmax) best = static_cast<int>(g);
  }
  return best;
}

// Indices into whichever model the dispatch method builds last; the
// extension resets them for every new model.
struct ScedState {
  std::vector<int> reserve;
  int requirement_slack = -1;
  std::vector<int> contingency_slack;
  std::vector<char> added;
  std::vector<int> balance_up, balance_down, thermal;
  std::vector<std::pair<int, double>> cost_terms;
  double offset = 0.0;
  int rounds = 0;
};

double value(const std::vector<double>& x, int var) {
  return var >= 0 ? x[var] : 0.0;
}

}  // namespace

void ScedConfig::validate(const PowerNetwork& net) const {
  if (reserve_requirement < 0.0) {
    throw std::invalid_argument("reserve requirement must be nonnegative");
  }
  if (transmission_penalty > 0.0 && balance_penalty > 0.0 &&
      transmission_penalty > balance_penalty) {
    throw std::invalid_argument("transmission penalty exceeds balance penalty");
  }
  if (contingencies) {
    for (int g : *contingencies) {
      if (g < 0 || g >= static_cast<int>(net.num_generators())) {
        throw std::invalid_argument("contingency generator " + std::to_string(g) +
                                    " does not exist");
      }
    }
  }
  if (max_lazy_rounds < 0) throw std::invalid_argument("max_lazy_rounds < 0");
}

ScedConfig sced_config_from_json(const nlohmann::json& j) {
  static const std::set<std::string> known = {
      "reserve_requirement", "reserve_penalty", "balance_penalty",
      "transmission_penalty", "contingencies", "max_lazy_rounds", "ramp_limits"};
  for (const auto& item : j.items()) {
    if (!known.count(item.key())) {
      throw std::invalid_argument("unknown SCED setting '" + item.key() + "'");
    }
  }
  ScedConfig cfg;
  cfg.reserve_requirement = j.value("reserve_requirement", cfg.reserve_requirement);
  cfg.reserve_penalty = j.value("reserve_penalty", cfg.reserve_penalty);
  cfg.balance_penalty = j.value("balance_penalty", cfg.balance_penalty);
  cfg.transmission_penalty = j.value("transmission_penalty", cfg.transmission_penalty);
  if (j.contains("contingencies") && !j["contingencies"].is_null()) {
    cfg.contingencies = j["contingencies"].get<std::vector<int>>();
  }
  cfg.max_lazy_rounds = j.value("max_lazy_rounds", cfg.max_lazy_rounds);
  cfg.ramp_limits = j.value("ramp_limits", cfg.ramp_limits);
  return cfg;
}

nlohmann::json sced_config_to_json(const ScedConfig& cfg) {
  nlohmann::json j = {{"reserve_requirement", cfg.reserve_requirement},
                      {"reserve_penalty", cfg.reserve_penalty},
                      {"balance_penalty", cfg.balance_penalty},
                      {"transmission_penalty", cfg.transmission_penalty},
                      {"max_lazy_rounds", cfg.max_lazy_rounds},
                      {"ramp_limits", cfg.ramp_limits}};
  j["contingencies"] = cfg.contingencies ? nlohmann::json(*cfg.contingencies)
                                         : nlohmann::json(nullptr);
  return j;
}

ScedSolution solve_sced(const PowerNetwork& net, Method method,
                        const ScedConfig& cfg, const DispatchOptions& base) {
  cfg.validate(net);
  const double mva = net.base_mva();
  const double reserve_price = per_unit_price(cfg.reserve_penalty, mva);
  const double balance_price = per_unit_price(cfg.balance_penalty, mva);
  const double thermal_price = per_unit_price(cfg.transmission_penalty, mva);

  std::vector<int> contingencies;
  if (cfg.contingencies) {
    contingencies = *cfg.contingencies;
  } else if (const int g = largest_unit(net); g >= 0) {
    contingencies = {g};
  }

  ScedState state;
  DispatchOptions options = base;
  options.balance_penalty = balance_price;
  options.transmission_penalty = thermal_price;
  options.max_lazy_rounds = cfg.max_lazy_rounds;

  options.extension = [&](DispatchModel& dm) {
    if (base.extension) base.extension(dm);
    state = ScedState{};
    const std::size_t count = net.num_generators();
    state.reserve.assign(count, -1);
    state.contingency_slack.assign(contingencies.size(), -1);
    state.added.assign(contingencies.size(), 0);
    lp::LinearExpr requirement;
    for (std::size_t g = 0; g < count; ++g) {
      const int pg = dm.pg[g];
      if (pg < 0) continue;
      const Generator& gen = net.generators()[g];
      const std::string tag = std::to_string(g + 1);
      if (cfg.ramp_limits && gen.ramp_rate > 0.0) {
        dm.model.set_variable_bounds(pg, std::max(gen.pmin, gen.pg - gen.ramp_rate),
                                     std::min(gen.pmax, gen.pg + gen.ramp_rate));
      }
      const double room = gen.reserve_capable ? gen.pmax - gen.pmin : 0.0;
      const int r = dm.model.add_variable("reserve" + tag, 0.0, room);
      state.reserve[g] = r;
      dm.model.add_linear_constraint({{pg, 1.0}, {r, 1.0}}, lp::Sense::kLessEqual,
                                     gen.pmax, "headroom" + tag);
      requirement.push_back({r, 1.0});
      for (int s : dm.segments[g]) state.cost_terms.push_back({s, dm.model.cost(s)});
    }
    if (cfg.reserve_requirement > 0.0) {
      if (reserve_price > 0.0) {
        state.requirement_slack =
            dm.model.add_variable("reserve_short", 0.0, lp::kInf, reserve_price);
        requirement.push_back({state.requirement_slack, 1.0});
      }
      dm.model.add_linear_constraint(requirement, lp::Sense::kGreaterEqual,
                                     cfg.reserve_requirement, "reserve_req");
    }
    state.offset = dm.model.objective_offset();
  };

  options.lazy = [&](DispatchModel& dm, const lp::SolveResult& res) {
    state.balance_up = dm.balance_slack_up;
    state.balance_down = dm.balance_slack_down;
    state.thermal = dm.thermal_slack;
    int added = base.lazy ? base.lazy(dm, res) : 0;
    std::vector<double> pg(net.num_generators(), 0.0), reserve(net.num_generators(), 0.0);
    for (std::size_t g = 0; g < pg.size(); ++g) {
      pg[g] = value(res.x, dm.pg[g]);
      reserve[g] = value(res.x, state.reserve[g]);
    }
    const std::vector<double> shortfall =
        kernels::omp::contingency_shortfalls(pg, reserve, contingencies);
    for (std::size_t k = 0; k < contingencies.size(); ++k) {
      if (state.added[k] || shortfall[k] <= kShortfallTolerance) continue;
      const int c = contingencies[k];
      if (dm.pg[c] < 0) continue;
      lp::LinearExpr row = {{dm.pg[c], -1.0}};
      for (std::size_t g = 0; g < pg.size(); ++g) {
        if (static_cast<int>(g) != c && state.reserve[g] >= 0) {
          row.push_back({state.reserve[g], 1.0});
        }
      }
      const std::string tag = std::to_string(c + 1);
      if (reserve_price > 0.0) {
        state.contingency_slack[k] =
            dm.model.add_variable("cover_short" + tag, 0.0, lp::kInf, reserve_price);
        row.push_back({state.contingency_slack[k], 1.0});
      }
      dm.model.add_linear_constraint(row, lp::Sense::kGreaterEqual, 0.0, "cover" + tag);
      state.added[k] = 1;
      ++added;
    }
    if (added > 0) ++state.rounds;
    return added;
  };

  ScedSolution out;
  if (method == Method::kLloa) {
    LloaResult oa = solve_lloa(net, options);
    out.dispatch = std::move(oa.solution);
    out.lloa_trace = std::move(oa.trace);
  } else {
    out.dispatch = solve_dispatch(net, method, options);
  }
  out.contingency_rounds = state.rounds;
  if (!out.optimal()) return out;

  const std::vector<double>& x = out.dispatch.lp_values;
  out.reserves.assign(net.num_generators(), 0.0);
  for (std::size_t g = 0; g < out.reserves.size(); ++g) {
    out.reserves[g] = value(x, state.reserve[g]);
  }
  out.reserve_shortfall = value(x, state.requirement_slack);
  out.penalty_cost = reserve_price * out.reserve_shortfall;
  for (std::size_t k = 0; k < state.balance_up.size(); ++k) {
    const double v = value(x, state.balance_up[k]) + value(x, state.balance_down[k]);
    out.balance_violation += v;
    out.penalty_cost += balance_price * v;
  }
  out.thermal_violation.assign(net.num_branches(), 0.0);
  for (std::size_t e = 0; e < state.thermal.size(); ++e) {
    out.thermal_violation[e] = value(x, state.thermal[e]);
    out.penalty_cost += thermal_price * out.thermal_violation[e];
  }
  for (std::size_t k = 0; k < contingencies.size(); ++k) {
    ContingencyRecord rec;
    rec.generator = contingencies[k];
    rec.constraint_added = state.added[k];
    rec.slack = value(x, state.contingency_slack[k]);
    out.penalty_cost += reserve_price * rec.slack;
    out.contingencies.push_back(rec);
  }
  for (ContingencyRecord& rec : out.contingencies) {
    rec.shortfall = check_contingency(out, rec.generator);
  }
  out.energy_cost = state.offset;
  for (const auto& [var, cost] : state.cost_terms) out.energy_cost += cost * x[var];
  return out;
}

double check_contingency(const ScedSolution& sol, int gen) {
  if (gen < 0 || gen >= static_cast<int>(sol.reserves.size())) {
    throw std::out_of_range("unknown generator " + std::to_string(gen));
  }
  const std::vector<double> shortfall = kernels::serial::contingency_shortfalls(
      sol.dispatch.pg, sol.reserves, {gen});
  return shortfall.front();
}

nlohmann::json sced_solution_to_json(const ScedSolution& sol,
                                     const PowerNetwork& net) {
  nlohmann::json j = solution_to_json(sol.dispatch, net);
  if (!sol.optimal()) return j;
  for (std::size_t g = 0; g < sol.reserves.size(); ++g) {
    j["generators"][g]["reserve"] = sol.reserves[g];
  }
  j["energy_cost"] = sol.energy_cost;
  j["penalty_cost"] = sol.penalty_cost;
  j["violations"] = {{"reserve_shortfall", sol.reserve_shortfall},
                     {"balance", sol.balance_violation},
                     {"thermal", sol.thermal_violation}};
  nlohmann::json records = nlohmann::json::array();
  for (const ContingencyRecord& rec : sol.contingencies) {
    records.push_back({{"generator", rec.generator + 1},
                       {"shortfall", rec.shortfall},
                       {"constraint_added", rec.constraint_added},
                       {"slack", rec.slack}});
  }
  j["contingencies"] = std::move(records);
  j["contingency_rounds"] = sol.contingency_rounds;
  return j;
}

}  // namespace lineloss
