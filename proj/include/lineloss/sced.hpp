#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "lineloss/dispatch.hpp"

namespace lineloss {

/// Single-interval security-constrained dispatch settings. Penalties are in
/// $ per MWh of violation and are converted to per-unit prices with the case
/// base; a penalty <= 0 makes the corresponding constraint hard.
struct ScedConfig {
  double reserve_requirement = 0.0;  // pu, system-wide
  double reserve_penalty = 1100.0;
  double balance_penalty = 10000.0;
  double transmission_penalty = 2000.0;
  /// Generator indices (0-based) whose loss must be covered by the others'
  /// reserves. Unset: the in-service unit with the largest pmax.
  std::optional<std::vector<int>> contingencies;
  int max_lazy_rounds = 50;
  bool ramp_limits = false;  // bound pg to pg0 +/- ramp_rate when set

  /// Checks requirement >= 0, transmission <= balance among positive
  /// penalties, and contingency indices. Throws std::invalid_argument.
  void validate(const PowerNetwork& net) const;
};

ScedConfig sced_config_from_json(const nlohmann::json& j);
nlohmann::json sced_config_to_json(const ScedConfig& cfg);

struct ContingencyRecord {
  int generator = -1;
  double shortfall = 0.0;   // check_contingency on the final dispatch
  bool constraint_added = false;
  double slack = 0.0;       // soft shortfall variable, when added
};

struct ScedSolution {
  DispatchSolution dispatch;
  std::vector<double> reserves;       // per generator
  double reserve_shortfall = 0.0;     // requirement slack
  double balance_violation = 0.0;     // sum of balance slacks, pu
  std::vector<double> thermal_violation;  // per branch, pu
  std::vector<ContingencyRecord> contingencies;
  double energy_cost = 0.0;   // generation part of the objective
  double penalty_cost = 0.0;  // sum of penalty * slack
  int contingency_rounds = 0;
  std::vector<LloaIteration> lloa_trace;

  bool optimal() const { return dispatch.optimal(); }
};

ScedSolution solve_sced(const PowerNetwork& net, Method method,
                        const ScedConfig& cfg,
                        const DispatchOptions& base = {});

/// max(0, pg_gen - sum of the other generators' reserves). Throws
/// std::out_of_range for an unknown generator.
double check_contingency(const ScedSolution& sol, int gen);

nlohmann::json sced_solution_to_json(const ScedSolution& sol,
                                     const PowerNetwork& net);

}  // namespace lineloss
