#pragma once

#include <vector>

#include "lineloss/dispatch.hpp"

namespace lineloss::detail {

/// Generator dispatch and cost segments shared by every formulation.
DispatchModel build_generation(const PowerNetwork& net, Method method,
                               Variant variant, const DispatchOptions& options);

/// Angle formulation: per-bus balance, flow definitions, thermal limits.
/// With `lossy`, each branch gets a to-end flow variable and the balance
/// uses p_fwd at the from bus and p_bwd at the to bus.
void build_angle_network(DispatchModel& dm, const PowerNetwork& net,
                         bool lossy, const DispatchOptions& options);

/// PTDF formulation: system balance (with an l_tot variable for LLLF);
/// thermal rows are added lazily by add_ptdf_thermal_row.
void build_ptdf_balance(DispatchModel& dm, const PowerNetwork& net,
                        bool with_total_loss, const DispatchOptions& options);

void add_ptdf_thermal_row(DispatchModel& dm, const PowerNetwork& net,
                          const SusceptanceSystem& sys, int branch,
                          const std::vector<double>& dist,
                          const DispatchOptions& options);

/// Largest flow magnitude the branch can carry: its rating capped by the
/// total generating capacity.
double flow_span(const PowerNetwork& net, int branch);

/// Solves, then re-solves while the lazy callback keeps adding rows.
lp::SolveResult solve_with_lazy(DispatchModel& dm,
                                const DispatchOptions& options,
                                const lp::SolveResult* warm,
                                DispatchSolution& sol);

/// Per-bus injection from generator values.
std::vector<double> injections(const PowerNetwork& net,
                               const std::vector<double>& pg);

/// Fills status, pg, injections and objective from an LP result.
void extract_generation(const DispatchModel& dm, const PowerNetwork& net,
                        const lp::SolveResult& res, DispatchSolution& sol);

/// Fills angles and flows for the angle formulation.
void extract_angle_flows(const DispatchModel& dm, const PowerNetwork& net,
                         const lp::SolveResult& res, bool lossy,
                         DispatchSolution& sol);

}  // namespace lineloss::detail
