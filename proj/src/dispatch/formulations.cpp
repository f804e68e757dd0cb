#include <cmath>
#include <stdexcept>
#include <string>

#include "builder.hpp"
#include "lineloss/kernels.hpp"

namespace lineloss {

using detail::build_angle_network;
using detail::build_generation;
using detail::extract_angle_flows;
using detail::extract_generation;
using detail::solve_with_lazy;

namespace {

constexpr double kThermalTolerance = 1e-7;

std::vector<double> branch_resistances(const PowerNetwork& net) {
  std::vector<double> r(net.num_branches(), 0.0);
  for (std::size_t e = 0; e < r.size(); ++e) {
    if (net.branches()[e].in_service) r[e] = net.branches()[e].r;
  }
  return r;
}

std::vector<double> branch_limits(const PowerNetwork& net) {
  std::vector<double> t(net.num_branches(), 0.0);
  for (std::size_t e = 0; e < t.size(); ++e) {
    const Branch& br = net.branches()[e];
    if (br.in_service && br.limited()) t[e] = br.rate;
  }
  return t;
}

void run_extension(DispatchModel& dm, const DispatchOptions& options) {
  if (options.extension) options.extension(dm);
}

double value_or_zero(const lp::SolveResult& res, int var) {
  return var >= 0 ? res.x[var] : 0.0;
}

// Injections seen by the network in the PTDF model: generation minus demand
// minus the share of total losses assigned to each bus.
std::vector<double> ptdf_injections(const DispatchModel& dm,
                                    const PowerNetwork& net,
                                    const lp::SolveResult& res,
                                    const LossFactorData* lf) {
  std::vector<double> pg(net.num_generators(), 0.0);
  for (std::size_t g = 0; g < pg.size(); ++g) pg[g] = value_or_zero(res, dm.pg[g]);
  std::vector<double> p = detail::injections(net, pg);
  if (lf != nullptr) {
    const double loss = value_or_zero(res, dm.total_loss);
    for (std::size_t i = 0; i < p.size(); ++i) p[i] -= loss * lf->dist[i];
  }
  return p;
}

DispatchSolution solve_ptdf(const PowerNetwork& net, const SusceptanceSystem& sys,
                            const LossFactorData* lf, Method method,
                            const DispatchOptions& options) {
  DispatchModel dm = build_generation(net, method, Variant::kPtdf, options);
  detail::build_ptdf_balance(dm, net, lf != nullptr, options);
  if (lf != nullptr) {
    lp::LinearExpr row = {{dm.total_loss, 1.0}};
    for (std::size_t g = 0; g < net.num_generators(); ++g) {
      if (dm.pg[g] < 0) continue;
      const double c = lf->lf[net.generators()[g].bus];
      if (c != 0.0) row.push_back({dm.pg[g], -c});
    }
    double rhs = lf->offset;
    for (std::size_t i = 0; i < net.num_buses(); ++i) {
      rhs -= lf->lf[i] * net.buses()[i].pd;
    }
    dm.model.add_linear_constraint(row, lp::Sense::kEqual, rhs, "loss_linear");
  }
  run_extension(dm, options);

  const std::vector<double> limits = branch_limits(net);
  const std::vector<double> empty;
  std::vector<char> added(net.num_branches(), 0);
  DispatchOptions local = options;
  local.lazy = [&](DispatchModel& m, const lp::SolveResult& res) {
    const std::vector<double> p = ptdf_injections(m, net, res, lf);
    const DcFlows flows = sys.dc_flows(p, true);
    int count = 0;
    for (int e : kernels::omp::screen_flows(flows.flows, limits, kThermalTolerance)) {
      if (added[e]) continue;
      added[e] = 1;
      detail::add_ptdf_thermal_row(m, net, sys, e, lf ? lf->dist : empty, options);
      ++count;
    }
    if (options.lazy) count += options.lazy(m, res);
    return count;
  };

  DispatchSolution sol;
  sol.method = method;
  const lp::SolveResult res = solve_with_lazy(dm, local, nullptr, sol);
  extract_generation(dm, net, res, sol);
  sol.iterations = 1;
  if (!res.optimal()) return sol;

  const std::vector<double> p = ptdf_injections(dm, net, res, lf);
  const DcFlows flows = sys.dc_flows(p, true);
  const std::size_t e_count = net.num_branches();
  sol.angles = flows.angles;
  sol.p_fwd = flows.flows;
  sol.p_bwd.assign(e_count, 0.0);
  sol.loss_est.assign(e_count, 0.0);
  for (std::size_t e = 0; e < e_count; ++e) sol.p_bwd[e] = -sol.p_fwd[e];
  if (lf != nullptr) {
    sol.total_loss = res.x[dm.total_loss];
    if (sol.total_loss <= 1e-9) sol.flags.push_back("loss_floor_active");
    const int active = static_cast<int>(sys.branches().size());
    for (std::size_t e = 0; e < e_count; ++e) {
      if (!net.branches()[e].in_service) continue;
      sol.loss_est[e] = lf->uniform_distribution
                            ? sol.total_loss / active
                            : sol.total_loss * lf->ref_losses[e] / lf->ref_total;
    }
    if (lf->uniform_distribution) sol.flags.push_back("uniform_loss_distribution");
  }
  return sol;
}

DispatchSolution solve_angle_dc(const PowerNetwork& net,
                                const DispatchOptions& options) {
  DispatchModel dm = build_generation(net, Method::kDc, Variant::kAngle, options);
  build_angle_network(dm, net, false, options);
  run_extension(dm, options);
  DispatchSolution sol;
  sol.method = Method::kDc;
  const lp::SolveResult res = solve_with_lazy(dm, options, nullptr, sol);
  extract_generation(dm, net, res, sol);
  extract_angle_flows(dm, net, res, false, sol);
  sol.iterations = 1;
  return sol;
}

// loss_e >= intercept + slope * p_fwd, written over the loss expression.
void add_tangent(DispatchModel& dm, int branch, const Cut& cut,
                 const std::string& name) {
  const int f = dm.p_fwd[branch];
  const int b = dm.p_bwd[branch];
  lp::LinearExpr row = {{f, 1.0 - cut.slope}, {b, 1.0}};
  dm.model.add_linear_constraint(row, lp::Sense::kGreaterEqual, cut.intercept, name);
  ++dm.cut_count;
}

}  // namespace

DispatchSolution solve_vanilla_dc(const PowerNetwork& net,
                                  const DispatchOptions& options) {
  if (options.variant == Variant::kAngle) return solve_angle_dc(net, options);
  const auto sys = factorize(net);
  return solve_ptdf(net, *sys, nullptr, Method::kDc, options);
}

DispatchSolution solve_vanilla_dc(const PowerNetwork& net,
                                  const SusceptanceSystem& sys,
                                  const DispatchOptions& options) {
  if (options.variant == Variant::kAngle) return solve_angle_dc(net, options);
  return solve_ptdf(net, sys, nullptr, Method::kDc, options);
}

LossFactorData compute_loss_factors(const PowerNetwork& net,
                                    const SusceptanceSystem& sys,
                                    const std::vector<double>& p_ref) {
  LossFactorData out;
  const DcFlows ref = sys.dc_flows(p_ref, true);
  const std::vector<double> r = branch_resistances(net);
  out.ref_flows = ref.flows;
  out.ref_total = kernels::omp::branch_losses(r, ref.flows, out.ref_losses);

  std::vector<double> grad(r.size());
  for (std::size_t e = 0; e < r.size(); ++e) grad[e] = 2.0 * r[e] * ref.flows[e];
  out.lf = sys.ptdf_transpose_times(grad);

  out.offset = out.ref_total;
  for (std::size_t i = 0; i < p_ref.size(); ++i) out.offset -= out.lf[i] * p_ref[i];

  const std::size_t n = net.num_buses();
  out.dist.assign(n, 0.0);
  if (out.ref_total > 0.0) {
    for (std::size_t e = 0; e < r.size(); ++e) {
      const Branch& br = net.branches()[e];
      if (!br.in_service) continue;
      out.dist[br.from_bus] += 0.5 * out.ref_losses[e] / out.ref_total;
      out.dist[br.to_bus] += 0.5 * out.ref_losses[e] / out.ref_total;
    }
  } else {
    out.uniform_distribution = true;
    for (double& d : out.dist) d = 1.0 / static_cast<double>(n);
  }
  return out;
}

DispatchSolution solve_lllf(const PowerNetwork& net, const SusceptanceSystem& sys,
                            const LossFactorData& lf,
                            const DispatchOptions& options) {
  return solve_ptdf(net, sys, &lf, Method::kLllf, options);
}

DispatchSolution solve_lllf(const PowerNetwork& net,
                            const DispatchOptions& options) {
  const auto sys = factorize(net);
  DispatchSolution ref = solve_vanilla_dc(net, *sys, options);
  if (!ref.optimal()) {
    ref.method = Method::kLllf;
    ref.message = "reference dispatch failed: " + ref.message;
    return ref;
  }
  const LossFactorData lf = compute_loss_factors(net, *sys, ref.injection);
  DispatchSolution sol = solve_lllf(net, *sys, lf, options);
  sol.solve_seconds += ref.solve_seconds;
  return sol;
}

Cut lloa_cut(double r, double p_ref) {
  return {2.0 * r * p_ref, -r * p_ref * p_ref};
}

double static_oa_error_bound(double r, double t_max, int tangents) {
  if (tangents < 2) throw std::invalid_argument("at least two tangents are needed");
  const double spacing = 2.0 * t_max / (tangents - 1);
  return r * (spacing / 2.0) * (spacing / 2.0);
}

DispatchSolution solve_llqcp(const PowerNetwork& net,
                             const DispatchOptions& options) {
  DispatchModel dm = build_generation(net, Method::kLlqcp, Variant::kAngle, options);
  build_angle_network(dm, net, true, options);
  const bool conic = options.conic_mode == ConicMode::kInteriorPoint;
  if (!conic && options.oa_tangents < 2) {
    throw std::invalid_argument("static outer approximation needs >= 2 tangents");
  }
  for (std::size_t e = 0; e < net.num_branches(); ++e) {
    const Branch& br = net.branches()[e];
    if (!br.in_service) continue;
    const std::string tag = std::to_string(e + 1);
    const int f = dm.p_fwd[e];
    if (conic || br.r == 0.0) {
      dm.model.add_rotated_quadratic(f, {{f, 1.0}, {dm.p_bwd[e], 1.0}}, br.r,
                                     "loss" + tag);
      continue;
    }
    const double span = detail::flow_span(net, static_cast<int>(e));
    const int h_count = options.oa_tangents;
    for (int h = 0; h < h_count; ++h) {
      const double t = -span + 2.0 * span * h / (h_count - 1);
      add_tangent(dm, static_cast<int>(e), lloa_cut(br.r, t),
                  "oa" + tag + "_" + std::to_string(h + 1));
    }
  }
  run_extension(dm, options);
  DispatchSolution sol;
  sol.method = Method::kLlqcp;
  const lp::SolveResult res = solve_with_lazy(dm, options, nullptr, sol);
  extract_generation(dm, net, res, sol);
  extract_angle_flows(dm, net, res, true, sol);
  sol.iterations = 1;
  if (!conic) sol.flags.push_back("static_outer_approximation");
  return sol;
}

LloaResult solve_lloa(const PowerNetwork& net, const DispatchOptions& options) {
  LloaResult out;
  DispatchSolution& sol = out.solution;
  sol.method = Method::kLloa;

  // The seed is solved before the main model is built so that extensions
  // see the main model last.
  const bool use_seed = options.seed_points.empty() && options.warm_start;
  DispatchSolution seed;
  if (use_seed) {
    DispatchOptions seed_options = options;
    seed_options.variant = Variant::kAngle;
    seed = solve_vanilla_dc(net, seed_options);
    sol.solve_seconds += seed.solve_seconds;
    if (!seed.optimal()) {
      sol.status = seed.status;
      sol.message = "lossless seed failed: " + seed.message;
      return out;
    }
  }

  DispatchModel dm = build_generation(net, Method::kLloa, Variant::kAngle, options);
  build_angle_network(dm, net, true, options);
  const std::vector<double> r = branch_resistances(net);
  std::vector<int> active;
  for (std::size_t e = 0; e < net.num_branches(); ++e) {
    if (!net.branches()[e].in_service) continue;
    active.push_back(static_cast<int>(e));
    dm.model.add_linear_constraint({{dm.p_fwd[e], 1.0}, {dm.p_bwd[e], 1.0}},
                                   lp::Sense::kGreaterEqual, 0.0,
                                   "floor" + std::to_string(e + 1));
    ++dm.floor_count;
  }
  run_extension(dm, options);

  const long cap = static_cast<long>(options.max_iterations) * active.size();
  int round = 0;
  auto add_cuts = [&](const std::vector<double>& flows) {
    if (dm.cut_count + static_cast<long>(active.size()) > cap) {
      sol.flags.push_back("cut_pool_cap");
      return false;
    }
    ++round;
    const std::vector<Cut> cuts = kernels::omp::lloa_cuts(r, flows);
    for (int e : active) {
      add_tangent(dm, e, cuts[e],
                  "cut" + std::to_string(e + 1) + "_" + std::to_string(round));
    }
    return true;
  };

  double z_prev = lp::kInf;
  int k = 0;
  if (!options.seed_points.empty()) {
    for (const auto& flows : options.seed_points) {
      if (flows.size() != net.num_branches()) {
        throw std::invalid_argument("seed point length differs from branch count");
      }
      add_cuts(flows);
    }
    k = 1;
  } else if (use_seed) {
    out.trace.push_back({0, seed.objective, lp::kInf, 0, true});
    z_prev = seed.objective;
    add_cuts(seed.p_fwd);
    k = 1;
  }

  lp::SolveResult last;
  for (;; ++k) {
    lp::SolveResult res =
        solve_with_lazy(dm, options, last.optimal() ? &last : nullptr, sol);
    if (!res.optimal()) {
      extract_generation(dm, net, res, sol);
      sol.iterations = k;
      return out;
    }
    const double z = res.objective;
    double delta = lp::kInf;
    if (std::isfinite(z_prev)) {
      delta = z_prev == 0.0 ? (z == 0.0 ? 0.0 : lp::kInf)
                            : std::abs(z - z_prev) / std::abs(z_prev);
    }
    out.trace.push_back({k, z, delta, dm.cut_count, false});
    last = std::move(res);
    if (delta <= options.epsilon) break;
    if (k >= options.max_iterations) {
      sol.flags.push_back("iteration_limit");
      break;
    }
    std::vector<double> flows(net.num_branches(), 0.0);
    for (int e : active) flows[e] = last.x[dm.p_fwd[e]];
    if (!add_cuts(flows)) break;
    z_prev = z;
  }
  extract_generation(dm, net, last, sol);
  extract_angle_flows(dm, net, last, true, sol);
  sol.iterations = k;
  return out;
}

DispatchSolution solve_dispatch(const PowerNetwork& net, Method method,
                                const DispatchOptions& options) {
  switch (method) {
    case Method::kDc:
      return solve_vanilla_dc(net, options);
    case Method::kLllf:
      return solve_lllf(net, options);
    case Method::kLlqcp:
      return solve_llqcp(net, options);
    case Method::kLloa:
      return solve_lloa(net, options).solution;
  }
  throw std::invalid_argument("unknown method");
}

TrueLosses estimate_true_losses(const DispatchSolution& sol,
                                const PowerNetwork& net) {
  TrueLosses out;
  std::vector<double> flows = sol.p_fwd;
  flows.resize(net.num_branches(), 0.0);
  out.total = kernels::omp::branch_losses(branch_resistances(net), flows,
                                          out.per_branch);
  return out;
}

}  // namespace lineloss
