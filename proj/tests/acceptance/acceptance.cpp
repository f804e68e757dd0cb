// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "lineloss/acpf.hpp"
#include "lineloss/case_io.hpp"
#include "lineloss/dispatch.hpp"
#include "lineloss/harness.hpp"
#include "lineloss/sced.hpp"

using namespace lineloss;

namespace {

const char* kCases[] = {"case14", "case30", "case118"};

std::filesystem::path case_path(const std::string& name) {
  return std::filesystem::path(LINELOSS_DATA_DIR) / (name + ".m");
}

PowerNetwork load(const std::string& name) { return load_case(case_path(name)); }

struct Outcome {
  bool pass = true;
  std::string detail;
};

class Detail {
 public:
  template <typename T>
  Detail& operator<<(const T& v) {
    text_ << v;
    return *this;
  }
  std::string str() const { return text_.str(); }

 private:
  std::ostringstream text_;
};

int failures = 0;

void criterion(const char* id, const std::function<Outcome()>& check) {
  const auto start = std::chrono::steady_clock::now();
  Outcome out;
  try {
    out = check();
  } catch (const std::exception& e) {
    out = {false, std::string("exception: ") + e.what()};
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (!out.pass) ++failures;
  std::printf("[%s] %-28s %s (%.2f s)\n", out.pass ? "PASS" : "FAIL", id, out.detail.c_str(),
              secs);
  std::fflush(stdout);
}

double quadratic_losses(const SusceptanceSystem& sys, const PowerNetwork& net,
                        const std::vector<double>& p) {
  const DcFlows f = sys.dc_flows(p, true);
  double total = 0.0;
  for (std::size_t e = 0; e < net.num_branches(); ++e) {
    if (net.branches()[e].in_service) total += net.branches()[e].r * f.flows[e] * f.flows[e];
  }
  return total;
}

PowerNetwork without_resistance(const PowerNetwork& net) {
  std::vector<Branch> branches = net.branches();
  for (Branch& br : branches) br.r = 0.0;
  return net.with_branches(branches);
}

bool positive_marginal_costs(const PowerNetwork& net) {
  for (const Generator& g : net.generators()) {
    if (!g.in_service) continue;
    const CostSegments seg = piecewise_cost(g, 10);
    for (double p : seg.prices) {
      if (!(p > 0.0)) return false;
    }
  }
  return true;
}

Outcome oa_sandwich() {
  Detail d;
  bool pass = true;
  double seconds = 0.0;
  for (const char* name : kCases) {
    const PowerNetwork net = load(name);
    DispatchOptions opt;
    opt.epsilon = 1e-6;
    const auto start = std::chrono::steady_clock::now();
    const LloaResult oa = solve_lloa(net, opt);
    const DispatchSolution qcp = solve_llqcp(net);
    seconds += std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!oa.solution.optimal() || !qcp.optimal()) return {false, std::string(name) + " not optimal"};
    double worst_drop = 0.0;
    for (std::size_t k = 0; k + 1 < oa.trace.size(); ++k) {
      worst_drop = std::max(worst_drop, oa.trace[k].objective - oa.trace[k + 1].objective);
    }
    const double rel = std::abs(oa.solution.objective - qcp.objective) / std::abs(qcp.objective);
    pass = pass && worst_drop <= 1e-9 && rel <= 1e-4;
    d << name << ": max drop " << worst_drop << ", |Z-Zqcp|/Zqcp " << rel << "; ";
  }
  pass = pass && seconds < 10.0;
  d << "solve time " << seconds << " s (tol drop 1e-9, rel 1e-4, < 10 s)";
  return {pass, d.str()};
}

Outcome iteration_count() {
  Detail d;
  int worst = 0;
  for (const char* name : kCases) {
    DispatchOptions opt;
    opt.epsilon = 1e-3;
    opt.warm_start = true;
    const LloaResult oa = solve_lloa(load(name), opt);
    if (!oa.solution.optimal()) return {false, std::string(name) + " not optimal"};
    worst = std::max(worst, oa.solution.iterations);
    d << name << " " << oa.solution.iterations << "; ";
  }
  d << "max " << worst << " (pass <= 3, hard fail > 5)";
  return {worst <= 3, d.str()};
}

Outcome cut_validity() {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> rr(1e-4, 0.5), pp(-5.0, 5.0);
  double worst = 0.0;
  bool strict = true;
  for (int i = 0; i < 10000; ++i) {
    const double r = rr(rng), p_ref = pp(rng), p = pp(rng);
    const Cut c = lloa_cut(r, p_ref);
    const double under = c.intercept + c.slope * p;
    const double gap = r * p * p - under;
    // Oracle: r p^2 - tangent = r (p - p_ref)^2.
    worst = std::max(worst, std::abs(gap - r * (p - p_ref) * (p - p_ref)));
    worst = std::max(worst, std::max(0.0, -gap));
    worst = std::max(worst, std::abs(r * p_ref * p_ref - (c.intercept + c.slope * p_ref)));
    if (p != p_ref && !(gap > 0.0)) strict = false;
  }
  Detail d;
  d << "10000 triples, max deviation " << worst << ", strict away from p_ref: "
    << (strict ? "yes" : "no") << " (tol 1e-12)";
  return {worst <= 1e-12 && strict, d.str()};
}

Outcome lllf_tangency() {
  Detail d;
  bool pass = true;
  for (const char* name : kCases) {
    const PowerNetwork net = load(name);
    const auto sys = factorize(net);
    const DispatchSolution ref = solve_vanilla_dc(net, *sys, {});
    const LossFactorData lf = compute_loss_factors(net, *sys, ref.injection);
    if (!(lf.ref_total > 0.0)) continue;
    const double linear =
        lf.offset + std::inner_product(lf.lf.begin(), lf.lf.end(), ref.injection.begin(), 0.0);
    const double t = std::abs(linear - quadratic_losses(*sys, net, ref.injection));
    const double s = std::abs(std::accumulate(lf.dist.begin(), lf.dist.end(), 0.0) - 1.0);
    pass = pass && t <= 1e-9 && s <= 1e-9;
    d << name << ": tangency " << t << ", |1'D-1| " << s << "; ";
  }
  d << "(tol 1e-9)";
  return {pass, d.str()};
}

Outcome lllf_finite_differences() {
  const PowerNetwork net = load("case14");
  const auto sys = factorize(net);
  const DispatchSolution ref = solve_vanilla_dc(net, *sys, {});
  const LossFactorData lf = compute_loss_factors(net, *sys, ref.injection);
  const double h = 1e-5;
  double worst = 0.0;
  for (std::size_t i = 0; i < net.num_buses(); ++i) {
    std::vector<double> up = ref.injection, down = ref.injection;
    up[i] += h;
    down[i] -= h;
    const double fd = (quadratic_losses(*sys, net, up) - quadratic_losses(*sys, net, down)) / (2 * h);
    worst = std::max(worst, std::abs(fd - lf.lf[i]) / std::max(1.0, std::abs(fd)));
  }
  Detail d;
  d << "case14 max relative error " << worst << " (tol 1e-5)";
  return {worst <= 1e-5, d.str()};
}

Outcome ptdf_angle() {
  Detail d;
  bool pass = true;
  std::mt19937_64 rng(99);
  std::normal_distribution<double> normal;
  for (const char* name : kCases) {
    const PowerNetwork net = load(name);
    DispatchOptions ptdf;
    ptdf.variant = Variant::kPtdf;
    const DispatchSolution a = solve_vanilla_dc(net);
    const DispatchSolution b = solve_vanilla_dc(net, ptdf);
    if (!a.optimal() || !b.optimal()) return {false, std::string(name) + " not optimal"};
    double pg_diff = 0.0;
    for (std::size_t g = 0; g < a.pg.size(); ++g) pg_diff = std::max(pg_diff, std::abs(a.pg[g] - b.pg[g]));

    const auto sys = factorize(net);
    const int n = sys->num_buses();
    double flow_diff = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
      std::vector<double> p(n);
      double sum = 0.0;
      for (double& v : p) sum += (v = normal(rng));
      for (double& v : p) v -= sum / n;
      const DcFlows angle = sys->dc_flows(p);
      for (int k : sys->branches()) {
        const auto& row = sys->ptdf_row(k);
        double f = 0.0;
        for (int i = 0; i < n; ++i) f += row[i] * p[i];
        flow_diff = std::max(flow_diff, std::abs(f - angle.flows[k]));
      }
    }
    pass = pass && pg_diff <= 1e-6 && flow_diff <= 1e-8;
    d << name << ": pg " << pg_diff << ", flows " << flow_diff << "; ";
  }
  d << "(tol pg 1e-6, flows 1e-8 over 100 injections)";
  return {pass, d.str()};
}

Outcome loss_consistency() {
  Detail d;
  bool pass = true;
  int checked = 0;
  for (const char* name : kCases) {
    const PowerNetwork net = load(name);
    if (!positive_marginal_costs(net)) {
      d << name << ": skipped (nonpositive marginal cost); ";
      continue;
    }
    const DispatchSolution sol = solve_lloa(net).solution;
    if (!sol.optimal()) return {false, std::string(name) + " not optimal"};
    double modeled = 0.0;
    for (std::size_t e = 0; e < sol.p_fwd.size(); ++e) modeled += sol.p_fwd[e] + sol.p_bwd[e];
    const double truth = estimate_true_losses(sol, net).total;
    const double rel = std::abs(modeled - truth) / truth;
    pass = pass && rel <= 0.01;
    ++checked;
    d << name << " " << 100.0 * rel << "%; ";
  }
  d << "(tol 1%)";
  return {pass && checked > 0, d.str()};
}

Outcome ac_power_flow() {
  Detail d;
  bool pass = true;
  int worst_iter = 0;
  double worst_mismatch = 0.0, worst_jac = 0.0;
  bool bitwise = true;
  for (const char* name : kCases) {
    const PowerNetwork net = load(name);
    std::vector<DispatchSolution> sols;
    for (Method m : {Method::kDc, Method::kLllf, Method::kLlqcp, Method::kLloa}) {
      sols.push_back(solve_dispatch(net, m));
    }
    const auto rows = restore_and_compare(net, sols);
    for (std::size_t k = 0; k < rows.size(); ++k) {
      const PowerFlowState& st = rows[k].state;
      if (!st.converged) {
        pass = false;
        d << name << "/" << rows[k].method << " did not converge; ";
        continue;
      }
      worst_iter = std::max(worst_iter, st.first_solve_iterations);
      worst_mismatch = std::max(worst_mismatch, st.mismatch);
      for (std::size_t g = 0; g < net.num_generators(); ++g) {
        if (net.generators()[g].bus != net.slack_bus() && st.pg[g] != sols[k].pg[g]) bitwise = false;
      }
    }
  }

  // Jacobian against central differences of the mismatch on case14.
  const PowerNetwork net = load("case14");
  const AdmittanceMatrix ybus = build_ybus(net);
  NewtonIndex index;
  for (std::size_t i = 0; i < net.num_buses(); ++i) {
    const BusKind k = net.buses()[i].kind;
    if (k != BusKind::kSlack) index.pvpq.push_back(static_cast<int>(i));
    if (k == BusKind::kPQ) index.pq.push_back(static_cast<int>(i));
  }
  const int n = static_cast<int>(net.num_buses());
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> mag(0.9, 1.1), ang(-0.3, 0.3);
  const ComplexVector s_spec = ComplexVector::Zero(n);
  const double h = 1e-6;
  for (int trial = 0; trial < 3; ++trial) {
    std::vector<double> vm(n), va(n);
    for (int i = 0; i < n; ++i) {
      vm[i] = mag(rng);
      va[i] = ang(rng);
    }
    auto eval = [&](const std::vector<double>& m, const std::vector<double>& a) {
      ComplexVector v(n);
      for (int i = 0; i < n; ++i) v[i] = std::polar(m[i], a[i]);
      return power_flow_residual(ybus, v, s_spec, index);
    };
    ComplexVector v(n);
    for (int i = 0; i < n; ++i) v[i] = std::polar(vm[i], va[i]);
    const Eigen::MatrixXd jac = Eigen::MatrixXd(power_flow_jacobian(ybus, v, index));
    const int npvpq = static_cast<int>(index.pvpq.size());
    for (int c = 0; c < index.size(); ++c) {
      std::vector<double> m_up = vm, m_dn = vm, a_up = va, a_dn = va;
      if (c < npvpq) {
        a_up[index.pvpq[c]] += h;
        a_dn[index.pvpq[c]] -= h;
      } else {
        m_up[index.pq[c - npvpq]] += h;
        m_dn[index.pq[c - npvpq]] -= h;
      }
      const Eigen::VectorXd fd = (eval(m_up, a_up) - eval(m_dn, a_dn)) / (2 * h);
      for (int r = 0; r < index.size(); ++r) {
        worst_jac = std::max(worst_jac, std::abs(fd[r] - jac(r, c)) / std::max(1.0, std::abs(fd[r])));
      }
    }
  }
  pass = pass && worst_iter <= 10 && worst_mismatch <= 1e-8 && worst_jac <= 1e-5 && bitwise;
  d << "max flat-start Newton iterations " << worst_iter << " (<= 10), max mismatch "
    << worst_mismatch << " (<= 1e-8), Jacobian rel error " << worst_jac
    << " (<= 1e-5), non-slack pg bitwise " << (bitwise ? "yes" : "no");
  return {pass, d.str()};
}

Outcome restoration_pattern() {
  const PowerNetwork net = load("case118");
  std::vector<DispatchSolution> sols;
  for (Method m : {Method::kDc, Method::kLllf, Method::kLlqcp, Method::kLloa}) {
    sols.push_back(solve_dispatch(net, m));
  }
  const auto rows = restore_and_compare(net, sols);
  for (const RestorationRow& r : rows) {
    if (!r.report.valid) return {false, r.method + " power flow did not converge"};
  }
  const double dc_violation = rows[0].report.active.max;
  bool exceeds = true;
  Detail d;
  d << "case118 active violation dc " << dc_violation;
  for (std::size_t k = 1; k < rows.size(); ++k) {
    exceeds = exceeds && dc_violation > rows[k].report.active.max;
    d << ", " << rows[k].method << " " << rows[k].report.active.max;
  }
  const double losses = rows[0].ac_losses;
  const bool near = std::abs(dc_violation - losses) <= 0.2 * losses;
  d << "; AC losses " << losses << ", dc slack pickup " << rows[0].slack_pickup
    << " (violation must exceed others and be within 20% of losses)";
  return {exceeds && near, d.str()};
}

Outcome degenerate_reductions() {
  Detail d;
  double worst = 0.0, worst_abs = 0.0;
  for (const char* name : kCases) {
    const PowerNetwork net = without_resistance(load(name));
    const double z = solve_vanilla_dc(net).objective;
    for (Method m : {Method::kLllf, Method::kLlqcp, Method::kLloa}) {
      const DispatchSolution sol = solve_dispatch(net, m);
      if (!sol.optimal()) return {false, std::string(name) + " lossless not optimal"};
      worst = std::max(worst, std::abs(sol.objective - z) / std::abs(z));
      worst_abs = std::max(worst_abs, std::abs(sol.objective - z));
    }
  }
  double sced_worst = 0.0;
  ScedConfig plain;
  plain.reserve_penalty = 0.0;
  plain.balance_penalty = 0.0;
  plain.transmission_penalty = 0.0;
  plain.contingencies = std::vector<int>{};
  for (const char* name : kCases) {
    const PowerNetwork net = load(name);
    for (Method m : {Method::kDc, Method::kLllf, Method::kLlqcp, Method::kLloa}) {
      const DispatchSolution opf = solve_dispatch(net, m);
      const ScedSolution sced = solve_sced(net, m, plain);
      if (!sced.optimal()) return {false, std::string(name) + " SCED not optimal"};
      sced_worst = std::max(sced_worst, std::abs(sced.dispatch.objective - opf.objective) /
                                            std::abs(opf.objective));
    }
  }
  d << "r = 0: max relative objective difference " << worst << " (absolute " << worst_abs
    << "); SCED vs OPF relative " << sced_worst << " (tol 1e-7 relative)";
  return {worst <= 1e-7 && sced_worst <= 1e-7, d.str()};
}

Outcome sweep_machinery() {
  Detail d;
  bool exact = true;
  for (const char* name : kCases) {
    const PowerNetwork net = load(name);
    for (double a : SweepConfig{}.alphas) {
      const PowerNetwork s = perturb_loads(net, a, 0.0, 1);
      for (std::size_t i = 0; i < net.num_buses(); ++i) {
        if (s.buses()[i].pd != net.buses()[i].pd * a || s.buses()[i].qd != net.buses()[i].qd * a) {
          exact = false;
        }
      }
    }
  }

  SweepConfig cfg;
  cfg.cases = {case_path("case14"), case_path("case30")};
  cfg.alphas = {0.9, 1.0, 1.1};
  cfg.seeds = {3, 4};
  const SweepResult first = run_sweep(cfg);
  cfg.parallel = false;
  const SweepResult second = run_sweep(cfg);
  std::ostringstream a, b;
  write_metrics_csv(a, first.rows);
  write_series_csv(a, first.series);
  write_metrics_csv(b, second.rows);
  write_series_csv(b, second.series);
  const bool deterministic = a.str() == b.str() && !first.rows.empty();
  const bool accounted = first.rows.size() + first.exclusions.size() == first.total_instances;

  const auto draws = load_noise(100000, 1.0, 0.05, 17);
  const double mean = std::accumulate(draws.begin(), draws.end(), 0.0) / draws.size();
  double var = 0.0;
  for (double x : draws) var += (x - mean) * (x - mean);
  const double sd = std::sqrt(var / (draws.size() - 1));
  const bool mc = std::abs(mean - 1.0) <= 0.001 && std::abs(sd - 0.05) <= 0.002;

  d << "sigma=0 exact scaling " << (exact ? "yes" : "no") << ", byte-identical rerun "
    << (deterministic ? "yes" : "no") << ", rows+exclusions=" << first.rows.size() << "+"
    << first.exclusions.size() << "/" << first.total_instances << ", MC mean " << mean
    << " (1 +- 0.001) std " << sd << " (0.05 +- 0.002)";
  return {exact && deterministic && accounted && mc, d.str()};
}

Outcome declared_not_reproducible() {
  // The substitute hook: metrics against an externally supplied reference.
  const PowerNetwork net = load("case14");
  const auto sys = factorize(net);
  const DispatchSolution sol = solve_lloa(net).solution;
  const DispatchSolution ref = solution_from_json(solution_to_json(sol, net), net);
  const MetricRow row = compute_metrics(net, *sys, sol, ref.objective, ref.pg);
  Detail d;
  d << "declared: large-case gap/MAE tables and wall-clock timings need AC-OPF "
       "reference solves and cases not bundled here; external-reference hook: gap "
    << row.gap_percent << ", MAE " << row.mae;
  return {std::abs(row.gap_percent) < 1e-9 && row.mae < 1e-9, d.str()};
}

}  // namespace

int main() {
  criterion("oa-sandwich", oa_sandwich);
  criterion("lloa-iteration-count", iteration_count);
  criterion("cut-validity", cut_validity);
  criterion("lllf-tangency", lllf_tangency);
  criterion("lllf-finite-differences", lllf_finite_differences);
  criterion("ptdf-angle-equivalence", ptdf_angle);
  criterion("loss-consistency", loss_consistency);
  criterion("ac-power-flow", ac_power_flow);
  criterion("restoration-pattern", restoration_pattern);
  criterion("degenerate-reductions", degenerate_reductions);
  criterion("sweep-machinery", sweep_machinery);
  criterion("declared-not-reproducible", declared_not_reproducible);
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
