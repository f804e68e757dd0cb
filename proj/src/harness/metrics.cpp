#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <random>
#include <stdexcept>

#include "lineloss/harness.hpp"

namespace lineloss {

double objective_gap(double method_obj, double reference_obj) {
  if (reference_obj == 0.0) {
    throw std::invalid_argument("objective gap needs a nonzero reference objective");
  }
  return 100.0 * (method_obj - reference_obj) / std::abs(reference_obj);
}

double dispatch_mae(const std::vector<double>& pg,
                    const std::vector<double>& pg_ref) {
  if (pg.size() != pg_ref.size()) {
    throw std::invalid_argument("dispatch vectors differ in length");
  }
  if (pg.empty()) throw std::invalid_argument("empty dispatch vectors");
  double sum = 0.0;
  for (std::size_t g = 0; g < pg.size(); ++g) sum += std::abs(pg[g] - pg_ref[g]);
  return sum / static_cast<double>(pg.size());
}

std::vector<double> load_noise(std::size_t count, double alpha, double sigma,
                               std::uint64_t seed) {
  if (!(alpha > 0.0)) throw std::invalid_argument("load scaling must be positive");
  if (!(sigma >= 0.0)) throw std::invalid_argument("noise deviation must be nonnegative");
  if (sigma == 0.0) return std::vector<double>(count, alpha);
  const double ratio = sigma * sigma / (alpha * alpha);
  const double mu = std::log(alpha / std::sqrt(1.0 + ratio));
  const double s = std::sqrt(std::log1p(ratio));
  std::mt19937_64 rng(seed);
  std::lognormal_distribution<double> dist(mu, s);
  std::vector<double> out(count);
  for (double& v : out) v = dist(rng);
  return out;
}

PowerNetwork perturb_loads(const PowerNetwork& net, double alpha, double sigma,
                           std::uint64_t seed) {
  return net.with_scaled_loads(load_noise(net.num_buses(), alpha, sigma, seed));
}

double flow_discrepancy(const PowerNetwork& net, const SusceptanceSystem& sys,
                        const DispatchSolution& sol) {
  const std::size_t n = net.num_buses();
  std::vector<double> base(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) base[i] = -net.buses()[i].pd;
  for (std::size_t g = 0; g < net.num_generators(); ++g) {
    const Generator& gen = net.generators()[g];
    if (gen.in_service) base[gen.bus] += sol.pg[g];
  }

  std::vector<double> flows(net.num_branches(), 0.0);
  std::vector<double> inj(n);
  for (int it = 0; it < 100; ++it) {
    inj = base;
    for (std::size_t e = 0; e < net.num_branches(); ++e) {
      const Branch& br = net.branches()[e];
      if (br.in_service) inj[br.to_bus] -= br.r * flows[e] * flows[e];
    }
    const DcFlows next = sys.dc_flows(inj, true);
    double change = 0.0;
    for (std::size_t e = 0; e < flows.size(); ++e) {
      change = std::max(change, std::abs(next.flows[e] - flows[e]));
    }
    flows = next.flows;
    if (change < 1e-12) break;
  }

  double worst = 0.0;
  for (std::size_t e = 0; e < flows.size(); ++e) {
    if (!net.branches()[e].in_service) continue;
    worst = std::max(worst, std::abs(sol.p_fwd[e] - flows[e]));
  }
  return worst;
}

MetricRow compute_metrics(const PowerNetwork& net, const SusceptanceSystem& sys,
                          const DispatchSolution& sol, double reference_objective,
                          const std::vector<double>& reference_pg) {
  MetricRow row;
  row.case_name = net.name();
  row.method = to_string(sol.method);
  row.objective = sol.objective;
  row.gap_percent = objective_gap(sol.objective, reference_objective);
  row.mae = dispatch_mae(sol.pg, reference_pg);
  row.loss_estimate = sol.total_loss;
  row.loss_true = estimate_true_losses(sol, net).total;
  row.flow_discrepancy = flow_discrepancy(net, sys, sol);
  row.iterations = sol.iterations;
  row.solve_seconds = sol.solve_seconds;
  return row;
}

DiffProfile generator_diff_profile(const PowerNetwork& net,
                                   const std::vector<double>& pg,
                                   const std::vector<double>& pg_ref,
                                   double threshold, int bins) {
  if (pg.size() != net.num_generators() || pg_ref.size() != net.num_generators()) {
    throw std::invalid_argument("dispatch vectors do not match the generator set");
  }
  DiffProfile out;
  out.threshold = threshold;
  for (std::size_t g = 0; g < pg.size(); ++g) {
    const Generator& gen = net.generators()[g];
    if (!gen.in_service) continue;
    out.profile.push_back({static_cast<int>(g), gen.pmax, pg[g] - pg_ref[g]});
  }
  std::stable_sort(out.profile.begin(), out.profile.end(),
                   [](const DiffEntry& a, const DiffEntry& b) { return a.pmax < b.pmax; });
  for (const DiffEntry& d : out.profile) {
    if (std::abs(d.diff) > threshold) out.filtered.push_back(d);
  }
  if (!out.profile.empty()) {
    const double near = static_cast<double>(out.profile.size() - out.filtered.size());
    out.identical_share = 100.0 * near / static_cast<double>(out.profile.size());
  }

  if (out.filtered.empty() || bins <= 0) return out;
  double lo = out.filtered.front().diff, hi = lo;
  for (const DiffEntry& d : out.filtered) {
    lo = std::min(lo, d.diff);
    hi = std::max(hi, d.diff);
  }
  if (hi == lo) {
    lo -= 0.5 * threshold;
    hi += 0.5 * threshold;
  }
  const double width = (hi - lo) / bins;
  for (int b = 0; b <= bins; ++b) out.bin_edges.push_back(lo + b * width);
  out.bin_edges.back() = hi;
  out.bin_counts.assign(bins, 0);
  for (const DiffEntry& d : out.filtered) {
    const int b = std::min(bins - 1, static_cast<int>((d.diff - lo) / width));
    ++out.bin_counts[b];
  }
  return out;
}

void write_diff_profile_csv(std::ostream& out, const DiffProfile& profile) {
  out << "rank,generator,pmax,diff,filtered\n";
  for (std::size_t k = 0; k < profile.profile.size(); ++k) {
    const DiffEntry& d = profile.profile[k];
    out << k + 1 << ',' << d.generator + 1 << ',' << d.pmax << ',' << d.diff << ','
        << (std::abs(d.diff) > profile.threshold ? 1 : 0) << '\n';
  }
}

}  // namespace lineloss
