#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>

#include "lineloss/acpf.hpp"

namespace lineloss {

namespace {

void record(ViolationSection& section, double excess, double tolerance) {
  if (excess <= tolerance) return;
  ++section.count;
  section.max = std::max(section.max, excess);
}

double excess_outside(double value, double lo, double hi) {
  return std::max(value - hi, lo - value);
}

}  // namespace

ViolationReport assess_violations(const PowerFlowState& state, const PowerNetwork& net,
                                  double tolerance) {
  ViolationReport rep;
  if (!state.converged) {
    rep.valid = false;
    return rep;
  }
  for (std::size_t g = 0; g < net.num_generators(); ++g) {
    const Generator& gen = net.generators()[g];
    if (!gen.in_service) continue;
    record(rep.active, excess_outside(state.pg[g], gen.pmin, gen.pmax), tolerance);
    record(rep.reactive, excess_outside(state.qg[g], gen.qmin, gen.qmax), tolerance);
  }
  for (std::size_t i = 0; i < net.num_buses(); ++i) {
    const Bus& b = net.buses()[i];
    record(rep.voltage, excess_outside(state.vm[i], b.vmin, b.vmax), tolerance);
  }
  const AcBranchFlows flows = ac_branch_flows(net, state.vm, state.va);
  for (std::size_t k = 0; k < net.num_branches(); ++k) {
    const Branch& br = net.branches()[k];
    if (!br.in_service || !br.limited()) continue;
    const double s = std::max(std::abs(flows.from[k]), std::abs(flows.to[k]));
    record(rep.thermal, s - br.rate, tolerance);
  }
  return rep;
}

std::vector<RestorationRow> restore_and_compare(
    const PowerNetwork& net, const std::vector<DispatchSolution>& solutions,
    const AcOptions& options) {
  const int count = static_cast<int>(solutions.size());
  std::vector<RestorationRow> rows(count);
  const int slack = net.slack_bus();
#pragma omp parallel for schedule(dynamic)
  for (int k = 0; k < count; ++k) {
    const DispatchSolution& sol = solutions[k];
    RestorationRow& row = rows[k];
    row.method = to_string(sol.method);
    if (!sol.optimal()) {
      row.state.message = "dispatch not optimal";
      row.report.valid = false;
      continue;
    }
    row.state = run_power_flow(net, sol.pg, {}, options);
    row.report = assess_violations(row.state, net);
    if (!row.state.converged) continue;
    for (std::size_t g = 0; g < net.num_generators(); ++g) {
      if (net.generators()[g].in_service && net.generators()[g].bus == slack) {
        row.slack_pickup += row.state.pg[g] - sol.pg[g];
      }
    }
    row.ac_losses = ac_branch_losses(net, row.state);
  }
  return rows;
}

void write_violation_csv(std::ostream& out, const std::vector<RestorationRow>& rows) {
  out << "method,converged,active_count,active_max,reactive_count,reactive_max,"
         "voltage_count,voltage_max,thermal_count,thermal_max,slack_pickup,ac_losses\n";
  for (const RestorationRow& r : rows) {
    const ViolationReport& v = r.report;
    out << r.method << ',' << (v.valid ? 1 : 0);
    for (const ViolationSection* s : {&v.active, &v.reactive, &v.voltage, &v.thermal}) {
      out << ',' << s->count << ',' << s->max;
    }
    out << ',' << r.slack_pickup << ',' << r.ac_losses << '\n';
  }
}

void write_violation_table(std::ostream& out, const std::vector<RestorationRow>& rows) {
  const auto flags = out.flags();
  out << std::left << std::setw(8) << "Method" << std::right;
  for (const char* title : {"Active", "Reactive", "Voltage", "Thermal"}) {
    out << " | " << std::setw(17) << title;
  }
  out << '\n' << std::left << std::setw(8) << "" << std::right;
  for (int k = 0; k < 4; ++k) out << " | " << std::setw(6) << "#viol" << std::setw(11) << "Max";
  out << '\n';
  for (const RestorationRow& r : rows) {
    out << std::left << std::setw(8) << r.method << std::right;
    if (!r.report.valid) {
      out << " | did not converge\n";
      continue;
    }
    const ViolationReport& v = r.report;
    for (const ViolationSection* s : {&v.active, &v.reactive, &v.voltage, &v.thermal}) {
      out << " | " << std::setw(6) << s->count << std::setw(11) << std::fixed
          << std::setprecision(4) << s->max;
    }
    out << '\n';
  }
  out.flags(flags);
}

}  // namespace lineloss
