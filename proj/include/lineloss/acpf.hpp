#pragma once

#include <complex>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "lineloss/dispatch.hpp"
#include "lineloss/network.hpp"

namespace lineloss {

using Complex = std::complex<double>;
using ComplexVector = Eigen::VectorXcd;
using AdmittanceMatrix = Eigen::SparseMatrix<Complex>;

/// Bus admittance matrix of the pi branch model (series impedance, line
/// charging, off-nominal tap and phase shift) plus bus shunts.
AdmittanceMatrix build_ybus(const PowerNetwork& net);

/// Unknown ordering of the Newton system: angles of `pvpq`, then magnitudes
/// of `pq`. Equations: P at pvpq, then Q at pq.
struct NewtonIndex {
  std::vector<int> pvpq;
  std::vector<int> pq;
  int size() const { return static_cast<int>(pvpq.size() + pq.size()); }
};

/// Power mismatch S(V) - S_spec restricted to the Newton equations.
Eigen::VectorXd power_flow_residual(const AdmittanceMatrix& ybus,
                                    const ComplexVector& v,
                                    const ComplexVector& s_spec,
                                    const NewtonIndex& index);

/// Analytic Jacobian of power_flow_residual with respect to (angles of
/// pvpq, magnitudes of pq).
Eigen::SparseMatrix<double> power_flow_jacobian(const AdmittanceMatrix& ybus,
                                                const ComplexVector& v,
                                                const NewtonIndex& index);

struct AcOptions {
  int max_newton_iterations = 30;
  double tolerance = 1e-8;  // max-norm of the mismatch, pu
  int max_switch_rounds = 10;
  bool enforce_q_limits = true;
};

struct PowerFlowState {
  std::vector<double> vm;
  std::vector<double> va;
  std::vector<BusKind> kinds;  // after PV-PQ switching
  std::vector<double> pg;      // per generator
  std::vector<double> qg;
  double mismatch = 0.0;
  int iterations = 0;              // Newton steps over all rounds
  int first_solve_iterations = 0;  // Newton steps of the flat-start solve
  int switch_rounds = 0;
  std::vector<int> switched_to_pq;  // buses, in switching order
  bool converged = false;
  std::string message;
};

/// Newton-Raphson power flow from a flat start. `pg` fixes every
/// non-slack generator; the slack bus generators share the balance in
/// proportion to pmax. `v_setpoints` (per bus, optional) overrides the
/// generator voltage setpoints.
PowerFlowState run_power_flow(const PowerNetwork& net,
                              const std::vector<double>& pg,
                              const std::vector<double>& v_setpoints = {},
                              const AcOptions& options = {});

struct AcBranchFlows {
  std::vector<Complex> from;  // complex power entering at the from end
  std::vector<Complex> to;
};
AcBranchFlows ac_branch_flows(const PowerNetwork& net,
                              const std::vector<double>& vm,
                              const std::vector<double>& va);

/// Total series and shunt active losses of the branches.
double ac_branch_losses(const PowerNetwork& net, const PowerFlowState& state);

struct ViolationSection {
  int count = 0;
  double max = 0.0;
};

struct ViolationReport {
  ViolationSection active;
  ViolationSection reactive;
  ViolationSection voltage;
  ViolationSection thermal;
  bool valid = true;  // false when the power flow did not converge
};

/// Limit violations beyond `tolerance`. Thermal limits compare the larger of
/// the two end apparent powers with the rating.
ViolationReport assess_violations(const PowerFlowState& state,
                                  const PowerNetwork& net,
                                  double tolerance = 1e-6);

struct RestorationRow {
  std::string method;
  PowerFlowState state;
  ViolationReport report;
  double slack_pickup = 0.0;  // AC minus dispatched slack-bus generation
  double ac_losses = 0.0;
};

std::vector<RestorationRow> restore_and_compare(
    const PowerNetwork& net, const std::vector<DispatchSolution>& solutions,
    const AcOptions& options = {});

void write_violation_csv(std::ostream& out, const std::vector<RestorationRow>& rows);
void write_violation_table(std::ostream& out, const std::vector<RestorationRow>& rows);

}  // namespace lineloss
