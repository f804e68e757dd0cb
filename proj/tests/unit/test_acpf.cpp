#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "fixtures.hpp"
#include "lineloss/acpf.hpp"

using namespace lineloss;

namespace {

std::vector<double> case_dispatch(const PowerNetwork& net) {
  std::vector<double> pg;
  for (const Generator& g : net.generators()) pg.push_back(g.pg);
  return pg;
}

NewtonIndex index_of(const PowerNetwork& net) {
  NewtonIndex index;
  for (std::size_t i = 0; i < net.num_buses(); ++i) {
    const BusKind k = net.buses()[i].kind;
    if (k != BusKind::kSlack) index.pvpq.push_back(static_cast<int>(i));
    if (k == BusKind::kPQ) index.pq.push_back(static_cast<int>(i));
  }
  return index;
}

}  // namespace

TEST_CASE("unloaded network stays at its setpoints") {
  const PowerNetwork net = fixtures::two_bus(0.01, 0.1, 0.0, 0.0);
  const PowerFlowState st = run_power_flow(net, {0.0});
  REQUIRE(st.converged);
  CHECK(st.iterations <= 2);
  CHECK(st.vm[0] == doctest::Approx(1.0));
  CHECK(st.vm[1] == doctest::Approx(1.0));
  CHECK(st.va[1] == doctest::Approx(0.0));
}

TEST_CASE("two-bus power flow matches a Gauss-Seidel oracle") {
  const double r = 0.01, x = 0.1;
  const PowerNetwork net = fixtures::two_bus(r, x, 0.0, 1.0);
  const PowerFlowState st = run_power_flow(net, {0.0});
  REQUIRE(st.converged);

  // V2 = V1 - conj(S_load / V2) / y, iterated to a fixed point.
  const Complex y = 1.0 / Complex(r, x);
  Complex v2(1.0, 0.0);
  for (int k = 0; k < 2000; ++k) v2 = 1.0 - std::conj(Complex(1.0, 0.0) / v2) / y;
  CHECK(std::abs(st.vm[1] - std::abs(v2)) < 1e-7);
  CHECK(std::abs(st.va[1] - std::arg(v2)) < 1e-7);
  CHECK(st.vm[1] < 1.0);
  const double current = std::abs(y * (1.0 - v2));
  CHECK(std::abs(st.pg[0] - (1.0 + r * current * current)) < 1e-7);
  CHECK(st.mismatch <= 1e-8);
}

TEST_CASE("PV bus at its reactive limit switches to PQ") {
  PowerNetwork net = fixtures::two_bus(0.01, 0.1, 0.0, 0.5);
  std::vector<Bus> buses = net.buses();
  buses[1].kind = BusKind::kPV;
  buses[1].qd = 0.5;
  std::vector<Generator> gens = net.generators();
  Generator pv = fixtures::linear_gen(1, 1.0, 20.0);
  pv.qmax = 0.0;
  pv.qmin = -1.0;
  pv.vg = 1.0;
  gens.push_back(pv);
  net = PowerNetwork("pv", 100.0, buses, net.branches(), gens);

  const PowerFlowState st = run_power_flow(net, {0.0, 0.2});
  REQUIRE(st.converged);
  CHECK(st.kinds[1] == BusKind::kPQ);
  CHECK(st.switched_to_pq == std::vector<int>{1});
  CHECK(st.qg[1] == 0.0);
  CHECK(st.vm[1] < 1.0);
  CHECK(st.pg[1] == 0.2);

  AcOptions loose;
  loose.enforce_q_limits = false;
  const PowerFlowState held = run_power_flow(net, {0.0, 0.2}, {}, loose);
  REQUIRE(held.converged);
  CHECK(held.vm[1] == doctest::Approx(1.0));
  CHECK(held.qg[1] > 0.0);
}

TEST_CASE("analytic Jacobian matches central differences") {
  const PowerNetwork net = fixtures::load("case14");
  const AdmittanceMatrix ybus = build_ybus(net);
  const NewtonIndex index = index_of(net);
  const int n = static_cast<int>(net.num_buses());
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> mag(0.9, 1.1), ang(-0.3, 0.3);
  ComplexVector s_spec = ComplexVector::Zero(n);
  const double h = 1e-6;
  for (int trial = 0; trial < 5; ++trial) {
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
        CHECK(std::abs(fd[r] - jac(r, c)) <= 1e-5 * std::max(1.0, std::abs(fd[r])));
      }
    }
  }
}

TEST_CASE("bundled cases converge from a flat start") {
  for (const char* name : {"case14", "case30", "case118"}) {
    CAPTURE(name);
    const PowerNetwork net = fixtures::load(name);
    const std::vector<double> pg = case_dispatch(net);
    const PowerFlowState st = run_power_flow(net, pg);
    REQUIRE(st.converged);
    CHECK(st.first_solve_iterations <= 10);
    CHECK(st.mismatch <= 1e-8);
    CHECK(st.va[net.slack_bus()] == 0.0);
    for (std::size_t g = 0; g < pg.size(); ++g) {
      if (net.generators()[g].bus != net.slack_bus()) CHECK(st.pg[g] == pg[g]);
    }
    // Generation balances load plus branch and shunt losses.
    double gen = 0.0, load = 0.0, shunt = 0.0;
    for (double p : st.pg) gen += p;
    for (std::size_t i = 0; i < net.num_buses(); ++i) {
      load += net.buses()[i].pd;
      shunt += net.buses()[i].gs * st.vm[i] * st.vm[i];
    }
    CHECK(gen - load - shunt == doctest::Approx(ac_branch_losses(net, st)).epsilon(1e-8));
  }
}

TEST_CASE("violation report counts and magnitudes") {
  const PowerNetwork net = fixtures::two_bus(0.01, 0.1, 0.0, 1.0);
  PowerFlowState st;
  st.converged = true;
  st.vm = {1.0, 1.0};
  st.va = {0.0, 0.0};
  st.pg = {1.0};
  st.qg = {0.0};
  ViolationReport rep = assess_violations(st, net);
  CHECK(rep.valid);
  CHECK(rep.active.count + rep.reactive.count + rep.voltage.count + rep.thermal.count == 0);
  CHECK(rep.active.max == 0.0);

  st.vm = {1.0, 0.88};
  rep = assess_violations(st, net);
  CHECK(rep.voltage.count == 1);
  CHECK(rep.voltage.max == doctest::Approx(0.02));

  st.pg = {2.0 + 19.21};
  rep = assess_violations(st, net);
  CHECK(rep.active.count == 1);
  CHECK(rep.active.max == doctest::Approx(19.21));

  st.converged = false;
  CHECK_FALSE(assess_violations(st, net).valid);
}

TEST_CASE("thermal violations use the larger end apparent power") {
  const PowerNetwork net = fixtures::two_bus(0.01, 0.1, 0.9, 1.0);
  const PowerFlowState st = run_power_flow(net, {0.0});
  REQUIRE(st.converged);
  const AcBranchFlows f = ac_branch_flows(net, st.vm, st.va);
  const double s = std::max(std::abs(f.from[0]), std::abs(f.to[0]));
  const ViolationReport rep = assess_violations(st, net);
  CHECK(rep.thermal.count == 1);
  CHECK(rep.thermal.max == doctest::Approx(s - 0.9));
}

TEST_CASE("restoration compares methods") {
  const PowerNetwork net = fixtures::load("case14");
  std::vector<DispatchSolution> sols;
  for (Method m : {Method::kDc, Method::kLllf, Method::kLlqcp, Method::kLloa}) {
    sols.push_back(solve_dispatch(net, m));
  }
  const auto rows = restore_and_compare(net, sols);
  REQUIRE(rows.size() == 4);
  for (const auto& row : rows) CHECK(row.report.valid);
  // The lossless dispatch leaves every loss to the slack unit.
  CHECK(rows[0].slack_pickup == doctest::Approx(rows[0].ac_losses).epsilon(1e-9));
  for (int k = 1; k < 4; ++k) CHECK(rows[k].slack_pickup < rows[0].slack_pickup);

  CHECK(restore_and_compare(net, {}).empty());
  CHECK(restore_and_compare(net, {sols[2]}).size() == 1);

  std::ostringstream csv, text;
  write_violation_csv(csv, rows);
  write_violation_table(text, rows);
  CHECK(csv.str().find("lloa,1,") != std::string::npos);
  CHECK(text.str().find("#viol") != std::string::npos);
}
