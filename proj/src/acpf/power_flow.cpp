#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/SparseLU>

#include "lineloss/acpf.hpp"

namespace lineloss {

namespace {

constexpr Complex kJ(0.0, 1.0);
constexpr double kDivergence = 1e10;
constexpr double kLimitTolerance = 1e-6;

struct BranchAdmittance {
  Complex ff, ft, tf, tt;
};

BranchAdmittance branch_admittance(const Branch& br) {
  const Complex ys = 1.0 / Complex(br.r, br.x);
  const double tau = br.tap == 0.0 ? 1.0 : br.tap;
  const Complex t = std::polar(tau, br.shift);
  const Complex ytt = ys + kJ * (br.charging / 2.0);
  return {ytt / (tau * tau), -ys / std::conj(t), -ys / t, ytt};
}

ComplexVector to_complex(const std::vector<double>& vm, const std::vector<double>& va) {
  ComplexVector v(vm.size());
  for (std::size_t i = 0; i < vm.size(); ++i) v[i] = std::polar(vm[i], va[i]);
  return v;
}

ComplexVector bus_power(const AdmittanceMatrix& ybus, const ComplexVector& v) {
  const ComplexVector current = ybus * v;
  return v.cwiseProduct(current.conjugate());
}

// Splits a bus total among its generators: q_g = lo_g + (total - sum lo) *
// span_g / sum span, or evenly when every span is zero.
void split_by_span(const std::vector<int>& gens, double total,
                   const std::vector<double>& lo, const std::vector<double>& hi,
                   std::vector<double>& out) {
  double lo_sum = 0.0, span_sum = 0.0;
  for (int g : gens) {
    lo_sum += lo[g];
    span_sum += hi[g] - lo[g];
  }
  for (int g : gens) {
    out[g] = span_sum > 0.0 ? lo[g] + (total - lo_sum) * (hi[g] - lo[g]) / span_sum
                            : total / static_cast<double>(gens.size());
  }
}

struct NewtonOutcome {
  bool converged = false;
  int iterations = 0;
  double mismatch = 0.0;
};

NewtonOutcome newton(const AdmittanceMatrix& ybus, const ComplexVector& s_spec,
                     const NewtonIndex& index, std::vector<double>& vm,
                     std::vector<double>& va, const AcOptions& options) {
  NewtonOutcome out;
  const int npvpq = static_cast<int>(index.pvpq.size());
  for (int it = 0;; ++it) {
    const ComplexVector v = to_complex(vm, va);
    const Eigen::VectorXd f = power_flow_residual(ybus, v, s_spec, index);
    out.mismatch = f.size() ? f.cwiseAbs().maxCoeff() : 0.0;
    out.iterations = it;
    if (!std::isfinite(out.mismatch) || out.mismatch > kDivergence) return out;
    if (out.mismatch <= options.tolerance) {
      out.converged = true;
      return out;
    }
    if (it >= options.max_newton_iterations) return out;
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(power_flow_jacobian(ybus, v, index));
    if (lu.info() != Eigen::Success) return out;
    const Eigen::VectorXd dx = lu.solve(f);
    for (int k = 0; k < npvpq; ++k) va[index.pvpq[k]] -= dx[k];
    for (std::size_t k = 0; k < index.pq.size(); ++k) vm[index.pq[k]] -= dx[npvpq + k];
  }
}

}  // namespace

AdmittanceMatrix build_ybus(const PowerNetwork& net) {
  const int n = static_cast<int>(net.num_buses());
  std::vector<Eigen::Triplet<Complex>> triplets;
  for (const Branch& br : net.branches()) {
    if (!br.in_service) continue;
    const BranchAdmittance y = branch_admittance(br);
    triplets.emplace_back(br.from_bus, br.from_bus, y.ff);
    triplets.emplace_back(br.from_bus, br.to_bus, y.ft);
    triplets.emplace_back(br.to_bus, br.from_bus, y.tf);
    triplets.emplace_back(br.to_bus, br.to_bus, y.tt);
  }
  for (int i = 0; i < n; ++i) {
    const Bus& b = net.buses()[i];
    if (b.gs != 0.0 || b.bs != 0.0) triplets.emplace_back(i, i, Complex(b.gs, b.bs));
  }
  AdmittanceMatrix y(n, n);
  y.setFromTriplets(triplets.begin(), triplets.end());
  return y;
}

Eigen::VectorXd power_flow_residual(const AdmittanceMatrix& ybus,
                                    const ComplexVector& v,
                                    const ComplexVector& s_spec,
                                    const NewtonIndex& index) {
  const ComplexVector mis = bus_power(ybus, v) - s_spec;
  const int npvpq = static_cast<int>(index.pvpq.size());
  Eigen::VectorXd f(index.size());
  for (int k = 0; k < npvpq; ++k) f[k] = mis[index.pvpq[k]].real();
  for (std::size_t k = 0; k < index.pq.size(); ++k) f[npvpq + k] = mis[index.pq[k]].imag();
  return f;
}

Eigen::SparseMatrix<double> power_flow_jacobian(const AdmittanceMatrix& ybus,
                                                const ComplexVector& v,
                                                const NewtonIndex& index) {
  const int n = static_cast<int>(v.size());
  const int npvpq = static_cast<int>(index.pvpq.size());
  std::vector<int> angle_pos(n, -1), mag_pos(n, -1);
  for (int k = 0; k < npvpq; ++k) angle_pos[index.pvpq[k]] = k;
  for (std::size_t k = 0; k < index.pq.size(); ++k) {
    mag_pos[index.pq[k]] = npvpq + static_cast<int>(k);
  }
  const ComplexVector current = ybus * v;
  ComplexVector vn(n);
  for (int i = 0; i < n; ++i) vn[i] = v[i] / std::abs(v[i]);

  std::vector<Eigen::Triplet<double>> triplets;
  // dS_i/dVa_k and dS_i/dVm_k for one (i, k) pair.
  auto emit = [&](int i, int k, Complex d_va, Complex d_vm) {
    const int p_row = angle_pos[i], q_row = mag_pos[i];
    const int a_col = angle_pos[k], m_col = mag_pos[k];
    if (p_row >= 0) {
      if (a_col >= 0) triplets.emplace_back(p_row, a_col, d_va.real());
      if (m_col >= 0) triplets.emplace_back(p_row, m_col, d_vm.real());
    }
    if (q_row >= 0) {
      if (a_col >= 0) triplets.emplace_back(q_row, a_col, d_va.imag());
      if (m_col >= 0) triplets.emplace_back(q_row, m_col, d_vm.imag());
    }
  };
  for (int k = 0; k < ybus.outerSize(); ++k) {
    for (AdmittanceMatrix::InnerIterator it(ybus, k); it; ++it) {
      const int i = static_cast<int>(it.row());
      const Complex y = it.value();
      emit(i, k, -kJ * v[i] * std::conj(y * v[k]), v[i] * std::conj(y * vn[k]));
    }
  }
  for (int i = 0; i < n; ++i) {
    emit(i, i, kJ * v[i] * std::conj(current[i]), std::conj(current[i]) * vn[i]);
  }
  Eigen::SparseMatrix<double> jac(index.size(), index.size());
  jac.setFromTriplets(triplets.begin(), triplets.end());
  return jac;
}

PowerFlowState run_power_flow(const PowerNetwork& net, const std::vector<double>& pg,
                              const std::vector<double>& v_setpoints,
                              const AcOptions& options) {
  const int n = static_cast<int>(net.num_buses());
  const int gen_count = static_cast<int>(net.num_generators());
  if (static_cast<int>(pg.size()) != gen_count) {
    throw std::invalid_argument("dispatch length differs from generator count");
  }
  if (!v_setpoints.empty() && static_cast<int>(v_setpoints.size()) != n) {
    throw std::invalid_argument("voltage setpoint length differs from bus count");
  }
  const int slack = net.slack_bus();
  std::vector<std::vector<int>> active(n);
  std::vector<double> qmin(gen_count, 0.0), qmax(gen_count, 0.0);
  std::vector<double> zero(gen_count, 0.0), pmax(gen_count, 0.0);
  for (int g = 0; g < gen_count; ++g) {
    const Generator& gen = net.generators()[g];
    qmin[g] = gen.qmin;
    qmax[g] = gen.qmax;
    pmax[g] = std::max(gen.pmax, 0.0);
    if (gen.in_service) active[gen.bus].push_back(g);
  }

  PowerFlowState st;
  st.kinds.assign(n, BusKind::kPQ);
  st.vm.assign(n, 1.0);
  st.va.assign(n, 0.0);
  std::vector<double> vset(n, 1.0);
  for (int i = 0; i < n; ++i) {
    const bool has_gen = !active[i].empty();
    if (i == slack) {
      st.kinds[i] = BusKind::kSlack;
    } else if (net.buses()[i].kind != BusKind::kPQ && has_gen) {
      st.kinds[i] = BusKind::kPV;
    }
    if (has_gen) vset[i] = net.generators()[active[i].front()].vg;
    if (!v_setpoints.empty()) vset[i] = v_setpoints[i];
    if (st.kinds[i] != BusKind::kPQ) st.vm[i] = vset[i];
  }

  // Fixed reactive output of buses that are PQ (originally or switched).
  std::vector<double> q_fixed(n, 0.0);
  for (int i = 0; i < n; ++i) {
    for (int g : active[i]) q_fixed[i] += net.generators()[g].qg;
  }
  ComplexVector s_spec(n);
  for (int i = 0; i < n; ++i) {
    double p = -net.buses()[i].pd;
    for (int g : active[i]) p += pg[g];
    s_spec[i] = Complex(p, q_fixed[i] - net.buses()[i].qd);
  }

  const AdmittanceMatrix ybus = build_ybus(net);
  enum class Limit { kNone, kUpper, kLower };
  std::vector<Limit> at_limit(n, Limit::kNone);
  std::vector<char> switched_back(n, 0);

  for (int round = 0;; ++round) {
    NewtonIndex index;
    for (int i = 0; i < n; ++i) {
      if (st.kinds[i] != BusKind::kSlack) index.pvpq.push_back(i);
      if (st.kinds[i] == BusKind::kPQ) index.pq.push_back(i);
    }
    const NewtonOutcome res = newton(ybus, s_spec, index, st.vm, st.va, options);
    st.iterations += res.iterations;
    if (round == 0) st.first_solve_iterations = res.iterations;
    st.mismatch = res.mismatch;
    if (!res.converged) {
      st.message = "Newton iteration did not converge";
      return st;
    }
    if (!options.enforce_q_limits) break;

    const ComplexVector s = bus_power(ybus, to_complex(st.vm, st.va));
    bool changed = false;
    for (int i = 0; i < n; ++i) {
      if (at_limit[i] != Limit::kNone && !switched_back[i]) {
        const bool release = at_limit[i] == Limit::kUpper ? st.vm[i] > vset[i] + 1e-9
                                                          : st.vm[i] < vset[i] - 1e-9;
        if (release) {
          st.kinds[i] = BusKind::kPV;
          st.vm[i] = vset[i];
          at_limit[i] = Limit::kNone;
          switched_back[i] = 1;
          changed = true;
        }
        continue;
      }
      if (st.kinds[i] != BusKind::kPV) continue;
      double hi = 0.0, lo = 0.0;
      for (int g : active[i]) {
        hi += qmax[g];
        lo += qmin[g];
      }
      const double q = s[i].imag() + net.buses()[i].qd;
      if (q > hi + kLimitTolerance || q < lo - kLimitTolerance) {
        const bool upper = q > hi;
        at_limit[i] = upper ? Limit::kUpper : Limit::kLower;
        st.kinds[i] = BusKind::kPQ;
        q_fixed[i] = upper ? hi : lo;
        s_spec[i] = Complex(s_spec[i].real(), q_fixed[i] - net.buses()[i].qd);
        st.switched_to_pq.push_back(i);
        changed = true;
      }
    }
    if (!changed) break;
    if (++st.switch_rounds > options.max_switch_rounds) {
      st.message = "PV-PQ switching did not settle";
      return st;
    }
  }
  st.converged = true;

  const ComplexVector s = bus_power(ybus, to_complex(st.vm, st.va));
  st.pg.assign(gen_count, 0.0);
  st.qg.assign(gen_count, 0.0);
  for (int g = 0; g < gen_count; ++g) {
    if (net.generators()[g].in_service && net.generators()[g].bus != slack) st.pg[g] = pg[g];
  }
  if (!active[slack].empty()) {
    split_by_span(active[slack], s[slack].real() + net.buses()[slack].pd, zero, pmax,
                  st.pg);
  }
  for (int i = 0; i < n; ++i) {
    if (active[i].empty()) continue;
    if (st.kinds[i] == BusKind::kPQ && at_limit[i] == Limit::kNone) {
      for (int g : active[i]) st.qg[g] = net.generators()[g].qg;
      continue;
    }
    const double q = st.kinds[i] == BusKind::kPQ ? q_fixed[i]
                                                 : s[i].imag() + net.buses()[i].qd;
    split_by_span(active[i], q, qmin, qmax, st.qg);
  }
  return st;
}

AcBranchFlows ac_branch_flows(const PowerNetwork& net, const std::vector<double>& vm,
                              const std::vector<double>& va) {
  AcBranchFlows out;
  const std::size_t e = net.num_branches();
  out.from.assign(e, Complex(0.0, 0.0));
  out.to.assign(e, Complex(0.0, 0.0));
  const ComplexVector v = to_complex(vm, va);
  for (std::size_t k = 0; k < e; ++k) {
    const Branch& br = net.branches()[k];
    if (!br.in_service) continue;
    const BranchAdmittance y = branch_admittance(br);
    const Complex vf = v[br.from_bus], vt = v[br.to_bus];
    out.from[k] = vf * std::conj(y.ff * vf + y.ft * vt);
    out.to[k] = vt * std::conj(y.tf * vf + y.tt * vt);
  }
  return out;
}

double ac_branch_losses(const PowerNetwork& net, const PowerFlowState& state) {
  const AcBranchFlows flows = ac_branch_flows(net, state.vm, state.va);
  double total = 0.0;
  for (std::size_t k = 0; k < flows.from.size(); ++k) {
    total += flows.from[k].real() + flows.to[k].real();
  }
  return total;
}

}  // namespace lineloss
