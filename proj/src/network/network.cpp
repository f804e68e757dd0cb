#include "lineloss/network.hpp"

#include <algorithm>
#include <limits>
#include <cmath>
#include <numeric>
#include <queue>
#include <sstream>

namespace lineloss {

const char* to_string(BusKind kind) {
  switch (kind) {
    case BusKind::kPQ:
      return "PQ";
    case BusKind::kPV:
      return "PV";
    case BusKind::kSlack:
      return "slack";
  }
  return "?";
}

double CostCurve::evaluate(double p) const {
  if (kind == Kind::kPolynomial) {
    double value = 0.0;
    for (double c : coefficients) value = value * p + c;
    return value;
  }
  if (points.empty()) return 0.0;
  if (points.size() == 1) return points.front().second;
  // Linear interpolation, extrapolating with the end slopes.
  std::size_t k = 1;
  while (k + 1 < points.size() && p > points[k].first) ++k;
  const auto& [p0, c0] = points[k - 1];
  const auto& [p1, c1] = points[k];
  if (p1 == p0) return c1;
  return c0 + (c1 - c0) * (p - p0) / (p1 - p0);
}

PowerNetwork::PowerNetwork(std::string name, double base_mva,
                           std::vector<Bus> buses,
                           std::vector<Branch> branches,
                           std::vector<Generator> generators)
    : name_(std::move(name)),
      base_mva_(base_mva),
      buses_(std::move(buses)),
      branches_(std::move(branches)),
      generators_(std::move(generators)) {}

int PowerNetwork::slack_bus() const {
  for (std::size_t i = 0; i < buses_.size(); ++i) {
    if (buses_[i].kind == BusKind::kSlack) return static_cast<int>(i);
  }
  throw NetworkError("network '" + name_ + "' has no slack bus");
}

int PowerNetwork::bus_index(int external_id) const {
  for (std::size_t i = 0; i < buses_.size(); ++i) {
    if (buses_[i].external_id == external_id) return static_cast<int>(i);
  }
  return -1;
}

std::vector<std::vector<int>> PowerNetwork::generators_by_bus() const {
  std::vector<std::vector<int>> out(buses_.size());
  for (std::size_t g = 0; g < generators_.size(); ++g) {
    out[generators_[g].bus].push_back(static_cast<int>(g));
  }
  return out;
}

std::vector<int> PowerNetwork::in_service_branches() const {
  std::vector<int> out;
  for (std::size_t k = 0; k < branches_.size(); ++k) {
    if (branches_[k].in_service) out.push_back(static_cast<int>(k));
  }
  return out;
}

std::vector<int> PowerNetwork::in_service_generators() const {
  std::vector<int> out;
  for (std::size_t g = 0; g < generators_.size(); ++g) {
    if (generators_[g].in_service) out.push_back(static_cast<int>(g));
  }
  return out;
}

double PowerNetwork::total_load() const {
  double total = 0.0;
  for (const Bus& b : buses_) total += b.pd;
  return total;
}

PowerNetwork PowerNetwork::with_scaled_loads(
    const std::vector<double>& factors) const {
  if (factors.size() != buses_.size()) {
    throw NetworkError("load scaling vector has wrong length");
  }
  PowerNetwork copy = *this;
  for (std::size_t i = 0; i < buses_.size(); ++i) {
    copy.buses_[i].pd *= factors[i];
    copy.buses_[i].qd *= factors[i];
  }
  return copy;
}

PowerNetwork PowerNetwork::with_branches(std::vector<Branch> branches) const {
  PowerNetwork copy = *this;
  copy.branches_ = std::move(branches);
  return copy;
}

PowerNetwork PowerNetwork::with_generators(
    std::vector<Generator> generators) const {
  PowerNetwork copy = *this;
  copy.generators_ = std::move(generators);
  return copy;
}

std::vector<std::vector<int>> validate_connectivity(const PowerNetwork& net) {
  const std::size_t n = net.num_buses();
  std::vector<std::vector<int>> adjacency(n);
  for (const Branch& br : net.branches()) {
    if (!br.in_service) continue;
    adjacency[br.from_bus].push_back(br.to_bus);
    adjacency[br.to_bus].push_back(br.from_bus);
  }
  std::vector<int> component(n, -1);
  std::vector<std::vector<int>> components;
  for (std::size_t start = 0; start < n; ++start) {
    if (component[start] >= 0) continue;
    const int id = static_cast<int>(components.size());
    components.emplace_back();
    std::queue<int> frontier;
    frontier.push(static_cast<int>(start));
    component[start] = id;
    while (!frontier.empty()) {
      const int bus = frontier.front();
      frontier.pop();
      components.back().push_back(net.buses()[bus].external_id);
      for (int next : adjacency[bus]) {
        if (component[next] < 0) {
          component[next] = id;
          frontier.push(next);
        }
      }
    }
  }
  if (components.size() <= 1) return {};
  for (auto& c : components) std::sort(c.begin(), c.end());
  return components;
}

std::vector<InjectionBounds> net_injection_bounds(const PowerNetwork& net) {
  std::vector<InjectionBounds> out(net.num_buses());
  for (std::size_t i = 0; i < net.num_buses(); ++i) {
    out[i].lower = -net.buses()[i].pd;
    out[i].upper = -net.buses()[i].pd;
  }
  for (const Generator& g : net.generators()) {
    if (!g.in_service) continue;
    out[g.bus].lower += g.pmin;
    out[g.bus].upper += g.pmax;
  }
  return out;
}

namespace {

std::string bus_label(const PowerNetwork& net, int index) {
  return "bus " + std::to_string(net.buses()[index].external_id);
}

void check_cost_convexity(const Generator& g, std::size_t index) {
  const CostCurve& c = g.cost;
  if (c.kind == CostCurve::Kind::kPolynomial) {
    const std::size_t degree =
        c.coefficients.empty() ? 0 : c.coefficients.size() - 1;
    if (degree > 2) {
      throw NetworkError("generator " + std::to_string(index + 1) +
                         ": polynomial cost of degree " +
                         std::to_string(degree) + " is not supported");
    }
    if (degree == 2 && c.coefficients[0] < 0.0) {
      throw NetworkError("generator " + std::to_string(index + 1) +
                         ": quadratic cost is not convex");
    }
    return;
  }
  double last_slope = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k < c.points.size(); ++k) {
    const double dp = c.points[k].first - c.points[k - 1].first;
    if (dp <= 0.0) {
      throw NetworkError("generator " + std::to_string(index + 1) +
                         ": piecewise-linear cost breakpoints not increasing");
    }
    const double slope = (c.points[k].second - c.points[k - 1].second) / dp;
    if (slope < last_slope - 1e-9 * std::max(1.0, std::abs(last_slope))) {
      throw NetworkError("generator " + std::to_string(index + 1) +
                         ": piecewise-linear cost is not convex");
    }
    last_slope = slope;
  }
}

}  // namespace

void validate_network(const PowerNetwork& net, bool require_connected) {
  if (net.num_buses() == 0) throw NetworkError("network has no buses");
  if (!(net.base_mva() > 0.0)) throw NetworkError("baseMVA must be positive");

  int slack_count = 0;
  for (std::size_t i = 0; i < net.num_buses(); ++i) {
    const Bus& b = net.buses()[i];
    if (b.kind == BusKind::kSlack) ++slack_count;
    if (!(b.vmin <= b.vmax)) {
      throw NetworkError(bus_label(net, static_cast<int>(i)) +
                         ": vmin exceeds vmax");
    }
    if (!std::isfinite(b.pd) || !std::isfinite(b.qd)) {
      throw NetworkError(bus_label(net, static_cast<int>(i)) +
                         ": non-finite demand");
    }
  }
  if (slack_count == 0) throw NetworkError("no slack bus");
  if (slack_count > 1) throw NetworkError("multiple slack buses");

  for (std::size_t k = 0; k < net.num_branches(); ++k) {
    const Branch& br = net.branches()[k];
    const std::string label = "branch " + std::to_string(k + 1);
    if (br.from_bus < 0 || br.to_bus < 0 ||
        br.from_bus >= static_cast<int>(net.num_buses()) ||
        br.to_bus >= static_cast<int>(net.num_buses())) {
      throw NetworkError(label + ": unknown bus");
    }
    if (br.from_bus == br.to_bus) throw NetworkError(label + ": self loop");
    if (br.in_service && br.x == 0.0) {
      throw NetworkError(label + ": zero reactance");
    }
    if (br.r < 0.0) throw NetworkError(label + ": negative resistance");
    if (br.rate < 0.0) throw NetworkError(label + ": negative rating");
  }

  bool any_generator = false;
  for (std::size_t g = 0; g < net.num_generators(); ++g) {
    const Generator& gen = net.generators()[g];
    if (gen.bus < 0 || gen.bus >= static_cast<int>(net.num_buses())) {
      throw NetworkError("generator " + std::to_string(g + 1) +
                         ": unknown bus");
    }
    if (gen.in_service) any_generator = true;
    if (gen.pmin > gen.pmax) {
      throw NetworkError("generator " + std::to_string(g + 1) +
                         ": pmin exceeds pmax");
    }
    check_cost_convexity(gen, g);
  }
  if (!any_generator) throw NetworkError("network has no in-service generator");

  if (require_connected) {
    const auto islands = validate_connectivity(net);
    if (!islands.empty()) {
      std::ostringstream msg;
      msg << "network is disconnected into " << islands.size()
          << " islands (first island contains bus " << islands.front().front()
          << ")";
      throw NetworkError(msg.str());
    }
  }
}

}  // namespace lineloss
