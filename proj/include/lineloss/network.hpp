#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace lineloss {

enum class BusKind { kPQ = 1, kPV = 2, kSlack = 3 };

const char* to_string(BusKind kind);

// All electrical quantities are per-unit on PowerNetwork::base_mva; angles in
// radians. Indices are contiguous and 0-based; `external_id` keeps the number
// used in the case file.
struct Bus {
  int external_id = 0;
  BusKind kind = BusKind::kPQ;
  double pd = 0.0;
  double qd = 0.0;
  double gs = 0.0;  // shunt conductance (AC only)
  double bs = 0.0;  // shunt susceptance (AC only)
  int area = 1;
  double vm = 1.0;
  double va = 0.0;
  double base_kv = 0.0;
  int zone = 1;
  double vmax = 1.1;
  double vmin = 0.9;
};

struct Branch {
  int from_bus = 0;
  int to_bus = 0;
  double r = 0.0;
  double x = 0.0;
  double charging = 0.0;  // total line-charging susceptance (AC only)
  double rate = 0.0;      // 0 = unlimited
  double rate_b = 0.0;
  double rate_c = 0.0;
  double tap = 0.0;    // 0 = no transformer
  double shift = 0.0;  // radians
  bool in_service = true;
  double angle_min = -360.0;  // degrees, carried through for serialization
  double angle_max = 360.0;

  /// Series susceptance used by the DC model, b = 1/x.
  double susceptance() const { return 1.0 / x; }
  bool limited() const { return rate > 0.0; }
};

// Generator cost as read from the case, rescaled to per-unit power.
struct CostCurve {
  enum class Kind { kPiecewiseLinear = 1, kPolynomial = 2 };
  Kind kind = Kind::kPolynomial;
  double startup = 0.0;
  double shutdown = 0.0;
  // kPolynomial: coefficients highest degree first, in $/h with p in pu.
  std::vector<double> coefficients;
  // kPiecewiseLinear: (p in pu, $/h) breakpoints, increasing in p.
  std::vector<std::pair<double, double>> points;

  double evaluate(double p) const;
};

struct Generator {
  int bus = 0;
  double pg = 0.0;
  double qg = 0.0;
  double qmax = 0.0;
  double qmin = 0.0;
  double vg = 1.0;
  double mbase = 100.0;
  bool in_service = true;
  double pmax = 0.0;
  double pmin = 0.0;
  double ramp_rate = 0.0;  // pu per interval; 0 = not given
  bool reserve_capable = true;
  CostCurve cost;
  std::vector<double> extra_columns;  // PC1.. APF columns, MATPOWER units
};

class NetworkError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class PowerNetwork {
 public:
  PowerNetwork() = default;
  PowerNetwork(std::string name, double base_mva, std::vector<Bus> buses,
               std::vector<Branch> branches, std::vector<Generator> generators);

  const std::string& name() const { return name_; }
  double base_mva() const { return base_mva_; }
  const std::vector<Bus>& buses() const { return buses_; }
  const std::vector<Branch>& branches() const { return branches_; }
  const std::vector<Generator>& generators() const { return generators_; }

  std::size_t num_buses() const { return buses_.size(); }
  std::size_t num_branches() const { return branches_.size(); }
  std::size_t num_generators() const { return generators_.size(); }

  /// Index of the unique slack bus. Throws NetworkError if there is none.
  int slack_bus() const;
  /// Internal index of an external bus number, or -1.
  int bus_index(int external_id) const;

  /// Generators attached to each bus (in-service and not).
  std::vector<std::vector<int>> generators_by_bus() const;
  std::vector<int> in_service_branches() const;
  std::vector<int> in_service_generators() const;

  double total_load() const;

  /// Copy with every bus demand multiplied by `factors[i]`.
  PowerNetwork with_scaled_loads(const std::vector<double>& factors) const;
  PowerNetwork with_branches(std::vector<Branch> branches) const;
  PowerNetwork with_generators(std::vector<Generator> generators) const;

 private:
  std::string name_;
  double base_mva_ = 100.0;
  std::vector<Bus> buses_;
  std::vector<Branch> branches_;
  std::vector<Generator> generators_;
};

/// Connected components over in-service branches. Returns an empty list when
/// the network is connected, otherwise every component as a sorted set of
/// external bus ids.
std::vector<std::vector<int>> validate_connectivity(const PowerNetwork& net);

struct InjectionBounds {
  double lower = 0.0;
  double upper = 0.0;
};

/// Per-bus net injection interval: attached in-service generator bounds minus
/// the fixed demand.
std::vector<InjectionBounds> net_injection_bounds(const PowerNetwork& net);

/// Checks the structural invariants (ids, slack, reactances, bounds, cost
/// convexity). Throws NetworkError naming the offending element.
void validate_network(const PowerNetwork& net, bool require_connected = true);

}  // namespace lineloss
