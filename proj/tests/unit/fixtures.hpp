#pragma once

#include <filesystem>
#include <string>

#include "lineloss/case_io.hpp"
#include "lineloss/network.hpp"

namespace fixtures {

inline std::filesystem::path case_path(const std::string& name) {
  return std::filesystem::path(LINELOSS_DATA_DIR) / (name + ".m");
}

inline lineloss::PowerNetwork load(const std::string& name) {
  return lineloss::load_case(case_path(name));
}

inline lineloss::Generator linear_gen(int bus, double pmax, double price,
                                      double pmin = 0.0) {
  lineloss::Generator g;
  g.bus = bus;
  g.pmax = pmax;
  g.pmin = pmin;
  g.qmax = 10.0;
  g.qmin = -10.0;
  g.cost.kind = lineloss::CostCurve::Kind::kPolynomial;
  g.cost.coefficients = {price, 0.0};
  return g;
}

// Generator at bus 1 (slack unless slack_at_load), load `pd` at bus 2.
inline lineloss::PowerNetwork two_bus(double r, double x, double rate,
                                      double pd = 1.0, double price = 10.0,
                                      double pmax = 2.0,
                                      bool slack_at_load = false) {
  using namespace lineloss;
  std::vector<Bus> buses(2);
  buses[0].external_id = 1;
  buses[1].external_id = 2;
  buses[0].kind = slack_at_load ? BusKind::kPV : BusKind::kSlack;
  buses[1].kind = slack_at_load ? BusKind::kSlack : BusKind::kPQ;
  buses[1].pd = pd;
  Branch br;
  br.from_bus = 0;
  br.to_bus = 1;
  br.r = r;
  br.x = x;
  br.rate = rate;
  return PowerNetwork("two_bus", 100.0, buses, {br},
                      {linear_gen(0, pmax, price)});
}

// Buses 1,2,3 with branches 1-2, 2-3, 1-3 (x as given), bus 3 slack.
inline lineloss::PowerNetwork triangle(double x = 1.0, double r = 0.0) {
  using namespace lineloss;
  std::vector<Bus> buses(3);
  for (int i = 0; i < 3; ++i) buses[i].external_id = i + 1;
  buses[2].kind = BusKind::kSlack;
  std::vector<Branch> branches;
  for (auto [f, t] : {std::pair{0, 1}, std::pair{1, 2}, std::pair{0, 2}}) {
    Branch br;
    br.from_bus = f;
    br.to_bus = t;
    br.x = x;
    br.r = r;
    branches.push_back(br);
  }
  return PowerNetwork("triangle", 100.0, buses, branches,
                      {linear_gen(0, 2.0, 10.0)});
}

}  // namespace fixtures
