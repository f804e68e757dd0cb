#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "fixtures.hpp"
#include "lineloss/harness.hpp"

using namespace lineloss;

TEST_CASE("objective gap") {
  CHECK(objective_gap(96.77, 100.0) == doctest::Approx(-3.23));
  CHECK(objective_gap(100.0, 100.0) == 0.0);
  CHECK(objective_gap(101.0, 100.0) == doctest::Approx(1.0));
  CHECK(objective_gap(-99.0, -100.0) == doctest::Approx(1.0));
  CHECK_THROWS_AS(objective_gap(1.0, 0.0), std::invalid_argument);
}

TEST_CASE("dispatch MAE") {
  CHECK(dispatch_mae({1, 2}, {1, 1}) == doctest::Approx(0.5));
  CHECK(dispatch_mae({3, 4}, {3, 4}) == 0.0);
  CHECK(dispatch_mae({0, 0, 3}, {1, 1, 1}) == doctest::Approx(4.0 / 3.0));
  CHECK_THROWS_AS(dispatch_mae({1}, {1, 2}), std::invalid_argument);
}

TEST_CASE("load noise parameterization") {
  const auto draws = load_noise(100000, 1.0, 0.05, 7);
  double mean = 0.0;
  for (double d : draws) mean += d;
  mean /= draws.size();
  double var = 0.0;
  for (double d : draws) var += (d - mean) * (d - mean);
  const double sd = std::sqrt(var / (draws.size() - 1));
  CHECK(std::abs(mean - 1.0) <= 0.001);
  CHECK(std::abs(sd - 0.05) <= 0.002);
  CHECK(std::all_of(draws.begin(), draws.end(), [](double d) { return d > 0.0; }));

  CHECK(load_noise(5, 1.0, 0.05, 3) == load_noise(5, 1.0, 0.05, 3));
  CHECK(load_noise(5, 1.0, 0.05, 3) != load_noise(5, 1.0, 0.05, 4));
  CHECK_THROWS_AS(load_noise(1, 0.0, 0.05, 1), std::invalid_argument);
  CHECK_THROWS_AS(load_noise(1, 1.0, -0.1, 1), std::invalid_argument);
}

TEST_CASE("perturb_loads scales demand") {
  const PowerNetwork net = fixtures::load("case14");
  const PowerNetwork scaled = perturb_loads(net, 1.1, 0.0, 1);
  for (std::size_t i = 0; i < net.num_buses(); ++i) {
    CHECK(scaled.buses()[i].pd == net.buses()[i].pd * 1.1);
    CHECK(scaled.buses()[i].qd == net.buses()[i].qd * 1.1);
  }
  const PowerNetwork a = perturb_loads(net, 1.0, 0.05, 42);
  const PowerNetwork b = perturb_loads(net, 1.0, 0.05, 42);
  for (std::size_t i = 0; i < net.num_buses(); ++i) {
    CHECK(a.buses()[i].pd == b.buses()[i].pd);
    if (net.buses()[i].pd != 0.0) {
      CHECK(a.buses()[i].qd / a.buses()[i].pd ==
            doctest::Approx(net.buses()[i].qd / net.buses()[i].pd));
    }
  }
}

TEST_CASE("generator difference profile") {
  const PowerNetwork net = fixtures::load("case30");
  std::vector<double> pg;
  for (const Generator& g : net.generators()) pg.push_back(g.pg);

  DiffProfile same = generator_diff_profile(net, pg, pg);
  CHECK(same.filtered.empty());
  CHECK(same.identical_share == 100.0);
  CHECK(same.profile.size() == net.in_service_generators().size());
  for (std::size_t k = 1; k < same.profile.size(); ++k) {
    CHECK(same.profile[k - 1].pmax <= same.profile[k].pmax);
  }

  std::vector<double> moved = pg;
  moved[2] += 0.5;
  DiffProfile one = generator_diff_profile(net, moved, pg);
  REQUIRE(one.filtered.size() == 1);
  CHECK(one.filtered[0].generator == 2);
  CHECK(one.filtered[0].diff == doctest::Approx(0.5));
  const double n = static_cast<double>(one.profile.size());
  CHECK(one.identical_share == doctest::Approx(100.0 * (n - 1) / n));
  int total = 0;
  for (int c : one.bin_counts) total += c;
  CHECK(total == 1);

  CHECK_THROWS_AS(generator_diff_profile(net, {1.0}, pg), std::invalid_argument);
  std::ostringstream csv;
  write_diff_profile_csv(csv, one);
  CHECK(csv.str().find(",0.5,1\n") != std::string::npos);
}

TEST_CASE("flow discrepancy of a loss-aware dispatch is small") {
  const PowerNetwork net = fixtures::load("case14");
  const auto sys = factorize(net);
  const DispatchSolution dc = solve_dispatch(net, Method::kDc);
  const DispatchSolution qcp = solve_dispatch(net, Method::kLlqcp);
  REQUIRE(dc.optimal());
  REQUIRE(qcp.optimal());
  // The QCP flows already satisfy the lossy network equations.
  CHECK(flow_discrepancy(net, *sys, qcp) < 1e-6);
  CHECK(flow_discrepancy(net, *sys, dc) > 1e-3);

  // Lossless network: the DC flows are exact.
  std::vector<Branch> branches = net.branches();
  for (Branch& b : branches) b.r = 0.0;
  const PowerNetwork lossless = net.with_branches(branches);
  const auto sys0 = factorize(lossless);
  CHECK(flow_discrepancy(lossless, *sys0, solve_dispatch(lossless, Method::kDc)) < 1e-9);
}

TEST_CASE("sweep cardinality, series and determinism") {
  SweepConfig cfg;
  cfg.cases = {fixtures::case_path("case14")};
  cfg.alphas = {0.96, 1.0, 1.04};
  cfg.seeds = {1, 2};
  const SweepResult res = run_sweep(cfg);
  CHECK(res.total_instances == 3 * 2 * 4);
  CHECK(res.rows.size() + res.exclusions.size() == res.total_instances);
  CHECK(res.exclusions.empty());
  CHECK(res.series.size() == 3 * 4);
  for (const MetricRow& r : res.rows) {
    CHECK(r.mae >= 0.0);
    if (r.method == "llqcp") {
      CHECK(r.gap_percent == 0.0);
      CHECK(r.mae == 0.0);
    }
    if (r.method == "dc") CHECK(r.gap_percent <= 0.0);
  }
  for (const SeriesPoint& p : res.series) CHECK(p.count == 2);

  SweepConfig serial = cfg;
  serial.parallel = false;
  const SweepResult again = run_sweep(serial);
  std::ostringstream a, b;
  write_metrics_csv(a, res.rows);
  write_metrics_csv(b, again.rows);
  CHECK(a.str() == b.str());
  std::ostringstream sa, sb;
  write_series_csv(sa, res.series);
  write_series_csv(sb, again.series);
  CHECK(sa.str() == sb.str());

  const SweepResult parsed = sweep_from_json(sweep_to_json(res));
  std::ostringstream c;
  write_metrics_csv(c, parsed.rows);
  CHECK(c.str() == a.str());
  CHECK(parsed.series.size() == res.series.size());
}

TEST_CASE("sweep records infeasible instances") {
  SweepConfig cfg;
  cfg.cases = {fixtures::case_path("case14")};
  cfg.alphas = {1.0, 3.0};
  cfg.seeds = {1};
  cfg.sigma = 0.0;
  cfg.methods = {Method::kDc, Method::kLllf};
  const SweepResult res = run_sweep(cfg);
  CHECK(res.total_instances == 4);
  CHECK(res.rows.size() + res.exclusions.size() == 4);
  CHECK(res.exclusions.size() == 2);
  for (const Exclusion& e : res.exclusions) CHECK(e.alpha == 3.0);
  for (const SeriesPoint& p : res.series) CHECK(p.alpha == 1.0);
  std::ostringstream log;
  write_exclusions_csv(log, res.exclusions);
  CHECK(log.str().find("reference llqcp") != std::string::npos);
}

TEST_CASE("seed averages and trend flags") {
  std::vector<MetricRow> rows(4);
  rows[0] = {"c", "lloa", 1.0, 1, 10, 1.0, 0.1, 0.5};
  rows[1] = {"c", "lloa", 1.0, 2, 10, 3.0, 0.3, 0.7};
  rows[2] = {"c", "lloa", 1.1, 1, 10, 0.0, 0.0, 0.4};
  rows[3] = {"c", "dc", 1.0, 1, 10, -2.0, 0.2, 0.0};
  const auto series = seed_averages(rows, {Method::kDc, Method::kLloa});
  REQUIRE(series.size() == 3);
  CHECK(series[0].method == "dc");
  CHECK(series[1].count == 2);
  CHECK(series[1].gap_mean == doctest::Approx(2.0));
  CHECK(series[1].gap_std == doctest::Approx(std::sqrt(2.0)));
  CHECK(series[1].loss_mean == doctest::Approx(0.6));
  const auto flags = loss_trend_flags(series);
  REQUIRE(flags.size() == 1);
  CHECK(flags[0].find("c/lloa") == 0);
}

TEST_CASE("sweep config parsing") {
  const auto j = nlohmann::json::parse(R"({
    "cases": ["case14.m"], "methods": ["dc", "LLOA"],
    "alphas": {"start": 0.9, "stop": 1.1, "step": 0.02},
    "sigma": 0.05, "seeds": 10, "epsilon": 1e-4
  })");
  const SweepConfig cfg = sweep_config_from_json(j, "/data");
  CHECK(cfg.cases[0] == std::filesystem::path("/data/case14.m"));
  CHECK(cfg.methods == std::vector<Method>{Method::kDc, Method::kLloa});
  REQUIRE(cfg.alphas.size() == 11);
  CHECK(cfg.alphas[5] == 1.0);
  CHECK(cfg.alphas[10] == doctest::Approx(1.1));
  CHECK(cfg.seeds.size() == 10);
  CHECK(cfg.options.epsilon == 1e-4);

  CHECK_THROWS_AS(sweep_config_from_json(nlohmann::json::parse(R"({"cases": ["a"], "bogus": 1})")),
                  std::invalid_argument);
  CHECK_THROWS_AS(sweep_config_from_json(nlohmann::json::parse(R"({"cases": ["a"], "alphas": [0]})")),
                  std::invalid_argument);
  CHECK_THROWS(sweep_config_from_json(nlohmann::json::parse(R"({"cases": ["a"], "methods": ["ac"]})")));
}

TEST_CASE("conic solves near the slack underflow limit still converge") {
  const PowerNetwork net = perturb_loads(fixtures::load("case118"), 0.98, 0.05, 4);
  const DispatchSolution qcp = solve_dispatch(net, Method::kLlqcp);
  REQUIRE(qcp.optimal());
  DispatchOptions tight;
  tight.epsilon = 1e-7;
  const DispatchSolution oa = solve_lloa(net, tight).solution;
  REQUIRE(oa.optimal());
  CHECK(std::abs(qcp.objective - oa.objective) <= 1e-6 * oa.objective);
}
