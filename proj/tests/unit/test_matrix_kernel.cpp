#include <doctest.h>

#include <random>
#include <thread>

#include <Eigen/Dense>

#include "fixtures.hpp"
#include "lineloss/matrix_kernel.hpp"

using namespace lineloss;

TEST_CASE("build_incidence") {
  const auto two = build_incidence(fixtures::two_bus(0.01, 0.1, 0.0));
  CHECK(Eigen::MatrixXd(two.matrix) == (Eigen::MatrixXd(1, 2) << 1, -1).finished());

  const auto tri = build_incidence(fixtures::triangle());
  Eigen::MatrixXd expected(3, 3);
  expected << 1, -1, 0, 0, 1, -1, 1, 0, -1;
  CHECK(Eigen::MatrixXd(tri.matrix) == expected);

  auto net = fixtures::triangle();
  auto branches = net.branches();
  branches[1].in_service = false;
  const auto reduced = build_incidence(net.with_branches(branches));
  CHECK(reduced.matrix.rows() == 2);
  CHECK(reduced.branch_of_row == std::vector<int>{0, 2});
}

TEST_CASE("factorize assembles the reduced susceptance matrix") {
  const auto two = factorize(fixtures::two_bus(0.01, 0.1, 0.0, 1.0, 10.0, 2.0, true));
  CHECK(two->slack() == 1);
  CHECK(Eigen::MatrixXd(two->reduced_matrix())(0, 0) == doctest::Approx(10.0));

  // Oracle: A^T diag(b) A assembled densely, slack row/column deleted.
  const auto net = fixtures::triangle();
  const Eigen::MatrixXd a = Eigen::MatrixXd(build_incidence(net).matrix);
  const Eigen::MatrixXd full = a.transpose() * a;
  const Eigen::MatrixXd oracle = full.topLeftCorner(2, 2);
  const auto sys = factorize(net);
  CHECK((Eigen::MatrixXd(sys->reduced_matrix()) - oracle).norm() == 0.0);
  CHECK(oracle(0, 0) == 2.0);
  CHECK(oracle(0, 1) == -1.0);

  auto branches = net.branches();
  branches[1].in_service = false;
  branches[2].in_service = false;
  CHECK_THROWS_WITH_AS(factorize(net.with_branches(branches)),
                       doctest::Contains("singular/islanded"),
                       SingularSystemError);
}

TEST_CASE("factorization residual is tiny for unit vectors") {
  for (const char* name : {"case14", "case118"}) {
    const auto net = fixtures::load(name);
    const auto sys = factorize(net);
    const int n = sys->num_buses() - 1;
    for (int k = 0; k < n; ++k) {
      Eigen::VectorXd e = Eigen::VectorXd::Unit(n, k);
      const Eigen::VectorXd x = sys->solve_reduced(e);
      CHECK((sys->reduced_matrix() * x - e).lpNorm<Eigen::Infinity>() <= 1e-10);
    }
  }
}

TEST_CASE("ptdf rows") {
  const auto two = factorize(fixtures::two_bus(0.01, 0.1, 0.0, 1.0, 10.0, 2.0, true));
  const auto& row = two->ptdf_row(0);
  CHECK(row[0] == doctest::Approx(1.0));
  CHECK(row[1] == 0.0);

  // Oracle: dense solve of B_red theta = e_i, flow = b (theta_1 - theta_2).
  const auto sys = factorize(fixtures::triangle());
  Eigen::Matrix2d b;
  b << 2, -1, -1, 2;
  const Eigen::Vector2d t1 = b.inverse() * Eigen::Vector2d(1, 0);
  const Eigen::Vector2d t2 = b.inverse() * Eigen::Vector2d(0, 1);
  const auto& phi = sys->ptdf_row(0);
  CHECK(phi[0] == doctest::Approx(t1[0] - t1[1]).epsilon(1e-12));
  CHECK(phi[1] == doctest::Approx(t2[0] - t2[1]).epsilon(1e-12));
  CHECK(phi[0] == doctest::Approx(1.0 / 3.0));
  CHECK(phi[1] == doctest::Approx(-1.0 / 3.0));
  CHECK(phi[2] == 0.0);
  CHECK(sys->cached_rows() == 1);
  CHECK(&sys->ptdf_row(0) == &phi);
}

TEST_CASE("dc_flows") {
  const auto two = factorize(fixtures::two_bus(0.01, 0.1, 0.0));
  const std::vector<double> p2 = {1.0, -1.0};
  CHECK(two->dc_flows(p2).flows[0] == doctest::Approx(1.0));
  const auto zero = two->dc_flows(std::vector<double>{0.0, 0.0});
  CHECK(zero.flows[0] == 0.0);
  CHECK(zero.angles[1] == 0.0);
  CHECK_THROWS_AS(two->dc_flows(std::vector<double>{1.0, 0.0}), std::invalid_argument);
  const auto absorbed = two->dc_flows(std::vector<double>{1.0, 0.0}, true);
  CHECK(absorbed.flows[0] == doctest::Approx(0.0));

  // Triangle +1 at bus 1, -1 at bus 3. Oracle: dense Laplacian pseudo-solve.
  const auto sys = factorize(fixtures::triangle());
  const auto f = sys->dc_flows(std::vector<double>{1.0, 0.0, -1.0});
  Eigen::Matrix2d b;
  b << 2, -1, -1, 2;
  const Eigen::Vector2d th = b.lu().solve(Eigen::Vector2d(1, 0));
  CHECK(f.flows[0] == doctest::Approx(th[0] - th[1]));
  CHECK(f.flows[1] == doctest::Approx(th[1]));
  CHECK(f.flows[2] == doctest::Approx(th[0]));
  CHECK(f.flows[0] == doctest::Approx(1.0 / 3.0));
  CHECK(f.flows[2] == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("PTDF and phase-angle flows agree on random balanced injections") {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> normal;
  for (const char* name : {"case14", "case30", "case118"}) {
    const auto net = fixtures::load(name);
    const auto sys = factorize(net);
    const int n = sys->num_buses();
    double worst = 0.0;
    double worst_row_sum = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
      std::vector<double> p(n);
      double sum = 0.0;
      for (double& v : p) sum += (v = normal(rng));
      for (double& v : p) v -= sum / n;
      const auto flows = sys->dc_flows(p);
      for (int k : sys->branches()) {
        const auto& row = sys->ptdf_row(k);
        double f = 0.0;
        for (int i = 0; i < n; ++i) f += row[i] * p[i];
        worst = std::max(worst, std::abs(f - flows.flows[k]));
      }
    }
    // A slack-referenced PTDF does not annihilate the all-ones vector; what
    // is invariant is the flow for balanced injections under any slack.
    const auto other = factorize(net, (sys->slack() + n / 2) % n);
    for (int trial = 0; trial < 10; ++trial) {
      std::vector<double> p(n);
      double sum = 0.0;
      for (double& v : p) sum += (v = normal(rng));
      for (double& v : p) v -= sum / n;
      for (int k : sys->branches()) {
        double f1 = 0.0, f2 = 0.0;
        for (int i = 0; i < n; ++i) {
          f1 += sys->ptdf_row(k)[i] * p[i];
          f2 += other->ptdf_row(k)[i] * p[i];
        }
        worst_row_sum = std::max(worst_row_sum, std::abs(f1 - f2));
      }
    }
    CHECK(worst <= 1e-8);
    CHECK(worst_row_sum <= 1e-8);
  }
}

TEST_CASE("repeated solves are bitwise identical and thread safe") {
  const auto sys = factorize(fixtures::load("case118"));
  const int n = sys->num_buses();
  std::vector<double> p(n, 0.0);
  p[0] = 1.0;
  p[n - 1] = -1.0;
  const auto a = sys->dc_flows(p);
  const auto b = sys->dc_flows(p);
  CHECK(a.flows == b.flows);

  std::vector<std::vector<double>> rows(sys->branches().size());
  std::vector<std::thread> threads;
  for (int t = 0; t < 4; ++t) {
    threads.emplace_back([&, t] {
      for (std::size_t k = t; k < rows.size(); k += 4) {
        rows[k] = sys->ptdf_row(sys->branches()[k]);
      }
    });
  }
  for (auto& th : threads) th.join();
  for (std::size_t k = 0; k < rows.size(); ++k) {
    CHECK(rows[k] == sys->compute_ptdf_row(sys->branches()[k]));
  }
}
