#pragma once

#include <vector>

#include <Eigen/Sparse>

#include "lineloss/lp.hpp"

namespace lineloss::lp::detail {

/// Column-major constraint data shared by both backends:
/// row_lower <= A x <= row_upper, col_lower <= x <= col_upper.
struct LpData {
  int n = 0;
  int m = 0;
  Eigen::SparseMatrix<double> a;  // m x n, column major
  std::vector<double> cost;
  std::vector<double> col_lower;
  std::vector<double> col_upper;
  std::vector<double> row_lower;
  std::vector<double> row_upper;
};

LpData extract_lp(const Model& model);

struct BackendResult {
  Status status = Status::kNumericFailure;
  std::vector<double> x;
  std::vector<double> row_duals;
  std::vector<double> reduced_costs;
  Basis basis;
  int iterations = 0;
  std::string message;
};

BackendResult solve_dual_simplex(const LpData& data,
                                 const SolverOptions& options,
                                 const Basis* warm_start);

BackendResult solve_interior_point(const LpData& data,
                                   const std::vector<Model::Cone>& cones,
                                   const SolverOptions& options);

}  // namespace lineloss::lp::detail
