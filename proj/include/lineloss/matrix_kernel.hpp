#pragma once

#include <memory>
#include <mutex>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "lineloss/network.hpp"

namespace lineloss {

class SingularSystemError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Branch-bus incidence over in-service branches: +1 at the from bus, -1 at
/// the to bus. Row k corresponds to network branch `branch_of_row[k]`.
struct IncidenceMatrix {
  Eigen::SparseMatrix<double, Eigen::RowMajor> matrix;
  std::vector<int> branch_of_row;
};

IncidenceMatrix build_incidence(const PowerNetwork& net);

/// Flows are positive from the from bus to the to bus: f = b (theta_from -
/// theta_to) with b = 1/x.
struct DcFlows {
  std::vector<double> angles;  // per bus, slack angle 0
  std::vector<double> flows;   // per network branch, 0 when out of service
};

/// Factorized reduced susceptance matrix B_red = A^T diag(b) A with the slack
/// row and column removed. Immutable after construction; PTDF rows are
/// computed lazily and cached, and every query may be issued concurrently.
class SusceptanceSystem {
 public:
  static constexpr int kDenseThreshold = 500;

  SusceptanceSystem(const PowerNetwork& net, int slack);

  int num_buses() const { return num_buses_; }
  int slack() const { return slack_; }
  /// In-service branches, in network order; position = PTDF row index.
  const std::vector<int>& branches() const { return branches_; }
  const std::vector<int>& row_of_branch() const { return row_of_branch_; }
  const Eigen::SparseMatrix<double>& reduced_matrix() const { return reduced_; }
  bool uses_dense_factorization() const { return dense_ != nullptr; }

  /// Solves B_red x = rhs on the reduced (non-slack) coordinates.
  Eigen::VectorXd solve_reduced(const Eigen::VectorXd& rhs) const;

  /// Row of the PTDF matrix for network branch `branch` (length N, slack
  /// entry 0). The returned reference stays valid for the system lifetime.
  const std::vector<double>& ptdf_row(int branch) const;

  /// Uncached PTDF row computation, safe to call concurrently.
  std::vector<double> compute_ptdf_row(int branch) const;

  /// Angles and flows for per-bus injections. Unless `slack_absorbs` is set,
  /// the injections must balance to 1e-8.
  DcFlows dc_flows(std::span<const double> injections,
                   bool slack_absorbs = false) const;

  /// Phi^T v for a per-branch vector v (network branch indexing), computed
  /// with one backsolve.
  std::vector<double> ptdf_transpose_times(std::span<const double> v) const;

  std::size_t cached_rows() const;

 private:
  int reduced_index(int bus) const {
    return bus == slack_ ? -1 : (bus < slack_ ? bus : bus - 1);
  }

  int num_buses_ = 0;
  int slack_ = 0;
  std::vector<int> branches_;
  std::vector<int> row_of_branch_;
  std::vector<int> from_;
  std::vector<int> to_;
  std::vector<double> susceptance_;
  Eigen::SparseMatrix<double> reduced_;
  std::unique_ptr<Eigen::PartialPivLU<Eigen::MatrixXd>> dense_;
  std::unique_ptr<
      Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::AMDOrdering<int>>>
      sparse_;

  mutable std::mutex sparse_mutex_;  // SparseLU::solve is not reentrant
  mutable std::mutex cache_mutex_;
  mutable std::vector<std::unique_ptr<std::vector<double>>> cache_;
};

/// Factorizes the DC susceptance system; `slack < 0` selects the network's
/// slack bus. Throws SingularSystemError for islanded networks or zero
/// reactances.
std::shared_ptr<const SusceptanceSystem> factorize(const PowerNetwork& net,
                                                   int slack = -1);

}  // namespace lineloss
