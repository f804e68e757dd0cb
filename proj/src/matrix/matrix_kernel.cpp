#include "lineloss/matrix_kernel.hpp"

#include <cmath>
#include <string>

namespace lineloss {

IncidenceMatrix build_incidence(const PowerNetwork& net) {
  IncidenceMatrix out;
  std::vector<Eigen::Triplet<double>> triplets;
  int row = 0;
  for (std::size_t k = 0; k < net.num_branches(); ++k) {
    const Branch& br = net.branches()[k];
    if (!br.in_service) continue;
    triplets.emplace_back(row, br.from_bus, 1.0);
    triplets.emplace_back(row, br.to_bus, -1.0);
    out.branch_of_row.push_back(static_cast<int>(k));
    ++row;
  }
  out.matrix.resize(row, static_cast<int>(net.num_buses()));
  out.matrix.setFromTriplets(triplets.begin(), triplets.end());
  return out;
}

SusceptanceSystem::SusceptanceSystem(const PowerNetwork& net, int slack)
    : num_buses_(static_cast<int>(net.num_buses())), slack_(slack) {
  if (slack < 0 || slack >= num_buses_) {
    throw SingularSystemError("slack bus index out of range");
  }
  row_of_branch_.assign(net.num_branches(), -1);
  for (std::size_t k = 0; k < net.num_branches(); ++k) {
    const Branch& br = net.branches()[k];
    if (!br.in_service) continue;
    if (br.x == 0.0) {
      throw SingularSystemError("branch " + std::to_string(k + 1) +
                                " has zero reactance");
    }
    row_of_branch_[k] = static_cast<int>(branches_.size());
    branches_.push_back(static_cast<int>(k));
    from_.push_back(br.from_bus);
    to_.push_back(br.to_bus);
    susceptance_.push_back(br.susceptance());
  }

  const auto islands = validate_connectivity(net);
  if (!islands.empty()) {
    throw SingularSystemError("susceptance matrix is singular/islanded: " +
                              std::to_string(islands.size()) + " islands");
  }

  const int n = num_buses_ - 1;
  std::vector<Eigen::Triplet<double>> triplets;
  for (std::size_t e = 0; e < branches_.size(); ++e) {
    const int i = reduced_index(from_[e]);
    const int j = reduced_index(to_[e]);
    const double b = susceptance_[e];
    if (i >= 0) triplets.emplace_back(i, i, b);
    if (j >= 0) triplets.emplace_back(j, j, b);
    if (i >= 0 && j >= 0) {
      triplets.emplace_back(i, j, -b);
      triplets.emplace_back(j, i, -b);
    }
  }
  reduced_.resize(n, n);
  reduced_.setFromTriplets(triplets.begin(), triplets.end());
  reduced_.makeCompressed();

  if (n == 0) {
    // Single-bus network: nothing to factorize.
  } else if (num_buses_ < kDenseThreshold) {
    dense_ = std::make_unique<Eigen::PartialPivLU<Eigen::MatrixXd>>(
        Eigen::MatrixXd(reduced_));
    const Eigen::MatrixXd& lu = dense_->matrixLU();
    const double scale = lu.cwiseAbs().maxCoeff();
    for (int i = 0; i < n; ++i) {
      if (!(std::abs(lu(i, i)) > 1e-13 * scale)) {
        throw SingularSystemError("susceptance matrix is singular/islanded");
      }
    }
  } else {
    sparse_ = std::make_unique<Eigen::SparseLU<Eigen::SparseMatrix<double>,
                                               Eigen::AMDOrdering<int>>>();
    sparse_->analyzePattern(reduced_);
    sparse_->factorize(reduced_);
    if (sparse_->info() != Eigen::Success) {
      throw SingularSystemError("susceptance matrix is singular/islanded");
    }
  }
  cache_.resize(net.num_branches());
}

Eigen::VectorXd SusceptanceSystem::solve_reduced(
    const Eigen::VectorXd& rhs) const {
  if (rhs.size() == 0) return rhs;
  if (dense_) return dense_->solve(rhs);
  std::lock_guard lock(sparse_mutex_);
  return sparse_->solve(rhs);
}

std::vector<double> SusceptanceSystem::compute_ptdf_row(int branch) const {
  std::vector<double> row(num_buses_, 0.0);
  const int e = row_of_branch_.at(branch);
  if (e < 0) return row;  // out of service: carries no flow
  // Phi_e = b_e (e_from - e_to)^T B_red^{-1}; B_red is symmetric.
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(num_buses_ - 1);
  const int i = reduced_index(from_[e]);
  const int j = reduced_index(to_[e]);
  if (i >= 0) rhs[i] += susceptance_[e];
  if (j >= 0) rhs[j] -= susceptance_[e];
  const Eigen::VectorXd z = solve_reduced(rhs);
  for (int bus = 0; bus < num_buses_; ++bus) {
    const int r = reduced_index(bus);
    if (r >= 0) row[bus] = z[r];
  }
  return row;
}

const std::vector<double>& SusceptanceSystem::ptdf_row(int branch) const {
  {
    std::lock_guard lock(cache_mutex_);
    if (cache_.at(branch)) return *cache_[branch];
  }
  auto row = std::make_unique<std::vector<double>>(compute_ptdf_row(branch));
  std::lock_guard lock(cache_mutex_);
  if (!cache_[branch]) cache_[branch] = std::move(row);
  return *cache_[branch];
}

std::size_t SusceptanceSystem::cached_rows() const {
  std::lock_guard lock(cache_mutex_);
  std::size_t count = 0;
  for (const auto& row : cache_) count += row ? 1 : 0;
  return count;
}

DcFlows SusceptanceSystem::dc_flows(std::span<const double> injections,
                                    bool slack_absorbs) const {
  if (static_cast<int>(injections.size()) != num_buses_) {
    throw std::invalid_argument("injection vector has wrong length");
  }
  if (!slack_absorbs) {
    double imbalance = 0.0;
    for (double p : injections) imbalance += p;
    if (std::abs(imbalance) > 1e-8) {
      throw std::invalid_argument(
          "injections do not balance (sum = " + std::to_string(imbalance) +
          "); pass slack_absorbs to assign the imbalance to the slack bus");
    }
  }
  Eigen::VectorXd rhs(num_buses_ - 1);
  for (int bus = 0; bus < num_buses_; ++bus) {
    const int r = reduced_index(bus);
    if (r >= 0) rhs[r] = injections[bus];
  }
  const Eigen::VectorXd theta = solve_reduced(rhs);
  DcFlows out;
  out.angles.assign(num_buses_, 0.0);
  for (int bus = 0; bus < num_buses_; ++bus) {
    const int r = reduced_index(bus);
    if (r >= 0) out.angles[bus] = theta[r];
  }
  out.flows.assign(row_of_branch_.size(), 0.0);
  for (std::size_t e = 0; e < branches_.size(); ++e) {
    out.flows[branches_[e]] =
        susceptance_[e] * (out.angles[from_[e]] - out.angles[to_[e]]);
  }
  return out;
}

std::vector<double> SusceptanceSystem::ptdf_transpose_times(
    std::span<const double> v) const {
  // Phi = diag(b) A_red B_red^{-1}  =>  Phi^T v = B_red^{-1} A_red^T diag(b) v
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(num_buses_ - 1);
  for (std::size_t e = 0; e < branches_.size(); ++e) {
    const double w = susceptance_[e] * v[branches_[e]];
    const int i = reduced_index(from_[e]);
    const int j = reduced_index(to_[e]);
    if (i >= 0) rhs[i] += w;
    if (j >= 0) rhs[j] -= w;
  }
  const Eigen::VectorXd z = solve_reduced(rhs);
  std::vector<double> out(num_buses_, 0.0);
  for (int bus = 0; bus < num_buses_; ++bus) {
    const int r = reduced_index(bus);
    if (r >= 0) out[bus] = z[r];
  }
  return out;
}

std::shared_ptr<const SusceptanceSystem> factorize(const PowerNetwork& net,
                                                   int slack) {
  if (slack < 0) slack = net.slack_bus();
  return std::make_shared<const SusceptanceSystem>(net, slack);
}

}  // namespace lineloss
