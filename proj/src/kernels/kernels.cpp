#include "lineloss/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace lineloss::kernels {

namespace serial {

std::vector<std::vector<double>> ptdf_block(const SusceptanceSystem& sys,
                                            const std::vector<int>& branches) {
  std::vector<std::vector<double>> out;
  out.reserve(branches.size());
  for (int e : branches) out.push_back(sys.compute_ptdf_row(e));
  return out;
}

std::vector<int> screen_flows(const std::vector<double>& flows,
                              const std::vector<double>& limits, double tol) {
  std::vector<int> out;
  for (std::size_t e = 0; e < flows.size(); ++e) {
    if (limits[e] > 0.0 && std::abs(flows[e]) > limits[e] + tol) {
      out.push_back(static_cast<int>(e));
    }
  }
  return out;
}

double branch_losses(const std::vector<double>& r,
                     const std::vector<double>& flows,
                     std::vector<double>& out) {
  out.assign(flows.size(), 0.0);
  double total = 0.0;
  for (std::size_t e = 0; e < flows.size(); ++e) {
    out[e] = r[e] * flows[e] * flows[e];
    total += out[e];
  }
  return total;
}

std::vector<Cut> lloa_cuts(const std::vector<double>& r,
                           const std::vector<double>& flows) {
  std::vector<Cut> out(flows.size());
  for (std::size_t e = 0; e < flows.size(); ++e) out[e] = lloa_cut(r[e], flows[e]);
  return out;
}

std::vector<double> contingency_shortfalls(const std::vector<double>& pg,
                                           const std::vector<double>& reserves,
                                           const std::vector<int>& contingencies) {
  std::vector<double> out;
  out.reserve(contingencies.size());
  for (int c : contingencies) {
    double cover = 0.0;
    for (std::size_t g = 0; g < reserves.size(); ++g) {
      if (static_cast<int>(g) != c) cover += reserves[g];
    }
    out.push_back(std::max(0.0, pg[c] - cover));
  }
  return out;
}

}  // namespace serial

namespace omp {

std::vector<std::vector<double>> ptdf_block(const SusceptanceSystem& sys,
                                            const std::vector<int>& branches) {
  const int n = static_cast<int>(branches.size());
  std::vector<std::vector<double>> out(n);
#pragma omp parallel for schedule(dynamic)
  for (int k = 0; k < n; ++k) out[k] = sys.compute_ptdf_row(branches[k]);
  return out;
}

std::vector<int> screen_flows(const std::vector<double>& flows,
                              const std::vector<double>& limits, double tol) {
  const int n = static_cast<int>(flows.size());
  std::vector<char> hit(n, 0);
#pragma omp parallel for schedule(static)
  for (int e = 0; e < n; ++e) {
    hit[e] = limits[e] > 0.0 && std::abs(flows[e]) > limits[e] + tol;
  }
  std::vector<int> out;
  for (int e = 0; e < n; ++e) {
    if (hit[e]) out.push_back(e);
  }
  return out;
}

double branch_losses(const std::vector<double>& r,
                     const std::vector<double>& flows,
                     std::vector<double>& out) {
  const int n = static_cast<int>(flows.size());
  out.assign(n, 0.0);
#pragma omp parallel for schedule(static)
  for (int e = 0; e < n; ++e) out[e] = r[e] * flows[e] * flows[e];
  // Summed serially so the total is bit-identical to the reference.
  return std::accumulate(out.begin(), out.end(), 0.0);
}

std::vector<Cut> lloa_cuts(const std::vector<double>& r,
                           const std::vector<double>& flows) {
  const int n = static_cast<int>(flows.size());
  std::vector<Cut> out(n);
#pragma omp parallel for schedule(static)
  for (int e = 0; e < n; ++e) out[e] = lloa_cut(r[e], flows[e]);
  return out;
}

std::vector<double> contingency_shortfalls(const std::vector<double>& pg,
                                           const std::vector<double>& reserves,
                                           const std::vector<int>& contingencies) {
  const int n = static_cast<int>(contingencies.size());
  std::vector<double> out(n);
#pragma omp parallel for schedule(static)
  for (int k = 0; k < n; ++k) {
    const int c = contingencies[k];
    double cover = 0.0;
    for (std::size_t g = 0; g < reserves.size(); ++g) {
      if (static_cast<int>(g) != c) cover += reserves[g];
    }
    out[k] = std::max(0.0, pg[c] - cover);
  }
  return out;
}

}  // namespace omp

}  // namespace lineloss::kernels
