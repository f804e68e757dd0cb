#pragma once

#include <vector>

#include "lineloss/dispatch.hpp"
#include "lineloss/matrix_kernel.hpp"

// Data-parallel building blocks. Each kernel exists in a serial reference
// form and an OpenMP form with identical results; callers use the omp
// versions and tests compare the two.
namespace lineloss::kernels {

namespace serial {

/// PTDF rows for the listed branches.
std::vector<std::vector<double>> ptdf_block(const SusceptanceSystem& sys,
                                            const std::vector<int>& branches);

/// Branches with a positive limit whose |flow| exceeds limit + tol, ascending.
std::vector<int> screen_flows(const std::vector<double>& flows,
                              const std::vector<double>& limits, double tol);

/// Per-branch r f^2 written to `out`; returns the total.
double branch_losses(const std::vector<double>& r,
                     const std::vector<double>& flows,
                     std::vector<double>& out);

/// Tangent cuts at the given flows.
std::vector<Cut> lloa_cuts(const std::vector<double>& r,
                           const std::vector<double>& flows);

/// For each contingency c: max(0, pg_c - sum of reserves of the other units).
std::vector<double> contingency_shortfalls(const std::vector<double>& pg,
                                           const std::vector<double>& reserves,
                                           const std::vector<int>& contingencies);

}  // namespace serial

namespace omp {

std::vector<std::vector<double>> ptdf_block(const SusceptanceSystem& sys,
                                            const std::vector<int>& branches);
std::vector<int> screen_flows(const std::vector<double>& flows,
                              const std::vector<double>& limits, double tol);
double branch_losses(const std::vector<double>& r,
                     const std::vector<double>& flows,
                     std::vector<double>& out);
std::vector<Cut> lloa_cuts(const std::vector<double>& r,
                           const std::vector<double>& flows);
std::vector<double> contingency_shortfalls(const std::vector<double>& pg,
                                           const std::vector<double>& reserves,
                                           const std::vector<int>& contingencies);

}  // namespace omp

}  // namespace lineloss::kernels
