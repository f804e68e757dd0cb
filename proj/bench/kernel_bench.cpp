#include <benchmark/benchmark.h>

#include <filesystem>
#include <random>

#include "lineloss/case_io.hpp"
#include "lineloss/harness.hpp"
#include "lineloss/kernels.hpp"

using namespace lineloss;
namespace ks = lineloss::kernels::serial;
namespace ko = lineloss::kernels::omp;

namespace {

std::filesystem::path case_file(const char* name) {
  return std::filesystem::path(LINELOSS_DATA_DIR) / (std::string(name) + ".m");
}

struct BranchData {
  std::vector<double> r, flows, limits;
};

BranchData random_branches(std::size_t n) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-2.0, 2.0), pos(0.0, 0.05);
  BranchData d;
  for (std::size_t k = 0; k < n; ++k) {
    d.r.push_back(pos(rng));
    d.flows.push_back(u(rng));
    d.limits.push_back(1.5);
  }
  return d;
}

template <bool Parallel>
void BM_PtdfBlock(benchmark::State& state) {
  const PowerNetwork net = load_case(case_file("case118"));
  const auto sys = factorize(net);
  for (auto _ : state) {
    auto rows = Parallel ? ko::ptdf_block(*sys, sys->branches())
                         : ks::ptdf_block(*sys, sys->branches());
    benchmark::DoNotOptimize(rows);
  }
}

template <bool Parallel>
void BM_LossesAndCuts(benchmark::State& state) {
  const BranchData d = random_branches(static_cast<std::size_t>(state.range(0)));
  std::vector<double> per_branch;
  for (auto _ : state) {
    double total = Parallel ? ko::branch_losses(d.r, d.flows, per_branch)
                            : ks::branch_losses(d.r, d.flows, per_branch);
    auto cuts = Parallel ? ko::lloa_cuts(d.r, d.flows) : ks::lloa_cuts(d.r, d.flows);
    auto over = Parallel ? ko::screen_flows(d.flows, d.limits, 1e-7)
                         : ks::screen_flows(d.flows, d.limits, 1e-7);
    benchmark::DoNotOptimize(total);
    benchmark::DoNotOptimize(cuts);
    benchmark::DoNotOptimize(over);
  }
}

template <bool Parallel>
void BM_Contingencies(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  const BranchData d = random_branches(n);
  std::vector<int> all(n);
  for (std::size_t g = 0; g < n; ++g) all[g] = static_cast<int>(g);
  for (auto _ : state) {
    auto s = Parallel ? ko::contingency_shortfalls(d.limits, d.r, all)
                      : ks::contingency_shortfalls(d.limits, d.r, all);
    benchmark::DoNotOptimize(s);
  }
}

template <bool Parallel>
void BM_Sweep(benchmark::State& state) {
  SweepConfig cfg;
  cfg.cases = {case_file("case30")};
  cfg.alphas = {0.95, 1.0, 1.05};
  cfg.seeds = {1, 2};
  cfg.parallel = Parallel;
  for (auto _ : state) {
    SweepResult res = run_sweep(cfg);
    benchmark::DoNotOptimize(res);
  }
}

}  // namespace

BENCHMARK(BM_PtdfBlock<false>)->Name("ptdf_block/serial");
BENCHMARK(BM_PtdfBlock<true>)->Name("ptdf_block/omp");
BENCHMARK(BM_LossesAndCuts<false>)->Name("losses_cuts/serial")->Arg(1000)->Arg(100000);
BENCHMARK(BM_LossesAndCuts<true>)->Name("losses_cuts/omp")->Arg(1000)->Arg(100000);
BENCHMARK(BM_Contingencies<false>)->Name("contingencies/serial")->Arg(300);
BENCHMARK(BM_Contingencies<true>)->Name("contingencies/omp")->Arg(300);
BENCHMARK(BM_Sweep<false>)->Name("sweep/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Sweep<true>)->Name("sweep/omp")->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
