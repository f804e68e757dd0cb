#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "lineloss/dispatch.hpp"
#include "lineloss/matrix_kernel.hpp"
#include "lineloss/network.hpp"
#include "lineloss/sced.hpp"

namespace lineloss {

/// 100 (method - reference) / |reference|. Throws std::invalid_argument for a
/// zero reference.
double objective_gap(double method_obj, double reference_obj);

/// Mean absolute per-generator difference. Throws std::invalid_argument on a
/// length mismatch or empty vectors.
double dispatch_mae(const std::vector<double>& pg,
                    const std::vector<double>& pg_ref);

/// `count` log-normal draws with arithmetic mean `alpha` and standard
/// deviation `sigma`. sigma = 0 returns exactly alpha.
std::vector<double> load_noise(std::size_t count, double alpha, double sigma,
                               std::uint64_t seed);

/// Every bus demand (pd and qd) multiplied by its own load_noise draw.
/// Throws std::invalid_argument for alpha <= 0 or sigma < 0.
PowerNetwork perturb_loads(const PowerNetwork& net, double alpha, double sigma,
                           std::uint64_t seed);

/// Largest |p_fwd| difference between the solution's flows and the lossy
/// angle-model flows at the same dispatch (losses r f^2 withdrawn at the
/// to bus, slack absorbing the balance).
double flow_discrepancy(const PowerNetwork& net, const SusceptanceSystem& sys,
                        const DispatchSolution& sol);

struct MetricRow {
  std::string case_name;
  std::string method;
  double alpha = 1.0;
  std::uint64_t seed = 0;
  double objective = 0.0;
  double gap_percent = 0.0;
  double mae = 0.0;            // pu
  double loss_estimate = 0.0;  // pu, what the model accounts for
  double loss_true = 0.0;      // pu, sum r p_fwd^2
  double flow_discrepancy = 0.0;
  int iterations = 0;
  double solve_seconds = 0.0;
};

struct Exclusion {
  std::string case_name;
  std::string method;
  double alpha = 1.0;
  std::uint64_t seed = 0;
  std::string reason;
};

/// Metrics of `sol` against a reference objective and dispatch.
MetricRow compute_metrics(const PowerNetwork& net, const SusceptanceSystem& sys,
                          const DispatchSolution& sol, double reference_objective,
                          const std::vector<double>& reference_pg);

struct SweepConfig {
  std::vector<std::filesystem::path> cases;
  std::vector<Method> methods{Method::kDc, Method::kLllf, Method::kLlqcp,
                              Method::kLloa};
  Method reference = Method::kLlqcp;
  std::vector<double> alphas{0.90, 0.92, 0.94, 0.96, 0.98, 1.00,
                             1.02, 1.04, 1.06, 1.08, 1.10};
  double sigma = 0.05;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  DispatchOptions options;
  std::optional<ScedConfig> sced;  // SCED instances instead of plain OPF
  bool parallel = true;

  /// Throws std::invalid_argument for empty lists, alpha <= 0 or sigma < 0.
  void validate() const;
};

/// Keys: cases, methods, reference, alphas (list or {start, stop, step}),
/// sigma, seeds (count or list), epsilon, cost_segments, sced, parallel.
/// Relative case paths are resolved against `base_dir`. Unknown keys throw.
SweepConfig sweep_config_from_json(const nlohmann::json& j,
                                   const std::filesystem::path& base_dir = {});

struct SeriesPoint {
  std::string case_name;
  std::string method;
  double alpha = 1.0;
  int count = 0;
  double gap_mean = 0.0;
  double gap_std = 0.0;
  double mae_mean = 0.0;
  double mae_std = 0.0;
  double loss_mean = 0.0;
  double loss_std = 0.0;
};

struct SweepResult {
  std::vector<MetricRow> rows;  // sorted by case, alpha, seed, method order
  std::vector<Exclusion> exclusions;
  std::vector<SeriesPoint> series;
  std::vector<std::string> trend_flags;  // mean estimated loss decreasing in alpha
  std::size_t total_instances = 0;
};

SweepResult run_sweep(const SweepConfig& cfg);

/// Per (case, method, alpha) means and sample standard deviations over seeds.
/// Only groups with at least one row appear.
std::vector<SeriesPoint> seed_averages(const std::vector<MetricRow>& rows,
                                       const std::vector<Method>& order);
std::vector<std::string> loss_trend_flags(const std::vector<SeriesPoint>& series);

void write_metrics_csv(std::ostream& out, const std::vector<MetricRow>& rows);
/// Timing kept apart so the metric CSV is reproducible byte for byte.
void write_timing_csv(std::ostream& out, const std::vector<MetricRow>& rows);
void write_exclusions_csv(std::ostream& out, const std::vector<Exclusion>& rows);
void write_series_csv(std::ostream& out, const std::vector<SeriesPoint>& series);
void write_metrics_table(std::ostream& out, const std::vector<MetricRow>& rows);

nlohmann::json metric_row_to_json(const MetricRow& row);
MetricRow metric_row_from_json(const nlohmann::json& j);
nlohmann::json sweep_to_json(const SweepResult& result);
SweepResult sweep_from_json(const nlohmann::json& j);

struct DiffEntry {
  int generator = 0;
  double pmax = 0.0;
  double diff = 0.0;  // pg - pg_ref
};

struct DiffProfile {
  std::vector<DiffEntry> profile;   // in-service units by increasing pmax
  std::vector<DiffEntry> filtered;  // |diff| > threshold, same order
  double threshold = 1e-3;
  double identical_share = 100.0;   // percent of units within threshold
  std::vector<double> bin_edges;    // histogram of filtered diffs
  std::vector<int> bin_counts;
};

/// Throws std::invalid_argument when the vectors do not match the network.
DiffProfile generator_diff_profile(const PowerNetwork& net,
                                   const std::vector<double>& pg,
                                   const std::vector<double>& pg_ref,
                                   double threshold = 1e-3, int bins = 10);
void write_diff_profile_csv(std::ostream& out, const DiffProfile& profile);

}  // namespace lineloss
