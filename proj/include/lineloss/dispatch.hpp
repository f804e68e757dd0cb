#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "lineloss/lp.hpp"
#include "lineloss/matrix_kernel.hpp"
#include "lineloss/network.hpp"

namespace lineloss {

enum class Method { kDc, kLllf, kLlqcp, kLloa };
const char* to_string(Method method);
/// Accepts "dc", "lllf", "llqcp", "lloa"; throws std::invalid_argument.
Method parse_method(const std::string& text);

enum class Variant { kAngle, kPtdf };

/// Generator cost as LP data: cost(pmin) plus consecutive segments of
/// (width, price) covering [pmin, pmax] with nondecreasing prices.
struct CostSegments {
  double base_cost = 0.0;
  std::vector<double> widths;
  std::vector<double> prices;
};

/// Quadratic costs become `segments` uniform pieces; piecewise-linear costs
/// keep their breakpoints (clipped to [pmin, pmax]); linear costs one piece.
CostSegments piecewise_cost(const Generator& gen, int segments);

struct DispatchSolution {
  Method method = Method::kDc;
  lp::Status status = lp::Status::kNumericFailure;
  std::string message;
  std::vector<double> pg;         // per generator; 0 when out of service
  std::vector<double> injection;  // per bus, generation minus demand
  std::vector<double> p_fwd;      // per branch, from-end flow
  std::vector<double> p_bwd;      // per branch, to-end flow into the branch
  std::vector<double> loss_est;   // per branch loss the model accounts for
  double total_loss = 0.0;        // l_tot
  std::vector<double> angles;     // angle formulations only
  double objective = lp::kInf;
  int iterations = 0;
  int lazy_rounds = 0;
  double solve_seconds = 0.0;  // solver time; excludes model and PTDF setup
  std::vector<std::string> flags;
  std::vector<double> lp_values;  // final LP primal, for model extensions

  bool optimal() const { return status == lp::Status::kOptimal; }
  bool has_flag(const std::string& flag) const;
};

struct LossFactorData {
  std::vector<double> lf;     // per bus
  double offset = 0.0;        // l0
  std::vector<double> dist;   // D, per bus
  std::vector<double> ref_flows;   // per branch
  std::vector<double> ref_losses;  // per branch, r f_ref^2
  double ref_total = 0.0;
  bool uniform_distribution = false;  // reference losses were all zero
};

/// Variable and row indices of a built dispatch model, for extensions.
struct DispatchModel {
  lp::Model model;
  Method method = Method::kDc;
  Variant variant = Variant::kAngle;
  std::vector<int> pg;                 // per generator, -1 if out of service
  std::vector<std::vector<int>> segments;
  std::vector<int> theta;              // angle variant
  std::vector<int> p_fwd;              // angle variant, per branch
  std::vector<int> p_bwd;              // loss methods, per branch
  std::vector<int> balance_rows;       // per bus (angle) or one row (PTDF)
  std::vector<int> balance_slack_up;   // soft balance, paired with rows
  std::vector<int> balance_slack_down;
  std::vector<int> thermal_slack;      // soft thermal, per branch, -1 if none
  std::vector<int> thermal_rows;       // PTDF variant: lazily added branches
  int total_loss = -1;                 // LLLF l_tot
  int cut_count = 0;                   // LLOA / static OA tangent rows
  int floor_count = 0;                 // LLOA l >= 0 rows
};

/// Called after each LP solve inside every method loop. Returns the number of
/// rows it added; the loop re-solves (warm) while rows keep being added.
using LazyCallback =
    std::function<int(DispatchModel&, const lp::SolveResult&)>;
/// Called once after the base model is built, before the first solve.
using ModelExtension = std::function<void(DispatchModel&)>;

enum class ConicMode { kInteriorPoint, kStaticOuterApproximation };

struct DispatchOptions {
  Variant variant = Variant::kAngle;  // vanilla DC only
  int cost_segments = 10;
  lp::SolverOptions solver;

  // Soft constraints; a penalty <= 0 keeps the constraint hard. Prices are
  // per pu of violation.
  double balance_penalty = 0.0;
  double transmission_penalty = 0.0;

  // LLQCP
  ConicMode conic_mode = ConicMode::kInteriorPoint;
  int oa_tangents = 64;

  // LLOA
  double epsilon = 1e-3;
  bool warm_start = true;
  int max_iterations = 50;
  std::vector<std::vector<double>> seed_points;  // per-branch flow vectors

  // LLLF and PTDF lazy thermal rows
  int max_lazy_rounds = 50;

  ModelExtension extension;
  LazyCallback lazy;
};

struct LloaIteration {
  int k = 0;
  double objective = 0.0;
  double delta = 0.0;  // +inf on the first entry
  int cut_count = 0;
  bool seed = false;   // the lossless solve that provides warm-start points
};

struct LloaResult {
  DispatchSolution solution;
  std::vector<LloaIteration> trace;
};

DispatchSolution solve_vanilla_dc(const PowerNetwork& net,
                                  const DispatchOptions& options = {});
DispatchSolution solve_vanilla_dc(const PowerNetwork& net,
                                  const SusceptanceSystem& sys,
                                  const DispatchOptions& options);

/// Loss factors around reference injections `p_ref` (per bus). Reference
/// imbalance is absorbed by the slack bus when computing reference flows.
LossFactorData compute_loss_factors(const PowerNetwork& net,
                                    const SusceptanceSystem& sys,
                                    const std::vector<double>& p_ref);

DispatchSolution solve_lllf(const PowerNetwork& net,
                            const SusceptanceSystem& sys,
                            const LossFactorData& lf,
                            const DispatchOptions& options = {});
/// Convenience: lossless DC reference, loss factors, then LLLF.
DispatchSolution solve_lllf(const PowerNetwork& net,
                            const DispatchOptions& options = {});

DispatchSolution solve_llqcp(const PowerNetwork& net,
                             const DispatchOptions& options = {});

struct Cut {
  double slope = 0.0;      // 2 r p_ref
  double intercept = 0.0;  // -r p_ref^2
};
/// Tangent of r p^2 at p_ref: loss >= intercept + slope * p_fwd.
Cut lloa_cut(double r, double p_ref);

LloaResult solve_lloa(const PowerNetwork& net,
                      const DispatchOptions& options = {});

/// Dispatch by method with default wiring (factorization, references).
DispatchSolution solve_dispatch(const PowerNetwork& net, Method method,
                                const DispatchOptions& options = {});

struct TrueLosses {
  std::vector<double> per_branch;  // r p_fwd^2
  double total = 0.0;
};
TrueLosses estimate_true_losses(const DispatchSolution& sol,
                                const PowerNetwork& net);

/// Static outer-approximation error bound r * (spacing / 2)^2 for H tangents
/// spread uniformly over [-t_max, t_max].
double static_oa_error_bound(double r, double t_max, int tangents);

nlohmann::json solution_to_json(const DispatchSolution& sol,
                                const PowerNetwork& net);
DispatchSolution solution_from_json(const nlohmann::json& j,
                                    const PowerNetwork& net);

}  // namespace lineloss
