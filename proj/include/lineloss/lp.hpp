#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace lineloss::lp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class Sense { kLessEqual, kEqual, kGreaterEqual };

enum class Status {
  kOptimal,
  kInfeasible,
  kUnbounded,
  kIterationLimit,
  kNumericFailure,
};
const char* to_string(Status status);

enum class Backend {
  kAuto,          // simplex for pure LPs, interior point when cones are present
  kDualSimplex,   // LP only; rejects conic constraints
  kInteriorPoint  // LP and rotated-quadratic constraints
};

/// A conic request was sent to a backend that cannot honor it.
class CapabilityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Term {
  int var;
  double coef;
};
using LinearExpr = std::vector<Term>;

struct VariableSpec {
  std::string name;
  double lower = 0.0;
  double upper = kInf;
  double cost = 0.0;
};

struct IndexRange {
  int first = 0;
  int count = 0;
  int operator[](int k) const { return first + k; }
  int end() const { return first + count; }
};

struct ConstraintRef {
  enum class Kind { kLinear, kConic };
  Kind kind = Kind::kLinear;
  int index = -1;
};

enum class BasisStatus : std::int8_t { kBasic, kAtLower, kAtUpper, kFree };

/// Simplex basis snapshot. Rows and columns added after the snapshot was
/// taken are filled in on reuse (new rows basic, new columns at a bound).
struct Basis {
  std::vector<BasisStatus> columns;
  std::vector<BasisStatus> rows;
  bool empty() const { return columns.empty() && rows.empty(); }
};

struct SolveStats {
  int iterations = 0;
  double seconds = 0.0;
  bool warm_started = false;
  Backend backend = Backend::kAuto;
};

struct SolveResult {
  Status status = Status::kNumericFailure;
  std::vector<double> x;             // empty unless optimal
  std::vector<double> row_duals;     // dZ/d(rhs), linear constraints
  std::vector<double> reduced_costs;
  double objective = kInf;
  SolveStats stats;
  Basis basis;                       // simplex backend only
  std::string message;

  bool optimal() const { return status == Status::kOptimal; }
};

struct SolverOptions {
  Backend backend = Backend::kAuto;
  double primal_tolerance = 1e-8;
  double dual_tolerance = 1e-8;
  double gap_tolerance = 1e-8;
  int max_iterations = 200000;
  bool perturb_costs = true;
};

/// Minimization model: linear objective, ranged linear rows, and rotated
/// quadratic constraints  expr >= scale * x_q^2.
class Model {
 public:
  int add_variable(const std::string& name, double lower, double upper,
                   double cost = 0.0);
  IndexRange add_variables(const std::vector<VariableSpec>& specs);

  int add_linear_constraint(const LinearExpr& expr, Sense sense, double rhs,
                            const std::string& name = "");
  int add_range_constraint(const LinearExpr& expr, double lower, double upper,
                           const std::string& name = "");

  /// expr >= scale * x_quad^2. With scale == 0 this is the linear row
  /// expr >= 0 and the returned reference is linear.
  ConstraintRef add_rotated_quadratic(int quad_var, const LinearExpr& expr,
                                      double scale,
                                      const std::string& name = "");

  void set_cost(int var, double cost);
  void set_objective_offset(double offset) { objective_offset_ = offset; }
  void set_variable_bounds(int var, double lower, double upper);
  void set_row_bounds(int row, double lower, double upper);

  int num_variables() const { return static_cast<int>(names_.size()); }
  int num_rows() const { return static_cast<int>(row_lower_.size()); }
  int num_conic() const { return static_cast<int>(cones_.size()); }
  bool has_conic() const { return !cones_.empty(); }

  double lower(int var) const { return lower_.at(var); }
  double upper(int var) const { return upper_.at(var); }
  double cost(int var) const { return cost_.at(var); }
  double objective_offset() const { return objective_offset_; }
  const std::string& variable_name(int var) const { return names_.at(var); }
  const std::string& row_name(int row) const { return row_names_.at(row); }
  const LinearExpr& row(int r) const { return rows_.at(r); }
  double row_lower(int r) const { return row_lower_.at(r); }
  double row_upper(int r) const { return row_upper_.at(r); }

  /// Rows with no terms whose bounds exclude zero.
  const std::vector<int>& trivially_infeasible_rows() const {
    return trivially_infeasible_;
  }

  double row_activity(int r, const std::vector<double>& x) const;
  /// Largest bound, row, or conic violation of point x.
  double max_violation(const std::vector<double>& x) const;
  double objective_value(const std::vector<double>& x) const;

  SolveResult solve(const SolverOptions& options = {},
                    const SolveResult* warm_start = nullptr) const;

  /// CPLEX LP text format.
  void write_lp(std::ostream& out) const;

  struct Cone {
    int quad_var;
    LinearExpr expr;
    double scale;
    std::string name;
  };
  const std::vector<Cone>& cones() const { return cones_; }

 private:
  void check_expr(const LinearExpr& expr) const;
  /// Kelley tangent-cut iteration on the linear relaxation; true when the
  /// cut model becomes infeasible, which certifies the conic model is too.
  bool certify_conic_infeasible(const SolverOptions& options) const;

  std::vector<std::string> names_;
  std::vector<double> lower_;
  std::vector<double> upper_;
  std::vector<double> cost_;
  double objective_offset_ = 0.0;

  std::vector<LinearExpr> rows_;
  std::vector<double> row_lower_;
  std::vector<double> row_upper_;
  std::vector<std::string> row_names_;
  std::vector<int> trivially_infeasible_;

  std::vector<Cone> cones_;
};

}  // namespace lineloss::lp
