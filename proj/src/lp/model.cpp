#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <ostream>
#include <sstream>

#include "backends.hpp"
#include "lineloss/lp.hpp"

namespace lineloss::lp {

const char* to_string(Status status) {
  switch (status) {
    case Status::kOptimal:
      return "optimal";
    case Status::kInfeasible:
      return "infeasible";
    case Status::kUnbounded:
      return "unbounded";
    case Status::kIterationLimit:
      return "iteration-limit";
    case Status::kNumericFailure:
      return "numeric-failure";
  }
  return "?";
}

int Model::add_variable(const std::string& name, double lower, double upper,
                        double cost) {
  if (std::isnan(lower) || std::isnan(upper) || lower > upper) {
    throw std::invalid_argument("variable '" + name + "': reversed bounds");
  }
  names_.push_back(name);
  lower_.push_back(lower);
  upper_.push_back(upper);
  cost_.push_back(cost);
  return num_variables() - 1;
}

IndexRange Model::add_variables(const std::vector<VariableSpec>& specs) {
  for (const auto& s : specs) {
    if (std::isnan(s.lower) || std::isnan(s.upper) || s.lower > s.upper) {
      throw std::invalid_argument("variable '" + s.name + "': reversed bounds");
    }
  }
  IndexRange range{num_variables(), static_cast<int>(specs.size())};
  for (const auto& s : specs) add_variable(s.name, s.lower, s.upper, s.cost);
  return range;
}

void Model::check_expr(const LinearExpr& expr) const {
  for (const Term& t : expr) {
    if (t.var < 0 || t.var >= num_variables()) {
      throw std::out_of_range("unknown variable index " +
                              std::to_string(t.var));
    }
    if (!std::isfinite(t.coef)) {
      throw std::invalid_argument("non-finite coefficient");
    }
  }
}

int Model::add_linear_constraint(const LinearExpr& expr, Sense sense,
                                 double rhs, const std::string& name) {
  switch (sense) {
    case Sense::kLessEqual:
      return add_range_constraint(expr, -kInf, rhs, name);
    case Sense::kEqual:
      return add_range_constraint(expr, rhs, rhs, name);
    case Sense::kGreaterEqual:
      return add_range_constraint(expr, rhs, kInf, name);
  }
  return -1;
}

int Model::add_range_constraint(const LinearExpr& expr, double lower,
                                double upper, const std::string& name) {
  check_expr(expr);
  if (std::isnan(lower) || std::isnan(upper) || lower > upper) {
    throw std::invalid_argument("row '" + name + "': reversed bounds");
  }
  // Merge duplicate indices so the row is canonical.
  LinearExpr merged = expr;
  std::sort(merged.begin(), merged.end(),
            [](const Term& a, const Term& b) { return a.var < b.var; });
  LinearExpr row;
  for (const Term& t : merged) {
    if (!row.empty() && row.back().var == t.var) {
      row.back().coef += t.coef;
    } else {
      row.push_back(t);
    }
  }
  std::erase_if(row, [](const Term& t) { return t.coef == 0.0; });

  const int index = num_rows();
  if (row.empty() && (lower > 0.0 || upper < 0.0)) {
    trivially_infeasible_.push_back(index);
  }
  rows_.push_back(std::move(row));
  row_lower_.push_back(lower);
  row_upper_.push_back(upper);
  row_names_.push_back(name.empty() ? "r" + std::to_string(index) : name);
  return index;
}

ConstraintRef Model::add_rotated_quadratic(int quad_var, const LinearExpr& expr,
                                           double scale,
                                           const std::string& name) {
  if (quad_var < 0 || quad_var >= num_variables()) {
    throw std::out_of_range("unknown variable index " +
                            std::to_string(quad_var));
  }
  if (!(scale >= 0.0) || !std::isfinite(scale)) {
    throw std::invalid_argument("quadratic scale must be finite and >= 0");
  }
  check_expr(expr);
  if (scale == 0.0) {
    return {ConstraintRef::Kind::kLinear,
            add_linear_constraint(expr, Sense::kGreaterEqual, 0.0, name)};
  }
  const int index = num_conic();
  cones_.push_back(
      {quad_var, expr, scale, name.empty() ? "q" + std::to_string(index) : name});
  return {ConstraintRef::Kind::kConic, index};
}

void Model::set_cost(int var, double cost) { cost_.at(var) = cost; }

void Model::set_variable_bounds(int var, double lower, double upper) {
  if (std::isnan(lower) || std::isnan(upper) || lower > upper) {
    throw std::invalid_argument("reversed bounds");
  }
  lower_.at(var) = lower;
  upper_.at(var) = upper;
}

void Model::set_row_bounds(int row, double lower, double upper) {
  if (std::isnan(lower) || std::isnan(upper) || lower > upper) {
    throw std::invalid_argument("reversed bounds");
  }
  row_lower_.at(row) = lower;
  row_upper_.at(row) = upper;
  std::erase(trivially_infeasible_, row);
  if (rows_[row].empty() && (lower > 0.0 || upper < 0.0)) {
    trivially_infeasible_.push_back(row);
    std::sort(trivially_infeasible_.begin(), trivially_infeasible_.end());
  }
}

double Model::row_activity(int r, const std::vector<double>& x) const {
  double sum = 0.0;
  for (const Term& t : rows_.at(r)) sum += t.coef * x.at(t.var);
  return sum;
}

double Model::max_violation(const std::vector<double>& x) const {
  double worst = 0.0;
  for (int j = 0; j < num_variables(); ++j) {
    worst = std::max({worst, lower_[j] - x.at(j), x.at(j) - upper_[j]});
  }
  for (int r = 0; r < num_rows(); ++r) {
    const double v = row_activity(r, x);
    worst = std::max({worst, row_lower_[r] - v, v - row_upper_[r]});
  }
  for (const Cone& c : cones_) {
    double lhs = 0.0;
    for (const Term& t : c.expr) lhs += t.coef * x.at(t.var);
    const double q = x.at(c.quad_var);
    worst = std::max(worst, c.scale * q * q - lhs);
  }
  return worst;
}

double Model::objective_value(const std::vector<double>& x) const {
  double z = objective_offset_;
  for (int j = 0; j < num_variables(); ++j) z += cost_[j] * x.at(j);
  return z;
}

namespace detail {

LpData extract_lp(const Model& model) {
  LpData d;
  d.n = model.num_variables();
  d.m = model.num_rows();
  std::vector<Eigen::Triplet<double>> triplets;
  for (int r = 0; r < d.m; ++r) {
    for (const Term& t : model.row(r)) triplets.emplace_back(r, t.var, t.coef);
    d.row_lower.push_back(model.row_lower(r));
    d.row_upper.push_back(model.row_upper(r));
  }
  d.a.resize(d.m, d.n);
  d.a.setFromTriplets(triplets.begin(), triplets.end());
  d.a.makeCompressed();
  for (int j = 0; j < d.n; ++j) {
    d.cost.push_back(model.cost(j));
    d.col_lower.push_back(model.lower(j));
    d.col_upper.push_back(model.upper(j));
  }
  return d;
}

}  // namespace detail

SolveResult Model::solve(const SolverOptions& options,
                         const SolveResult* warm_start) const {
  const auto start = std::chrono::steady_clock::now();
  SolveResult result;
  Backend backend = options.backend;
  if (backend == Backend::kAuto) {
    backend = has_conic() ? Backend::kInteriorPoint : Backend::kDualSimplex;
  }
  if (backend == Backend::kDualSimplex && has_conic()) {
    throw CapabilityError(
        "dual simplex backend cannot enforce rotated quadratic constraints");
  }
  result.stats.backend = backend;

  auto finish = [&](SolveResult& r) -> SolveResult& {
    r.stats.seconds = std::chrono::duration<double>(
                          std::chrono::steady_clock::now() - start)
                          .count();
    return r;
  };

  if (!trivially_infeasible_.empty()) {
    result.status = Status::kInfeasible;
    result.message = "row '" + row_names_[trivially_infeasible_.front()] +
                     "' is empty with a nonzero bound";
    return finish(result);
  }

  const detail::LpData data = detail::extract_lp(*this);
  detail::BackendResult out;
  if (backend == Backend::kDualSimplex) {
    const Basis* basis = nullptr;
    if (warm_start != nullptr && !warm_start->basis.empty()) {
      basis = &warm_start->basis;
      result.stats.warm_started = true;
    }
    out = detail::solve_dual_simplex(data, options, basis);
  } else {
    out = detail::solve_interior_point(data, cones_, options);
    // Interior point methods do not prove infeasibility; an infeasible
    // outer approximation does.
    if (out.status != Status::kOptimal && has_conic() &&
        certify_conic_infeasible(options)) {
      out.status = Status::kInfeasible;
      out.message = "outer approximation of the conic constraints is infeasible";
    }
  }

  result.status = out.status;
  result.stats.iterations = out.iterations;
  result.message = out.message;
  result.basis = std::move(out.basis);
  if (out.status == Status::kOptimal) {
    result.x = std::move(out.x);
    result.row_duals = std::move(out.row_duals);
    result.reduced_costs = std::move(out.reduced_costs);
    result.objective = objective_value(result.x);
  }
  return finish(result);
}

bool Model::certify_conic_infeasible(const SolverOptions& options) const {
  Model relaxed = *this;
  relaxed.cones_.clear();
  SolverOptions lp_options = options;
  lp_options.backend = Backend::kDualSimplex;
  SolveResult last;
  for (int round = 0; round < 100; ++round) {
    SolveResult r = relaxed.solve(lp_options, round > 0 ? &last : nullptr);
    if (r.status == Status::kInfeasible) return true;
    if (r.status != Status::kOptimal) return false;
    bool added = false;
    for (const Cone& c : cones_) {
      double lhs = 0.0;
      for (const Term& t : c.expr) lhs += t.coef * r.x[t.var];
      const double q0 = r.x[c.quad_var];
      if (c.scale * q0 * q0 - lhs <= 1e-9 * (1.0 + std::abs(lhs))) continue;
      // Tangent of scale * q^2 at q0.
      LinearExpr cut = c.expr;
      cut.push_back({c.quad_var, -2.0 * c.scale * q0});
      relaxed.add_linear_constraint(cut, Sense::kGreaterEqual,
                                    -c.scale * q0 * q0);
      added = true;
    }
    if (!added) return false;
    last = std::move(r);
  }
  return false;
}

namespace {

std::string lp_name(const std::string& raw) {
  std::string out;
  for (char c : raw) {
    const bool ok = std::isalnum(static_cast<unsigned char>(c)) || c == '_' ||
                    c == '.' || c == '[' || c == ']';
    out.push_back(ok ? c : '_');
  }
  if (out.empty() || std::isdigit(static_cast<unsigned char>(out[0])) ||
      out[0] == '.') {
    out.insert(out.begin(), '_');
  }
  return out;
}

void write_expr(std::ostream& out, const LinearExpr& expr,
                const std::vector<std::string>& names) {
  if (expr.empty()) {
    out << " 0 " << names.front();
    return;
  }
  for (const Term& t : expr) {
    out << (t.coef < 0 ? " - " : " + ") << std::abs(t.coef) << ' '
        << names[t.var];
  }
}

void write_bound(std::ostream& out, double v) {
  if (v == kInf) {
    out << "+inf";
  } else if (v == -kInf) {
    out << "-inf";
  } else {
    out << v;
  }
}

}  // namespace

void Model::write_lp(std::ostream& out) const {
  const auto old_precision = out.precision(17);
  std::vector<std::string> names;
  names.reserve(names_.size());
  for (int j = 0; j < num_variables(); ++j) {
    names.push_back(lp_name(names_[j]) + "#" + std::to_string(j));
  }
  if (names.empty()) names.push_back("_empty");

  out << "\\ objective offset " << objective_offset_ << "\nMinimize\n obj:";
  bool any = false;
  for (int j = 0; j < num_variables(); ++j) {
    if (cost_[j] == 0.0) continue;
    out << (cost_[j] < 0 ? " - " : " + ") << std::abs(cost_[j]) << ' '
        << names[j];
    any = true;
  }
  if (!any) out << " 0 " << names.front();
  out << "\nSubject To\n";
  for (int r = 0; r < num_rows(); ++r) {
    const std::string name = lp_name(row_names_[r]) + "#" + std::to_string(r);
    const double lo = row_lower_[r];
    const double hi = row_upper_[r];
    if (lo == hi) {
      out << ' ' << name << ':';
      write_expr(out, rows_[r], names);
      out << " = " << lo << '\n';
      continue;
    }
    if (lo > -kInf) {
      out << ' ' << name << (hi < kInf ? "_lo:" : ":");
      write_expr(out, rows_[r], names);
      out << " >= " << lo << '\n';
    }
    if (hi < kInf) {
      out << ' ' << name << (lo > -kInf ? "_hi:" : ":");
      write_expr(out, rows_[r], names);
      out << " <= " << hi << '\n';
    }
  }
  for (std::size_t k = 0; k < cones_.size(); ++k) {
    const Cone& c = cones_[k];
    out << ' ' << lp_name(c.name) << "#q" << k << ':';
    LinearExpr neg = c.expr;
    for (Term& t : neg) t.coef = -t.coef;
    write_expr(out, neg, names);
    out << " + [ " << c.scale << ' ' << names[c.quad_var] << " ^2 ] <= 0\n";
  }
  out << "Bounds\n";
  for (int j = 0; j < num_variables(); ++j) {
    const double lo = lower_[j];
    const double hi = upper_[j];
    if (lo == -kInf && hi == kInf) {
      out << ' ' << names[j] << " free\n";
    } else if (lo == hi) {
      out << ' ' << names[j] << " = " << lo << '\n';
    } else {
      out << ' ';
      write_bound(out, lo);
      out << " <= " << names[j] << " <= ";
      write_bound(out, hi);
      out << '\n';
    }
  }
  out << "End\n";
  out.precision(old_precision);
}

}  // namespace lineloss::lp
