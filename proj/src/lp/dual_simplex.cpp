// Bounded dual simplex with dual steepest-edge pricing, a Harris ratio test,
// and a primal simplex clean-up phase. The working problem is
//   [A  -I] [x; s] = 0,  col bounds on x,  row bounds on the logicals s.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>

#include <Eigen/SparseLU>

#include "backends.hpp"

namespace lineloss::lp::detail {
namespace {

using SpMat = Eigen::SparseMatrix<double>;
using RowMat = Eigen::SparseMatrix<double, Eigen::RowMajor>;
using Vec = Eigen::VectorXd;

double pow2_scale(double value) {
  if (!(value > 0.0) || !std::isfinite(value)) return 1.0;
  return std::exp2(std::round(std::log2(value)));
}

struct Scaling {
  std::vector<double> row;  // scaled row i = row[i] * original row i
  std::vector<double> col;  // x_j = col[j] * scaled x_j
  double objective = 1.0;   // scaled cost = objective * col[j] * cost_j
};

/// Row then column max-norm equilibration, restricted to powers of two so the
/// scaling itself introduces no rounding.
Scaling scale_problem(LpData& d) {
  Scaling s;
  s.row.assign(d.m, 0.0);
  s.col.assign(d.n, 0.0);
  for (int j = 0; j < d.n; ++j) {
    for (SpMat::InnerIterator it(d.a, j); it; ++it) {
      s.row[it.row()] = std::max(s.row[it.row()], std::abs(it.value()));
    }
  }
  for (double& r : s.row) r = r > 0.0 ? pow2_scale(1.0 / r) : 1.0;
  for (int j = 0; j < d.n; ++j) {
    double big = 0.0;
    for (SpMat::InnerIterator it(d.a, j); it; ++it) {
      big = std::max(big, std::abs(it.value()) * s.row[it.row()]);
    }
    s.col[j] = big > 0.0 ? pow2_scale(1.0 / big) : 1.0;
  }
  for (int j = 0; j < d.n; ++j) {
    for (SpMat::InnerIterator it(d.a, j); it; ++it) {
      it.valueRef() *= s.row[it.row()] * s.col[j];
    }
  }
  double cmax = 0.0;
  for (int j = 0; j < d.n; ++j) {
    d.cost[j] *= s.col[j];
    cmax = std::max(cmax, std::abs(d.cost[j]));
  }
  s.objective = cmax > 0.0 ? pow2_scale(1.0 / cmax) : 1.0;
  for (double& c : d.cost) c *= s.objective;
  for (int j = 0; j < d.n; ++j) {
    d.col_lower[j] /= s.col[j];
    d.col_upper[j] /= s.col[j];
  }
  for (int i = 0; i < d.m; ++i) {
    d.row_lower[i] *= s.row[i];
    d.row_upper[i] *= s.row[i];
  }
  return s;
}

class Simplex {
 public:
  Simplex(const LpData& d, const SolverOptions& options)
      : d_(d),
        rows_(d.a),
        n_(d.n),
        m_(d.m),
        total_(d.n + d.m),
        primal_tol_(std::min(options.primal_tolerance, 1e-9)),
        dual_tol_(std::min(options.dual_tolerance, 1e-9)),
        max_iterations_(options.max_iterations),
        perturb_(options.perturb_costs) {
    lo_.resize(total_);
    hi_.resize(total_);
    cost_.assign(total_, 0.0);
    for (int j = 0; j < n_; ++j) {
      lo_[j] = d.col_lower[j];
      hi_[j] = d.col_upper[j];
      cost_[j] = d.cost[j];
    }
    for (int i = 0; i < m_; ++i) {
      lo_[n_ + i] = d.row_lower[i];
      hi_[n_ + i] = d.row_upper[i];
    }
    original_cost_ = cost_;
    x_.assign(total_, 0.0);
    dj_.assign(total_, 0.0);
    status_.assign(total_, BasisStatus::kAtLower);
    position_.assign(total_, -1);
    head_.assign(m_, -1);
    dse_.assign(m_, 1.0);
    alpha_row_.assign(total_, 0.0);
  }

  BackendResult run(const Basis* warm) {
    BackendResult out;
    if (!(warm && load_basis(*warm) && refactor())) {
      slack_basis();
      if (!refactor()) return fail(out, "slack basis factorization failed");
    }
    compute_primal();
    compute_duals();

    Status status = Status::kNumericFailure;
    for (int round = 0; round < 6; ++round) {
      if (perturb_ && round == 0) perturb_costs();
      make_dual_feasible();
      status = dual_phase();
      if (status != Status::kOptimal) break;
      cost_ = original_cost_;
      if (!refactor()) return fail(out, "basis became singular");
      compute_primal();
      compute_duals();
      if (max_primal_infeasibility() > primal_tol_) continue;
      if (max_dual_infeasibility() <= dual_tol_) break;
      status = primal_phase();
      if (status != Status::kOptimal) break;
      if (!refactor()) return fail(out, "basis became singular");
      compute_primal();
      compute_duals();
      if (max_primal_infeasibility() <= primal_tol_ &&
          max_dual_infeasibility() <= dual_tol_) {
        break;
      }
      status = Status::kNumericFailure;
    }
    out.status = status;
    out.iterations = iterations_;
    if (status == Status::kNumericFailure && out.message.empty()) {
      out.message = "simplex did not reach a clean optimum";
    }
    if (status == Status::kInfeasible) out.message = "primal infeasible";
    if (status == Status::kUnbounded) out.message = "primal unbounded";
    if (status == Status::kIterationLimit) out.message = "iteration limit";
    if (status == Status::kOptimal) extract(out);
    out.basis.columns.assign(status_.begin(), status_.begin() + n_);
    out.basis.rows.assign(status_.begin() + n_, status_.end());
    return out;
  }

 private:
  static constexpr int kRefactorInterval = 80;
  static constexpr double kPivotTol = 1e-9;

  BackendResult& fail(BackendResult& out, const std::string& why) {
    out.status = Status::kNumericFailure;
    out.message = why;
    out.iterations = iterations_;
    return out;
  }

  bool finite_lo(int j) const { return lo_[j] > -kInf; }
  bool finite_hi(int j) const { return hi_[j] < kInf; }
  bool fixed(int j) const { return lo_[j] == hi_[j]; }
  bool boxed(int j) const { return finite_lo(j) && finite_hi(j); }

  BasisStatus default_status(int j) const {
    if (finite_lo(j) && (cost_[j] >= 0.0 || !finite_hi(j))) {
      return BasisStatus::kAtLower;
    }
    if (finite_hi(j)) return BasisStatus::kAtUpper;
    return BasisStatus::kFree;
  }

  void set_nonbasic_value(int j) {
    switch (status_[j]) {
      case BasisStatus::kAtLower:
        if (!finite_lo(j)) status_[j] = default_status(j);
        break;
      case BasisStatus::kAtUpper:
        if (!finite_hi(j)) status_[j] = default_status(j);
        break;
      case BasisStatus::kFree:
        if (finite_lo(j) || finite_hi(j)) status_[j] = default_status(j);
        break;
      case BasisStatus::kBasic:
        return;
    }
    x_[j] = status_[j] == BasisStatus::kAtLower   ? lo_[j]
            : status_[j] == BasisStatus::kAtUpper ? hi_[j]
                                                  : 0.0;
  }

  void slack_basis() {
    for (int j = 0; j < n_; ++j) {
      status_[j] = default_status(j);
      position_[j] = -1;
      set_nonbasic_value(j);
    }
    for (int i = 0; i < m_; ++i) {
      status_[n_ + i] = BasisStatus::kBasic;
      position_[n_ + i] = i;
      head_[i] = n_ + i;
    }
    std::fill(dse_.begin(), dse_.end(), 1.0);
  }

  bool load_basis(const Basis& b) {
    if (static_cast<int>(b.columns.size()) > n_ ||
        static_cast<int>(b.rows.size()) > m_) {
      return false;
    }
    int basics = 0;
    for (int j = 0; j < total_; ++j) {
      BasisStatus s;
      if (j < n_) {
        s = j < static_cast<int>(b.columns.size()) ? b.columns[j]
                                                   : default_status(j);
      } else {
        const int i = j - n_;
        s = i < static_cast<int>(b.rows.size()) ? b.rows[i]
                                                : BasisStatus::kBasic;
      }
      status_[j] = s;
      position_[j] = -1;
      if (s == BasisStatus::kBasic) {
        if (basics >= m_) return false;
        head_[basics] = j;
        position_[j] = basics++;
      } else {
        set_nonbasic_value(j);
      }
    }
    if (basics != m_) return false;
    std::fill(dse_.begin(), dse_.end(), 1.0);
    return true;
  }

  template <typename F>
  void for_column(int j, F&& f) const {
    if (j < n_) {
      for (SpMat::InnerIterator it(d_.a, j); it; ++it) f(it.row(), it.value());
    } else {
      f(j - n_, -1.0);
    }
  }

  double column_dot(int j, const Vec& v) const {
    double sum = 0.0;
    for_column(j, [&](int i, double a) { sum += a * v[i]; });
    return sum;
  }

  bool refactor() {
    etas_.clear();
    if (m_ == 0) return true;
    std::vector<Eigen::Triplet<double>> triplets;
    for (int r = 0; r < m_; ++r) {
      for_column(head_[r],
                 [&](int i, double a) { triplets.emplace_back(i, r, a); });
    }
    SpMat b(m_, m_);
    b.setFromTriplets(triplets.begin(), triplets.end());
    b.makeCompressed();
    lu_ = std::make_unique<Eigen::SparseLU<SpMat, Eigen::COLAMDOrdering<int>>>();
    lu_->analyzePattern(b);
    lu_->factorize(b);
    if (lu_->info() != Eigen::Success) return false;
    // SparseLU only reports exact zero pivots; catch near-singular bases.
    const Vec probe = lu_->solve(Vec::Ones(m_));
    return probe.allFinite() && probe.cwiseAbs().maxCoeff() < 1e14;
  }

  void ftran(Vec& v) const {
    if (m_ == 0) return;
    v = lu_->solve(v);
    for (const Eta& e : etas_) {
      const double xr = v[e.row] / e.pivot;
      if (xr != 0.0) {
        for (const auto& [i, a] : e.entries) v[i] -= a * xr;
      }
      v[e.row] = xr;
    }
  }

  void btran(Vec& v) const {
    if (m_ == 0) return;
    for (auto it = etas_.rbegin(); it != etas_.rend(); ++it) {
      double sum = v[it->row];
      for (const auto& [i, a] : it->entries) sum -= a * v[i];
      v[it->row] = sum / it->pivot;
    }
    v = lu_->transpose().solve(v);
  }

  void push_eta(int r, const Vec& alpha) {
    Eta e;
    e.row = r;
    e.pivot = alpha[r];
    for (int i = 0; i < m_; ++i) {
      if (i != r && alpha[i] != 0.0) e.entries.emplace_back(i, alpha[i]);
    }
    etas_.push_back(std::move(e));
  }

  void compute_primal() {
    Vec rhs = Vec::Zero(m_);
    for (int j = 0; j < total_; ++j) {
      if (status_[j] == BasisStatus::kBasic || x_[j] == 0.0) continue;
      const double v = x_[j];
      for_column(j, [&](int i, double a) { rhs[i] -= a * v; });
    }
    ftran(rhs);
    for (int r = 0; r < m_; ++r) x_[head_[r]] = rhs[r];
  }

  void compute_duals() {
    Vec y(m_);
    for (int r = 0; r < m_; ++r) y[r] = cost_[head_[r]];
    btran(y);
    y_ = y;
    for (int j = 0; j < total_; ++j) {
      dj_[j] = status_[j] == BasisStatus::kBasic ? 0.0
                                                 : cost_[j] - column_dot(j, y);
    }
  }

  double primal_infeasibility(int j) const {
    const double v = x_[j];
    if (v < lo_[j] - primal_tol_) return lo_[j] - v;
    if (v > hi_[j] + primal_tol_) return v - hi_[j];
    return 0.0;
  }

  double max_primal_infeasibility() const {
    double worst = 0.0;
    for (int r = 0; r < m_; ++r) {
      worst = std::max(worst, primal_infeasibility(head_[r]));
    }
    return worst;
  }

  double dual_infeasibility(int j) const {
    if (fixed(j)) return 0.0;
    switch (status_[j]) {
      case BasisStatus::kAtLower:
        return std::max(0.0, -dj_[j]);
      case BasisStatus::kAtUpper:
        return std::max(0.0, dj_[j]);
      case BasisStatus::kFree:
        return std::abs(dj_[j]);
      case BasisStatus::kBasic:
        return 0.0;
    }
    return 0.0;
  }

  double max_dual_infeasibility() const {
    double worst = 0.0;
    for (int j = 0; j < total_; ++j) {
      worst = std::max(worst, dual_infeasibility(j));
    }
    return worst;
  }

  /// Small structured cost perturbation against dual degeneracy; removed
  /// before the clean-up phase.
  void perturb_costs() {
    std::uint64_t state = 0x9e3779b97f4a7c15ULL;
    for (int j = 0; j < n_; ++j) {
      state ^= state << 13;
      state ^= state >> 7;
      state ^= state << 17;
      if (status_[j] == BasisStatus::kBasic || fixed(j)) continue;
      const double u = 0.5 + 0.5 * static_cast<double>(state >> 11) * 0x1p-53;
      const double delta = (1e-7 + 1e-6 * std::abs(cost_[j])) * u;
      if (status_[j] == BasisStatus::kAtLower && dj_[j] >= 0.0) {
        cost_[j] += delta;
        dj_[j] += delta;
      } else if (status_[j] == BasisStatus::kAtUpper && dj_[j] <= 0.0) {
        cost_[j] -= delta;
        dj_[j] -= delta;
      }
    }
  }

  /// Flip boxed variables to the bound matching their reduced cost; shift
  /// costs of the rest so the basis is dual feasible.
  void make_dual_feasible() {
    bool flipped = false;
    for (int j = 0; j < total_; ++j) {
      if (status_[j] == BasisStatus::kBasic || fixed(j)) continue;
      if (dual_infeasibility(j) <= dual_tol_) continue;
      if (boxed(j)) {
        status_[j] = dj_[j] < 0.0 ? BasisStatus::kAtUpper : BasisStatus::kAtLower;
        x_[j] = dj_[j] < 0.0 ? hi_[j] : lo_[j];
        flipped = true;
      } else {
        shift_cost(j);
      }
    }
    if (flipped) compute_primal();
  }

  void shift_cost(int j) {
    double target = 0.0;
    if (status_[j] == BasisStatus::kAtLower) target = dual_tol_ * 0.5;
    if (status_[j] == BasisStatus::kAtUpper) target = -dual_tol_ * 0.5;
    cost_[j] += target - dj_[j];
    dj_[j] = target;
  }

  /// alpha_row_[j] = (B^{-1} a_j)_r for nonbasic j, given rho = B^{-T} e_r.
  void compute_pivot_row(const Vec& rho) {
    std::fill(alpha_row_.begin(), alpha_row_.end(), 0.0);
    for (int i = 0; i < m_; ++i) {
      const double ri = rho[i];
      if (std::abs(ri) < 1e-13) continue;
      for (RowMat::InnerIterator it(rows_, i); it; ++it) {
        alpha_row_[it.col()] += ri * it.value();
      }
      alpha_row_[n_ + i] = -ri;
    }
  }

  Vec column(int j) const {
    Vec a = Vec::Zero(m_);
    for_column(j, [&](int i, double v) { a[i] = v; });
    return a;
  }

  void change_basis(int r, int q, int leaving, BasisStatus leaving_status,
                    const Vec& alpha_q) {
    head_[r] = q;
    position_[q] = r;
    position_[leaving] = -1;
    status_[q] = BasisStatus::kBasic;
    status_[leaving] = leaving_status;
    push_eta(r, alpha_q);
    ++iterations_;
  }

  bool refresh() {
    if (!refactor()) return false;
    compute_primal();
    compute_duals();
    return true;
  }

  Status dual_phase() {
    bool fresh = true;
    while (true) {
      if (iterations_ >= max_iterations_) return Status::kIterationLimit;
      if (static_cast<int>(etas_.size()) >= kRefactorInterval) {
        if (!refresh()) return Status::kNumericFailure;
        make_dual_feasible();
        fresh = true;
      }

      int r = -1;
      double best = 0.0;
      for (int i = 0; i < m_; ++i) {
        const double inf = primal_infeasibility(head_[i]);
        if (inf <= 0.0) continue;
        const double score = inf * inf / dse_[i];
        if (score > best) {
          best = score;
          r = i;
        }
      }
      if (r < 0) return Status::kOptimal;

      const int p = head_[r];
      const bool to_lower = x_[p] < lo_[p];
      const double bound = to_lower ? lo_[p] : hi_[p];

      Vec rho = Vec::Zero(m_);
      rho[r] = 1.0;
      btran(rho);
      compute_pivot_row(rho);

      // Harris two-pass ratio test on the reduced costs.
      const double sign = to_lower ? -1.0 : 1.0;
      double theta_max = kInf;
      for (int j = 0; j < total_; ++j) {
        if (status_[j] == BasisStatus::kBasic || fixed(j)) continue;
        const double a = sign * alpha_row_[j];
        if (std::abs(a) < kPivotTol) continue;
        double ratio;
        if (status_[j] == BasisStatus::kAtLower) {
          if (a <= 0.0) continue;
          ratio = (std::max(dj_[j], 0.0) + dual_tol_) / a;
        } else if (status_[j] == BasisStatus::kAtUpper) {
          if (a >= 0.0) continue;
          ratio = (std::min(dj_[j], 0.0) - dual_tol_) / a;
        } else {
          ratio = (std::abs(dj_[j]) + dual_tol_) / std::abs(a);
        }
        theta_max = std::min(theta_max, ratio);
      }
      int q = -1;
      double best_alpha = 0.0;
      if (theta_max < kInf) {
        for (int j = 0; j < total_; ++j) {
          if (status_[j] == BasisStatus::kBasic || fixed(j)) continue;
          const double a = sign * alpha_row_[j];
          if (std::abs(a) < kPivotTol) continue;
          double ratio;
          if (status_[j] == BasisStatus::kAtLower) {
            if (a <= 0.0) continue;
            ratio = std::max(dj_[j], 0.0) / a;
          } else if (status_[j] == BasisStatus::kAtUpper) {
            if (a >= 0.0) continue;
            ratio = std::min(dj_[j], 0.0) / a;
          } else {
            ratio = std::abs(dj_[j]) / std::abs(a);
          }
          if (ratio <= theta_max && std::abs(a) > best_alpha) {
            best_alpha = std::abs(a);
            q = j;
          }
        }
      }
      if (q < 0) {
        if (!fresh) {
          if (!refresh()) return Status::kNumericFailure;
          make_dual_feasible();
          fresh = true;
          continue;
        }
        return Status::kInfeasible;
      }

      Vec alpha_q = column(q);
      ftran(alpha_q);
      const double pivot = alpha_q[r];
      if (std::abs(pivot - alpha_row_[q]) >
              1e-7 * (1.0 + std::abs(pivot)) ||
          std::abs(pivot) < kPivotTol) {
        if (fresh) return Status::kNumericFailure;
        if (!refresh()) return Status::kNumericFailure;
        make_dual_feasible();
        fresh = true;
        continue;
      }

      // Dual step.
      const double theta_d = dj_[q] / pivot;
      for (int j = 0; j < total_; ++j) {
        if (status_[j] != BasisStatus::kBasic && alpha_row_[j] != 0.0) {
          dj_[j] -= theta_d * alpha_row_[j];
        }
      }
      dj_[q] = 0.0;
      dj_[p] = -theta_d;

      // Boxed nonbasics whose reduced cost changed sign move to the other
      // bound; others get a cost shift.
      Vec flip = Vec::Zero(m_);
      bool any_flip = false;
      for (int j = 0; j < total_; ++j) {
        if (j == q || status_[j] == BasisStatus::kBasic || fixed(j)) continue;
        if (alpha_row_[j] == 0.0) continue;
        if (dual_infeasibility(j) <= dual_tol_) continue;
        if (boxed(j)) {
          const double old = x_[j];
          if (status_[j] == BasisStatus::kAtLower) {
            status_[j] = BasisStatus::kAtUpper;
            x_[j] = hi_[j];
          } else {
            status_[j] = BasisStatus::kAtLower;
            x_[j] = lo_[j];
          }
          const double delta = x_[j] - old;
          for_column(j, [&](int i, double a) { flip[i] += a * delta; });
          any_flip = true;
        } else {
          shift_cost(j);
        }
      }
      if (any_flip) {
        ftran(flip);
        for (int i = 0; i < m_; ++i) x_[head_[i]] -= flip[i];
      }

      Vec tau = rho;
      ftran(tau);

      // Primal step.
      const double theta_p = (x_[p] - bound) / pivot;
      for (int i = 0; i < m_; ++i) x_[head_[i]] -= theta_p * alpha_q[i];
      x_[q] += theta_p;
      x_[p] = bound;

      // Dual steepest-edge weights.
      const double w_r = rho.squaredNorm();
      for (int i = 0; i < m_; ++i) {
        if (i == r || alpha_q[i] == 0.0) continue;
        const double ratio = alpha_q[i] / pivot;
        dse_[i] = std::max(dse_[i] - 2.0 * ratio * tau[i] + ratio * ratio * w_r,
                           1e-6);
      }
      dse_[r] = std::max(w_r / (pivot * pivot), 1e-6);

      BasisStatus leaving_status = to_lower ? BasisStatus::kAtLower
                                            : BasisStatus::kAtUpper;
      change_basis(r, q, p, leaving_status, alpha_q);
      fresh = false;
    }
  }

  Status primal_phase() {
    bool fresh = true;
    while (true) {
      if (iterations_ >= max_iterations_) return Status::kIterationLimit;
      if (static_cast<int>(etas_.size()) >= kRefactorInterval) {
        if (!refresh()) return Status::kNumericFailure;
        fresh = true;
      }

      int q = -1;
      double best = dual_tol_;
      for (int j = 0; j < total_; ++j) {
        if (status_[j] == BasisStatus::kBasic) continue;
        const double inf = dual_infeasibility(j);
        if (inf > best) {
          best = inf;
          q = j;
        }
      }
      if (q < 0) return Status::kOptimal;
      const double dir = dj_[q] < 0.0 ? 1.0 : -1.0;

      Vec alpha_q = column(q);
      ftran(alpha_q);

      // Harris ratio test on basic variables; x_B changes by -dir*t*alpha_q.
      double theta_max = kInf;
      for (int i = 0; i < m_; ++i) {
        const double a = alpha_q[i];
        if (std::abs(a) < kPivotTol) continue;
        const int j = head_[i];
        const double rate = -dir * a;
        if (rate < 0.0 && finite_lo(j)) {
          theta_max =
              std::min(theta_max, (x_[j] - lo_[j] + primal_tol_) / -rate);
        } else if (rate > 0.0 && finite_hi(j)) {
          theta_max = std::min(theta_max, (hi_[j] - x_[j] + primal_tol_) / rate);
        }
      }
      int r = -1;
      double step = kInf;
      double best_alpha = 0.0;
      for (int i = 0; i < m_; ++i) {
        const double a = alpha_q[i];
        if (std::abs(a) < kPivotTol) continue;
        const int j = head_[i];
        const double rate = -dir * a;
        double ratio = kInf;
        if (rate < 0.0 && finite_lo(j)) {
          ratio = std::max(x_[j] - lo_[j], 0.0) / -rate;
        } else if (rate > 0.0 && finite_hi(j)) {
          ratio = std::max(hi_[j] - x_[j], 0.0) / rate;
        }
        if (ratio < kInf && ratio <= theta_max && std::abs(a) > best_alpha) {
          best_alpha = std::abs(a);
          r = i;
          step = ratio;
        }
      }
      const double flip_len = boxed(q) ? hi_[q] - lo_[q] : kInf;
      if (r < 0 && flip_len == kInf) {
        if (!fresh) {
          if (!refresh()) return Status::kNumericFailure;
          fresh = true;
          continue;
        }
        return Status::kUnbounded;
      }
      if (r < 0 || flip_len <= step) {
        for (int i = 0; i < m_; ++i) {
          x_[head_[i]] -= dir * flip_len * alpha_q[i];
        }
        x_[q] = dir > 0 ? hi_[q] : lo_[q];
        status_[q] = dir > 0 ? BasisStatus::kAtUpper : BasisStatus::kAtLower;
        ++iterations_;
        continue;
      }

      const int p = head_[r];
      const bool to_lower = -dir * alpha_q[r] < 0.0;
      for (int i = 0; i < m_; ++i) x_[head_[i]] -= dir * step * alpha_q[i];
      x_[q] += dir * step;
      x_[p] = to_lower ? lo_[p] : hi_[p];

      Vec rho = Vec::Zero(m_);
      rho[r] = 1.0;
      btran(rho);
      compute_pivot_row(rho);
      const double pivot = alpha_q[r];
      if (std::abs(pivot - alpha_row_[q]) > 1e-7 * (1.0 + std::abs(pivot))) {
        if (fresh) return Status::kNumericFailure;
        if (!refresh()) return Status::kNumericFailure;
        fresh = true;
        continue;
      }
      const double theta_d = dj_[q] / pivot;
      for (int j = 0; j < total_; ++j) {
        if (status_[j] != BasisStatus::kBasic && alpha_row_[j] != 0.0) {
          dj_[j] -= theta_d * alpha_row_[j];
        }
      }
      dj_[q] = 0.0;
      dj_[p] = -theta_d;
      change_basis(r, q, p,
                   to_lower ? BasisStatus::kAtLower : BasisStatus::kAtUpper,
                   alpha_q);
      fresh = false;
    }
  }

  void extract(BackendResult& out) const {
    out.x.assign(x_.begin(), x_.begin() + n_);
    out.reduced_costs.assign(dj_.begin(), dj_.begin() + n_);
    out.row_duals.assign(m_, 0.0);
    for (int i = 0; i < m_; ++i) out.row_duals[i] = y_.size() ? y_[i] : 0.0;
  }

  const LpData& d_;
  RowMat rows_;
  int n_;
  int m_;
  int total_;
  double primal_tol_;
  double dual_tol_;
  int max_iterations_;
  bool perturb_;
  int iterations_ = 0;

  std::vector<double> lo_, hi_, cost_, original_cost_;
  std::vector<double> x_, dj_;
  std::vector<BasisStatus> status_;
  std::vector<int> position_;
  std::vector<int> head_;
  std::vector<double> dse_;
  std::vector<double> alpha_row_;
  Vec y_;

  struct Eta {
    int row;
    double pivot;
    std::vector<std::pair<int, double>> entries;
  };
  std::unique_ptr<Eigen::SparseLU<SpMat, Eigen::COLAMDOrdering<int>>> lu_;
  std::vector<Eta> etas_;
};

BackendResult solve_without_rows(const LpData& d) {
  BackendResult out;
  out.x.assign(d.n, 0.0);
  out.reduced_costs = d.cost;
  out.basis.columns.assign(d.n, BasisStatus::kAtLower);
  for (int j = 0; j < d.n; ++j) {
    const double c = d.cost[j];
    double v;
    if (c > 0.0) {
      v = d.col_lower[j];
      out.basis.columns[j] = BasisStatus::kAtLower;
    } else if (c < 0.0) {
      v = d.col_upper[j];
      out.basis.columns[j] = BasisStatus::kAtUpper;
    } else {
      v = std::clamp(0.0, d.col_lower[j], d.col_upper[j]);
      out.basis.columns[j] = v == d.col_upper[j] && v != d.col_lower[j]
                                 ? BasisStatus::kAtUpper
                             : std::isinf(d.col_lower[j]) ? BasisStatus::kFree
                                                           : BasisStatus::kAtLower;
    }
    if (!std::isfinite(v)) {
      out.status = Status::kUnbounded;
      out.message = "primal unbounded";
      out.x.clear();
      return out;
    }
    out.x[j] = v;
  }
  out.status = Status::kOptimal;
  return out;
}

}  // namespace

BackendResult solve_dual_simplex(const LpData& data,
                                 const SolverOptions& options,
                                 const Basis* warm_start) {
  for (int j = 0; j < data.n; ++j) {
    if (data.col_lower[j] == kInf || data.col_upper[j] == -kInf) {
      BackendResult out;
      out.status = Status::kInfeasible;
      out.message = "variable bound is infinite on the wrong side";
      return out;
    }
  }
  if (data.m == 0) return solve_without_rows(data);

  LpData scaled = data;
  const Scaling s = scale_problem(scaled);
  Simplex simplex(scaled, options);
  BackendResult out = simplex.run(warm_start);
  if (out.status != Status::kOptimal) return out;

  for (int j = 0; j < data.n; ++j) {
    out.x[j] *= s.col[j];
    out.reduced_costs[j] /= s.objective * s.col[j];
    // Snap to bounds removed by scaling round-off.
    if (out.basis.columns[j] == BasisStatus::kAtLower) {
      out.x[j] = data.col_lower[j];
    } else if (out.basis.columns[j] == BasisStatus::kAtUpper) {
      out.x[j] = data.col_upper[j];
    }
  }
  for (int i = 0; i < data.m; ++i) {
    out.row_duals[i] *= s.row[i] / s.objective;
  }
  return out;
}

}  // namespace lineloss::lp::detail
