// Primal-dual interior point method (Mehrotra predictor-corrector) for
//   min c'z  s.t.  E z = b,  g_k(z) = r_k z_q^2 - a_k'z <= 0,  l <= z <= u
// where z stacks the structural variables and one slack per inequality row.

#include <algorithm>
#include <cmath>

#include <Eigen/SparseLU>

#include "backends.hpp"

namespace lineloss::lp::detail {
namespace {

using SpMat = Eigen::SparseMatrix<double>;
using Vec = Eigen::VectorXd;

double pow2_scale(double value) {
  if (!(value > 0.0) || !std::isfinite(value)) return 1.0;
  return std::exp2(std::round(std::log2(value)));
}

struct ConeRow {
  int q;
  double r;
  std::vector<std::pair<int, double>> a;  // linear part, already merged
  double scale;                           // row scaling applied to r and a
};

class InteriorPoint {
 public:
  InteriorPoint(const LpData& d, const std::vector<Model::Cone>& cones,
                const SolverOptions& options)
      : d_(d), options_(options) {
    build(cones);
  }

  BackendResult run() {
    BackendResult out;
    initialize();
    Eigen::SparseLU<SpMat, Eigen::COLAMDOrdering<int>> lu;
    bool analyzed = false;
    const double tol = std::min(options_.gap_tolerance, 1e-8) * 0.1;
    double best_merit = kInf;
    Iterate best;
    int stalled = 0;

    for (int iter = 0; iter < kMaxIterations; ++iter) {
      out.iterations = iter;
      evaluate_cones();
      residuals();
      const double mu = complementarity();
      const double pinf =
          std::max(rp_.lpNorm<Eigen::Infinity>() / (1.0 + b_norm_),
                   rg_.size() ? rg_.lpNorm<Eigen::Infinity>() : 0.0);
      const double dinf = rd_.lpNorm<Eigen::Infinity>() / (1.0 + c_norm_);
      if (pinf < tol && dinf < tol && mu < tol) {
        out.status = Status::kOptimal;
        break;
      }
      if (z_.lpNorm<Eigen::Infinity>() > 1e12) {
        out.status = Status::kUnbounded;
        out.message = "iterates diverged; problem appears unbounded";
        return out;
      }
      const double merit = std::max({pinf, dinf, mu});
      if (!std::isfinite(merit)) {
        if (fall_back(out, best, best_merit)) break;
        out.message = "interior point produced non-finite iterates";
        return out;
      }
      const bool progress = merit < best_merit * 0.999;
      if (merit < best_merit) {
        best_merit = merit;
        best = snapshot();
      }
      if (progress) {
        stalled = 0;
      } else if (++stalled > 25) {
        if (fall_back(out, best, best_merit)) break;
        out.message = "interior point stalled";
        return out;
      }

      const SpMat kkt = assemble();
      if (!analyzed) {
        lu.analyzePattern(kkt);
        analyzed = true;
      }
      lu.factorize(kkt);
      if (lu.info() != Eigen::Success) {
        if (fall_back(out, best, best_merit)) break;
        out.message = "KKT factorization failed";
        return out;
      }

      // Predictor.
      Direction aff = direction(lu, kkt, 0.0, nullptr);
      double ap = max_primal_step(aff);
      double ad = max_dual_step(aff);
      if (has_cones_) ap = ad = std::min(ap, ad);
      const double mu_aff = complementarity_after(aff, ap, ad);
      const double sigma = std::pow(std::clamp(mu_aff / mu, 0.0, 1.0), 3.0);

      // Corrector.
      Direction dir = direction(lu, kkt, sigma * mu, &aff);
      const double eta = std::max(0.99, 1.0 - mu);
      ap = std::min(1.0, eta * max_primal_step(dir));
      ad = std::min(1.0, eta * max_dual_step(dir));
      if (has_cones_) ap = ad = std::min(ap, ad);

      z_ += ap * dir.dz;
      w_ += ap * dir.dw;
      y_ += ad * dir.dy;
      lam_ += ad * dir.dlam;
      zl_ += ad * dir.dzl;
      zu_ += ad * dir.dzu;
      out.iterations = iter + 1;
      if (iter + 1 == kMaxIterations) {
        out.status = Status::kIterationLimit;
        out.message = "interior point iteration limit";
        return out;
      }
    }
    if (out.status != Status::kOptimal) return out;
    extract(out);
    return out;
  }

 private:
  static constexpr int kMaxIterations = 300;
  static constexpr double kReducedTolerance = 1e-6;
  static constexpr double kRegPrimal = 1e-10;
  static constexpr double kRegDual = 1e-10;

  struct Direction {
    Vec dz, dy, dw, dlam, dzl, dzu;
  };

  struct Iterate {
    Vec z, y, w, lam, zl, zu;
  };

  Iterate snapshot() const { return {z_, y_, w_, lam_, zl_, zu_}; }

  // Near the solution slacks can underflow and break the iteration; the best
  // iterate seen is accepted when it meets the reduced tolerance.
  bool fall_back(BackendResult& out, const Iterate& best, double best_merit) {
    out.status = Status::kNumericFailure;
    if (!(best_merit < kReducedTolerance)) return false;
    z_ = best.z;
    y_ = best.y;
    w_ = best.w;
    lam_ = best.lam;
    zl_ = best.zl;
    zu_ = best.zu;
    out.status = Status::kOptimal;
    out.message = "converged to reduced accuracy";
    return true;
  }

  void build(const std::vector<Model::Cone>& cones) {
    n_ = d_.n;
    // Inequality rows get a slack column; equality rows do not.
    row_slack_.assign(d_.m, -1);
    int nz = n_;
    for (int i = 0; i < d_.m; ++i) {
      if (d_.row_lower[i] != d_.row_upper[i]) row_slack_[i] = nz++;
    }
    // Fixed structural variables become equality rows.
    std::vector<int> fixed;
    for (int j = 0; j < n_; ++j) {
      if (d_.col_lower[j] == d_.col_upper[j]) fixed.push_back(j);
    }
    nz_ = nz;
    m_ = d_.m + static_cast<int>(fixed.size());

    // Row scaling of the linear part.
    row_scale_.assign(d_.m, 0.0);
    for (int j = 0; j < n_; ++j) {
      for (SpMat::InnerIterator it(d_.a, j); it; ++it) {
        row_scale_[it.row()] =
            std::max(row_scale_[it.row()], std::abs(it.value()));
      }
    }
    for (double& s : row_scale_) s = s > 0.0 ? pow2_scale(1.0 / s) : 1.0;

    std::vector<Eigen::Triplet<double>> t;
    b_ = Vec::Zero(m_);
    for (int j = 0; j < n_; ++j) {
      for (SpMat::InnerIterator it(d_.a, j); it; ++it) {
        t.emplace_back(it.row(), j, it.value() * row_scale_[it.row()]);
      }
    }
    lower_.assign(nz_, -kInf);
    upper_.assign(nz_, kInf);
    for (int i = 0; i < d_.m; ++i) {
      const double s = row_scale_[i];
      if (row_slack_[i] >= 0) {
        t.emplace_back(i, row_slack_[i], -1.0);
        lower_[row_slack_[i]] = d_.row_lower[i] * s;
        upper_[row_slack_[i]] = d_.row_upper[i] * s;
      } else {
        b_[i] = d_.row_lower[i] * s;
      }
    }
    for (std::size_t k = 0; k < fixed.size(); ++k) {
      const int row = d_.m + static_cast<int>(k);
      t.emplace_back(row, fixed[k], 1.0);
      b_[row] = d_.col_lower[fixed[k]];
    }
    e_.resize(m_, nz_);
    e_.setFromTriplets(t.begin(), t.end());
    e_.makeCompressed();
    et_ = e_.transpose();

    for (int j = 0; j < n_; ++j) {
      if (d_.col_lower[j] == d_.col_upper[j]) continue;
      lower_[j] = d_.col_lower[j];
      upper_[j] = d_.col_upper[j];
    }

    double cmax = 0.0;
    for (double c : d_.cost) cmax = std::max(cmax, std::abs(c));
    obj_scale_ = cmax > 0.0 ? pow2_scale(1.0 / cmax) : 1.0;
    c_ = Vec::Zero(nz_);
    for (int j = 0; j < n_; ++j) c_[j] = d_.cost[j] * obj_scale_;
    c_norm_ = c_.lpNorm<Eigen::Infinity>();
    b_norm_ = b_.size() ? b_.lpNorm<Eigen::Infinity>() : 0.0;

    for (const Model::Cone& cone : cones) {
      ConeRow row;
      row.q = cone.quad_var;
      std::vector<std::pair<int, double>> merged;
      for (const Term& term : cone.expr) merged.emplace_back(term.var, term.coef);
      std::sort(merged.begin(), merged.end());
      for (const auto& [v, a] : merged) {
        if (!row.a.empty() && row.a.back().first == v) {
          row.a.back().second += a;
        } else {
          row.a.emplace_back(v, a);
        }
      }
      double big = cone.scale;
      for (const auto& [v, a] : row.a) big = std::max(big, std::abs(a));
      row.scale = pow2_scale(1.0 / big);
      row.r = cone.scale * row.scale;
      for (auto& [v, a] : row.a) a *= row.scale;
      cones_.push_back(std::move(row));
    }
    k_ = static_cast<int>(cones_.size());
    has_cones_ = k_ > 0;
  }

  bool has_lower(int j) const { return lower_[j] > -kInf; }
  bool has_upper(int j) const { return upper_[j] < kInf; }

  void initialize() {
    z_ = Vec::Zero(nz_);
    for (int j = 0; j < nz_; ++j) {
      const double l = lower_[j];
      const double u = upper_[j];
      if (has_lower(j) && has_upper(j)) {
        z_[j] = 0.5 * (l + u);
      } else if (has_lower(j)) {
        z_[j] = std::max(l + 1.0, 0.0);
      } else if (has_upper(j)) {
        z_[j] = std::min(u - 1.0, 0.0);
      }
    }
    y_ = Vec::Zero(m_);
    zl_ = Vec::Zero(nz_);
    zu_ = Vec::Zero(nz_);
    for (int j = 0; j < nz_; ++j) {
      if (has_lower(j)) zl_[j] = 1.0;
      if (has_upper(j)) zu_[j] = 1.0;
    }
    g_ = Vec::Zero(k_);
    evaluate_cones();
    w_ = Vec::Zero(k_);
    lam_ = Vec::Ones(k_);
    for (int k = 0; k < k_; ++k) w_[k] = std::max(-g_[k], 1.0);
  }

  void evaluate_cones() {
    for (int k = 0; k < k_; ++k) {
      const ConeRow& c = cones_[k];
      double v = c.r * z_[c.q] * z_[c.q];
      for (const auto& [j, a] : c.a) v -= a * z_[j];
      g_[k] = v;
    }
  }

  /// Applies J (K x nz) or J' to a vector.
  Vec jacobian_times(const Vec& v) const {
    Vec out = Vec::Zero(k_);
    for (int k = 0; k < k_; ++k) {
      const ConeRow& c = cones_[k];
      double s = 2.0 * c.r * z_[c.q] * v[c.q];
      for (const auto& [j, a] : c.a) s -= a * v[j];
      out[k] = s;
    }
    return out;
  }

  Vec jacobian_transpose_times(const Vec& v) const {
    Vec out = Vec::Zero(nz_);
    for (int k = 0; k < k_; ++k) {
      const ConeRow& c = cones_[k];
      out[c.q] += 2.0 * c.r * z_[c.q] * v[k];
      for (const auto& [j, a] : c.a) out[j] -= a * v[k];
    }
    return out;
  }

  void residuals() {
    rd_ = c_ - et_ * y_ + jacobian_transpose_times(lam_) - zl_ + zu_;
    rp_ = e_ * z_ - b_;
    rg_ = g_ + w_;
  }

  double complementarity() const {
    double sum = 0.0;
    int count = 0;
    for (int j = 0; j < nz_; ++j) {
      if (has_lower(j)) {
        sum += zl_[j] * (z_[j] - lower_[j]);
        ++count;
      }
      if (has_upper(j)) {
        sum += zu_[j] * (upper_[j] - z_[j]);
        ++count;
      }
    }
    for (int k = 0; k < k_; ++k) {
      sum += lam_[k] * w_[k];
      ++count;
    }
    return count ? sum / count : 0.0;
  }

  double complementarity_after(const Direction& d, double ap,
                               double ad) const {
    double sum = 0.0;
    int count = 0;
    for (int j = 0; j < nz_; ++j) {
      if (has_lower(j)) {
        sum += (zl_[j] + ad * d.dzl[j]) * (z_[j] + ap * d.dz[j] - lower_[j]);
        ++count;
      }
      if (has_upper(j)) {
        sum += (zu_[j] + ad * d.dzu[j]) * (upper_[j] - z_[j] - ap * d.dz[j]);
        ++count;
      }
    }
    for (int k = 0; k < k_; ++k) {
      sum += (lam_[k] + ad * d.dlam[k]) * (w_[k] + ap * d.dw[k]);
      ++count;
    }
    return count ? sum / count : 0.0;
  }

  SpMat assemble() const {
    std::vector<Eigen::Triplet<double>> t;
    Vec diag = Vec::Constant(nz_, kRegPrimal);
    for (int j = 0; j < nz_; ++j) {
      if (has_lower(j)) diag[j] += zl_[j] / (z_[j] - lower_[j]);
      if (has_upper(j)) diag[j] += zu_[j] / (upper_[j] - z_[j]);
    }
    for (int k = 0; k < k_; ++k) {
      const ConeRow& c = cones_[k];
      diag[c.q] += 2.0 * lam_[k] * c.r;
      // J_k' (lambda/w) J_k, J_k = 2 r z_q e_q - a
      const double weight = lam_[k] / w_[k];
      std::vector<std::pair<int, double>> grad = c.a;
      for (auto& entry : grad) entry.second = -entry.second;
      bool found = false;
      for (auto& entry : grad) {
        if (entry.first == c.q) {
          entry.second += 2.0 * c.r * z_[c.q];
          found = true;
        }
      }
      if (!found) grad.emplace_back(c.q, 2.0 * c.r * z_[c.q]);
      for (const auto& [i, gi] : grad) {
        for (const auto& [j, gj] : grad) {
          t.emplace_back(i, j, weight * gi * gj);
        }
      }
    }
    for (int j = 0; j < nz_; ++j) t.emplace_back(j, j, diag[j]);
    for (int j = 0; j < nz_; ++j) {
      for (SpMat::InnerIterator it(e_, j); it; ++it) {
        t.emplace_back(nz_ + it.row(), j, it.value());
        t.emplace_back(j, nz_ + it.row(), it.value());
      }
    }
    for (int i = 0; i < m_; ++i) t.emplace_back(nz_ + i, nz_ + i, -kRegDual);
    SpMat kkt(nz_ + m_, nz_ + m_);
    kkt.setFromTriplets(t.begin(), t.end());
    kkt.makeCompressed();
    return kkt;
  }

  Direction direction(Eigen::SparseLU<SpMat, Eigen::COLAMDOrdering<int>>& lu,
                      const SpMat& kkt, double target,
                      const Direction* aff) const {
    Vec rc(k_), rl = Vec::Zero(nz_), ru = Vec::Zero(nz_);
    for (int k = 0; k < k_; ++k) {
      rc[k] = target - lam_[k] * w_[k];
      if (aff) rc[k] -= aff->dlam[k] * aff->dw[k];
    }
    for (int j = 0; j < nz_; ++j) {
      if (has_lower(j)) {
        rl[j] = target - zl_[j] * (z_[j] - lower_[j]);
        if (aff) rl[j] -= aff->dzl[j] * aff->dz[j];
      }
      if (has_upper(j)) {
        ru[j] = target - zu_[j] * (upper_[j] - z_[j]);
        if (aff) ru[j] += aff->dzu[j] * aff->dz[j];
      }
    }
    Vec tmp(k_);
    for (int k = 0; k < k_; ++k) tmp[k] = (rc[k] + lam_[k] * rg_[k]) / w_[k];
    Vec rhs1 = -rd_ - jacobian_transpose_times(tmp);
    for (int j = 0; j < nz_; ++j) {
      if (has_lower(j)) rhs1[j] += rl[j] / (z_[j] - lower_[j]);
      if (has_upper(j)) rhs1[j] -= ru[j] / (upper_[j] - z_[j]);
    }
    Vec rhs(nz_ + m_);
    rhs << rhs1, -rp_;
    Vec sol = lu.solve(rhs);
    // One step of iterative refinement against the regularized system.
    const Vec residual = rhs - kkt * sol;
    sol += lu.solve(residual);

    Direction d;
    d.dz = sol.head(nz_);
    d.dy = -sol.tail(m_);
    d.dw = -rg_ - jacobian_times(d.dz);
    d.dlam = Vec(k_);
    for (int k = 0; k < k_; ++k) {
      d.dlam[k] = (rc[k] - lam_[k] * d.dw[k]) / w_[k];
    }
    d.dzl = Vec::Zero(nz_);
    d.dzu = Vec::Zero(nz_);
    for (int j = 0; j < nz_; ++j) {
      if (has_lower(j)) {
        d.dzl[j] = (rl[j] - zl_[j] * d.dz[j]) / (z_[j] - lower_[j]);
      }
      if (has_upper(j)) {
        d.dzu[j] = (ru[j] + zu_[j] * d.dz[j]) / (upper_[j] - z_[j]);
      }
    }
    return d;
  }

  static double ratio(double value, double delta) {
    return delta < 0.0 ? -value / delta : kInf;
  }

  double max_primal_step(const Direction& d) const {
    double a = 1.0;
    for (int j = 0; j < nz_; ++j) {
      if (has_lower(j)) a = std::min(a, ratio(z_[j] - lower_[j], d.dz[j]));
      if (has_upper(j)) a = std::min(a, ratio(upper_[j] - z_[j], -d.dz[j]));
    }
    for (int k = 0; k < k_; ++k) a = std::min(a, ratio(w_[k], d.dw[k]));
    return a;
  }

  double max_dual_step(const Direction& d) const {
    double a = 1.0;
    for (int j = 0; j < nz_; ++j) {
      if (has_lower(j)) a = std::min(a, ratio(zl_[j], d.dzl[j]));
      if (has_upper(j)) a = std::min(a, ratio(zu_[j], d.dzu[j]));
    }
    for (int k = 0; k < k_; ++k) a = std::min(a, ratio(lam_[k], d.dlam[k]));
    return a;
  }

  void extract(BackendResult& out) const {
    out.x.assign(n_, 0.0);
    out.reduced_costs.assign(n_, 0.0);
    for (int j = 0; j < n_; ++j) {
      out.x[j] = std::clamp(z_[j], d_.col_lower[j], d_.col_upper[j]);
      out.reduced_costs[j] = (zl_[j] - zu_[j]) / obj_scale_;
    }
    out.row_duals.assign(d_.m, 0.0);
    for (int i = 0; i < d_.m; ++i) {
      out.row_duals[i] = y_[i] * row_scale_[i] / obj_scale_;
    }
    for (int i = d_.m; i < m_; ++i) {
      // Fixed variables carry their reduced cost on the substitute row.
      for (SpMat::InnerIterator it(et_, i); it; ++it) {
        out.reduced_costs[it.row()] = y_[i] / obj_scale_;
      }
    }
  }

  const LpData& d_;
  const SolverOptions& options_;
  int n_ = 0;
  int nz_ = 0;
  int m_ = 0;
  int k_ = 0;
  bool has_cones_ = false;
  std::vector<int> row_slack_;
  std::vector<double> row_scale_;
  std::vector<double> lower_, upper_;
  std::vector<ConeRow> cones_;
  SpMat e_;
  SpMat et_;
  Vec b_, c_;
  double obj_scale_ = 1.0;
  double c_norm_ = 0.0;
  double b_norm_ = 0.0;

  Vec z_, y_, zl_, zu_, w_, lam_, g_;
  Vec rd_, rp_, rg_;
};

}  // namespace

BackendResult solve_interior_point(const LpData& data,
                                   const std::vector<Model::Cone>& cones,
                                   const SolverOptions& options) {
  for (int j = 0; j < data.n; ++j) {
    if (data.col_lower[j] == kInf || data.col_upper[j] == -kInf) {
      BackendResult out;
      out.status = Status::kInfeasible;
      out.message = "variable bound is infinite on the wrong side";
      return out;
    }
  }
  InteriorPoint ipm(data, cones, options);
  return ipm.run();
}

}  // namespace lineloss::lp::detail
