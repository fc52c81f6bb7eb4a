#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "dirklab/precision.hpp"
#include "dirklab/problems.hpp"
#include "dirklab/stage_equation.hpp"
#include "dirklab/tableau.hpp"
#include "dirklab/types.hpp"

namespace dirklab {

enum class CorrectionKind { None, Explicit, Stabilized };
enum class PhiKind { Explicit, Jacobian, Ein, BroydenGood, BroydenBad };

std::string to_string(CorrectionKind k);
std::string to_string(PhiKind k);

/// How stage values are corrected after the cheap implicit solve.
struct CorrectionPlan {
  CorrectionKind kind = CorrectionKind::None;
  int count = -1;                        // corrections per stage; -1 means p-1
  PhiKind phi = PhiKind::Jacobian;       // stabilization matrix family
  double mu = -1.0;                      // damping parameter; < 0 means mu = a_ii
  PhiKind broyden_seed = PhiKind::Jacobian;  // initial Phi_0 for Broyden runs

  static CorrectionPlan none() { return {}; }
  static CorrectionPlan explicit_plan(int count = -1) {
    CorrectionPlan p;
    p.kind = CorrectionKind::Explicit;
    p.count = count;
    p.phi = PhiKind::Explicit;
    return p;
  }
  static CorrectionPlan stabilized(PhiKind phi, int count = -1, double mu = -1.0) {
    CorrectionPlan p;
    p.kind = CorrectionKind::Stabilized;
    p.count = count;
    p.phi = phi;
    p.mu = mu;
    return p;
  }

  int resolved_count(int order) const {
    if (kind == CorrectionKind::None) return 0;
    return count >= 0 ? count : order - 1;
  }
  bool broyden() const { return phi == PhiKind::BroydenGood || phi == PhiKind::BroydenBad; }
};

/// Phi = (I - mu dt J)^{-1} or a Broyden-updated descendant of one.
template <typename Scalar>
struct StabilizationMatrix {
  MatX<Scalar> phi;
  PhiKind kind = PhiKind::Explicit;
  double mu = 0.0;
  int built_at_step = 0;
};

/// One explicit correction: y_exp + alpha dt f(y_k) = y_k + r(y_k).
template <typename Scalar>
VecX<Scalar> explicit_correct(const StageEquation<Scalar>& eq, const VecX<Scalar>& y_k) {
  return eq.y_exp + Scalar(eq.alpha * eq.dt) * eq.problem->rhs(y_k);
}

/// One stabilized correction y_k + Phi r(y_k); Phi = I reduces to the
/// explicit correction.
template <typename Scalar>
VecX<Scalar> stabilized_correct(const StageEquation<Scalar>& eq, const VecX<Scalar>& y_k,
                                const MatX<Scalar>& phi) {
  return y_k + phi * stage_residual(eq, y_k);
}

/// Residual-growth trigger of the stabilization discussion: explicit
/// correction is unsafe once ||r(y^e_{k+1})|| >= ||r(y_k)||.
template <typename Scalar>
struct ResidualTrigger {
  double residual_before = 0.0;
  double residual_after_explicit = 0.0;
  bool needs_stabilization = false;
};

template <typename Scalar>
ResidualTrigger<Scalar> residual_trigger(const StageEquation<Scalar>& eq,
                                         const VecX<Scalar>& y_k) {
  ResidualTrigger<Scalar> out;
  out.residual_before = inf_norm<Scalar>(stage_residual(eq, y_k));
  const VecX<Scalar> y_e = explicit_correct(eq, y_k);
  out.residual_after_explicit = inf_norm<Scalar>(stage_residual(eq, y_e));
  out.needs_stabilization = out.residual_after_explicit >= out.residual_before;
  return out;
}

template <typename Scalar>
StabilizationMatrix<Scalar> build_phi_jacobian(const SemiDiscreteProblem<Scalar>& p,
                                               double mu, double dt) {
  MatX<Scalar> m = Scalar(-mu * dt) * p.jacobian(p.initial_state);
  m.diagonal().array() += Scalar(1.0);
  StabilizationMatrix<Scalar> out;
  out.phi = lu_invert(m);
  out.kind = PhiKind::Jacobian;
  out.mu = mu;
  return out;
}

template <typename Scalar>
StabilizationMatrix<Scalar> build_phi_ein(const SemiDiscreteProblem<Scalar>& p, double mu,
                                          double dt) {
  MatX<Scalar> m = Scalar(-mu * dt) * p.dominant_operator;
  m.diagonal().array() += Scalar(1.0);
  StabilizationMatrix<Scalar> out;
  out.phi = lu_invert(m);
  out.kind = PhiKind::Ein;
  out.mu = mu;
  return out;
}

template <typename Scalar>
MatX<Scalar> lu_invert(const MatX<Scalar>& m) {
  const Eigen::Index n = m.rows();
  DenseLu<Scalar> lu(m);
  MatX<Scalar> inv(n, n);
  VecX<Scalar> e = VecX<Scalar>::Zero(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    e(j) = Scalar(1.0);
    inv.col(j) = lu.solve(e);
    e(j) = Scalar(0.0);
  }
  return inv;
}

struct BroydenOutcome {
  bool accepted = false;
  std::string skip_reason;        // empty when accepted
  double secant_defect_rel = 0.0; // ||Phi_k R - dy|| / ||dy|| after the update
  int step = 0;
};

/// Rank-one secant update of Phi from two consecutive correction iterates.
/// F(y) = y - y_exp - alpha dt f(y), R = F(y_k) - F(y_{k-1}).
/// "Bad" uses rho = R; "good" uses rho^T = Upsilon^T Phi_{k-1} as printed in
/// the source algorithm. Near-zero denominators and R = 0 skip the update.
template <typename Scalar>
BroydenOutcome broyden_update(StabilizationMatrix<Scalar>& phi, const VecX<Scalar>& y_k,
                              const VecX<Scalar>& y_km1, const VecX<Scalar>& f_k,
                              const VecX<Scalar>& f_km1, double alpha_dt, bool good_variant) {
  BroydenOutcome out;
  const VecX<Scalar> dy = y_k - y_km1;
  const VecX<Scalar> r = dy - Scalar(alpha_dt) * (f_k - f_km1);
  const double r_norm = std::sqrt(to_double(r.dot(r)));
  if (r_norm == 0.0) {
    out.skip_reason = "R = 0 (already converged)";
    return out;
  }
  const VecX<Scalar> upsilon = dy - phi.phi * r;
  VecX<Scalar> rho;
  if (good_variant)
    rho = phi.phi.transpose() * upsilon;  // rho^T = Upsilon^T Phi_{k-1}
  else
    rho = r;
  const Scalar denom = rho.dot(r);
  const double rho_norm = std::sqrt(to_double(rho.dot(rho)));
  if (std::abs(to_double(denom)) <= 1e-14 * rho_norm * r_norm) {
    out.skip_reason = "rho^T R too small";
    return out;
  }
  phi.phi += (upsilon / denom) * rho.transpose();
  phi.kind = good_variant ? PhiKind::BroydenGood : PhiKind::BroydenBad;

  const VecX<Scalar> defect = phi.phi * r - dy;
  const double dy_norm = std::sqrt(to_double(dy.dot(dy)));
  out.secant_defect_rel =
      dy_norm > 0.0 ? std::sqrt(to_double(defect.dot(defect))) / dy_norm : 0.0;
  out.accepted = true;
  return out;
}

template <typename Scalar>
struct CorrectionOutcome {
  VecX<Scalar> y;
  std::vector<double> residual_norms;  // ||r(y_[k])||_inf for k = 0..count
  bool diverged = false;
};

/// Per-run correction state: the Phi cache keyed on (mu, dt), the evolving
/// Broyden matrix, and the update log. Owned by one integration; not shared.
template <typename Scalar>
class CorrectionContext {
 public:
  CorrectionContext(const CorrectionPlan& plan, const SemiDiscreteProblem<Scalar>& p,
                    const ButcherTableau& t, double dt)
      : plan_(plan), problem_(&p), count_(plan.resolved_count(t.order)), dt_(dt) {}

  bool active() const { return plan_.kind != CorrectionKind::None && count_ > 0; }
  int count() const { return count_; }
  const std::vector<BroydenOutcome>& broyden_log() const { return broyden_log_; }

  void begin_step() {
    ++step_;
    broyden_updated_this_step_ = false;
  }

  /// Apply the plan's corrections to a stage starting from the solver's
  /// iterate y0. Broyden plans refresh Phi once per time-step, at the first
  /// stage, from that stage's first two iterates.
  CorrectionOutcome<Scalar> apply(const StageEquation<Scalar>& eq, const VecX<Scalar>& y0,
                                  int stage_index) {
    CorrectionOutcome<Scalar> out;
    out.y = y0;
    out.residual_norms.reserve(count_ + 1);

    VecX<Scalar> r = stage_residual(eq, out.y);
    out.residual_norms.push_back(inf_norm<Scalar>(r));

    for (int k = 0; k < count_; ++k) {
      VecX<Scalar> y_next;
      if (plan_.kind == CorrectionKind::Explicit) {
        y_next = out.y + r;  // y_exp + alpha dt f(y_k)
      } else {
        const MatX<Scalar>& phi = current_phi(eq);
        y_next = out.y + phi * r;
      }
      if (!all_finite<Scalar>(y_next) || inf_norm<Scalar>(y_next) > 1e10) {
        out.y = std::move(y_next);
        out.diverged = true;
        return out;
      }
      if (plan_.broyden() && stage_index == 0 && k == 0 && !broyden_updated_this_step_) {
        const VecX<Scalar> f0 = eq.problem->rhs(out.y);
        const VecX<Scalar> f1 = eq.problem->rhs(y_next);
        auto outcome = broyden_update(*broyden_, y_next, out.y, f1, f0, eq.alpha * eq.dt,
                                      plan_.phi == PhiKind::BroydenGood);
        outcome.step = step_;
        broyden_log_.push_back(outcome);
        broyden_updated_this_step_ = true;
      }
      out.y = std::move(y_next);
      r = stage_residual(eq, out.y);
      out.residual_norms.push_back(inf_norm<Scalar>(r));
    }
    return out;
  }

 private:
  const MatX<Scalar>& current_phi(const StageEquation<Scalar>& eq) {
    if (plan_.broyden()) {
      if (!broyden_) {
        const double mu = plan_.mu >= 0.0 ? plan_.mu : eq.alpha;
        broyden_ = plan_.broyden_seed == PhiKind::Ein ? build_phi_ein(*problem_, mu, dt_)
                                                      : build_phi_jacobian(*problem_, mu, dt_);
      }
      return broyden_->phi;
    }
    const double mu = plan_.mu >= 0.0 ? plan_.mu : eq.alpha;
    const auto key = std::make_pair(mu, dt_);
    auto it = static_cache_.find(key);
    if (it == static_cache_.end()) {
      StabilizationMatrix<Scalar> built = plan_.phi == PhiKind::Ein
                                              ? build_phi_ein(*problem_, mu, dt_)
                                              : build_phi_jacobian(*problem_, mu, dt_);
      built.built_at_step = step_;
      it = static_cache_.emplace(key, std::move(built)).first;
    }
    return it->second.phi;
  }

  CorrectionPlan plan_;
  const SemiDiscreteProblem<Scalar>* problem_;
  int count_ = 0;
  double dt_ = 0.0;
  int step_ = 0;
  bool broyden_updated_this_step_ = false;
  std::map<std::pair<double, double>, StabilizationMatrix<Scalar>> static_cache_;
  std::optional<StabilizationMatrix<Scalar>> broyden_;
  std::vector<BroydenOutcome> broyden_log_;
};

}  // namespace dirklab
