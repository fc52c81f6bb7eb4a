#pragma once

#include "dirklab/problems.hpp"
#include "dirklab/types.hpp"

namespace dirklab {

/// The implicit relation y = y_exp + alpha dt f(y) of one DIRK stage.
template <typename Scalar>
struct StageEquation {
  const SemiDiscreteProblem<Scalar>* problem = nullptr;
  VecX<Scalar> y_exp;  // y_n + dt sum_{j<i} a_ij f(y^(j))
  double alpha = 0.0;  // diagonal coefficient a_ii
  double dt = 0.0;
};

/// r(y) = y_exp + alpha dt f(y) - y. Zero at the exact stage solution.
template <typename Scalar>
VecX<Scalar> stage_residual(const StageEquation<Scalar>& eq, const VecX<Scalar>& y) {
  return eq.y_exp + Scalar(eq.alpha * eq.dt) * eq.problem->rhs(y) - y;
}

/// Measured perturbation of a resolved stage: the realized surrogate
/// satisfies f_eps(y) = (y - y_exp)/(alpha dt), so ||h|| = ||r||/(alpha dt).
template <typename Scalar>
double measured_h_norm(const StageEquation<Scalar>& eq, const VecX<Scalar>& y) {
  if (eq.alpha == 0.0) return 0.0;
  return inf_norm<Scalar>(stage_residual(eq, y)) / (eq.alpha * eq.dt);
}

}  // namespace dirklab
