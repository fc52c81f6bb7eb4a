#pragma once

#include <chrono>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dirklab/corrections.hpp"
#include "dirklab/precision.hpp"
#include "dirklab/problems.hpp"
#include "dirklab/tableau.hpp"
#include "dirklab/types.hpp"

namespace dirklab {

enum class StrategyKind { ExactNewton, Linearized, LinearizedChopped, MixedPrecision };

enum class ExpansionPolicy { StepStart, StagePredictor };

/// How the implicit stage equation y = y_exp + alpha dt f(y) is resolved.
struct StageStrategy {
  StrategyKind kind = StrategyKind::ExactNewton;
  ExpansionPolicy expansion = ExpansionPolicy::StepStart;
  int chop_digits = 4;                    // LinearizedChopped
  Precision high = Precision::Double;     // MixedPrecision
  Precision low = Precision::Single;      // MixedPrecision
  int inner_iterations = 1;               // MixedPrecision iterates per stage
  double inner_tolerance = 0.0;           // stop early once stage residual <= tol
  double newton_tolerance = 1e-12;        // ExactNewton (1e-28 at extended level)
  int newton_max_iterations = 50;

  static StageStrategy exact_newton() { return {}; }
  static StageStrategy linearized() {
    StageStrategy s;
    s.kind = StrategyKind::Linearized;
    return s;
  }
  static StageStrategy linearized_chopped(int digits) {
    StageStrategy s;
    s.kind = StrategyKind::LinearizedChopped;
    s.chop_digits = digits;
    return s;
  }
  static StageStrategy mixed_precision(Precision high, Precision low, int iterations = 1,
                                       double tolerance = 0.0) {
    StageStrategy s;
    s.kind = StrategyKind::MixedPrecision;
    s.high = high;
    s.low = low;
    s.inner_iterations = iterations;
    s.inner_tolerance = tolerance;
    return s;
  }

  bool perturbed() const { return kind != StrategyKind::ExactNewton; }
};

template <typename Scalar>
struct StageSolution {
  VecX<Scalar> y;
  double h_norm = 0.0;  // ||f(y) - f_eps(y)||_inf of the realized surrogate
  int iterations = 0;
  bool converged = true;
};

// ---------------------------------------------------------------------------
// Reference solver: Newton with per-iteration Jacobian refresh.

template <typename Scalar>
StageSolution<Scalar> solve_newton(const StageEquation<Scalar>& eq, double tol,
                                   int max_iterations) {
  StageSolution<Scalar> sol;
  if (eq.alpha == 0.0) {
    sol.y = eq.y_exp;
    return sol;
  }
  const Scalar ad(eq.alpha * eq.dt);
  const Eigen::Index n = eq.y_exp.size();
  sol.y = eq.y_exp;
  for (int it = 0; it < max_iterations; ++it) {
    const VecX<Scalar> r = eq.y_exp + ad * eq.problem->rhs(sol.y) - sol.y;
    if (inf_norm<Scalar>(r) <= tol) {
      sol.iterations = it;
      return sol;
    }
    MatX<Scalar> j = -ad * eq.problem->jacobian(sol.y);
    j.diagonal().array() += Scalar(1.0);
    sol.y += lu_factor<Scalar>(j).solve(r);
    if (!all_finite<Scalar>(sol.y)) {
      sol.converged = false;
      sol.iterations = it + 1;
      return sol;
    }
  }
  sol.iterations = max_iterations;
  sol.converged =
      inf_norm<Scalar>(eq.y_exp + ad * eq.problem->rhs(sol.y) - sol.y) <= tol;
  return sol;
}

// ---------------------------------------------------------------------------
// Taylor-linearized single solve and its chopped-inverse variant. The
// operator is built once per expansion point and reused across stages that
// share the same alpha dt.

template <typename Scalar>
class LinearizedOperator {
 public:
  LinearizedOperator(const SemiDiscreteProblem<Scalar>& p, VecX<Scalar> ybar)
      : map_{std::move(ybar), {}, p.jacobian(ybar)} {
    map_.offset = p.rhs(map_.ybar) - map_.slope * map_.ybar;
  }
  explicit LinearizedOperator(AffineMap<Scalar> map) : map_(std::move(map)) {}

  const AffineMap<Scalar>& map() const { return map_; }

  /// Solve y = y_exp + alpha dt f_eps(y) by one LU solve.
  VecX<Scalar> solve(const VecX<Scalar>& y_exp, double alpha_dt) {
    const Scalar ad(alpha_dt);
    return factorization(alpha_dt).solve((y_exp + ad * map_.offset).eval());
  }

  /// Same solve with the system inverse chopped to d digits and applied as an
  /// explicit multiplication operator. Only available at the double level.
  VecX<Scalar> solve_chopped(const VecX<Scalar>& y_exp, double alpha_dt, ChopSpec spec) {
    if constexpr (!std::is_same_v<Scalar, double>) {
      throw std::invalid_argument("chopped solves are defined at the double level");
    } else {
      auto it = chopped_.find({alpha_dt, spec.digits});
      if (it == chopped_.end()) {
        MatrixXd m = -alpha_dt * map_.slope;
        m.diagonal().array() += 1.0;
        it = chopped_.emplace(std::make_pair(alpha_dt, spec.digits), invert_then_chop(m, spec))
                 .first;
      }
      return it->second * (y_exp + alpha_dt * map_.offset);
    }
  }

 private:
  DenseLu<Scalar>& factorization(double alpha_dt) {
    auto it = lu_.find(alpha_dt);
    if (it == lu_.end()) {
      MatX<Scalar> m = Scalar(-alpha_dt) * map_.slope;
      m.diagonal().array() += Scalar(1.0);
      it = lu_.emplace(alpha_dt, DenseLu<Scalar>(m)).first;
    }
    return it->second;
  }

  AffineMap<Scalar> map_;
  std::map<double, DenseLu<Scalar>> lu_;
  std::map<std::pair<double, int>, MatrixXd> chopped_;
};

template <typename Scalar>
StageSolution<Scalar> solve_linearized(const StageEquation<Scalar>& eq,
                                       LinearizedOperator<Scalar>& op) {
  StageSolution<Scalar> sol;
  if (eq.alpha == 0.0) {
    sol.y = eq.y_exp;
    return sol;
  }
  sol.y = op.solve(eq.y_exp, eq.alpha * eq.dt);
  sol.iterations = 1;
  sol.h_norm = inf_norm<Scalar>((eq.problem->rhs(sol.y) - op.map()(sol.y)).eval());
  return sol;
}

template <typename Scalar>
StageSolution<Scalar> solve_linearized_chopped(const StageEquation<Scalar>& eq,
                                               LinearizedOperator<Scalar>& op, ChopSpec spec) {
  StageSolution<Scalar> sol;
  if (eq.alpha == 0.0) {
    sol.y = eq.y_exp;
    return sol;
  }
  sol.y = op.solve_chopped(eq.y_exp, eq.alpha * eq.dt, spec);
  sol.iterations = 1;
  sol.h_norm = measured_h_norm(eq, sol.y);  // linearization + chop combined
  return sol;
}

// ---------------------------------------------------------------------------
// Mixed-precision iterative stage solver. Per iterate k:
//   1. relinearize f at y_k,
//   2. y_e = y_exp + a dt f(y_k) - a dt f'(y_k) y_k   (high precision)
//   3. J = I - a dt f'(y_k)                           (high precision)
//   4. cast y_e and J down to the low level
//   5. LU-solve J^eps ytilde = y_e^eps at the low level
//   6. cast ytilde up
//   7. y_{k+1} = y_e + a dt f'(y_k) ytilde            (high precision)

namespace detail {

template <typename Low, typename Scalar>
VecX<Scalar> low_precision_solve(const MatX<Scalar>& j_high, const VecX<Scalar>& rhs_high) {
  const MatX<Low> j_low = matrix_cast<Low>(j_high);
  const VecX<Low> rhs_low = vector_cast<Low>(rhs_high);
  for (Eigen::Index i = 0; i < rhs_low.size(); ++i)
    if (!std::isfinite(static_cast<double>(rhs_low(i))))
      throw DivergedStateError("mixed precision: overflow casting to the low level");
  const VecX<Low> solution = lu_factor<Low>(j_low).solve(rhs_low);
  return vector_cast<Scalar>(solution);
}

}  // namespace detail

template <typename Scalar>
StageSolution<Scalar> solve_mixed_precision(const StageEquation<Scalar>& eq,
                                            const StageStrategy& strategy) {
  static_assert(!std::is_same_v<Scalar, float>, "the high level is double or extended");
  if (strategy.inner_iterations < 1)
    throw std::invalid_argument("mixed precision needs at least one iterate");

  StageSolution<Scalar> sol;
  if (eq.alpha == 0.0) {
    sol.y = eq.y_exp;
    return sol;
  }
  const Scalar ad(eq.alpha * eq.dt);
  const Eigen::Index n = eq.y_exp.size();

  VecX<Scalar> y = eq.y_exp;
  VecX<Scalar> f_y = eq.problem->rhs(y);
  double residual_norm = inf_norm<Scalar>((eq.y_exp + ad * f_y - y).eval());

  int it = 0;
  for (; it < strategy.inner_iterations; ++it) {
    if (strategy.inner_tolerance > 0.0 && residual_norm <= strategy.inner_tolerance) break;
    const MatX<Scalar> jac = eq.problem->jacobian(y);
    const VecX<Scalar> y_e = eq.y_exp + ad * f_y - ad * (jac * y);
    MatX<Scalar> j_sys = -ad * jac;
    j_sys.diagonal().array() += Scalar(1.0);

    VecX<Scalar> y_tilde;
    if (strategy.low == Precision::Single)
      y_tilde = detail::low_precision_solve<float>(j_sys, y_e);
    else if (strategy.low == Precision::Double && !std::is_same_v<Scalar, double>)
      y_tilde = detail::low_precision_solve<double>(j_sys, y_e);
    else
      y_tilde = lu_factor<Scalar>(j_sys).solve(y_e);  // degenerate equal-level pair

    y = y_e + ad * (jac * y_tilde);
    if (!all_finite<Scalar>(y))
      throw DivergedStateError("mixed precision: iterate overflowed");
    f_y = eq.problem->rhs(y);
    residual_norm = inf_norm<Scalar>((eq.y_exp + ad * f_y - y).eval());
  }

  sol.y = y;
  sol.iterations = it;
  sol.h_norm = residual_norm / (eq.alpha * eq.dt);
  return sol;
}

// ---------------------------------------------------------------------------
// One DIRK step and the driving loop.

template <typename Scalar>
struct StageRecord {
  VecX<Scalar> y;
  double h_norm = 0.0;
  int iterations = 0;
  bool converged = true;
  std::vector<double> correction_residuals;  // ||r|| before/after each correction
};

template <typename Scalar>
struct StepResult {
  VecX<Scalar> y_next;
  std::vector<StageRecord<Scalar>> stages;
  bool failed = false;
  std::string failure;
};

/// Advance one step of length dt from y_n. The final combination always
/// re-evaluates the accurate f at the (possibly corrected) stage values.
template <typename Scalar>
StepResult<Scalar> dirk_step(const SemiDiscreteProblem<Scalar>& p, const ButcherTableau& t,
                             const VecX<Scalar>& y_n, double dt, const StageStrategy& strategy,
                             CorrectionContext<Scalar>* corrections = nullptr) {
  StepResult<Scalar> out;
  const int s = t.stages;
  out.stages.resize(s);

  std::optional<LinearizedOperator<Scalar>> step_op;
  const bool linear_kind = strategy.kind == StrategyKind::Linearized ||
                           strategy.kind == StrategyKind::LinearizedChopped;
  if (linear_kind && strategy.expansion == ExpansionPolicy::StepStart)
    step_op.emplace(p, y_n);

  std::vector<VecX<Scalar>> f_values(s);
  const Scalar dt_s(dt);

  if (corrections) corrections->begin_step();

  for (int i = 0; i < s; ++i) {
    StageEquation<Scalar> eq;
    eq.problem = &p;
    eq.alpha = t.A(i, i);
    eq.dt = dt;
    eq.y_exp = y_n;
    for (int j = 0; j < i; ++j) eq.y_exp += dt_s * Scalar(t.A(i, j)) * f_values[j];

    StageSolution<Scalar> sol;
    switch (strategy.kind) {
      case StrategyKind::ExactNewton: {
        const double tol = std::is_same_v<Scalar, DoubleDouble>
                               ? std::min(strategy.newton_tolerance, 1e-28)
                               : strategy.newton_tolerance;
        sol = solve_newton(eq, tol, strategy.newton_max_iterations);
        break;
      }
      case StrategyKind::Linearized:
      case StrategyKind::LinearizedChopped: {
        std::optional<LinearizedOperator<Scalar>> stage_op;
        LinearizedOperator<Scalar>* op = step_op ? &*step_op : nullptr;
        if (!op) {
          stage_op.emplace(p, eq.y_exp);
          op = &*stage_op;
        }
        sol = strategy.kind == StrategyKind::Linearized
                  ? solve_linearized(eq, *op)
                  : solve_linearized_chopped(eq, *op, ChopSpec{strategy.chop_digits});
        break;
      }
      case StrategyKind::MixedPrecision:
        sol = solve_mixed_precision(eq, strategy);
        break;
    }

    if (!sol.converged) {
      out.failed = true;
      out.failure = "stage " + std::to_string(i) + " did not converge";
      return out;
    }

    StageRecord<Scalar>& rec = out.stages[i];
    rec.iterations = sol.iterations;
    rec.converged = sol.converged;
    rec.h_norm = sol.h_norm;
    rec.y = std::move(sol.y);

    if (corrections && corrections->active()) {
      auto corrected = corrections->apply(eq, rec.y, i);
      rec.y = std::move(corrected.y);
      rec.correction_residuals = std::move(corrected.residual_norms);
      if (corrected.diverged) {
        out.failed = true;
        out.failure = "corrections diverged at stage " + std::to_string(i);
        return out;
      }
      rec.h_norm = measured_h_norm(eq, rec.y);
    }

    if (!all_finite<Scalar>(rec.y) || inf_norm<Scalar>(rec.y) > 1e10) {
      out.failed = true;
      out.failure = "stage " + std::to_string(i) + " diverged";
      return out;
    }
    f_values[i] = p.rhs(rec.y);
  }

  out.y_next = y_n;
  for (int i = 0; i < s; ++i) out.y_next += dt_s * Scalar(t.b(i)) * f_values[i];
  return out;
}

struct RunOptions {
  bool record_h = true;
  bool record_correction_residuals = false;
  double divergence_threshold = 1e10;
};

template <typename Scalar>
struct RunResult {
  VecX<Scalar> final_state;
  double final_time = 0.0;
  int steps = 0;
  bool partial_final_step = false;

  bool diverged = false;
  double divergence_time = std::numeric_limits<double>::quiet_NaN();

  // h_series[step][stage] = measured ||h||_inf
  std::vector<std::vector<double>> h_series;
  // correction_residuals[step][stage][k]
  std::vector<std::vector<std::vector<double>>> correction_residuals;

  double initial_mean = 0.0;
  double final_mean = 0.0;
  double wall_seconds = 0.0;

  double max_h() const {
    double m = 0.0;
    for (const auto& step : h_series)
      for (double h : step) m = std::max(m, h);
    return m;
  }
};

template <typename Scalar>
double state_mean(const VecX<Scalar>& y) {
  double sum = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) sum += to_double(y(i));
  return sum / static_cast<double>(y.size());
}

/// Integrate from t=0 to the problem's final time. dt is expected to divide
/// the horizon; a trailing partial step is taken (and flagged) otherwise.
/// Solver breakdowns are recorded as divergence at the current time.
template <typename Scalar>
RunResult<Scalar> integrate(const SemiDiscreteProblem<Scalar>& p, const ButcherTableau& t,
                            double dt, const StageStrategy& strategy,
                            const CorrectionPlan& plan = {}, const RunOptions& options = {}) {
  if (dt <= 0.0) throw std::invalid_argument("integrate: dt must be positive");
  const auto t_start = std::chrono::steady_clock::now();

  RunResult<Scalar> run;
  VecX<Scalar> y = p.initial_state;
  run.initial_mean = state_mean(y);

  const double horizon = p.final_time;
  const int full_steps = static_cast<int>(std::floor(horizon / dt + 1e-9));
  const double remainder = horizon - full_steps * dt;
  const bool has_partial = remainder > 1e-9 * horizon;

  CorrectionContext<Scalar> corrections(plan, p, t, dt);
  double time = 0.0;

  for (int step = 0; step < full_steps + (has_partial ? 1 : 0); ++step) {
    const bool partial = step == full_steps;
    const double step_dt = partial ? remainder : dt;
    StepResult<Scalar> result;
    try {
      result = dirk_step(p, t, y, step_dt, strategy, &corrections);
    } catch (const SingularMatrixError& e) {
      result.failed = true;
      result.failure = e.what();
    } catch (const DivergedStateError& e) {
      result.failed = true;
      result.failure = e.what();
    }
    if (!result.failed &&
        (!all_finite<Scalar>(result.y_next) ||
         inf_norm<Scalar>(result.y_next) > options.divergence_threshold)) {
      result.failed = true;
      result.failure = "state exceeded divergence threshold";
    }
    if (result.failed) {
      run.diverged = true;
      run.divergence_time = time + step_dt;
      break;
    }

    if (options.record_h) {
      std::vector<double> hs(result.stages.size());
      for (size_t i = 0; i < result.stages.size(); ++i) hs[i] = result.stages[i].h_norm;
      run.h_series.push_back(std::move(hs));
    }
    if (options.record_correction_residuals) {
      std::vector<std::vector<double>> per_stage;
      per_stage.reserve(result.stages.size());
      for (auto& st : result.stages) per_stage.push_back(std::move(st.correction_residuals));
      run.correction_residuals.push_back(std::move(per_stage));
    }

    y = std::move(result.y_next);
    time += step_dt;
    ++run.steps;
    if (partial) run.partial_final_step = true;
  }

  run.final_state = std::move(y);
  run.final_time = time;
  run.final_mean = state_mean(run.final_state);
  run.broyden_log = corrections.broyden_log();
  run.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return run;
}

}  // namespace dirklab
