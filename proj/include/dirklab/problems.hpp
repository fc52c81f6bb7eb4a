#pragma once

#include <functional>
#include <memory>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dirklab/spectral.hpp"
#include "dirklab/types.hpp"

namespace dirklab {

/// Semi-discrete ODE system y' = f(y) from a Fourier spectral discretization.
/// Immutable; rhs/jacobian evaluation is re-entrant.
template <typename Scalar>
struct SemiDiscreteProblem {
  std::string name;
  int dim = 0;
  std::function<VecX<Scalar>(const VecX<Scalar>&)> rhs;
  std::function<MatX<Scalar>(const VecX<Scalar>&)> jacobian;
  MatX<Scalar> dominant_operator;  // the EIN operator L
  VecX<Scalar> initial_state;
  double final_time = 0.0;
};

/// First-order Taylor surrogate f_eps(y) = f(ybar) + f'(ybar)(y - ybar),
/// stored as offset + slope*y.
template <typename Scalar>
struct AffineMap {
  VecX<Scalar> ybar;
  VecX<Scalar> offset;  // f(ybar) - f'(ybar) ybar
  MatX<Scalar> slope;   // f'(ybar)

  VecX<Scalar> operator()(const VecX<Scalar>& y) const { return offset + slope * y; }
};

template <typename Scalar>
AffineMap<Scalar> taylor_linearize(const SemiDiscreteProblem<Scalar>& p,
                                   const VecX<Scalar>& ybar) {
  AffineMap<Scalar> map;
  map.ybar = ybar;
  map.slope = p.jacobian(ybar);
  map.offset = p.rhs(ybar) - map.slope * ybar;
  return map;
}

// Shallow-water height floor; states below it are treated as diverged.
inline constexpr double kEtaFloor = 1e-8;

/// Inviscid Burgers on (0, 2pi): f(y) = -1/2 D_x y^2.
/// Variant 'a': u0 = 1/2 + sin(x)/4, T_f = 3.5. Variant 'b': u0 = sin(x), T_f = 0.7.
template <typename Scalar>
SemiDiscreteProblem<Scalar> make_burgers(int n, char variant) {
  if (variant != 'a' && variant != 'b')
    throw std::invalid_argument("burgers variant must be 'a' or 'b'");
  const DiffMatrix d1 = fourier_d1(n);
  auto dx = std::make_shared<MatX<Scalar>>(matrix_cast<Scalar>(MatX<double>(d1.entries)));

  SemiDiscreteProblem<Scalar> p;
  p.name = variant == 'a' ? "burgers-a" : "burgers-b";
  p.dim = n;
  p.dominant_operator = -(*dx);
  p.initial_state.resize(n);
  for (int j = 0; j < n; ++j) {
    const double x = d1.grid(j);
    p.initial_state(j) =
        scalar_cast<Scalar>(variant == 'a' ? 0.5 + 0.25 * std::sin(x) : std::sin(x));
  }
  p.final_time = variant == 'a' ? 3.5 : 0.7;
  p.rhs = [dx](const VecX<Scalar>& y) -> VecX<Scalar> {
    return Scalar(-0.5) * (*dx * y.cwiseProduct(y));
  };
  p.jacobian = [dx, n](const VecX<Scalar>& y) -> MatX<Scalar> {
    MatX<Scalar> j(n, n);
    for (int col = 0; col < n; ++col) j.col(col) = -dx->col(col) * y(col);
    return j;
  };
  return p;
}

/// Burgers-specific linearization built directly from the printed formula
/// f_eps(y) = -1/2 D_x ybar^2 - D_x diag(ybar)(y - ybar); an independent route
/// from taylor_linearize for cross-checks.
template <typename Scalar>
AffineMap<Scalar> burgers_linearized(const SemiDiscreteProblem<Scalar>& p,
                                     const VecX<Scalar>& ybar) {
  const int n = p.dim;
  if (ybar.size() != n) throw std::invalid_argument("burgers_linearized: ybar has wrong size");
  const MatX<Scalar> dx = -p.dominant_operator;
  AffineMap<Scalar> map;
  map.ybar = ybar;
  map.slope.resize(n, n);
  for (int col = 0; col < n; ++col) map.slope.col(col) = -dx.col(col) * ybar(col);
  map.offset = Scalar(-0.5) * (dx * ybar.cwiseProduct(ybar)) - map.slope * ybar;
  return map;
}

/// Shallow water on (0, 2pi) in (height; mass flux) variables, stacked.
/// eta0 = 1 + 0.1 sin(x), flux0 = 0, T_f = 0.5.
template <typename Scalar>
SemiDiscreteProblem<Scalar> make_shallow_water(int n) {
  const DiffMatrix d1 = fourier_d1(n);
  auto dx = std::make_shared<MatX<Scalar>>(matrix_cast<Scalar>(MatX<double>(d1.entries)));

  SemiDiscreteProblem<Scalar> p;
  p.name = "shallow-water";
  p.dim = 2 * n;
  p.dominant_operator = MatX<Scalar>::Zero(2 * n, 2 * n);
  p.dominant_operator.topLeftCorner(n, n) = -(*dx);
  p.dominant_operator.bottomRightCorner(n, n) = -(*dx);
  p.initial_state = VecX<Scalar>::Zero(2 * n);
  for (int j = 0; j < n; ++j)
    p.initial_state(j) = scalar_cast<Scalar>(1.0 + 0.1 * std::sin(d1.grid(j)));
  p.final_time = 0.5;

  auto check_height = [n](const VecX<Scalar>& y) {
    for (int j = 0; j < n; ++j)
      if (to_double(y(j)) <= kEtaFloor)
        throw DivergedStateError("shallow water: height fell below floor");
  };
  p.rhs = [dx, n, check_height](const VecX<Scalar>& y) -> VecX<Scalar> {
    check_height(y);
    const auto eta = y.head(n);
    const auto flux = y.tail(n);
    VecX<Scalar> out(2 * n);
    out.head(n) = -(*dx * flux);
    const VecX<Scalar> pressure =
        flux.cwiseProduct(flux).cwiseQuotient(eta) + Scalar(0.5) * eta.cwiseProduct(eta);
    out.tail(n) = -(*dx * pressure);
    return out;
  };
  p.jacobian = [dx, n, check_height](const VecX<Scalar>& y) -> MatX<Scalar> {
    check_height(y);
    const auto eta = y.head(n);
    const auto flux = y.tail(n);
    MatX<Scalar> j = MatX<Scalar>::Zero(2 * n, 2 * n);
    j.topRightCorner(n, n) = -(*dx);
    for (int col = 0; col < n; ++col) {
      const Scalar ratio = flux(col) / eta(col);
      j.block(n, 0, n, n).col(col) = dx->col(col) * (ratio * ratio - eta(col));
      j.block(n, n, n, n).col(col) = Scalar(-2.0) * dx->col(col) * ratio;
    }
    return j;
  };
  return p;
}

/// Porous medium u_t = (u^3)_xx.
/// Variant 'a': domain (-pi, pi), u0 = cos(x)/2 + 1/2. Variant 'b': domain
/// (0, 2pi), u0 = sin(x)/2. Both run to T_f = 0.5.
template <typename Scalar>
SemiDiscreteProblem<Scalar> make_porous_medium(int n, char variant) {
  if (variant != 'a' && variant != 'b')
    throw std::invalid_argument("porous medium variant must be 'a' or 'b'");
  const double lo = variant == 'a' ? -std::numbers::pi : 0.0;
  const double hi = variant == 'a' ? std::numbers::pi : 2.0 * std::numbers::pi;
  const DiffMatrix d2 = fourier_d2(n, lo, hi);
  auto dxx = std::make_shared<MatX<Scalar>>(matrix_cast<Scalar>(MatX<double>(d2.entries)));

  SemiDiscreteProblem<Scalar> p;
  p.name = variant == 'a' ? "pm-a" : "pm-b";
  p.dim = n;
  p.dominant_operator = *dxx;
  p.initial_state.resize(n);
  for (int j = 0; j < n; ++j) {
    const double x = d2.grid(j);
    p.initial_state(j) =
        scalar_cast<Scalar>(variant == 'a' ? 0.5 * std::cos(x) + 0.5 : 0.5 * std::sin(x));
  }
  p.final_time = 0.5;
  p.rhs = [dxx](const VecX<Scalar>& u) -> VecX<Scalar> {
    return *dxx * u.cwiseProduct(u).cwiseProduct(u);
  };
  p.jacobian = [dxx, n](const VecX<Scalar>& u) -> MatX<Scalar> {
    MatX<Scalar> j(n, n);
    for (int col = 0; col < n; ++col) j.col(col) = dxx->col(col) * (Scalar(3.0) * u(col) * u(col));
    return j;
  };
  return p;
}

/// Lookup by the CLI names: burgers-a, burgers-b, shallow-water, pm-a, pm-b.
template <typename Scalar>
SemiDiscreteProblem<Scalar> make_problem(const std::string& name, int n) {
  if (name == "burgers-a") return make_burgers<Scalar>(n, 'a');
  if (name == "burgers-b") return make_burgers<Scalar>(n, 'b');
  if (name == "shallow-water") return make_shallow_water<Scalar>(n);
  if (name == "pm-a") return make_porous_medium<Scalar>(n, 'a');
  if (name == "pm-b") return make_porous_medium<Scalar>(n, 'b');
  throw std::invalid_argument("unknown problem '" + name + "'");
}

inline std::vector<std::string> problem_names() {
  return {"burgers-a", "burgers-b", "shallow-water", "pm-a", "pm-b"};
}

}  // namespace dirklab
