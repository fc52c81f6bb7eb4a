#pragma once

#include <numbers>

#include <Eigen/Dense>

#include "dirklab/types.hpp"

namespace dirklab {

/// Dense Fourier spectral differentiation matrix on a periodic, uniform grid
/// x_j = x_lo + j (x_hi - x_lo)/n. Exact to roundoff on trigonometric
/// polynomials below the Nyquist wavenumber.
struct DiffMatrix {
  int n = 0;
  double x_lo = 0.0;
  double x_hi = 0.0;
  int order = 1;
  MatrixXd entries;
  VectorXd grid;
};

/// First derivative; cotangent entries for even n, cosecant for odd n.
DiffMatrix fourier_d1(int n, double x_lo = 0.0, double x_hi = 2.0 * std::numbers::pi);

/// Second derivative. For even n the Nyquist mode is annihilated so the
/// matrix equals the first-derivative matrix applied twice.
DiffMatrix fourier_d2(int n, double x_lo = 0.0, double x_hi = 2.0 * std::numbers::pi);

}  // namespace dirklab
