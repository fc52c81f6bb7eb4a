#include "dirklab/spectral.hpp"

#include <cmath>
#include <stdexcept>

namespace dirklab {

namespace {

constexpr double kPi = std::numbers::pi;

DiffMatrix make_base(int n, double x_lo, double x_hi, int order) {
  if (n < 4) throw std::invalid_argument("fourier differentiation needs n >= 4");
  if (!(x_hi > x_lo)) throw std::invalid_argument("domain must satisfy x_hi > x_lo");
  DiffMatrix d;
  d.n = n;
  d.x_lo = x_lo;
  d.x_hi = x_hi;
  d.order = order;
  d.grid.resize(n);
  for (int j = 0; j < n; ++j) d.grid(j) = x_lo + j * (x_hi - x_lo) / n;
  d.entries.setZero(n, n);
  return d;
}

double sign_pm(int k) { return (k % 2 == 0) ? 1.0 : -1.0; }

}  // namespace

DiffMatrix fourier_d1(int n, double x_lo, double x_hi) {
  DiffMatrix d = make_base(n, x_lo, x_hi, 1);
  const double h = 2.0 * kPi / n;
  const double scale = 2.0 * kPi / (x_hi - x_lo);
  const bool even = n % 2 == 0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      const int k = i - j;
      const double entry = even ? 0.5 * sign_pm(k) / std::tan(0.5 * k * h)
                                : 0.5 * sign_pm(k) / std::sin(0.5 * k * h);
      d.entries(i, j) = scale * entry;
    }
  }
  return d;
}

DiffMatrix fourier_d2(int n, double x_lo, double x_hi) {
  DiffMatrix d = make_base(n, x_lo, x_hi, 2);
  const double h = 2.0 * kPi / n;
  const double scale = 2.0 * kPi / (x_hi - x_lo);
  const bool even = n % 2 == 0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const int k = i - j;
      double entry;
      if (even) {
        // +n/4 (-1)^k zeroes the Nyquist sawtooth, matching d1 applied twice.
        entry = (i == j) ? -kPi * kPi / (3.0 * h * h) - 1.0 / 6.0 + n / 4.0
                         : -sign_pm(k) / (2.0 * std::pow(std::sin(0.5 * k * h), 2)) +
                               n / 4.0 * sign_pm(k);
      } else {
        entry = (i == j) ? -kPi * kPi / (3.0 * h * h) + 1.0 / 12.0
                         : -sign_pm(k) * std::cos(0.5 * k * h) /
                               (2.0 * std::pow(std::sin(0.5 * k * h), 2));
      }
      d.entries(i, j) = scale * scale * entry;
    }
  }
  return d;
}

}  // namespace dirklab
