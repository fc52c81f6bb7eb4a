#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <type_traits>

#include <Eigen/Dense>

#include "dirklab/double_double.hpp"
#include "dirklab/types.hpp"

namespace dirklab {

/// Emulated storage/arithmetic levels. Extended is the double-word emulation
/// (~31 decimal digits) standing in for hardware quad.
enum class Precision { Single, Double, Extended };

double unit_roundoff(Precision level);
std::string to_string(Precision level);
Precision precision_from_string(const std::string& name);

/// "extended/double" -> {Extended, Double}. Accepts "double/double".
std::pair<Precision, Precision> parse_precision_pair(const std::string& pair);

/// True when a is a strictly finer (more accurate) level than b.
bool finer_than(Precision a, Precision b);

// ---------------------------------------------------------------------------
// Casts. Values live in double containers; the level tells which grid of
// representable numbers the entries sit on.

/// Round each entry to the nearest representable value of a coarser level.
/// Throws std::invalid_argument unless `to` is strictly coarser than `from`.
MatrixXd cast_down(const MatrixXd& v, Precision to, Precision from = Precision::Double);
VectorXd cast_down(const VectorXd& v, Precision to, Precision from = Precision::Double);
double cast_down(double x, Precision to, Precision from = Precision::Double);

/// Exact embedding into a finer level. Throws unless `to` is strictly finer.
MatrixXd cast_up(const MatrixXd& v, Precision to, Precision from = Precision::Double);
VectorXd cast_up(const VectorXd& v, Precision to, Precision from = Precision::Double);
double cast_up(double x, Precision to, Precision from = Precision::Double);

// ---------------------------------------------------------------------------
// Decimal digit chopping.

struct ChopSpec {
  int digits;  // significant decimal digits retained, >= 1
};

/// Truncate the decimal significand toward zero after `digits` significant
/// digits. Zero maps to zero; |chop(x) - x| <= 10^(1-d) |x|. Idempotent.
double chop(double x, ChopSpec spec);
MatrixXd chop(const MatrixXd& m, ChopSpec spec);
VectorXd chop(const VectorXd& v, ChopSpec spec);

// ---------------------------------------------------------------------------
// Dense LU with partial pivoting, arithmetic entirely in Scalar.

template <typename Scalar>
constexpr Precision precision_of() {
  if constexpr (std::is_same_v<Scalar, float>) return Precision::Single;
  if constexpr (std::is_same_v<Scalar, double>) return Precision::Double;
  return Precision::Extended;
}

namespace detail {

/// Row-pivoted Doolittle factorization for scalars Eigen's LU does not cover.
template <typename Scalar>
class HandRolledLu {
 public:
  explicit HandRolledLu(MatX<Scalar> m) : lu_(std::move(m)), perm_(lu_.rows()) {
    const Eigen::Index n = lu_.rows();
    const double breakdown =
        1e3 * unit_roundoff(precision_of<Scalar>()) * matrix_inf_norm(lu_);
    for (Eigen::Index i = 0; i < n; ++i) perm_[i] = static_cast<int>(i);
    for (Eigen::Index k = 0; k < n; ++k) {
      Eigen::Index piv = k;
      double best = std::abs(to_double(lu_(k, k)));
      for (Eigen::Index i = k + 1; i < n; ++i) {
        const double v = std::abs(to_double(lu_(i, k)));
        if (v > best) {
          best = v;
          piv = i;
        }
      }
      if (best < breakdown)
        throw SingularMatrixError("lu_factor: pivot " + std::to_string(k) +
                                  " below breakdown threshold");
      if (piv != k) {
        lu_.row(piv).swap(lu_.row(k));
        std::swap(perm_[piv], perm_[k]);
      }
      for (Eigen::Index i = k + 1; i < n; ++i) {
        const Scalar m = lu_(i, k) / lu_(k, k);
        lu_(i, k) = m;
        for (Eigen::Index j = k + 1; j < n; ++j) lu_(i, j) -= m * lu_(k, j);
      }
    }
  }

  VecX<Scalar> solve(const VecX<Scalar>& b) const {
    const Eigen::Index n = lu_.rows();
    VecX<Scalar> x(n);
    for (Eigen::Index i = 0; i < n; ++i) x(i) = b(perm_[i]);
    for (Eigen::Index i = 1; i < n; ++i)
      for (Eigen::Index j = 0; j < i; ++j) x(i) -= lu_(i, j) * x(j);
    for (Eigen::Index i = n - 1; i >= 0; --i) {
      for (Eigen::Index j = i + 1; j < n; ++j) x(i) -= lu_(i, j) * x(j);
      x(i) /= lu_(i, i);
    }
    return x;
  }

 private:
  MatX<Scalar> lu_;
  Eigen::VectorXi perm_;
};

}  // namespace detail

/// Factorization handle; float/double are backed by Eigen's PartialPivLU,
/// other scalars by the hand-rolled elimination above. Both signal breakdown
/// when a pivot magnitude drops below 1e3 * u * ||M||_inf.
template <typename Scalar>
class DenseLu {
  static constexpr bool kUseEigen = std::is_floating_point_v<Scalar>;
  using Impl = std::conditional_t<kUseEigen, Eigen::PartialPivLU<MatX<Scalar>>,
                                  detail::HandRolledLu<Scalar>>;

 public:
  explicit DenseLu(const MatX<Scalar>& m) : impl_(make(m)) {}

  VecX<Scalar> solve(const VecX<Scalar>& b) const {
    if constexpr (kUseEigen)
      return impl_.solve(b);
    else
      return impl_.solve(b);
  }

 private:
  static Impl make(const MatX<Scalar>& m) {
    if constexpr (kUseEigen) {
      Eigen::PartialPivLU<MatX<Scalar>> lu(m);
      const double breakdown =
          1e3 * unit_roundoff(precision_of<Scalar>()) * matrix_inf_norm(m);
      const double min_pivot =
          static_cast<double>(lu.matrixLU().diagonal().cwiseAbs().minCoeff());
      if (min_pivot < breakdown)
        throw SingularMatrixError("lu_factor: pivot below breakdown threshold");
      return lu;
    } else {
      return detail::HandRolledLu<Scalar>(m);
    }
  }

  Impl impl_;
};

template <typename Scalar>
DenseLu<Scalar> lu_factor(const MatX<Scalar>& m) {
  return DenseLu<Scalar>(m);
}

/// Invert in double via LU column solves, then chop every entry. The result
/// is applied downstream as an explicit multiplication operator.
MatrixXd invert_then_chop(const MatrixXd& m, ChopSpec spec);

}  // namespace dirklab
