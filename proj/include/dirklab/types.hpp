#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Dense>

#include "dirklab/double_double.hpp"

namespace dirklab {

template <typename Scalar>
using MatX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VecX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Raised when a dense factorization meets a pivot below the level's
/// breakdown threshold.
class SingularMatrixError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when a state leaves the domain a right-hand side is defined on
/// (e.g. the shallow-water height floor). Integrators record it as divergence.
class DivergedStateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

template <typename To, typename From>
To scalar_cast(const From& x) {
  if constexpr (std::is_same_v<To, From>) {
    return x;
  } else if constexpr (std::is_same_v<From, DoubleDouble>) {
    return static_cast<To>(to_double(x));
  } else {
    return To(x);
  }
}

template <typename To, typename From>
MatX<To> matrix_cast(const MatX<From>& m) {
  MatX<To> out(m.rows(), m.cols());
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i) out(i, j) = scalar_cast<To>(m(i, j));
  return out;
}

template <typename To, typename From>
VecX<To> vector_cast(const VecX<From>& v) {
  VecX<To> out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) out(i) = scalar_cast<To>(v(i));
  return out;
}

template <typename Scalar>
double inf_norm(const VecX<Scalar>& v) {
  double m = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) m = std::max(m, std::abs(to_double(v(i))));
  return m;
}

inline double inf_norm(const VectorXd& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

/// Max absolute row sum.
template <typename Scalar>
double matrix_inf_norm(const MatX<Scalar>& m) {
  double best = 0.0;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    double row = 0.0;
    for (Eigen::Index j = 0; j < m.cols(); ++j) row += std::abs(to_double(m(i, j)));
    best = std::max(best, row);
  }
  return best;
}

template <typename Scalar>
bool all_finite(const VecX<Scalar>& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    using std::isfinite;
    if (!isfinite(v(i))) return false;
  }
  return true;
}

}  // namespace dirklab
