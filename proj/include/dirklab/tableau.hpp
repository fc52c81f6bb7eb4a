#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dirklab/types.hpp"

namespace dirklab {

/// Coefficients of a diagonally implicit Runge-Kutta method. Immutable after
/// construction; safe to share across threads.
struct ButcherTableau {
  std::string name;
  int stages = 0;
  int order = 0;
  MatrixXd A;   // stages x stages, lower triangular
  VectorXd b;   // quadrature weights
  VectorXd c;   // abscissae, c_i = sum_j a_ij
};

/// Implicit midpoint rule: one stage, order 2.
ButcherTableau make_sdirk2();
/// Two-stage, third order, gamma = (sqrt(3)+3)/6.
ButcherTableau make_sdirk3();
/// Three-stage, fourth order, alpha = 2/sqrt(3) * cos(pi/18).
ButcherTableau make_sdirk4();

const ButcherTableau& tableau_by_name(const std::string& name);
std::vector<std::string> builtin_tableau_names();

/// B-stability matrix M = B A + A^T B - b b^T with B = diag(b).
MatrixXd stability_matrix(const ButcherTableau& t);

/// Smallest eigenvalue of a symmetric matrix; closed forms up to 3x3,
/// Jacobi rotations beyond. The input is symmetrized as (M + M^T)/2 first.
double min_symmetric_eigenvalue(const MatrixXd& m);

/// Per-condition result of the coefficient checks. Failures are reported,
/// never thrown.
struct TableauValidation {
  bool lower_triangular = false;
  bool row_sums_match = false;   // c_i = sum_j a_ij within 1e-14
  bool signs_ok = false;         // a_ii >= 0 and b_i >= 0
  bool abscissae_distinct = false;
  bool stability_psd = false;    // min eig(M) >= -1e-12

  double max_row_sum_defect = 0.0;
  double min_abscissa_gap = 0.0;
  double min_stability_eigenvalue = 0.0;

  bool passed() const {
    return lower_triangular && row_sums_match && signs_ok && abscissae_distinct &&
           stability_psd;
  }
};

TableauValidation validate(const ButcherTableau& t);

/// Butcher form of a method with k corrections per stage: stage blocks of
/// k+1 sub-stages, where every sub-stage row carries a_ii on its own diagonal
/// and the couplings a_ij in the column of the final sub-stage of stage j.
struct AugmentedTableau {
  ButcherTableau base;
  int corrections = 0;
  MatrixXd A;  // (s(k+1)) x (s(k+1))
  VectorXd b;  // k zeros then b_i, per stage block
};

AugmentedTableau augment(const ButcherTableau& t, int corrections);

/// JSON shape: {name, s, p, A (row-major), b, c}.
std::string tableau_to_json(const ButcherTableau& t);
ButcherTableau tableau_from_json(const std::string& text);

}  // namespace dirklab
