#include "dirklab/tableau.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace dirklab {

ButcherTableau make_sdirk2() {
  ButcherTableau t;
  t.name = "sdirk2";
  t.stages = 1;
  t.order = 2;
  t.A = MatrixXd::Constant(1, 1, 0.5);
  t.b = VectorXd::Constant(1, 1.0);
  t.c = VectorXd::Constant(1, 0.5);
  return t;
}

ButcherTableau make_sdirk3() {
  const double g = (std::sqrt(3.0) + 3.0) / 6.0;
  ButcherTableau t;
  t.name = "sdirk3";
  t.stages = 2;
  t.order = 3;
  t.A.setZero(2, 2);
  t.A << g, 0.0, 1.0 - 2.0 * g, g;
  t.b.resize(2);
  t.b << 0.5, 0.5;
  t.c.resize(2);
  t.c << g, 1.0 - g;
  return t;
}

ButcherTableau make_sdirk4() {
  const double a = 2.0 / std::sqrt(3.0) * std::cos(std::numbers::pi / 18.0);
  ButcherTableau t;
  t.name = "sdirk4";
  t.stages = 3;
  t.order = 4;
  t.A.setZero(3, 3);
  t.A << (1.0 + a) / 2.0, 0.0, 0.0,                      //
      -a / 2.0, (1.0 + a) / 2.0, 0.0,                    //
      1.0 + a, -(1.0 + 2.0 * a), (1.0 + a) / 2.0;
  t.b.resize(3);
  t.b << 1.0 / (6.0 * a * a), (6.0 * a * a - 2.0) / (6.0 * a * a), 1.0 / (6.0 * a * a);
  t.c = t.A.rowwise().sum();
  return t;
}

const ButcherTableau& tableau_by_name(const std::string& name) {
  static const ButcherTableau s2 = make_sdirk2();
  static const ButcherTableau s3 = make_sdirk3();
  static const ButcherTableau s4 = make_sdirk4();
  if (name == "sdirk2") return s2;
  if (name == "sdirk3") return s3;
  if (name == "sdirk4") return s4;
  throw std::invalid_argument("unknown tableau '" + name + "'");
}

std::vector<std::string> builtin_tableau_names() { return {"sdirk2", "sdirk3", "sdirk4"}; }

MatrixXd stability_matrix(const ButcherTableau& t) {
  const MatrixXd B = t.b.asDiagonal();
  return B * t.A + t.A.transpose() * B - t.b * t.b.transpose();
}

namespace {

double min_eig_2x2(const MatrixXd& m) {
  const double tr = m(0, 0) + m(1, 1);
  const double disc = std::sqrt(std::pow((m(0, 0) - m(1, 1)) / 2.0, 2) + m(0, 1) * m(0, 1));
  return tr / 2.0 - disc;
}

// Trigonometric closed form for symmetric 3x3 eigenvalues.
double min_eig_3x3(const MatrixXd& m) {
  const double p1 = m(0, 1) * m(0, 1) + m(0, 2) * m(0, 2) + m(1, 2) * m(1, 2);
  if (p1 == 0.0) return m.diagonal().minCoeff();
  const double q = m.trace() / 3.0;
  const double p2 = std::pow(m(0, 0) - q, 2) + std::pow(m(1, 1) - q, 2) +
                    std::pow(m(2, 2) - q, 2) + 2.0 * p1;
  const double p = std::sqrt(p2 / 6.0);
  const MatrixXd B = (m - q * MatrixXd::Identity(3, 3)) / p;
  const double r = std::clamp(B.determinant() / 2.0, -1.0, 1.0);
  const double phi = std::acos(r) / 3.0;
  return q + 2.0 * p * std::cos(phi + 2.0 * std::numbers::pi / 3.0);
}

double min_eig_jacobi(MatrixXd m) {
  const Eigen::Index n = m.rows();
  for (int sweep = 0; sweep < 64; ++sweep) {
    double off = 0.0;
    for (Eigen::Index p = 0; p < n; ++p)
      for (Eigen::Index q = p + 1; q < n; ++q) off += m(p, q) * m(p, q);
    if (off < 1e-30 * std::max(1.0, m.squaredNorm())) break;
    for (Eigen::Index p = 0; p < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        if (m(p, q) == 0.0) continue;
        const double theta = (m(q, q) - m(p, p)) / (2.0 * m(p, q));
        const double sign = theta >= 0.0 ? 1.0 : -1.0;
        const double tt = sign / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double cc = 1.0 / std::sqrt(tt * tt + 1.0);
        const double ss = tt * cc;
        Eigen::JacobiRotation<double> rot(cc, ss);
        m.applyOnTheLeft(p, q, rot.transpose());
        m.applyOnTheRight(p, q, rot);
      }
    }
  }
  return m.diagonal().minCoeff();
}

}  // namespace

double min_symmetric_eigenvalue(const MatrixXd& m) {
  const MatrixXd sym = 0.5 * (m + m.transpose());
  switch (sym.rows()) {
    case 1:
      return sym(0, 0);
    case 2:
      return min_eig_2x2(sym);
    case 3:
      return min_eig_3x3(sym);
    default:
      return min_eig_jacobi(sym);
  }
}

TableauValidation validate(const ButcherTableau& t) {
  TableauValidation v;
  const int s = t.stages;

  v.lower_triangular = true;
  for (int i = 0; i < s; ++i)
    for (int j = i + 1; j < s; ++j)
      if (t.A(i, j) != 0.0) v.lower_triangular = false;

  v.max_row_sum_defect = (t.A.rowwise().sum() - t.c).cwiseAbs().maxCoeff();
  v.row_sums_match = v.max_row_sum_defect <= 1e-14;

  v.signs_ok = t.A.diagonal().minCoeff() >= 0.0 && t.b.minCoeff() >= 0.0;

  // The paper requires distinct abscissae without giving a tolerance; the gap
  // is reported and the check fails below 1e-12.
  v.min_abscissa_gap = std::numeric_limits<double>::infinity();
  for (int i = 0; i < s; ++i)
    for (int j = i + 1; j < s; ++j)
      v.min_abscissa_gap = std::min(v.min_abscissa_gap, std::abs(t.c(i) - t.c(j)));
  v.abscissae_distinct = v.min_abscissa_gap > 1e-12;

  v.min_stability_eigenvalue = min_symmetric_eigenvalue(stability_matrix(t));
  v.stability_psd = v.min_stability_eigenvalue >= -1e-12;
  return v;
}

AugmentedTableau augment(const ButcherTableau& t, int corrections) {
  if (corrections < 0) throw std::invalid_argument("augment: corrections must be >= 0");
  const int s = t.stages;
  const int block = corrections + 1;
  const int dim = s * block;

  AugmentedTableau aug;
  aug.base = t;
  aug.corrections = corrections;
  aug.A = MatrixXd::Zero(dim, dim);
  aug.b = VectorXd::Zero(dim);

  for (int i = 0; i < s; ++i) {
    for (int r = 0; r < block; ++r) {
      const int row = i * block + r;
      aug.A(row, row) = t.A(i, i);
      for (int j = 0; j < i; ++j) aug.A(row, j * block + block - 1) = t.A(i, j);
    }
    aug.b(i * block + block - 1) = t.b(i);
  }
  return aug;
}

std::string tableau_to_json(const ButcherTableau& t) {
  nlohmann::json j;
  j["name"] = t.name;
  j["s"] = t.stages;
  j["p"] = t.order;
  std::vector<double> a_flat;
  a_flat.reserve(t.stages * t.stages);
  for (int i = 0; i < t.stages; ++i)
    for (int jj = 0; jj < t.stages; ++jj) a_flat.push_back(t.A(i, jj));
  j["A"] = a_flat;
  j["b"] = std::vector<double>(t.b.data(), t.b.data() + t.b.size());
  j["c"] = std::vector<double>(t.c.data(), t.c.data() + t.c.size());
  return j.dump(2);
}

ButcherTableau tableau_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  ButcherTableau t;
  t.name = j.at("name").get<std::string>();
  t.stages = j.at("s").get<int>();
  t.order = j.at("p").get<int>();
  const auto a_flat = j.at("A").get<std::vector<double>>();
  if (static_cast<int>(a_flat.size()) != t.stages * t.stages)
    throw std::invalid_argument("tableau_from_json: A has wrong length");
  t.A.resize(t.stages, t.stages);
  for (int i = 0; i < t.stages; ++i)
    for (int jj = 0; jj < t.stages; ++jj) t.A(i, jj) = a_flat[i * t.stages + jj];
  const auto bv = j.at("b").get<std::vector<double>>();
  const auto cv = j.at("c").get<std::vector<double>>();
  if (static_cast<int>(bv.size()) != t.stages || static_cast<int>(cv.size()) != t.stages)
    throw std::invalid_argument("tableau_from_json: b/c have wrong length");
  t.b = Eigen::Map<const VectorXd>(bv.data(), t.stages);
  t.c = Eigen::Map<const VectorXd>(cv.data(), t.stages);
  return t;
}

}  // namespace dirklab
