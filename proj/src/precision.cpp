#include "dirklab/precision.hpp"

#include <cmath>
#include <stdexcept>

namespace dirklab {

double unit_roundoff(Precision level) {
  switch (level) {
    case Precision::Single:
      return 5.96e-8;
    case Precision::Double:
      return 1.11e-16;
    case Precision::Extended:
      return 1.2e-32;
  }
  throw std::logic_error("unreachable");
}

std::string to_string(Precision level) {
  switch (level) {
    case Precision::Single:
      return "single";
    case Precision::Double:
      return "double";
    case Precision::Extended:
      return "extended";
  }
  throw std::logic_error("unreachable");
}

Precision precision_from_string(const std::string& name) {
  if (name == "single") return Precision::Single;
  if (name == "double") return Precision::Double;
  if (name == "extended") return Precision::Extended;
  throw std::invalid_argument("unknown precision level '" + name + "'");
}

std::pair<Precision, Precision> parse_precision_pair(const std::string& pair) {
  const auto slash = pair.find('/');
  if (slash == std::string::npos)
    throw std::invalid_argument("precision pair must look like 'double/single', got '" + pair +
                                "'");
  const Precision high = precision_from_string(pair.substr(0, slash));
  const Precision low = precision_from_string(pair.substr(slash + 1));
  if (finer_than(low, high))
    throw std::invalid_argument("precision pair '" + pair + "' has low finer than high");
  return {high, low};
}

namespace {

int rank_of(Precision p) {
  switch (p) {
    case Precision::Single:
      return 0;
    case Precision::Double:
      return 1;
    case Precision::Extended:
      return 2;
  }
  return -1;
}

double round_to(double x, Precision level) {
  switch (level) {
    case Precision::Single:
      return static_cast<double>(static_cast<float>(x));
    case Precision::Double:
    case Precision::Extended:
      return x;
  }
  return x;
}

}  // namespace

bool finer_than(Precision a, Precision b) { return rank_of(a) > rank_of(b); }

double cast_down(double x, Precision to, Precision from) {
  if (!finer_than(from, to))
    throw std::invalid_argument("cast_down: target level " + to_string(to) +
                                " is not coarser than " + to_string(from));
  return round_to(x, to);
}

MatrixXd cast_down(const MatrixXd& v, Precision to, Precision from) {
  if (!finer_than(from, to))
    throw std::invalid_argument("cast_down: target level " + to_string(to) +
                                " is not coarser than " + to_string(from));
  return v.unaryExpr([to](double x) { return round_to(x, to); });
}

VectorXd cast_down(const VectorXd& v, Precision to, Precision from) {
  if (!finer_than(from, to))
    throw std::invalid_argument("cast_down: target level " + to_string(to) +
                                " is not coarser than " + to_string(from));
  return v.unaryExpr([to](double x) { return round_to(x, to); });
}

double cast_up(double x, Precision to, Precision from) {
  if (!finer_than(to, from))
    throw std::invalid_argument("cast_up: target level " + to_string(to) +
                                " is not finer than " + to_string(from));
  return x;  // every coarser value is exactly representable above
}

MatrixXd cast_up(const MatrixXd& v, Precision to, Precision from) {
  cast_up(0.0, to, from);
  return v;
}

VectorXd cast_up(const VectorXd& v, Precision to, Precision from) {
  cast_up(0.0, to, from);
  return v;
}

double chop(double x, ChopSpec spec) {
  if (spec.digits < 1) throw std::invalid_argument("chop: digits must be >= 1");
  if (x == 0.0 || !std::isfinite(x)) return x;
  const double e = std::floor(std::log10(std::abs(x)));
  const double scale = std::pow(10.0, spec.digits - 1 - e);
  // The relative nudge absorbs the 1-2 ulp noise of the decimal scaling so
  // repeated application reproduces the same truncated value.
  return std::trunc(x * scale * (1.0 + 8.0 * 1.11e-16)) / scale;
}

MatrixXd chop(const MatrixXd& m, ChopSpec spec) {
  return m.unaryExpr([spec](double x) { return chop(x, spec); });
}

VectorXd chop(const VectorXd& v, ChopSpec spec) {
  return v.unaryExpr([spec](double x) { return chop(x, spec); });
}

MatrixXd invert_then_chop(const MatrixXd& m, ChopSpec spec) {
  Eigen::PartialPivLU<MatrixXd> lu(m);
  const double breakdown = 1e3 * unit_roundoff(Precision::Double) * matrix_inf_norm<double>(m);
  if (lu.matrixLU().diagonal().cwiseAbs().minCoeff() < breakdown)
    throw SingularMatrixError("invert_then_chop: matrix numerically singular");
  return chop(lu.inverse().eval(), spec);
}

}  // namespace dirklab
