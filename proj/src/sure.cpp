#include "ebshrink/sure.hpp"

#include "ebshrink/errors.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace ebshrink {

namespace {

constexpr double kCoalescence = 1e-8;
constexpr double kBracketFloor = 1e-8;

}  // namespace

PrecisionDiagonals precision_diagonals(const Matrix& z, DiagonalScaling scaling) {
  const Eigen::Index n = z.rows();
  const Eigen::Index p = z.cols();
  if (p < 1) throw DimensionError("precision_diagonals: empty data");
  if (n <= p + 1) {
    std::ostringstream os;
    os << "precision_diagonals: need n > p + 1, got n=" << n << " p=" << p;
    throw InsufficientSamplesError(os.str());
  }
  // Residual sum of squares of column j regressed on the rest is 1 / [(Z^T Z)^{-1}]_jj.
  const Matrix gram = z.transpose() * z;
  Eigen::LLT<Matrix> llt(gram);
  if (llt.info() != Eigen::Success) throw SingularityError("precision_diagonals: columns are collinear");
  const Matrix inv = llt.solve(Matrix::Identity(p, p));
  const double dof = static_cast<double>(scaling == DiagonalScaling::Unbiased ? n - p - 1 : n - p + 1);

  PrecisionDiagonals out;
  out.values.resize(p);
  for (Eigen::Index j = 0; j < p; ++j) {
    const double rss = 1.0 / inv(j, j);
    if (!(rss > 0.0) || !std::isfinite(rss)) {
      throw SingularityError("precision_diagonals: column is collinear with the others");
    }
    out.values(j) = dof / rss;
  }
  return out;
}

SymmetricMatrix unbiased_precision(const SymmetricMatrix& s, int n) {
  const auto p = s.dim();
  if (n <= p + 1) {
    std::ostringstream os;
    os << "unbiased_precision: need n > p + 1, got n=" << n << " p=" << p;
    throw InsufficientSamplesError(os.str());
  }
  return SymmetricMatrix(matrix_inverse(s).matrix() * (static_cast<double>(n - p - 1) / n));
}

Vector zeta_partial_derivatives(const ShrinkageRule& rule) {
  if (rule.regime() != Regime::UnderSampled) {
    throw RegimeError("zeta derivative: only defined for p < n");
  }
  const Vector& lambda = rule.eigenvalues();
  const double c = rule.ratio();
  const double c1 = 1.0 - c;
  const double c2 = 2.0 * c;
  const double h = rule.bandwidth();
  const int div = rule.divisor();

  Vector out(lambda.size());
  for (Eigen::Index j = 0; j < lambda.size(); ++j) {
    const double a = 1.0 / lambda(j);
    const double g = stein_transform(a, lambda, h, div);
    double bracket = c1 * a + c2 * a * g;
    double dbracket = 0.0;
    if (bracket > 0.0 && std::isfinite(bracket)) {
      dbracket = c1 + c2 * g + c2 * a * stein_transform_derivative(a, lambda, h, div, j);
    } else {
      bracket = kBracketFloor * a;
      dbracket = kBracketFloor;
    }
    // zeta_j = n lambda_j / delta_j, so d zeta_j / d lambda*_j = 1/delta_j - lambda_j^{-1} d(1/delta_j)/d(1/lambda_j).
    out(j) = bracket - a * dbracket;
  }
  return out;
}

double zeta_derivative_trace(const SpectralDecomposition& decomp, const ShrinkageRule& rule) {
  if (decomp.dim() != rule.p()) throw DimensionError("zeta_derivative_trace: rule and spectrum disagree on p");
  const Vector partial = zeta_partial_derivatives(rule);
  const Vector& lambda = rule.eigenvalues();
  const double n = rule.n();
  const Eigen::Index p = lambda.size();

  Vector zeta(p);
  for (Eigen::Index j = 0; j < p; ++j) zeta(j) = n * lambda(j) / delta_star_under(lambda(j), rule).value;

  const double gap_tol = kCoalescence * lambda.maxCoeff();
  double trace = 0.0;
  for (Eigen::Index j = 0; j < p; ++j) {
    double cross = 0.0;
    for (Eigen::Index i = 0; i < p; ++i) {
      if (i == j) continue;
      if (std::abs(lambda(j) - lambda(i)) <= gap_tol) {
        cross += partial(j);
      } else {
        cross += (zeta(j) - zeta(i)) / (n * (lambda(j) - lambda(i)));
      }
    }
    trace += partial(j) + 0.5 * cross;
  }
  return trace;
}

double RiskEstimate::assemble(int n, double t1, double t2, double t3, double t4) {
  const double nn = n;
  return t1 / nn - 2.0 * t2 / nn - 4.0 * t3 / nn + t4;
}

RiskEstimate risk_estimate(const SpectralDecomposition& decomp, int n, double h, double diagonal_sum) {
  const int p = static_cast<int>(decomp.dim());
  if (n <= p + 1) {
    std::ostringstream os;
    os << "risk_estimate: need n > p + 1, got n=" << n << " p=" << p;
    throw InsufficientSamplesError(os.str());
  }
  const ShrinkageRule rule = ShrinkageRule::from_decomposition(decomp, n, h);
  const Vector& lambda = rule.eigenvalues();

  RiskEstimate r;
  r.h = h;
  r.n = n;
  for (Eigen::Index j = 0; j < lambda.size(); ++j) {
    const double delta = delta_star_under(lambda(j), rule).value;
    r.term1 += n * lambda(j) / (delta * delta);
    r.term2 += 1.0 / delta;
  }
  r.term2 *= static_cast<double>(n - p - 1);
  r.term3 = zeta_derivative_trace(decomp, rule);
  r.term4 = diagonal_sum;
  r.value = RiskEstimate::assemble(n, r.term1, r.term2, r.term3, r.term4);
  return r;
}

RiskEstimate risk_estimate(const SymmetricMatrix& s, int n, double h, const PrecisionDiagonals& diagonals) {
  if (diagonals.values.size() != s.dim()) throw DimensionError("risk_estimate: diagonal count differs from p");
  SpectralDecomposition d = eigh(s);
  d.eigenvalues = d.eigenvalues.cwiseMax(0.0);
  return risk_estimate(d, n, h, diagonals.sum());
}

std::vector<double> default_grid(int n, int p) {
  const double h0 = default_bandwidth(n, p);
  constexpr int kPoints = 15;
  std::vector<double> grid(kPoints);
  for (int i = 0; i < kPoints; ++i) {
    const double expo = -1.0 + 2.0 * i / (kPoints - 1);
    grid[i] = h0 * std::pow(10.0, expo);
  }
  grid[kPoints / 2] = h0;
  return grid;
}

double select_bandwidth(const SpectralDecomposition& decomp, int n, const std::vector<double>& grid) {
  if (grid.empty()) throw PreconditionError("select_bandwidth: empty grid");
  for (double h : grid) {
    if (!(h > 0.0) || !std::isfinite(h)) throw DomainError("select_bandwidth: grid entries must be positive");
  }
  double best_h = std::numeric_limits<double>::quiet_NaN();
  double best_value = std::numeric_limits<double>::infinity();
  for (double h : grid) {
    const double v = risk_estimate(decomp, n, h, 0.0).value;
    if (!std::isfinite(v)) continue;
    if (v < best_value || (v == best_value && h > best_h)) {
      best_value = v;
      best_h = h;
    }
  }
  if (!std::isfinite(best_h)) throw TuningFailureError("select_bandwidth: risk estimate non-finite on the whole grid");
  return best_h;
}

double select_bandwidth(const SymmetricMatrix& s, int n, const std::vector<double>& grid) {
  SpectralDecomposition d = eigh(s);
  d.eigenvalues = d.eigenvalues.cwiseMax(0.0);
  return select_bandwidth(d, n, grid);
}

}  // namespace ebshrink
