#pragma once

#include "ebshrink/shrinkage.hpp"
#include "ebshrink/spectral.hpp"

#include <vector>

namespace ebshrink {

/// Estimates of the diagonal of Sigma^{-1}, one per column of the data.
struct PrecisionDiagonals {
  Vector values;
  double sum() const { return values.sum(); }
};

/// How a residual sum of squares RSS_j (n - p + 1 degrees of freedom) becomes an estimate
/// of (Sigma^{-1})_jj.
enum class DiagonalScaling {
  Unbiased,  // (n - p - 1) / RSS_j, unbiased for Gaussian data
  PlugIn     // (n - p + 1) / RSS_j, reciprocal of the residual variance
};

/// For each column j, regresses Z_j on the other columns (no intercept) and scales the
/// reciprocal residual sum of squares. Requires n > p + 1.
PrecisionDiagonals precision_diagonals(const Matrix& z, DiagonalScaling scaling = DiagonalScaling::Unbiased);

/// (n - p - 1) (n S)^{-1}: the inverse of the Wishart scatter n S scaled to be unbiased
/// for Sigma^{-1}. Requires n > p + 1.
SymmetricMatrix unbiased_precision(const SymmetricMatrix& s, int n);

/// tr D_S(U zeta(Lambda*) U^T) with zeta_j = lambda*_j / delta_j and lambda*_j = n lambda_j:
///   sum_j [ d zeta_j / d lambda*_j + 1/2 sum_{i != j} (zeta_j - zeta_i) / (lambda*_j - lambda*_i) ].
/// The partial derivative holds the other eigenvalues fixed, so the Stein transform's own
/// summand (which vanishes identically along x = 1/lambda_j) does not contribute.
/// Divided differences of near-coincident eigenvalues (|gap| <= 1e-8 max lambda) are replaced
/// by the partial derivative. Under-sampled rules only.
double zeta_derivative_trace(const SpectralDecomposition& decomp, const ShrinkageRule& rule);

/// d zeta_j / d lambda*_j for every j (the diagonal part of the trace above).
Vector zeta_partial_derivatives(const ShrinkageRule& rule);

struct RiskEstimate {
  double h = 0.0;
  double value = 0.0;
  double term1 = 0.0;  // sum_j lambda*_j / delta_j^2
  double term2 = 0.0;  // (n - p - 1) sum_j 1 / delta_j
  double term3 = 0.0;  // derivative trace
  double term4 = 0.0;  // sum of precision-diagonal estimates
  int n = 0;

  /// n^{-1} term1 - 2 n^{-1} term2 - 4 n^{-1} term3 + term4.
  static double assemble(int n, double t1, double t2, double t3, double t4);
};

/// Nearly unbiased estimate of E tr[(Sigma^{-1} - Sigma~(h)^{-1})^2 S]. Requires n > p + 1.
RiskEstimate risk_estimate(const SymmetricMatrix& s, int n, double h, const PrecisionDiagonals& diagonals);

/// Same estimate from a precomputed spectrum; `diagonal_sum` is term4.
RiskEstimate risk_estimate(const SpectralDecomposition& decomp, int n, double h, double diagonal_sum);

/// 15 log-spaced points on [h0 / 10, 10 h0] with h0 = default_bandwidth(n, p).
std::vector<double> default_grid(int n, int p);

/// Grid minimizer of the risk estimate; ties go to the larger h. The h-independent
/// precision-diagonal term is left out, so only S is needed.
double select_bandwidth(const SymmetricMatrix& s, int n, const std::vector<double>& grid);
double select_bandwidth(const SpectralDecomposition& decomp, int n, const std::vector<double>& grid);

}  // namespace ebshrink
