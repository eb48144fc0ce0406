#pragma once

#include <Eigen/Dense>

#include <functional>
#include <vector>

namespace ebshrink {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Dense symmetric matrix. Input is symmetrized as (A + A^T) / 2 on construction,
/// so entries(i, j) == entries(j, i) holds exactly.
class SymmetricMatrix {
 public:
  explicit SymmetricMatrix(const Matrix& a);

  static SymmetricMatrix identity(Eigen::Index dim);

  Eigen::Index dim() const noexcept { return m_.rows(); }
  const Matrix& matrix() const noexcept { return m_; }
  double operator()(Eigen::Index i, Eigen::Index j) const { return m_(i, j); }

 private:
  Matrix m_;
};

/// Eigenvalues ascending, eigenvectors column-paired; each eigenvector's
/// largest-magnitude entry is positive.
struct SpectralDecomposition {
  Vector eigenvalues;
  Matrix eigenvectors;
  Eigen::Index rank = 0;

  Eigen::Index dim() const noexcept { return eigenvalues.size(); }
  /// Eigenvalues at or below this are treated as zero: p * eps * lambda_max.
  double rank_tolerance() const noexcept;
  Matrix reconstruct() const;
};

/// Empirical distribution of sample eigenvalues: mass 1/p at each point.
class EmpiricalSpectralDistribution {
 public:
  explicit EmpiricalSpectralDistribution(const Vector& eigenvalues);

  /// Fraction of support points <= x (right-continuous step function).
  double cdf(double x) const;
  const std::vector<double>& support() const noexcept { return points_; }

 private:
  std::vector<double> points_;
};

double rank_tolerance(const Vector& ascending_eigenvalues);

/// S = n^{-1} Z^T Z for an n x p data matrix.
SymmetricMatrix sample_covariance(const Matrix& data);

SpectralDecomposition eigh(const SymmetricMatrix& a);

/// U diag(f(lambda_j)) U^T. Throws SingularityError if f is non-finite at an eigenvalue.
SymmetricMatrix spectral_apply(const SymmetricMatrix& a, const std::function<double(double)>& f);
SymmetricMatrix spectral_apply(const SpectralDecomposition& d, const std::function<double(double)>& f);

// Spectral functions on PSD input. Negative eigenvalues within the rank tolerance are
// clamped to zero; inverse and inverse square root reject eigenvalues at or below it.
SymmetricMatrix matrix_sqrt(const SymmetricMatrix& a);
SymmetricMatrix matrix_inv_sqrt(const SymmetricMatrix& a);
SymmetricMatrix matrix_inverse(const SymmetricMatrix& a);

}  // namespace ebshrink
