#include "ebshrink/spectral.hpp"

#include "ebshrink/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace ebshrink {

SymmetricMatrix::SymmetricMatrix(const Matrix& a) {
  if (a.rows() < 1 || a.rows() != a.cols()) {
    std::ostringstream os;
    os << "symmetric matrix must be square with dim >= 1, got " << a.rows() << "x" << a.cols();
    throw DimensionError(os.str());
  }
  m_ = 0.5 * (a + a.transpose());
}

SymmetricMatrix SymmetricMatrix::identity(Eigen::Index dim) {
  return SymmetricMatrix(Matrix::Identity(dim, dim));
}

double rank_tolerance(const Vector& ascending_eigenvalues) {
  if (ascending_eigenvalues.size() == 0) return 0.0;
  const double lmax = std::max(0.0, ascending_eigenvalues.maxCoeff());
  return static_cast<double>(ascending_eigenvalues.size()) * std::numeric_limits<double>::epsilon() * lmax;
}

double SpectralDecomposition::rank_tolerance() const noexcept {
  return ebshrink::rank_tolerance(eigenvalues);
}

Matrix SpectralDecomposition::reconstruct() const {
  return eigenvectors * eigenvalues.asDiagonal() * eigenvectors.transpose();
}

EmpiricalSpectralDistribution::EmpiricalSpectralDistribution(const Vector& eigenvalues)
    : points_(eigenvalues.data(), eigenvalues.data() + eigenvalues.size()) {
  if (points_.empty()) throw DimensionError("spectral distribution needs at least one eigenvalue");
  std::sort(points_.begin(), points_.end());
}

double EmpiricalSpectralDistribution::cdf(double x) const {
  const auto it = std::upper_bound(points_.begin(), points_.end(), x);
  return static_cast<double>(it - points_.begin()) / static_cast<double>(points_.size());
}

SymmetricMatrix sample_covariance(const Matrix& data) {
  if (data.rows() < 1 || data.cols() < 1) throw DimensionError("sample_covariance: empty data matrix");
  const double n = static_cast<double>(data.rows());
  return SymmetricMatrix(data.transpose() * data / n);
}

SpectralDecomposition eigh(const SymmetricMatrix& a) {
  if (!a.matrix().allFinite()) throw InputError("eigh: matrix has non-finite entries");
  Eigen::SelfAdjointEigenSolver<Matrix> solver(a.matrix());
  if (solver.info() != Eigen::Success) throw InputError("eigh: eigensolver did not converge");

  SpectralDecomposition d;
  d.eigenvalues = solver.eigenvalues();
  d.eigenvectors = solver.eigenvectors();
  for (Eigen::Index j = 0; j < d.eigenvectors.cols(); ++j) {
    Eigen::Index imax = 0;
    d.eigenvectors.col(j).cwiseAbs().maxCoeff(&imax);
    if (d.eigenvectors(imax, j) < 0.0) d.eigenvectors.col(j) *= -1.0;
  }
  const double tol = d.rank_tolerance();
  d.rank = (d.eigenvalues.array() > tol).count();
  return d;
}

SymmetricMatrix spectral_apply(const SpectralDecomposition& d, const std::function<double(double)>& f) {
  Vector mapped(d.dim());
  for (Eigen::Index j = 0; j < d.dim(); ++j) {
    mapped(j) = f(d.eigenvalues(j));
    if (!std::isfinite(mapped(j))) {
      std::ostringstream os;
      os << "spectral_apply: map undefined at eigenvalue " << d.eigenvalues(j);
      throw SingularityError(os.str());
    }
  }
  return SymmetricMatrix(d.eigenvectors * mapped.asDiagonal() * d.eigenvectors.transpose());
}

SymmetricMatrix spectral_apply(const SymmetricMatrix& a, const std::function<double(double)>& f) {
  return spectral_apply(eigh(a), f);
}

namespace {

SymmetricMatrix apply_positive(const SymmetricMatrix& a, bool allow_zero, double (*f)(double), const char* name) {
  const SpectralDecomposition d = eigh(a);
  const double tol = d.rank_tolerance();
  Vector mapped(d.dim());
  for (Eigen::Index j = 0; j < d.dim(); ++j) {
    const double lambda = d.eigenvalues(j);
    if (lambda < -tol || (!allow_zero && lambda <= tol)) {
      std::ostringstream os;
      os << name << ": eigenvalue " << lambda << " is not above the rank tolerance " << tol;
      throw SingularityError(os.str());
    }
    mapped(j) = f(std::max(lambda, 0.0));
  }
  return SymmetricMatrix(d.eigenvectors * mapped.asDiagonal() * d.eigenvectors.transpose());
}

}  // namespace

SymmetricMatrix matrix_sqrt(const SymmetricMatrix& a) {
  return apply_positive(a, true, [](double x) { return std::sqrt(x); }, "matrix_sqrt");
}

SymmetricMatrix matrix_inv_sqrt(const SymmetricMatrix& a) {
  return apply_positive(a, false, [](double x) { return 1.0 / std::sqrt(x); }, "matrix_inv_sqrt");
}

SymmetricMatrix matrix_inverse(const SymmetricMatrix& a) {
  return apply_positive(a, false, [](double x) { return 1.0 / x; }, "matrix_inverse");
}

}  // namespace ebshrink
