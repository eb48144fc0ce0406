#include "ebshrink/shrinkage.hpp"

#include "ebshrink/errors.hpp"
#include "ebshrink/sure.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace ebshrink {

namespace {

constexpr double kBracketFloor = 1e-8;

void check_positive(double x, const char* what) {
  if (!(x > 0.0) || !std::isfinite(x)) {
    std::ostringstream os;
    os << what << " must be positive and finite, got " << x;
    throw DomainError(os.str());
  }
}

ShrunkValue invert_bracket(double x, double bracket) {
  if (bracket > 0.0 && std::isfinite(bracket)) return {1.0 / bracket, false};
  return {1.0 / (kBracketFloor / x), true};
}

}  // namespace

std::string to_string(Regime r) {
  return r == Regime::UnderSampled ? "under-sampled" : "over-sampled";
}

ShrinkageRule::ShrinkageRule(Vector nonzero_eigenvalues, int n, int p, double h)
    : eigenvalues_(std::move(nonzero_eigenvalues)), n_(n), p_(p), h_(h) {
  if (n < 1 || p < 1) throw DimensionError("shrinkage rule: n and p must be >= 1");
  if (n == p) {
    std::ostringstream os;
    os << "shrinkage rule: p == n == " << n << " is not supported";
    throw UnsupportedAspectRatioError(os.str());
  }
  check_positive(h, "bandwidth h");
  if (eigenvalues_.size() == 0) throw DegenerateInputError("shrinkage rule: no nonzero eigenvalues");
  for (Eigen::Index k = 0; k < eigenvalues_.size(); ++k) {
    if (!(eigenvalues_(k) > 0.0)) throw DomainError("shrinkage rule: eigenvalues must be positive");
  }
  std::sort(eigenvalues_.begin(), eigenvalues_.end());
  regime_ = p < n ? Regime::UnderSampled : Regime::OverSampled;
  if (regime_ == Regime::UnderSampled && eigenvalues_.size() != p) {
    throw DegenerateInputError("shrinkage rule: sample covariance is singular although p < n");
  }
  if (regime_ == Regime::OverSampled) zero_rule_ = zero_eigenvalue_rule(*this);
}

ShrinkageRule ShrinkageRule::from_decomposition(const SpectralDecomposition& d, int n, double h) {
  const int p = static_cast<int>(d.dim());
  if (p < n) {
    Vector lambda = d.eigenvalues.cwiseMax(0.0);
    if (lambda.minCoeff() <= d.rank_tolerance()) {
      throw DegenerateInputError("shrinkage rule: sample covariance is singular although p < n");
    }
    return ShrinkageRule(std::move(lambda), n, p, h);
  }
  const double tol = d.rank_tolerance();
  std::vector<double> kept;
  for (Eigen::Index j = 0; j < d.dim(); ++j) {
    if (d.eigenvalues(j) > tol) kept.push_back(d.eigenvalues(j));
  }
  if (kept.empty()) throw DegenerateInputError("shrinkage rule: all eigenvalues are zero");
  return ShrinkageRule(Eigen::Map<Vector>(kept.data(), static_cast<Eigen::Index>(kept.size())), n, p, h);
}

double stein_transform(double x, const Vector& eigenvalues, double h, int divisor) {
  check_positive(h, "bandwidth h");
  if (divisor < 1) throw DomainError("stein_transform: divisor must be >= 1");
  double sum = 0.0;
  for (Eigen::Index k = 0; k < eigenvalues.size(); ++k) {
    if (!(eigenvalues(k) > 0.0)) throw DomainError("stein_transform: eigenvalues must be positive");
    const double inv = 1.0 / eigenvalues(k);
    const double diff = inv - x;
    sum += inv * diff / (diff * diff + h * h * inv * inv);
  }
  return sum / divisor;
}

double stein_transform_derivative(double x, const Vector& eigenvalues, double h, int divisor, Eigen::Index skip) {
  double sum = 0.0;
  for (Eigen::Index k = 0; k < eigenvalues.size(); ++k) {
    if (k == skip) continue;
    const double inv = 1.0 / eigenvalues(k);
    const double diff = inv - x;
    const double h2 = h * h * inv * inv;
    const double den = diff * diff + h2;
    sum += inv * (diff * diff - h2) / (den * den);
  }
  return sum / divisor;
}

ShrunkValue delta_star_under(double x, const ShrinkageRule& rule) {
  if (rule.regime() != Regime::UnderSampled) throw RegimeError("delta_star_under: rule is over-sampled");
  check_positive(x, "delta_star_under: x");
  const double c = rule.ratio();
  const double g = stein_transform(1.0 / x, rule.eigenvalues(), rule.bandwidth(), rule.divisor());
  return invert_bracket(x, (1.0 - c) / x + c * 2.0 * g / x);
}

ShrunkValue delta_star_over(double x, const ShrinkageRule& rule) {
  if (rule.regime() != Regime::OverSampled) throw RegimeError("delta_star_over: rule is under-sampled");
  check_positive(x, "delta_star_over: x");
  const double c = rule.ratio();
  const double g = stein_transform(1.0 / x, rule.eigenvalues(), rule.bandwidth(), rule.divisor());
  return invert_bracket(x, (c - 1.0) / x + 2.0 * g / x);
}

ShrunkValue delta_star(double x, const ShrinkageRule& rule) {
  return rule.regime() == Regime::UnderSampled ? delta_star_under(x, rule) : delta_star_over(x, rule);
}

double zero_eigenvalue_rule(const ShrinkageRule& rule) {
  if (rule.regime() != Regime::OverSampled) throw RegimeError("zero_eigenvalue_rule: requires p > n");
  const Vector& lambda = rule.eigenvalues();
  if (lambda.size() == 0) throw DegenerateInputError("zero_eigenvalue_rule: all eigenvalues are zero");
  const double inv_mean = lambda.cwiseInverse().sum() / rule.n();
  return 1.0 / ((rule.ratio() - 1.0) * inv_mean);
}

double default_bandwidth(int n, int p) {
  if (n < 1 || p < 1) throw DimensionError("default_bandwidth: n and p must be >= 1");
  const double c = static_cast<double>(p) / n;
  return std::pow(c, 0.7) * std::pow(static_cast<double>(p), -0.35);
}

Bandwidth Bandwidth::fixed(double h) {
  check_positive(h, "bandwidth h");
  return Bandwidth(Kind::Fixed, h);
}

std::string Bandwidth::describe() const {
  switch (kind_) {
    case Kind::Fixed: {
      std::ostringstream os;
      os << "fixed:" << value_;
      return os.str();
    }
    case Kind::Default:
      return "default";
    case Kind::Auto:
      return "auto";
  }
  return "unknown";
}

std::string to_string(BandwidthSource s) {
  switch (s) {
    case BandwidthSource::Fixed:
      return "fixed";
    case BandwidthSource::Default:
      return "default";
    case BandwidthSource::Sure:
      return "sure";
    case BandwidthSource::DefaultFallback:
      return "default-fallback";
  }
  return "unknown";
}

SymmetricMatrix ShrunkCovariance::matrix() const {
  const Matrix& u = decomposition.eigenvectors;
  return SymmetricMatrix(u * shrunk_eigenvalues.asDiagonal() * u.transpose());
}

SymmetricMatrix ShrunkCovariance::inverse() const {
  const Matrix& u = decomposition.eigenvectors;
  return SymmetricMatrix(u * shrunk_eigenvalues.cwiseInverse().asDiagonal() * u.transpose());
}

ShrunkCovariance shrink_spectrum(const SpectralDecomposition& d, int n, double h, BandwidthSource source) {
  const int p = static_cast<int>(d.dim());
  if (n < 2) throw PreconditionError("shrink_covariance: n must be >= 2");
  if (p == n) {
    std::ostringstream os;
    os << "shrink_covariance: p == n == " << n << " is not supported";
    throw UnsupportedAspectRatioError(os.str());
  }

  ShrunkCovariance out;
  out.decomposition = d;
  out.decomposition.eigenvalues = d.eigenvalues.cwiseMax(0.0);
  out.n = n;
  out.regime = p < n ? Regime::UnderSampled : Regime::OverSampled;
  out.bandwidth = h;
  out.bandwidth_source = source;

  const ShrinkageRule rule = ShrinkageRule::from_decomposition(out.decomposition, n, h);
  const double tol = out.decomposition.rank_tolerance();
  out.shrunk_eigenvalues.resize(p);
  for (int j = 0; j < p; ++j) {
    const double lambda = out.decomposition.eigenvalues(j);
    if (out.regime == Regime::OverSampled && lambda <= tol) {
      out.shrunk_eigenvalues(j) = *rule.zero_rule_value();
      continue;
    }
    const ShrunkValue v = delta_star(lambda, rule);
    out.shrunk_eigenvalues(j) = v.value;
    if (v.clamped) ++out.clamp_count;
  }
  return out;
}

ShrunkCovariance shrink_covariance(const SymmetricMatrix& s, int n, const Bandwidth& h) {
  const int p = static_cast<int>(s.dim());
  if (n < 2) throw PreconditionError("shrink_covariance: n must be >= 2");
  if (p == n) {
    std::ostringstream os;
    os << "shrink_covariance: p == n == " << n << " is not supported";
    throw UnsupportedAspectRatioError(os.str());
  }
  SpectralDecomposition d = eigh(s);
  d.eigenvalues = d.eigenvalues.cwiseMax(0.0);

  switch (h.kind()) {
    case Bandwidth::Kind::Fixed:
      return shrink_spectrum(d, n, h.value(), BandwidthSource::Fixed);
    case Bandwidth::Kind::Default:
      return shrink_spectrum(d, n, default_bandwidth(n, p), BandwidthSource::Default);
    case Bandwidth::Kind::Auto:
      break;
  }
  if (p < n && n > p + 1) {
    return shrink_spectrum(d, n, select_bandwidth(d, n, default_grid(n, p)), BandwidthSource::Sure);
  }
  return shrink_spectrum(d, n, default_bandwidth(n, p), BandwidthSource::DefaultFallback);
}

double empirical_loss(const SymmetricMatrix& sigma_true_inv, const SymmetricMatrix& sigma_est_inv,
                      const SymmetricMatrix& s, LossSpec spec) {
  const Eigen::Index p = s.dim();
  if (sigma_true_inv.dim() != p || sigma_est_inv.dim() != p) {
    throw DimensionError("empirical_loss: matrices must share one dimension");
  }
  if (spec.m < 0) throw DomainError("empirical_loss: m must be non-negative");
  Matrix s_pow = Matrix::Identity(p, p);
  for (int k = 0; k < spec.m; ++k) s_pow = s_pow * s.matrix();
  const Matrix diff = sigma_true_inv.matrix() - sigma_est_inv.matrix();
  return (diff * diff * s_pow).trace() / static_cast<double>(p);
}

}  // namespace ebshrink
