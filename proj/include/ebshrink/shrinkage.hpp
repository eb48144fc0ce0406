#pragma once

#include "ebshrink/spectral.hpp"

#include <optional>
#include <string>

namespace ebshrink {

enum class Regime { UnderSampled, OverSampled };

std::string to_string(Regime r);

/// Per-eigenvalue map delta*_n(x) of the relative-savings-loss shrinker.
///
/// Under-sampled (p < n): the smoothed Stein transform runs over all p sample
/// eigenvalues with divisor p. Over-sampled (p > n): it runs over the nonzero
/// eigenvalues with divisor n, and zero eigenvalues are mapped to a separate
/// Frobenius-optimal constant (zero_rule_value).
class ShrinkageRule {
 public:
  /// `nonzero_eigenvalues` must be strictly positive. p == n is rejected.
  ShrinkageRule(Vector nonzero_eigenvalues, int n, int p, double h);

  /// Builds the rule from the spectrum of S, splitting off eigenvalues at or below
  /// the rank tolerance when p > n.
  static ShrinkageRule from_decomposition(const SpectralDecomposition& d, int n, double h);

  Regime regime() const noexcept { return regime_; }
  double bandwidth() const noexcept { return h_; }
  int n() const noexcept { return n_; }
  int p() const noexcept { return p_; }
  double ratio() const noexcept { return static_cast<double>(p_) / n_; }
  /// Divisor of the Stein transform: p when under-sampled, n when over-sampled.
  int divisor() const noexcept { return regime_ == Regime::UnderSampled ? p_ : n_; }
  const Vector& eigenvalues() const noexcept { return eigenvalues_; }
  std::optional<double> zero_rule_value() const noexcept { return zero_rule_; }

 private:
  Regime regime_;
  Vector eigenvalues_;
  int n_;
  int p_;
  double h_;
  std::optional<double> zero_rule_;
};

struct ShrunkValue {
  double value = 0.0;
  bool clamped = false;  // the bracket was <= 0 and was floored at 1e-8 / x
};

/// g*(x) = divisor^{-1} sum_k l_k^{-1} (l_k^{-1} - x) / ((l_k^{-1} - x)^2 + h^2 l_k^{-2}).
double stein_transform(double x, const Vector& eigenvalues, double h, int divisor);

/// d g*/dx at x, optionally leaving out the summand with index `skip`.
double stein_transform_derivative(double x, const Vector& eigenvalues, double h, int divisor,
                                  Eigen::Index skip = -1);

ShrunkValue delta_star_under(double x, const ShrinkageRule& rule);
ShrunkValue delta_star_over(double x, const ShrinkageRule& rule);
/// Dispatches on the rule's regime.
ShrunkValue delta_star(double x, const ShrinkageRule& rule);

/// delta*(0) = [(p/n - 1) n^{-1} sum_j lambda_j^{-1}]^{-1} over the nonzero eigenvalues.
double zero_eigenvalue_rule(const ShrinkageRule& rule);

/// h = (p/n)^0.7 p^{-0.35}.
double default_bandwidth(int n, int p);

/// How the bandwidth of a shrunk covariance is chosen.
class Bandwidth {
 public:
  enum class Kind { Fixed, Default, Auto };

  static Bandwidth fixed(double h);
  static Bandwidth default_rule() { return Bandwidth(Kind::Default, 0.0); }
  /// Risk-minimizing choice when n > p + 1, else the default rule.
  static Bandwidth automatic() { return Bandwidth(Kind::Auto, 0.0); }

  Kind kind() const noexcept { return kind_; }
  double value() const noexcept { return value_; }
  std::string describe() const;

 private:
  Bandwidth(Kind k, double v) : kind_(k), value_(v) {}
  Kind kind_;
  double value_;
};

enum class BandwidthSource { Fixed, Default, Sure, DefaultFallback };
std::string to_string(BandwidthSource s);

struct ShrunkCovariance {
  SpectralDecomposition decomposition;  // of S; eigenvectors are shared with the estimate
  Vector shrunk_eigenvalues;            // aligned with decomposition.eigenvalues
  Regime regime = Regime::UnderSampled;
  int n = 0;
  double bandwidth = 0.0;
  BandwidthSource bandwidth_source = BandwidthSource::Fixed;
  int clamp_count = 0;

  int p() const noexcept { return static_cast<int>(shrunk_eigenvalues.size()); }
  SymmetricMatrix matrix() const;
  SymmetricMatrix inverse() const;
};

/// Rotation-invariant estimate U diag(delta*(lambda_j)) U^T of the covariance behind S.
ShrunkCovariance shrink_covariance(const SymmetricMatrix& s, int n, const Bandwidth& h);

/// Same estimate at a resolved bandwidth from an already computed spectrum of S
/// (eigenvalues clamped at zero).
ShrunkCovariance shrink_spectrum(const SpectralDecomposition& d, int n, double h,
                                 BandwidthSource source = BandwidthSource::Fixed);

struct LossSpec {
  int m = 1;
};

/// p^{-1} tr[(A - B)^2 S^m] for true inverse A and estimated inverse B.
double empirical_loss(const SymmetricMatrix& sigma_true_inv, const SymmetricMatrix& sigma_est_inv,
                      const SymmetricMatrix& s, LossSpec spec = {});

}  // namespace ebshrink
