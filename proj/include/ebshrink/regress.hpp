#pragma once

#include "ebshrink/shrinkage.hpp"
#include "ebshrink/spectral.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace ebshrink {

/// Shared N x p design and N x n responses (column t belongs to source t).
struct SourceBundle {
  Matrix X;
  Matrix Y;

  Eigen::Index N() const noexcept { return X.rows(); }
  Eigen::Index p() const noexcept { return X.cols(); }
  Eigen::Index n() const noexcept { return Y.cols(); }

  /// Shape checks only; conditioning is checked by fit_ols.
  void validate() const;
  SourceBundle rows(const std::vector<Eigen::Index>& idx) const;
};

/// Pooled error variance and Q = sigma2 (X^T X)^{-1} with its symmetric square roots.
struct NoiseModel {
  double sigma2 = 0.0;
  Vector per_source_sigma2;
  SymmetricMatrix Q = SymmetricMatrix::identity(1);
  SymmetricMatrix Q_half = SymmetricMatrix::identity(1);
  SymmetricMatrix Q_half_inv = SymmetricMatrix::identity(1);

  static NoiseModel from_q(const SymmetricMatrix& q, double sigma2 = 1.0);
};

enum class Method { OLS, GlobalLS, LocalLLS };

struct MixtureSummary {
  int K = 0;
  int sweeps = 0;
  int burn_in = 0;
  Vector mean_weights;         // post-burn-in average of pi, components in canonical order
  Vector mean_sizes;           // same for n_k
  int revived = 0;             // component-sweeps that fell back to the pooled covariance
  std::vector<int> final_labels;
};

struct CoefficientEstimate {
  Matrix B;  // n x p, row t estimates beta^(t)
  Method method = Method::OLS;
  int K = 0;
  double bandwidth = 0.0;
  std::optional<BandwidthSource> bandwidth_source;
  int clamp_count = 0;
  std::optional<MixtureSummary> mixture;

  /// "OLS", "GlobalLS" or "LocalLLS(K)".
  std::string tag() const;
};

/// Latent-indicator sampler state. Labels are 0-based.
struct MixtureState {
  int K = 1;
  Vector pi;
  std::vector<SymmetricMatrix> sigma;
  std::vector<int> labels;
  int sweep = 0;

  void validate() const;
};

struct OlsFit {
  CoefficientEstimate estimate;
  NoiseModel noise;
};

/// Per-source least squares and the pooled noise model. sigma2 is floored at 1e-12.
OlsFit fit_ols(const SourceBundle& bundle);

/// Rows Q^{-1/2} beta^(t).
Matrix standardize(const CoefficientEstimate& est, const NoiseModel& noise);
Matrix standardize(const Matrix& beta_hat, const NoiseModel& noise);

/// Rows (I - Q^{1/2} Sigma^{-1} Q^{-1/2}) beta^(t) for a given covariance of the standardized rows.
Matrix apply_linear_rule(const Matrix& beta_hat, const NoiseModel& noise, const SymmetricMatrix& sigma);

/// Global linear shrinkage: shrinks S = n^{-1} B*^T B* and applies the plug-in rule.
CoefficientEstimate global_shrink(const SourceBundle& bundle, const Bandwidth& h);
CoefficientEstimate global_shrink(const Matrix& beta_hat, const NoiseModel& noise, const Bandwidth& h);

/// pi_k N(x; 0, Sigma_k), normalized through log densities.
Vector mixture_posterior_weights(const Vector& beta_std, const MixtureState& state);

struct LocalShrinkOptions {
  int K = 2;
  int sweeps = 200;
  int burn_in = 50;
  std::uint64_t seed = 0;
  /// Overrides the norm-ranked initialization when non-empty (0-based, length n).
  std::vector<int> initial_labels;
};

/// Local linear shrinkage under a K-component zero-mean Gaussian mixture on the
/// standardized rows, fitted by sampling component labels. Returns the average over
/// post-burn-in sweeps of sum_k w_k (I - C_k) beta^(t).
CoefficientEstimate local_shrink(const SourceBundle& bundle, const LocalShrinkOptions& opt);
CoefficientEstimate local_shrink(const Matrix& beta_hat, const NoiseModel& noise, const LocalShrinkOptions& opt);

struct KScore {
  int K = 0;
  double validation_pe = 0.0;
};

/// Holds out a seeded random fraction of the N rows, fits local_shrink for each K on the
/// rest and scores validation prediction error. Returned in candidate order.
std::vector<KScore> score_K(const SourceBundle& bundle, const std::vector<int>& candidates,
                            double holdout_fraction, std::uint64_t seed, const LocalShrinkOptions& base = {});

/// Candidate with the smallest validation error; ties go to the smaller K.
int select_K(const SourceBundle& bundle, const std::vector<int>& candidates, double holdout_fraction,
             std::uint64_t seed, const LocalShrinkOptions& base = {});

}  // namespace ebshrink
