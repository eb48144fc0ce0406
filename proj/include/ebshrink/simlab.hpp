#pragma once

#include "ebshrink/regress.hpp"
#include "ebshrink/rng.hpp"
#include "ebshrink/shrinkage.hpp"
#include "ebshrink/spectral.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace ebshrink {

enum class DesignKind { LowRank, ApproxSparse, Horseshoe, Mixture };

/// Short names: lr, as, hs, mix.
std::string to_string(DesignKind k);
DesignKind parse_design_kind(const std::string& name);

struct DesignSpec {
  DesignKind kind = DesignKind::LowRank;
  int n = 40;       // sources
  int p = 10;       // covariates
  int N = 200;      // training rows
  int n_test = 20;  // test rows for prediction error
  double rho = 0.0; // equicorrelation of covariates
  int rank = 8;                 // LowRank
  double tau0 = 0.2;            // ApproxSparse entry sd
  double mix_weight = 0.5;      // Mixture: probability of the first (small) component
  double scale1 = 0.1;          // Mixture component sds
  double scale2 = 10.0;
  std::uint64_t seed = 0;

  void validate() const;
};

struct SimulatedData {
  Matrix X;       // N x p
  Matrix B0;      // n x p
  Matrix Y;       // N x n
  Matrix X_test;  // n_test x p

  SourceBundle bundle() const { return {X, Y}; }
};

/// Rows sqrt(1 - rho) w + sqrt(rho) v 1 with w ~ N(0, I_p), v ~ N(0, 1).
Matrix draw_covariates(Eigen::Index rows, Eigen::Index p, double rho, Rng& rng);

/// |standard Cauchy| by inversion.
double draw_half_cauchy(Rng& rng);

/// Draw order: X, B0, noise, X_test.
SimulatedData generate_design(const DesignSpec& spec);

/// (pn)^{-1} ||B_est - B0||_F^2.
double mse(const Matrix& b_est, const Matrix& b0);

/// (n N_t)^{-1} ||X_t (B_est - B0)^T||_F^2 with sources as rows of B.
double pe(const Matrix& b_est, const Matrix& b0, const Matrix& x_test);

/// Per-replication values; summaries are always recomputed from them.
struct ExperimentResult {
  std::vector<double> values;

  void add(double v) { values.push_back(v); }
  std::size_t count() const noexcept { return values.size(); }
  double mean() const;
  /// Sample standard deviation (divisor count - 1); 0 for fewer than two values.
  double sd() const;
  double standard_error() const;
};

struct MethodSpec {
  Method method = Method::OLS;
  int K = 0;
  Bandwidth h = Bandwidth::automatic();
  int sweeps = 200;
  int burn_in = 50;

  std::string tag() const;
};

struct SimulationRecord {
  std::string design;
  int n = 0;
  int p = 0;
  double rho = 0.0;
  std::string method;
  int replication = 0;
  std::string metric;
  double value = 0.0;
};

struct MethodSummary {
  std::string method;
  ExperimentResult mse;
  ExperimentResult pe;
  int sure_fallbacks = 0;  // replications where an automatic bandwidth fell back to the default
};

struct SimulationOutput {
  std::vector<SimulationRecord> records;  // replication-major, then method, then metric
  std::vector<MethodSummary> summaries;   // one per method, input order
};

/// Replication r draws its data with seed derive_seed(spec.seed, r).
SimulationOutput run_simulation(const DesignSpec& spec, int reps, const std::vector<MethodSpec>& methods);

/// p^{-1} sum_{i,j} lambda_j (M - diag(1/d))_{ij}^2, i.e. the relative-savings loss
/// written in the eigenbasis U of S, where M = U^T Sigma^{-1} U and d are the
/// estimator's eigenvalues along U.
double spectral_loss(const Matrix& true_inv_in_basis, const Vector& lambda, const Vector& estimate_eigenvalues);

// ---- PRIAL -------------------------------------------------------------------------

enum class BandwidthPolicy { Default, Sure, Oracle };
std::string to_string(BandwidthPolicy p);
BandwidthPolicy parse_policy(const std::string& name);

/// Xi Xi^T + I with Xi p x k standard Gaussian.
SymmetricMatrix factor_covariance(int p, int k, Rng& rng);

/// n = round(sqrt(np / c)), p = round(c n).
std::pair<int, int> prial_dimensions(int np_product, double c);

struct PrialSpec {
  int np_product = 2000;
  std::vector<double> c_grid{0.3, 0.5, 0.7};
  int factor_rank = 5;
  int reps = 50;
  std::uint64_t seed = 0;
  std::vector<BandwidthPolicy> policies{BandwidthPolicy::Default, BandwidthPolicy::Sure, BandwidthPolicy::Oracle};

  void validate() const;
};

struct PrialCell {
  double c = 0.0;
  int n = 0;
  int p = 0;
  BandwidthPolicy policy = BandwidthPolicy::Default;
  ExperimentResult loss;       // per-replication loss of the policy
  ExperimentResult bandwidth;  // per-replication bandwidth used
  double sample_loss = 0.0;    // mean loss of S^{-1}
  double oracle_loss = 0.0;    // smallest mean loss over the bandwidth grid
  double oracle_h = 0.0;
  double prial = 0.0;
  bool defined = false;        // false when the oracle does not beat S^{-1}
};

/// Cells ordered by c, then policy. All policies share the same draws within a c value.
/// Bandwidths come from the default SURE grid; the oracle picks the grid point with the
/// smallest Monte Carlo mean loss against the true covariance.
std::vector<PrialCell> prial_experiment(const PrialSpec& spec);

// ---- Loss convergence ----------------------------------------------------------------

enum class CovarianceModel { Independence, AR1, Spike };

struct CovarianceModelSpec {
  CovarianceModel kind = CovarianceModel::Independence;
  double rho = 0.5;

  std::string name() const;
};

/// I, rho^{|j-k|}, or I + rho 1 1^T.
SymmetricMatrix population_covariance(const CovarianceModelSpec& model, int p);

struct LossCell {
  int n = 0;
  int p = 0;
  double c = 0.0;
  ExperimentResult loss;
};

/// Mean relative-savings loss (m = 1) of the under-sampled shrinker at its default
/// bandwidth, for p = round(c n). Cells ordered by n, then c.
std::vector<LossCell> loss_convergence_experiment(const CovarianceModelSpec& model, const std::vector<int>& n_grid,
                                                  const std::vector<double>& c_grid, int reps, std::uint64_t seed);

/// n draws from N(0, sigma) as rows, using a Cholesky factor.
Matrix draw_gaussian_rows(Eigen::Index n, const SymmetricMatrix& sigma, Rng& rng);

}  // namespace ebshrink
