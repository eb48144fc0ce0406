#include "ebshrink/regress.hpp"

#include "ebshrink/errors.hpp"
#include "ebshrink/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace ebshrink {

namespace {

constexpr double kSigma2Floor = 1e-12;
constexpr double kMaxCondition = 1e12;
constexpr double kLog2Pi = 1.8378770664093454836;

// Inverse, log-determinant and (I - inverse) of one component covariance.
struct ComponentRule {
  Matrix inverse;
  Matrix shrink;  // I - Sigma^{-1}
  double logdet = 0.0;
};

ComponentRule make_rule(const Vector& eigenvalues, const Matrix& eigenvectors) {
  const Eigen::Index p = eigenvalues.size();
  ComponentRule r;
  r.inverse = eigenvectors * eigenvalues.cwiseInverse().asDiagonal() * eigenvectors.transpose();
  r.inverse = 0.5 * (r.inverse + r.inverse.transpose()).eval();
  r.shrink = Matrix::Identity(p, p) - r.inverse;
  r.logdet = eigenvalues.array().log().sum();
  return r;
}

ComponentRule make_rule(const ShrunkCovariance& s) {
  return make_rule(s.shrunk_eigenvalues, s.decomposition.eigenvectors);
}

double log_density(const Vector& x, const ComponentRule& r) {
  const double quad = x.dot(r.inverse * x);
  return -0.5 * (static_cast<double>(x.size()) * kLog2Pi + r.logdet + quad);
}

// Normalizes log weights in the given order; throws when nothing is finite.
Vector normalize_log_weights(const Vector& logw, const std::vector<int>& order) {
  double top = -std::numeric_limits<double>::infinity();
  for (int k : order) {
    if (std::isfinite(logw(k))) top = std::max(top, logw(k));
  }
  if (!std::isfinite(top)) throw WeightDegeneracyError("mixture weights: every component density underflows");
  Vector w = Vector::Zero(logw.size());
  double total = 0.0;
  for (int k : order) {
    w(k) = std::isfinite(logw(k)) ? std::exp(logw(k) - top) : 0.0;
    total += w(k);
  }
  for (int k : order) w(k) /= total;
  return w;
}

SymmetricMatrix gram_over_rows(const Matrix& z, const std::vector<Eigen::Index>& rows) {
  Matrix sub(static_cast<Eigen::Index>(rows.size()), z.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) sub.row(static_cast<Eigen::Index>(i)) = z.row(rows[i]);
  return sample_covariance(sub);
}

void check_local_options(Eigen::Index n, const LocalShrinkOptions& opt) {
  std::ostringstream os;
  if (opt.K < 1) {
    os << "local_shrink: K must be >= 1, got " << opt.K;
  } else if (opt.K > n) {
    os << "local_shrink: K=" << opt.K << " exceeds the number of sources n=" << n;
  } else if (n < 2 * static_cast<Eigen::Index>(opt.K)) {
    os << "local_shrink: need n >= 2K, got n=" << n << " K=" << opt.K;
  } else if (opt.burn_in < 0 || opt.sweeps <= opt.burn_in) {
    os << "local_shrink: need sweeps > burn_in >= 0, got sweeps=" << opt.sweeps << " burn_in=" << opt.burn_in;
  } else if (!opt.initial_labels.empty() && static_cast<Eigen::Index>(opt.initial_labels.size()) != n) {
    os << "local_shrink: initial labels must have length n=" << n;
  } else {
    for (int l : opt.initial_labels) {
      if (l < 0 || l >= opt.K) {
        os << "local_shrink: initial label " << l << " outside 0.." << opt.K - 1;
        break;
      }
    }
  }
  if (!os.str().empty()) throw PreconditionError(os.str());
}

std::vector<int> norm_ranked_labels(const Matrix& z, int K) {
  const Eigen::Index n = z.rows();
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  const Vector norms = z.rowwise().norm();
  std::stable_sort(idx.begin(), idx.end(), [&](Eigen::Index a, Eigen::Index b) { return norms(a) < norms(b); });
  std::vector<int> labels(static_cast<std::size_t>(n));
  for (Eigen::Index r = 0; r < n; ++r) labels[idx[r]] = static_cast<int>(r * K / n);
  return labels;
}

// Components ordered by their smallest member row; empty components last, by index.
// Every label-dependent loop follows this order so relabelling cannot change a result.
std::vector<int> canonical_order(const std::vector<int>& labels, int K) {
  const int none = static_cast<int>(labels.size());
  std::vector<int> first(K, none);
  for (int t = static_cast<int>(labels.size()) - 1; t >= 0; --t) first[labels[t]] = t;
  std::vector<int> order(K);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return first[a] < first[b]; });
  return order;
}

}  // namespace

void SourceBundle::validate() const {
  std::ostringstream os;
  if (X.rows() == 0 || X.cols() == 0) {
    os << "bundle: empty design";
  } else if (Y.cols() == 0) {
    os << "bundle: no response columns";
  } else if (Y.rows() != X.rows()) {
    os << "bundle: design has " << X.rows() << " rows but responses have " << Y.rows();
  } else if (X.rows() <= X.cols()) {
    os << "bundle: need N > p, got N=" << X.rows() << " p=" << X.cols();
  }
  if (!os.str().empty()) throw DimensionError(os.str());
  if (!X.allFinite() || !Y.allFinite()) throw InputError("bundle: non-finite entries");
}

SourceBundle SourceBundle::rows(const std::vector<Eigen::Index>& idx) const {
  SourceBundle out;
  out.X.resize(static_cast<Eigen::Index>(idx.size()), X.cols());
  out.Y.resize(static_cast<Eigen::Index>(idx.size()), Y.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    out.X.row(static_cast<Eigen::Index>(i)) = X.row(idx[i]);
    out.Y.row(static_cast<Eigen::Index>(i)) = Y.row(idx[i]);
  }
  return out;
}

NoiseModel NoiseModel::from_q(const SymmetricMatrix& q, double sigma2) {
  NoiseModel nm;
  nm.sigma2 = sigma2;
  nm.Q = q;
  nm.Q_half = matrix_sqrt(q);
  nm.Q_half_inv = matrix_inv_sqrt(q);
  return nm;
}

void MixtureState::validate() const {
  if (K < 1) throw PreconditionError("mixture state: K must be >= 1");
  if (pi.size() != K || static_cast<int>(sigma.size()) != K) {
    throw DimensionError("mixture state: pi and sigma must have K entries");
  }
  for (Eigen::Index k = 0; k < pi.size(); ++k) {
    if (!(pi(k) >= 0.0)) throw DomainError("mixture state: negative mixing weight");
  }
  if (std::abs(pi.sum() - 1.0) > 1e-9) throw DomainError("mixture state: mixing weights must sum to 1");
  for (int l : labels) {
    if (l < 0 || l >= K) throw DomainError("mixture state: label out of range");
  }
}

std::string CoefficientEstimate::tag() const {
  switch (method) {
    case Method::OLS:
      return "OLS";
    case Method::GlobalLS:
      return "GlobalLS";
    case Method::LocalLLS:
      return "LocalLLS(" + std::to_string(K) + ")";
  }
  return "unknown";
}

OlsFit fit_ols(const SourceBundle& bundle) {
  bundle.validate();
  const Eigen::Index N = bundle.N();
  const Eigen::Index p = bundle.p();
  const SymmetricMatrix xtx(bundle.X.transpose() * bundle.X);

  const SpectralDecomposition d = eigh(xtx);
  const double lo = d.eigenvalues(0);
  const double hi = d.eigenvalues(p - 1);
  if (!(lo > 0.0) || hi / lo >= kMaxCondition) {
    std::ostringstream os;
    os << "fit_ols: X^T X is singular or ill-conditioned (condition number ";
    if (lo > 0.0) os << hi / lo; else os << "inf";
    os << ")";
    throw DesignSingularityError(os.str());
  }
  const Matrix xtx_inv = spectral_apply(d, [](double v) { return 1.0 / v; }).matrix();
  const Matrix coef = xtx_inv * (bundle.X.transpose() * bundle.Y);  // p x n

  const Matrix resid = bundle.Y - bundle.X * coef;
  Vector per_source = resid.colwise().squaredNorm().transpose() / static_cast<double>(N - p);
  const double sigma2 = std::max(per_source.mean(), kSigma2Floor);

  OlsFit fit;
  fit.estimate.B = coef.transpose();
  fit.estimate.method = Method::OLS;
  fit.noise = NoiseModel::from_q(SymmetricMatrix(sigma2 * xtx_inv), sigma2);
  fit.noise.per_source_sigma2 = std::move(per_source);
  return fit;
}

Matrix standardize(const Matrix& beta_hat, const NoiseModel& noise) {
  if (beta_hat.cols() != noise.Q.dim()) throw DimensionError("standardize: coefficient width differs from Q");
  return beta_hat * noise.Q_half_inv.matrix();
}

Matrix standardize(const CoefficientEstimate& est, const NoiseModel& noise) {
  if (est.method != Method::OLS) throw PreconditionError("standardize: expects OLS coefficients");
  return standardize(est.B, noise);
}

Matrix apply_linear_rule(const Matrix& beta_hat, const NoiseModel& noise, const SymmetricMatrix& sigma) {
  const Eigen::Index p = beta_hat.cols();
  if (sigma.dim() != p) throw DimensionError("apply_linear_rule: covariance dimension differs from p");
  const Matrix shrink = Matrix::Identity(p, p) - matrix_inverse(sigma).matrix();
  // Row form of Q^{1/2} (I - Sigma^{-1}) Q^{-1/2} beta.
  return standardize(beta_hat, noise) * shrink * noise.Q_half.matrix();
}

CoefficientEstimate global_shrink(const Matrix& beta_hat, const NoiseModel& noise, const Bandwidth& h) {
  const Eigen::Index n = beta_hat.rows();
  if (n < 2) throw PreconditionError("global_shrink: need at least two sources");
  const Matrix z = standardize(beta_hat, noise);
  const ShrunkCovariance sc = shrink_covariance(sample_covariance(z), static_cast<int>(n), h);
  const ComponentRule rule = make_rule(sc);

  CoefficientEstimate out;
  out.B = z * rule.shrink * noise.Q_half.matrix();
  out.method = Method::GlobalLS;
  out.bandwidth = sc.bandwidth;
  out.bandwidth_source = sc.bandwidth_source;
  out.clamp_count = sc.clamp_count;
  return out;
}

CoefficientEstimate global_shrink(const SourceBundle& bundle, const Bandwidth& h) {
  const OlsFit fit = fit_ols(bundle);
  return global_shrink(fit.estimate.B, fit.noise, h);
}

Vector mixture_posterior_weights(const Vector& beta_std, const MixtureState& state) {
  state.validate();
  Vector logw(state.K);
  std::vector<int> order(state.K);
  for (int k = 0; k < state.K; ++k) {
    order[k] = k;
    if (state.sigma[k].dim() != beta_std.size()) throw DimensionError("mixture weights: dimension mismatch");
    const SpectralDecomposition d = eigh(state.sigma[k]);
    if (!(d.eigenvalues(0) > 0.0)) throw SingularityError("mixture weights: component covariance is not SPD");
    const ComponentRule rule = make_rule(d.eigenvalues, d.eigenvectors);
    logw(k) = (state.pi(k) > 0.0 ? std::log(state.pi(k)) : -std::numeric_limits<double>::infinity()) +
              log_density(beta_std, rule);
  }
  return normalize_log_weights(logw, order);
}

CoefficientEstimate local_shrink(const Matrix& beta_hat, const NoiseModel& noise, const LocalShrinkOptions& opt) {
  const Eigen::Index n = beta_hat.rows();
  const Eigen::Index p = beta_hat.cols();
  check_local_options(n, opt);
  const int K = opt.K;
  const Matrix z = standardize(beta_hat, noise);
  const int nn = static_cast<int>(n);

  std::optional<ShrunkCovariance> pooled;
  auto pooled_rule = [&]() -> const ShrunkCovariance& {
    if (!pooled) pooled = shrink_covariance(sample_covariance(z), nn, Bandwidth::default_rule());
    return *pooled;
  };

  std::vector<int> labels = opt.initial_labels.empty() ? norm_ranked_labels(z, K) : opt.initial_labels;
  Rng rng(opt.seed);

  Matrix accum = Matrix::Zero(n, p);
  MixtureSummary summary;
  summary.K = K;
  summary.sweeps = opt.sweeps;
  summary.burn_in = opt.burn_in;
  summary.mean_weights = Vector::Zero(K);
  summary.mean_sizes = Vector::Zero(K);
  int clamp_total = 0;

  std::vector<ComponentRule> rules(K);
  Vector logpi(K);
  Vector logw(K);
  Vector mean_t(p);
  for (int sweep = 0; sweep < opt.sweeps; ++sweep) {
    const std::vector<int> order = canonical_order(labels, K);
    std::vector<std::vector<Eigen::Index>> members(K);
    for (Eigen::Index t = 0; t < n; ++t) members[labels[t]].push_back(t);

    const bool keep = sweep >= opt.burn_in;
    for (int pos = 0; pos < K; ++pos) {
      const int k = order[pos];
      const int nk = static_cast<int>(members[k].size());
      const ShrunkCovariance* sc = nullptr;
      std::optional<ShrunkCovariance> own;
      if (nk >= 2 && nk != p) {
        try {
          own = shrink_covariance(gram_over_rows(z, members[k]), nk, Bandwidth::default_rule());
          sc = &*own;
        } catch (const DegenerateInputError&) {
          sc = nullptr;
        }
      }
      if (sc == nullptr) {
        sc = &pooled_rule();
        ++summary.revived;
      }
      if (keep) clamp_total += sc->clamp_count;
      rules[k] = make_rule(*sc);
      logpi(k) = nk > 0 ? std::log(static_cast<double>(nk) / nn) : -std::numeric_limits<double>::infinity();
      if (keep) {
        summary.mean_weights(pos) += static_cast<double>(nk) / nn;
        summary.mean_sizes(pos) += nk;
      }
    }

    std::vector<int> next(labels.size());
    for (Eigen::Index t = 0; t < n; ++t) {
      const Vector x = z.row(t).transpose();
      for (int k : order) logw(k) = logpi(k) + log_density(x, rules[k]);
      const Vector w = normalize_log_weights(logw, order);
      if (keep) {
        mean_t.setZero();
        for (int k : order) mean_t.noalias() += w(k) * (rules[k].shrink * x);
        accum.row(t) += mean_t.transpose();
      }
      // One uniform per row, inverted over the canonical order.
      const double u = rng.uniform();
      double cum = 0.0;
      int pick = -1;
      for (int k : order) {
        if (w(k) <= 0.0) continue;
        pick = k;
        cum += w(k);
        if (u < cum) break;
      }
      next[t] = pick;
    }
    labels = std::move(next);
  }

  const double kept = static_cast<double>(opt.sweeps - opt.burn_in);
  summary.mean_weights /= kept;
  summary.mean_sizes /= kept;
  summary.final_labels = labels;

  CoefficientEstimate out;
  out.B = (accum / kept) * noise.Q_half.matrix();
  out.method = Method::LocalLLS;
  out.K = K;
  out.bandwidth = default_bandwidth(nn, static_cast<int>(p));
  out.bandwidth_source = BandwidthSource::Default;
  out.clamp_count = clamp_total;
  out.mixture = std::move(summary);
  return out;
}

CoefficientEstimate local_shrink(const SourceBundle& bundle, const LocalShrinkOptions& opt) {
  const OlsFit fit = fit_ols(bundle);
  return local_shrink(fit.estimate.B, fit.noise, opt);
}

std::vector<KScore> score_K(const SourceBundle& bundle, const std::vector<int>& candidates, double holdout_fraction,
                            std::uint64_t seed, const LocalShrinkOptions& base) {
  bundle.validate();
  if (candidates.empty()) throw PreconditionError("select_K: no candidates");
  if (!(holdout_fraction > 0.0 && holdout_fraction < 1.0)) {
    throw DomainError("select_K: holdout fraction must lie in (0, 1)");
  }
  const Eigen::Index N = bundle.N();
  const Eigen::Index p = bundle.p();
  const auto n_val = static_cast<Eigen::Index>(std::lround(holdout_fraction * static_cast<double>(N)));
  if (n_val < 1 || N - n_val <= p) {
    std::ostringstream os;
    os << "select_K: holdout of " << n_val << " rows leaves " << N - n_val << " training rows for p=" << p;
    throw PreconditionError(os.str());
  }
  Rng rng(derive_seed(seed, 0));
  const std::vector<Eigen::Index> perm = rng.permutation(N);
  const std::vector<Eigen::Index> val(perm.begin(), perm.begin() + n_val);
  const std::vector<Eigen::Index> train(perm.begin() + n_val, perm.end());
  const SourceBundle tr = bundle.rows(train);
  const SourceBundle va = bundle.rows(val);
  const OlsFit fit = fit_ols(tr);

  std::vector<KScore> out;
  for (int K : candidates) {
    LocalShrinkOptions opt = base;
    opt.K = K;
    opt.seed = derive_seed(seed, static_cast<std::uint64_t>(K));
    opt.initial_labels.clear();
    const CoefficientEstimate est = local_shrink(fit.estimate.B, fit.noise, opt);
    const Matrix err = va.Y - va.X * est.B.transpose();
    out.push_back({K, err.squaredNorm() / static_cast<double>(va.N() * va.n())});
  }
  return out;
}

int select_K(const SourceBundle& bundle, const std::vector<int>& candidates, double holdout_fraction,
             std::uint64_t seed, const LocalShrinkOptions& base) {
  const std::vector<KScore> scores = score_K(bundle, candidates, holdout_fraction, seed, base);
  KScore best = scores.front();
  for (const KScore& s : scores) {
    if (s.validation_pe < best.validation_pe || (s.validation_pe == best.validation_pe && s.K < best.K)) best = s;
  }
  return best.K;
}

}  // namespace ebshrink
