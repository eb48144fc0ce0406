#include "ebshrink/errors.hpp"
#include "ebshrink/regress.hpp"
#include "ebshrink/rng.hpp"
#include "ebshrink/simlab.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <vector>

using namespace ebshrink;

namespace {

double max_abs(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

Matrix inverse3(const Matrix& a) {
  Matrix adj(3, 3);
  adj(0, 0) = a(1, 1) * a(2, 2) - a(1, 2) * a(2, 1);
  adj(0, 1) = a(0, 2) * a(2, 1) - a(0, 1) * a(2, 2);
  adj(0, 2) = a(0, 1) * a(1, 2) - a(0, 2) * a(1, 1);
  adj(1, 0) = a(1, 2) * a(2, 0) - a(1, 0) * a(2, 2);
  adj(1, 1) = a(0, 0) * a(2, 2) - a(0, 2) * a(2, 0);
  adj(1, 2) = a(0, 2) * a(1, 0) - a(0, 0) * a(1, 2);
  adj(2, 0) = a(1, 0) * a(2, 1) - a(1, 1) * a(2, 0);
  adj(2, 1) = a(0, 1) * a(2, 0) - a(0, 0) * a(2, 1);
  adj(2, 2) = a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0);
  const double det = a(0, 0) * adj(0, 0) + a(0, 1) * adj(1, 0) + a(0, 2) * adj(2, 0);
  return adj / det;
}

// A fixed, clearly non-identity Q.
SymmetricMatrix test_q(int p, std::uint64_t seed) {
  Rng rng(seed);
  const Matrix a = rng.normal_matrix(p, p);
  return SymmetricMatrix(0.2 * a * a.transpose() / p + 0.5 * Matrix::Identity(p, p));
}

double log_gauss(const Vector& x, const Matrix& sigma) {
  Eigen::LLT<Matrix> llt(sigma);
  const Matrix l = llt.matrixL();
  const double logdet = 2.0 * l.diagonal().array().log().sum();
  const double quad = x.dot(llt.solve(x));
  return -0.5 * (x.size() * std::log(2.0 * 3.14159265358979323846) + logdet + quad);
}

}  // namespace

TEST_CASE("OLS: exact fit hits the variance floor") {
  SourceBundle b{Matrix::Zero(3, 1), Matrix::Zero(3, 1)};
  b.X(0, 0) = 1.0;
  b.Y(0, 0) = 2.0;
  const OlsFit fit = fit_ols(b);
  CHECK(fit.estimate.B(0, 0) == doctest::Approx(2.0));
  CHECK(fit.noise.sigma2 == 1e-12);
  CHECK(fit.noise.per_source_sigma2(0) == 0.0);
  CHECK(fit.estimate.tag() == "OLS");
}

TEST_CASE("OLS: noiseless recovery with orthonormal design") {
  Rng rng(2);
  const Matrix x = rng.normal_matrix(20, 4).householderQr().householderQ() * Matrix::Identity(20, 4);
  Vector beta(4);
  beta << 1.5, -2.0, 0.25, 3.0;
  const SourceBundle b{x, x * beta};
  const OlsFit fit = fit_ols(b);
  CHECK(max_abs(fit.estimate.B.row(0).transpose() - beta) <= 1e-12);
}

TEST_CASE("OLS matches explicit normal equations") {
  Rng rng(3);
  const Matrix x = rng.normal_matrix(50, 3);
  const Matrix y = rng.normal_matrix(50, 4);
  const OlsFit fit = fit_ols({x, y});
  const Matrix xtx_inv = inverse3(x.transpose() * x);
  const Matrix coef = (xtx_inv * x.transpose() * y).transpose();
  CHECK(max_abs(fit.estimate.B - coef) <= 1e-10);

  double s2 = 0.0;
  for (int t = 0; t < 4; ++t) s2 += (y.col(t) - x * coef.row(t).transpose()).squaredNorm() / (50 - 3) / 4.0;
  CHECK(fit.noise.sigma2 == doctest::Approx(s2).epsilon(1e-12));
  CHECK(max_abs(fit.noise.Q.matrix() - s2 * xtx_inv) <= 1e-12);
  const Matrix qh = fit.noise.Q_half.matrix();
  CHECK(max_abs(qh * qh - fit.noise.Q.matrix()) <= 1e-12);
  CHECK(max_abs(fit.noise.Q_half_inv.matrix() * qh - Matrix::Identity(3, 3)) <= 1e-10);
}

TEST_CASE("OLS: preconditions") {
  Rng rng(4);
  Matrix x = rng.normal_matrix(10, 3);
  x.col(2) = 2.0 * x.col(0);
  CHECK_THROWS_AS(fit_ols({x, rng.normal_matrix(10, 2)}), DesignSingularityError);
  CHECK_THROWS_AS(fit_ols({rng.normal_matrix(3, 3), rng.normal_matrix(3, 2)}), DimensionError);
  CHECK_THROWS_AS(fit_ols({rng.normal_matrix(8, 3), rng.normal_matrix(7, 2)}), DimensionError);
}

TEST_CASE("standardize") {
  const Matrix beta = Matrix::Constant(1, 2, 2.0);
  CHECK(max_abs(standardize(beta, NoiseModel::from_q(SymmetricMatrix::identity(2))) - beta) == 0.0);
  CHECK(max_abs(standardize(beta, NoiseModel::from_q(SymmetricMatrix(4.0 * Matrix::Identity(2, 2)))) -
                Matrix::Ones(1, 2)) <= 1e-15);

  const NoiseModel nm = NoiseModel::from_q(test_q(4, 9));
  Rng rng(9);
  const Matrix b = rng.normal_matrix(6, 4);
  CHECK(max_abs(standardize(b, nm) * nm.Q_half.matrix() - b) <= 1e-8);

  CoefficientEstimate not_ols;
  not_ols.B = b;
  not_ols.method = Method::GlobalLS;
  CHECK_THROWS_AS(standardize(not_ols, nm), PreconditionError);
  CHECK_THROWS_AS(standardize(Matrix::Ones(2, 3), nm), DimensionError);
}

TEST_CASE("linear rule: unit covariance shrinks everything to zero") {
  const NoiseModel nm = NoiseModel::from_q(test_q(3, 5));
  Rng rng(5);
  const Matrix b = rng.normal_matrix(7, 3);
  CHECK(max_abs(apply_linear_rule(b, nm, SymmetricMatrix::identity(3))) <= 1e-12);
  // For Sigma = 2I the rule halves every coefficient.
  CHECK(max_abs(apply_linear_rule(b, nm, SymmetricMatrix(2.0 * Matrix::Identity(3, 3))) - 0.5 * b) <= 1e-12);
}

TEST_CASE("global shrinkage matches the plug-in rule built by hand") {
  const NoiseModel nm = NoiseModel::from_q(test_q(4, 6));
  Rng rng(6);
  const Matrix b = 2.0 * rng.normal_matrix(30, 4);
  const CoefficientEstimate est = global_shrink(b, nm, Bandwidth::fixed(0.3));
  const Matrix z = b * nm.Q_half_inv.matrix();
  const auto sc = shrink_covariance(sample_covariance(z), 30, Bandwidth::fixed(0.3));
  const Matrix c_hat = nm.Q_half.matrix() * sc.inverse().matrix() * nm.Q_half_inv.matrix();
  const Matrix expected = (b.transpose() - c_hat * b.transpose()).transpose();
  CHECK(max_abs(est.B - expected) <= 1e-10);
  CHECK(est.method == Method::GlobalLS);
  CHECK(est.tag() == "GlobalLS");
  CHECK(est.bandwidth == 0.3);
  CHECK(*est.bandwidth_source == BandwidthSource::Fixed);
  CHECK_THROWS_AS(global_shrink(rng.normal_matrix(4, 4), NoiseModel::from_q(SymmetricMatrix::identity(4)),
                                Bandwidth::default_rule()),
                  UnsupportedAspectRatioError);
}

TEST_CASE("global shrinkage beats OLS under a Gaussian prior") {
  const int p = 5;
  const int n = 500;
  const SymmetricMatrix q = test_q(p, 12);
  const NoiseModel nm = NoiseModel::from_q(q);
  const Matrix prior_root = std::sqrt(3.0) * nm.Q_half.matrix();  // Cov = Q^{1/2} (3I) Q^{1/2}
  Rng rng(12);
  int wins = 0;
  for (int r = 0; r < 100; ++r) {
    const Matrix beta = rng.normal_matrix(n, p) * prior_root;
    const Matrix beta_hat = beta + rng.normal_matrix(n, p) * nm.Q_half.matrix();
    const CoefficientEstimate est = global_shrink(beta_hat, nm, Bandwidth::automatic());
    if (mse(est.B, beta) < mse(beta_hat, beta)) ++wins;
  }
  CHECK(wins >= 95);
}

TEST_CASE("global shrinkage on the mixture design, n = 40, p = 10") {
  DesignSpec spec;
  spec.kind = DesignKind::Mixture;
  spec.seed = 77;
  ExperimentResult res;
  for (int r = 0; r < 20; ++r) {
    spec.seed = derive_seed(77, r);
    const SimulatedData d = generate_design(spec);
    res.add(mse(global_shrink(d.bundle(), Bandwidth::automatic()).B, d.B0));
  }
  INFO("mean MSE " << res.mean());
  CHECK(res.mean() >= 0.005 / 3);
  CHECK(res.mean() <= 0.005 * 3);
}

TEST_CASE("mixture posterior weights") {
  MixtureState one;
  one.K = 1;
  one.pi = Vector::Ones(1);
  one.sigma = {SymmetricMatrix::identity(2)};
  CHECK(mixture_posterior_weights(Vector::Ones(2), one)(0) == 1.0);

  MixtureState two;
  two.K = 2;
  two.pi = Vector::Constant(2, 0.5);
  two.sigma = {SymmetricMatrix::identity(1), SymmetricMatrix(Matrix::Constant(1, 1, 100.0))};
  const Vector w = mixture_posterior_weights(Vector::Constant(1, 0.1), two);
  const double a = std::exp(oracle::normal_logpdf(0.1, 1.0));
  const double b = std::exp(oracle::normal_logpdf(0.1, 100.0));
  CHECK(std::abs(w(0) - a / (a + b)) <= 1e-12);
  CHECK(w(0) > 0.9);

  Rng rng(8);
  for (int r = 0; r < 20; ++r) {
    MixtureState s;
    s.K = 3;
    s.pi = rng.normal_matrix(3, 1).col(0).cwiseAbs();
    s.pi /= s.pi.sum();
    for (int k = 0; k < 3; ++k) {
      const Matrix m = rng.normal_matrix(4, 4);
      s.sigma.push_back(SymmetricMatrix(m * m.transpose() + 0.1 * Matrix::Identity(4, 4)));
    }
    const Vector wr = mixture_posterior_weights(3.0 * rng.normal_matrix(4, 1).col(0), s);
    CHECK(std::abs(wr.sum() - 1.0) <= 1e-12);
    CHECK(wr.minCoeff() >= 0.0);
  }

  CHECK_THROWS_AS(mixture_posterior_weights(Vector::Constant(1, 1e200), two), WeightDegeneracyError);
  MixtureState bad = two;
  bad.pi << 0.7, 0.7;
  CHECK_THROWS_AS(mixture_posterior_weights(Vector::Constant(1, 0.1), bad), DomainError);
}

TEST_CASE("local shrinkage with one component is the global rule") {
  DesignSpec spec;
  spec.kind = DesignKind::Mixture;
  spec.seed = 99;
  const SimulatedData d = generate_design(spec);
  LocalShrinkOptions opt;
  opt.K = 1;
  opt.sweeps = 20;
  opt.burn_in = 5;
  opt.seed = 1;
  const CoefficientEstimate local = local_shrink(d.bundle(), opt);
  const CoefficientEstimate global = global_shrink(d.bundle(), Bandwidth::default_rule());
  CHECK(max_abs(local.B - global.B) <= 1e-8 * (1.0 + max_abs(global.B)));
  CHECK(local.tag() == "LocalLLS(1)");
  REQUIRE(local.mixture.has_value());
  CHECK(local.mixture->mean_weights(0) == doctest::Approx(1.0));
}

TEST_CASE("local shrinkage: one sweep equals the hand-assembled posterior mean") {
  const int n = 30;
  const int p = 3;
  const NoiseModel nm = NoiseModel::from_q(test_q(p, 14));
  Rng rng(14);
  Matrix b = rng.normal_matrix(n, p);
  for (int t = 0; t < n / 2; ++t) b.row(t) *= 6.0;
  std::vector<int> labels(n);
  for (int t = 0; t < n; ++t) labels[t] = t < n / 2 ? 1 : 0;

  LocalShrinkOptions opt;
  opt.K = 2;
  opt.sweeps = 1;
  opt.burn_in = 0;
  opt.seed = 3;
  opt.initial_labels = labels;
  const CoefficientEstimate est = local_shrink(b, nm, opt);

  const Matrix z = b * nm.Q_half_inv.matrix();
  std::vector<Matrix> sigma(2);
  for (int k = 0; k < 2; ++k) {
    std::vector<Eigen::Index> rows;
    for (int t = 0; t < n; ++t)
      if (labels[t] == k) rows.push_back(t);
    Matrix sub(static_cast<Eigen::Index>(rows.size()), p);
    for (std::size_t i = 0; i < rows.size(); ++i) sub.row(i) = z.row(rows[i]);
    sigma[k] = shrink_covariance(sample_covariance(sub), static_cast<int>(rows.size()), Bandwidth::default_rule())
                   .matrix()
                   .matrix();
  }
  Matrix expected(n, p);
  for (int t = 0; t < n; ++t) {
    const Vector x = z.row(t).transpose();
    const double l0 = std::log(0.5) + log_gauss(x, sigma[0]);
    const double l1 = std::log(0.5) + log_gauss(x, sigma[1]);
    const double top = std::max(l0, l1);
    const double w0 = std::exp(l0 - top) / (std::exp(l0 - top) + std::exp(l1 - top));
    const Vector post = w0 * (x - sigma[0].inverse() * x) + (1.0 - w0) * (x - sigma[1].inverse() * x);
    expected.row(t) = (nm.Q_half.matrix() * post).transpose();
  }
  CHECK(max_abs(est.B - expected) <= 1e-12 * (1.0 + max_abs(expected)) * 100);
}

TEST_CASE("local shrinkage: determinism and label-permutation invariance") {
  DesignSpec spec;
  spec.kind = DesignKind::Mixture;
  spec.seed = 5;
  const SimulatedData d = generate_design(spec);
  LocalShrinkOptions opt;
  opt.K = 2;
  opt.sweeps = 60;
  opt.burn_in = 10;
  opt.seed = 1234;
  const CoefficientEstimate a = local_shrink(d.bundle(), opt);
  const CoefficientEstimate b = local_shrink(d.bundle(), opt);
  CHECK((a.B.array() == b.B.array()).all());

  std::vector<int> labels(static_cast<std::size_t>(spec.n));
  for (int t = 0; t < spec.n; ++t) labels[t] = (t * 7) % 3 == 0 ? 0 : 1;
  std::vector<int> swapped(labels.size());
  for (std::size_t t = 0; t < labels.size(); ++t) swapped[t] = 1 - labels[t];
  opt.initial_labels = labels;
  const CoefficientEstimate c = local_shrink(d.bundle(), opt);
  opt.initial_labels = swapped;
  const CoefficientEstimate e = local_shrink(d.bundle(), opt);
  CHECK((c.B.array() == e.B.array()).all());
}

TEST_CASE("local shrinkage: preconditions and tiny components") {
  const NoiseModel nm = NoiseModel::from_q(SymmetricMatrix::identity(2));
  Rng rng(21);
  const Matrix b = rng.normal_matrix(6, 2);
  LocalShrinkOptions opt;
  opt.K = 4;
  CHECK_THROWS_AS(local_shrink(b, nm, opt), PreconditionError);
  opt.K = 7;
  CHECK_THROWS_AS(local_shrink(b, nm, opt), PreconditionError);
  opt.K = 2;
  opt.sweeps = 10;
  opt.burn_in = 10;
  CHECK_THROWS_AS(local_shrink(b, nm, opt), PreconditionError);

  // One member in a component: the pooled covariance stands in and the run completes.
  opt.K = 3;
  opt.sweeps = 30;
  opt.burn_in = 5;
  opt.initial_labels = {0, 1, 1, 2, 2, 2};
  const CoefficientEstimate est = local_shrink(b, nm, opt);
  CHECK(est.B.allFinite());
  CHECK(est.mixture->revived > 0);
}

TEST_CASE("two components do no worse than one on the mixture design, n = 50, p = 20") {
  DesignSpec spec;
  spec.kind = DesignKind::Mixture;
  spec.n = 50;
  spec.p = 20;
  ExperimentResult ls, lls;
  for (int r = 0; r < 20; ++r) {
    spec.seed = derive_seed(2024, r);
    const SimulatedData d = generate_design(spec);
    ls.add(mse(global_shrink(d.bundle(), Bandwidth::automatic()).B, d.B0));
    LocalShrinkOptions opt;
    opt.K = 2;
    opt.seed = derive_seed(spec.seed, 2);
    lls.add(mse(local_shrink(d.bundle(), opt).B, d.B0));
  }
  INFO("LS " << ls.mean() << " LLS-2 " << lls.mean());
  CHECK(lls.mean() <= ls.mean());
}

TEST_CASE("select_K") {
  DesignSpec spec;
  spec.kind = DesignKind::Mixture;
  spec.seed = 31;
  const SimulatedData d0 = generate_design(spec);
  CHECK(select_K(d0.bundle(), {3}, 0.2, 1) == 3);
  CHECK_THROWS_AS(select_K(d0.bundle(), {}, 0.2, 1), PreconditionError);
  CHECK_THROWS_AS(select_K(d0.bundle(), {1, 2}, 0.0, 1), DomainError);
  CHECK_THROWS_AS(select_K(d0.bundle(), {1, 2}, 0.96, 1), PreconditionError);

  LocalShrinkOptions base;
  base.sweeps = 100;
  base.burn_in = 20;
  const auto scores = score_K(d0.bundle(), {2, 3, 4}, 0.2, 8, base);
  const int chosen = select_K(d0.bundle(), {2, 3, 4}, 0.2, 8, base);
  double best = 1e300;
  for (const auto& s : scores) best = std::min(best, s.validation_pe);
  for (const auto& s : scores)
    if (s.K == chosen) CHECK(s.validation_pe == best);

  int picked_two = 0;
  for (int r = 0; r < 20; ++r) {
    spec.seed = derive_seed(505, r);
    const SimulatedData d = generate_design(spec);
    if (select_K(d.bundle(), {1, 2}, 0.2, derive_seed(606, r), base) == 2) ++picked_two;
  }
  INFO("K = 2 chosen in " << picked_two << " of 20");
  CHECK(picked_two >= 16);
}
