#include "ebshrink/simlab.hpp"

#include "ebshrink/errors.hpp"
#include "ebshrink/sure.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace ebshrink {

std::string to_string(DesignKind k) {
  switch (k) {
    case DesignKind::LowRank:
      return "lr";
    case DesignKind::ApproxSparse:
      return "as";
    case DesignKind::Horseshoe:
      return "hs";
    case DesignKind::Mixture:
      return "mix";
  }
  return "unknown";
}

DesignKind parse_design_kind(const std::string& name) {
  if (name == "lr") return DesignKind::LowRank;
  if (name == "as") return DesignKind::ApproxSparse;
  if (name == "hs") return DesignKind::Horseshoe;
  if (name == "mix") return DesignKind::Mixture;
  throw InputError("unknown design '" + name + "' (expected lr, as, hs or mix)");
}

void DesignSpec::validate() const {
  std::ostringstream os;
  if (n < 1 || p < 1 || N < 1 || n_test < 1) {
    os << "design: n, p, N and n_test must be >= 1";
  } else if (!(rho >= 0.0 && rho < 1.0)) {
    os << "design: rho must lie in [0, 1), got " << rho;
  } else if (kind == DesignKind::LowRank && rank < 1) {
    os << "design: rank must be >= 1";
  } else if (kind == DesignKind::ApproxSparse && !(tau0 > 0.0)) {
    os << "design: tau0 must be positive";
  } else if (kind == DesignKind::Mixture && (!(mix_weight >= 0.0 && mix_weight <= 1.0) || !(scale1 > 0.0) || !(scale2 > 0.0))) {
    os << "design: mixture weight must lie in [0, 1] and scales must be positive";
  }
  if (!os.str().empty()) throw DomainError(os.str());
}

Matrix draw_covariates(Eigen::Index rows, Eigen::Index p, double rho, Rng& rng) {
  const double a = std::sqrt(1.0 - rho);
  const double b = std::sqrt(rho);
  Matrix x(rows, p);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < p; ++j) x(i, j) = a * rng.normal();
    const double v = rng.normal();
    x.row(i).array() += b * v;
  }
  return x;
}

double draw_half_cauchy(Rng& rng) {
  return std::abs(std::tan(std::numbers::pi * (rng.uniform() - 0.5)));
}

SimulatedData generate_design(const DesignSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  SimulatedData d;
  d.X = draw_covariates(spec.N, spec.p, spec.rho, rng);

  switch (spec.kind) {
    case DesignKind::LowRank: {
      const Matrix g = rng.normal_matrix(spec.n, spec.rank);
      const Matrix f = rng.normal_matrix(spec.p, spec.rank);
      d.B0 = g * f.transpose();
      break;
    }
    case DesignKind::ApproxSparse:
      d.B0 = spec.tau0 * rng.normal_matrix(spec.n, spec.p);
      break;
    case DesignKind::Horseshoe:
      d.B0.resize(spec.n, spec.p);
      for (int t = 0; t < spec.n; ++t) {
        const double tau = rng.uniform();
        for (int j = 0; j < spec.p; ++j) d.B0(t, j) = draw_half_cauchy(rng) * tau * rng.normal();
      }
      break;
    case DesignKind::Mixture:
      d.B0.resize(spec.n, spec.p);
      for (int t = 0; t < spec.n; ++t) {
        const double scale = rng.uniform() < spec.mix_weight ? spec.scale1 : spec.scale2;
        for (int j = 0; j < spec.p; ++j) d.B0(t, j) = scale * rng.normal();
      }
      break;
  }

  d.Y = d.X * d.B0.transpose() + rng.normal_matrix(spec.N, spec.n);
  d.X_test = draw_covariates(spec.n_test, spec.p, spec.rho, rng);
  return d;
}

double mse(const Matrix& b_est, const Matrix& b0) {
  if (b_est.rows() != b0.rows() || b_est.cols() != b0.cols()) throw DimensionError("mse: shape mismatch");
  return (b_est - b0).squaredNorm() / static_cast<double>(b0.size());
}

double pe(const Matrix& b_est, const Matrix& b0, const Matrix& x_test) {
  if (b_est.rows() != b0.rows() || b_est.cols() != b0.cols()) throw DimensionError("pe: shape mismatch");
  if (x_test.rows() < 1 || x_test.cols() != b0.cols()) throw DimensionError("pe: test design does not match p");
  const Matrix diff = x_test * (b_est - b0).transpose();
  return diff.squaredNorm() / static_cast<double>(b0.rows() * x_test.rows());
}

double ExperimentResult::mean() const {
  if (values.empty()) return 0.0;
  double s = 0.0;
  for (double v : values) s += v;
  return s / static_cast<double>(values.size());
}

double ExperimentResult::sd() const {
  if (values.size() < 2) return 0.0;
  const double m = mean();
  double s = 0.0;
  for (double v : values) s += (v - m) * (v - m);
  return std::sqrt(s / static_cast<double>(values.size() - 1));
}

double ExperimentResult::standard_error() const {
  return values.empty() ? 0.0 : sd() / std::sqrt(static_cast<double>(values.size()));
}

std::string MethodSpec::tag() const {
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

SimulationOutput run_simulation(const DesignSpec& spec, int reps, const std::vector<MethodSpec>& methods) {
  spec.validate();
  if (reps < 1) throw PreconditionError("simulate: reps must be >= 1");
  if (methods.empty()) throw PreconditionError("simulate: no methods");

  SimulationOutput out;
  for (const MethodSpec& m : methods) out.summaries.push_back({m.tag(), {}, {}, 0});

  for (int r = 0; r < reps; ++r) {
    DesignSpec rep_spec = spec;
    rep_spec.seed = derive_seed(spec.seed, static_cast<std::uint64_t>(r));
    const SimulatedData data = generate_design(rep_spec);
    const OlsFit fit = fit_ols(data.bundle());

    for (std::size_t k = 0; k < methods.size(); ++k) {
      const MethodSpec& m = methods[k];
      Matrix b;
      switch (m.method) {
        case Method::OLS:
          b = fit.estimate.B;
          break;
        case Method::GlobalLS: {
          const CoefficientEstimate est = global_shrink(fit.estimate.B, fit.noise, m.h);
          if (est.bandwidth_source == BandwidthSource::DefaultFallback) ++out.summaries[k].sure_fallbacks;
          b = est.B;
          break;
        }
        case Method::LocalLLS: {
          LocalShrinkOptions opt;
          opt.K = m.K;
          opt.sweeps = m.sweeps;
          opt.burn_in = m.burn_in;
          opt.seed = derive_seed(rep_spec.seed, static_cast<std::uint64_t>(m.K));
          b = local_shrink(fit.estimate.B, fit.noise, opt).B;
          break;
        }
      }
      const double v_mse = mse(b, data.B0);
      const double v_pe = pe(b, data.B0, data.X_test);
      out.summaries[k].mse.add(v_mse);
      out.summaries[k].pe.add(v_pe);
      const std::string tag = m.tag();
      out.records.push_back({to_string(spec.kind), spec.n, spec.p, spec.rho, tag, r, "mse", v_mse});
      out.records.push_back({to_string(spec.kind), spec.n, spec.p, spec.rho, tag, r, "pe", v_pe});
    }
  }
  return out;
}

double spectral_loss(const Matrix& true_inv_in_basis, const Vector& lambda, const Vector& estimate_eigenvalues) {
  const Eigen::Index p = lambda.size();
  if (true_inv_in_basis.rows() != p || true_inv_in_basis.cols() != p || estimate_eigenvalues.size() != p) {
    throw DimensionError("spectral_loss: dimension mismatch");
  }
  double total = 0.0;
  for (Eigen::Index j = 0; j < p; ++j) {
    double col = 0.0;
    for (Eigen::Index i = 0; i < p; ++i) {
      double v = true_inv_in_basis(i, j);
      if (i == j) v -= 1.0 / estimate_eigenvalues(j);
      col += v * v;
    }
    total += lambda(j) * col;
  }
  return total / static_cast<double>(p);
}

std::string to_string(BandwidthPolicy p) {
  switch (p) {
    case BandwidthPolicy::Default:
      return "default";
    case BandwidthPolicy::Sure:
      return "sure";
    case BandwidthPolicy::Oracle:
      return "oracle";
  }
  return "unknown";
}

BandwidthPolicy parse_policy(const std::string& name) {
  if (name == "default") return BandwidthPolicy::Default;
  if (name == "sure") return BandwidthPolicy::Sure;
  if (name == "oracle") return BandwidthPolicy::Oracle;
  throw InputError("unknown bandwidth policy '" + name + "' (expected default, sure or oracle)");
}

SymmetricMatrix factor_covariance(int p, int k, Rng& rng) {
  if (p < 1 || k < 0) throw DimensionError("factor_covariance: need p >= 1 and k >= 0");
  const Matrix xi = rng.normal_matrix(p, k);
  return SymmetricMatrix(xi * xi.transpose() + Matrix::Identity(p, p));
}

std::pair<int, int> prial_dimensions(int np_product, double c) {
  if (np_product < 1 || !(c > 0.0)) throw DomainError("prial: need np_product >= 1 and c > 0");
  const int n = static_cast<int>(std::lround(std::sqrt(np_product / c)));
  const int p = static_cast<int>(std::lround(c * n));
  return {n, p};
}

void PrialSpec::validate() const {
  std::ostringstream os;
  if (c_grid.empty()) os << "prial: empty c grid";
  for (double c : c_grid) {
    if (!(c > 0.0 && c < 1.0)) os << "prial: every c must lie in (0, 1), got " << c;
  }
  if (reps < 10) os << "prial: need at least 10 replications, got " << reps;
  if (np_product < 1 || factor_rank < 0) os << "prial: invalid np_product or factor rank";
  if (policies.empty()) os << "prial: no policies";
  if (!os.str().empty()) throw PreconditionError(os.str());
}

Matrix draw_gaussian_rows(Eigen::Index n, const SymmetricMatrix& sigma, Rng& rng) {
  Eigen::LLT<Matrix> llt(sigma.matrix());
  if (llt.info() != Eigen::Success) throw SingularityError("draw_gaussian_rows: covariance is not positive definite");
  const Matrix w = rng.normal_matrix(n, sigma.dim());
  return w * llt.matrixL().transpose();
}

std::vector<PrialCell> prial_experiment(const PrialSpec& spec) {
  spec.validate();
  std::vector<PrialCell> out;
  for (std::size_t ci = 0; ci < spec.c_grid.size(); ++ci) {
    const double c = spec.c_grid[ci];
    const auto [n, p] = prial_dimensions(spec.np_product, c);
    if (p < 1 || p + 1 >= n) {
      std::ostringstream os;
      os << "prial: c=" << c << " gives n=" << n << " p=" << p << "; need 1 <= p and n > p + 1";
      throw PreconditionError(os.str());
    }
    const std::uint64_t cell_seed = derive_seed(spec.seed, ci);
    Rng model_rng(derive_seed(cell_seed, 0));
    const SymmetricMatrix sigma = factor_covariance(p, spec.factor_rank, model_rng);
    const Matrix sigma_inv = matrix_inverse(sigma).matrix();
    const std::vector<double> grid = default_grid(n, p);
    const std::size_t center = grid.size() / 2;

    std::vector<ExperimentResult> grid_loss(grid.size());
    ExperimentResult sample_loss;
    std::vector<std::size_t> sure_pick;
    for (int r = 0; r < spec.reps; ++r) {
      Rng rng(derive_seed(cell_seed, static_cast<std::uint64_t>(r) + 1));
      const Matrix z = draw_gaussian_rows(n, sigma, rng);
      SpectralDecomposition d = eigh(sample_covariance(z));
      d.eigenvalues = d.eigenvalues.cwiseMax(0.0);
      const Matrix m = d.eigenvectors.transpose() * sigma_inv * d.eigenvectors;
      sample_loss.add(spectral_loss(m, d.eigenvalues, d.eigenvalues));
      for (std::size_t g = 0; g < grid.size(); ++g) {
        const ShrunkCovariance sc = shrink_spectrum(d, n, grid[g]);
        grid_loss[g].add(spectral_loss(m, d.eigenvalues, sc.shrunk_eigenvalues));
      }
      const double h_sure = select_bandwidth(d, n, grid);
      sure_pick.push_back(static_cast<std::size_t>(std::find(grid.begin(), grid.end(), h_sure) - grid.begin()));
    }

    std::size_t best = 0;
    for (std::size_t g = 1; g < grid.size(); ++g) {
      if (grid_loss[g].mean() < grid_loss[best].mean()) best = g;
    }
    const double e_sample = sample_loss.mean();
    const double e_oracle = grid_loss[best].mean();
    const double denom = e_sample - e_oracle;

    for (BandwidthPolicy policy : spec.policies) {
      PrialCell cell;
      cell.c = c;
      cell.n = n;
      cell.p = p;
      cell.policy = policy;
      cell.sample_loss = e_sample;
      cell.oracle_loss = e_oracle;
      cell.oracle_h = grid[best];
      for (int r = 0; r < spec.reps; ++r) {
        std::size_t g = center;
        if (policy == BandwidthPolicy::Sure) g = sure_pick[r];
        if (policy == BandwidthPolicy::Oracle) g = best;
        cell.loss.add(grid_loss[g].values[r]);
        cell.bandwidth.add(grid[g]);
      }
      cell.defined = denom > 0.0;
      cell.prial = cell.defined ? 100.0 * (e_sample - cell.loss.mean()) / denom : 0.0;
      out.push_back(std::move(cell));
    }
  }
  return out;
}

std::string CovarianceModelSpec::name() const {
  switch (kind) {
    case CovarianceModel::Independence:
      return "independence";
    case CovarianceModel::AR1:
      return "ar1";
    case CovarianceModel::Spike:
      return "spike";
  }
  return "unknown";
}

SymmetricMatrix population_covariance(const CovarianceModelSpec& model, int p) {
  if (p < 1) throw DimensionError("population_covariance: p must be >= 1");
  Matrix s = Matrix::Identity(p, p);
  switch (model.kind) {
    case CovarianceModel::Independence:
      break;
    case CovarianceModel::AR1:
      if (!(std::abs(model.rho) < 1.0)) throw DomainError("AR(1) covariance needs |rho| < 1");
      for (int j = 0; j < p; ++j)
        for (int k = 0; k < p; ++k) s(j, k) = std::pow(model.rho, std::abs(j - k));
      break;
    case CovarianceModel::Spike:
      if (!(model.rho > -1.0 / p)) throw DomainError("spiked covariance is not positive definite for this rho");
      s.array() += model.rho;
      break;
  }
  return SymmetricMatrix(s);
}

std::vector<LossCell> loss_convergence_experiment(const CovarianceModelSpec& model, const std::vector<int>& n_grid,
                                                  const std::vector<double>& c_grid, int reps, std::uint64_t seed) {
  if (n_grid.empty() || c_grid.empty()) throw PreconditionError("loss convergence: empty grid");
  if (reps < 1) throw PreconditionError("loss convergence: reps must be >= 1");
  std::vector<LossCell> out;
  std::uint64_t cell_index = 0;
  for (int n : n_grid) {
    for (double c : c_grid) {
      const int p = static_cast<int>(std::lround(c * n));
      if (p < 1 || p >= n) {
        std::ostringstream os;
        os << "loss convergence: c=" << c << " with n=" << n << " gives p=" << p << "; need 1 <= p < n";
        throw PreconditionError(os.str());
      }
      const SymmetricMatrix sigma = population_covariance(model, p);
      const bool identity = model.kind == CovarianceModel::Independence;
      const Matrix sigma_inv = identity ? Matrix::Identity(p, p) : matrix_inverse(sigma).matrix();
      const std::uint64_t cell_seed = derive_seed(seed, cell_index++);
      const double h = default_bandwidth(n, p);

      LossCell cell{n, p, c, {}};
      for (int r = 0; r < reps; ++r) {
        Rng rng(derive_seed(cell_seed, static_cast<std::uint64_t>(r)));
        const Matrix z = identity ? rng.normal_matrix(n, p) : draw_gaussian_rows(n, sigma, rng);
        SpectralDecomposition d = eigh(sample_covariance(z));
        d.eigenvalues = d.eigenvalues.cwiseMax(0.0);
        const ShrunkCovariance sc = shrink_spectrum(d, n, h, BandwidthSource::Default);
        const Matrix m = identity ? Matrix::Identity(p, p)
                                  : Matrix(d.eigenvectors.transpose() * sigma_inv * d.eigenvectors);
        cell.loss.add(spectral_loss(m, d.eigenvalues, sc.shrunk_eigenvalues));
      }
      out.push_back(std::move(cell));
    }
  }
  return out;
}

}  // namespace ebshrink
