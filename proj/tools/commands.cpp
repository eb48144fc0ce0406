#include "commands.hpp"

#include "ebshrink/csv.hpp"
#include "ebshrink/errors.hpp"
#include "ebshrink/regress.hpp"
#include "ebshrink/rng.hpp"
#include "ebshrink/simlab.hpp"
#include "ebshrink/sure.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace ebshrink::cli {

namespace {

// Reads key=value files and files the unsectioned keys under the subcommand given on
// the command line, so a flat file configures whichever command runs.
class FlatConfig : public CLI::ConfigBase {
 public:
  explicit FlatConfig(const CLI::App& app) : app_(app) {}

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    std::vector<CLI::ConfigItem> items = CLI::ConfigBase::from_config(input);
    const auto chosen = app_.get_subcommands();
    if (chosen.empty()) return items;
    for (CLI::ConfigItem& item : items) {
      if (item.parents.empty() || item.parents.front() == "default") item.parents = {chosen.front()->get_name()};
    }
    return items;
  }

 private:
  const CLI::App& app_;
};

std::string join(const std::vector<std::string>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + v[i];
  return s;
}

std::string join(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + format_number(v[i]);
  return s;
}

std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

std::uint64_t require_seed(const std::optional<std::uint64_t>& seed, const char* cmd) {
  if (!seed) throw PreconditionError(std::string(cmd) + ": --seed is required for stochastic runs");
  return *seed;
}

Bandwidth parse_bandwidth(const std::string& text) {
  if (text == "auto") return Bandwidth::automatic();
  if (text == "default") return Bandwidth::default_rule();
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (end != text.c_str() + text.size() || !(v > 0.0) || !std::isfinite(v)) {
    throw InputError("bandwidth must be 'auto', 'default' or a positive number, got '" + text + "'");
  }
  return Bandwidth::fixed(v);
}

// "ols", "global" or "local:K".
MethodSpec parse_method(const std::string& text, const std::string& h, int sweeps, int burn_in) {
  MethodSpec m;
  m.h = parse_bandwidth(h);
  m.sweeps = sweeps;
  m.burn_in = burn_in;
  if (text == "ols") {
    m.method = Method::OLS;
  } else if (text == "global") {
    m.method = Method::GlobalLS;
  } else if (text.rfind("local:", 0) == 0) {
    m.method = Method::LocalLLS;
    try {
      m.K = std::stoi(text.substr(6));
    } catch (const std::exception&) {
      throw InputError("method '" + text + "': expected local:K");
    }
  } else {
    throw InputError("unknown method '" + text + "' (expected ols, global or local:K)");
  }
  return m;
}

Manifest base_manifest(const std::string& command, const std::string& canonical_config) {
  Manifest m;
  m.set("command", command)
      .set("tool_version", kToolVersion)
      .set("defaults_version", kDefaultsVersion)
      .set("config_hash", hex64(fnv1a(canonical_config)));
  return m;
}

Matrix estimate_for(const MethodSpec& m, const OlsFit& fit, std::uint64_t seed, CoefficientEstimate* detail) {
  CoefficientEstimate est;
  switch (m.method) {
    case Method::OLS:
      est = fit.estimate;
      break;
    case Method::GlobalLS:
      est = global_shrink(fit.estimate.B, fit.noise, m.h);
      break;
    case Method::LocalLLS: {
      LocalShrinkOptions opt;
      opt.K = m.K;
      opt.sweeps = m.sweeps;
      opt.burn_in = m.burn_in;
      opt.seed = seed;
      est = local_shrink(fit.estimate.B, fit.noise, opt);
      break;
    }
  }
  if (detail) *detail = est;
  return est.B;
}

}  // namespace

std::string resolve_out_dir(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv(kOutDirEnv); env != nullptr && *env != '\0') return env;
  return ".";
}

void cmd_fit(const FitConfig& cfg, std::ostream& out) {
  SourceBundle bundle{read_csv(cfg.design), read_csv(cfg.response)};
  const std::string canonical = "design=" + cfg.design + "\nresponse=" + cfg.response + "\nmethod=" + cfg.method +
                                "\nh=" + cfg.h + "\nK=" + std::to_string(cfg.K) + "\nsweeps=" +
                                std::to_string(cfg.sweeps) + "\nburn_in=" + std::to_string(cfg.burn_in) +
                                "\nseed=" + (cfg.seed ? std::to_string(*cfg.seed) : "none") + "\n";
  std::string method_text = cfg.method;
  if (method_text == "local") method_text = "local:" + std::to_string(cfg.K);
  const MethodSpec m = parse_method(method_text, cfg.h, cfg.sweeps, cfg.burn_in);
  std::uint64_t seed = 0;
  if (m.method == Method::LocalLLS) seed = require_seed(cfg.seed, "fit");

  const OlsFit fit = fit_ols(bundle);
  CoefficientEstimate est;
  estimate_for(m, fit, seed, &est);

  Manifest man = base_manifest("fit", canonical);
  man.set("method", est.tag())
      .set("N", static_cast<long long>(bundle.N()))
      .set("n", static_cast<long long>(bundle.n()))
      .set("p", static_cast<long long>(bundle.p()))
      .set("sigma2", fit.noise.sigma2);
  if (cfg.seed) man.set("seed", std::to_string(*cfg.seed));
  if (m.method != Method::OLS) {
    man.set("h", est.bandwidth).set("h_source", to_string(*est.bandwidth_source)).set("clamp_count", est.clamp_count);
    if (est.bandwidth_source == BandwidthSource::DefaultFallback) {
      man.set("h_note", "risk estimate needs n > p + 1 sources; default bandwidth used");
    }
  }
  if (est.mixture) {
    const MixtureSummary& mix = *est.mixture;
    std::vector<double> w(mix.mean_weights.data(), mix.mean_weights.data() + mix.mean_weights.size());
    man.set("K", mix.K)
        .set("sweeps", mix.sweeps)
        .set("burn_in", mix.burn_in)
        .set("mean_weights", join(w))
        .set("revived_components", mix.revived);
  }

  OutputBatch batch(resolve_out_dir(cfg.out_dir));
  batch.stage("coefficients.csv", to_csv(est.B));
  batch.stage("manifest.txt", man.str());
  batch.commit();
  out << "fit " << est.tag() << ": wrote " << est.B.rows() << "x" << est.B.cols() << " coefficients to "
      << (batch.dir() / "coefficients.csv").string() << '\n';
}

void cmd_tune(const TuneConfig& cfg, std::ostream& out) {
  const Matrix z = read_csv(cfg.data);
  const int n = static_cast<int>(z.rows());
  const int p = static_cast<int>(z.cols());
  const PrecisionDiagonals diag = precision_diagonals(z);
  const SymmetricMatrix s = sample_covariance(z);
  const std::vector<double> grid = cfg.grid.empty() ? default_grid(n, p) : cfg.grid;
  for (double h : grid) {
    if (!(h > 0.0) || !std::isfinite(h)) throw DomainError("tune: grid entries must be positive");
  }

  SpectralDecomposition d = eigh(s);
  d.eigenvalues = d.eigenvalues.cwiseMax(0.0);
  Matrix table(static_cast<Eigen::Index>(grid.size()), 6);
  double best_h = 0.0;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const RiskEstimate r = risk_estimate(d, n, grid[g], diag.sum());
    table.row(static_cast<Eigen::Index>(g)) << grid[g], r.value, r.term1, r.term2, r.term3, r.term4;
    if (std::isfinite(r.value) && (r.value < best || (r.value == best && grid[g] > best_h))) {
      best = r.value;
      best_h = grid[g];
    }
  }
  if (!std::isfinite(best)) throw TuningFailureError("tune: risk estimate non-finite on the whole grid");

  Manifest man = base_manifest("tune", "data=" + cfg.data + "\ngrid=" + join(cfg.grid) + "\n");
  man.set("n", n).set("p", p).set("grid_points", grid.size()).set("h_selected", best_h).set("risk_selected", best);

  OutputBatch batch(resolve_out_dir(cfg.out_dir));
  batch.stage("sure_curve.csv", to_csv(table, {"h", "risk", "term1", "term2", "term3", "term4"}));
  batch.stage("manifest.txt", man.str());
  batch.commit();
  out << "tune: selected h=" << format_number(best_h) << " risk=" << format_number(best) << '\n';
}

void cmd_shrink_curve(const ShrinkCurveConfig& cfg, std::ostream& out) {
  if (cfg.points < 2) throw PreconditionError("shrink-curve: need at least 2 points");
  const Matrix z = read_csv(cfg.data);
  const int n = static_cast<int>(z.rows());
  const int p = static_cast<int>(z.cols());
  const ShrunkCovariance sc = shrink_covariance(sample_covariance(z), n, parse_bandwidth(cfg.h));
  const ShrinkageRule rule = ShrinkageRule::from_decomposition(sc.decomposition, n, sc.bandwidth);

  const Vector& lam = rule.eigenvalues();
  const double lo = 0.9 * lam.minCoeff();
  const double hi = 1.1 * lam.maxCoeff();
  Matrix curve(cfg.points, 2);
  for (int i = 0; i < cfg.points; ++i) {
    const double x = lo + (hi - lo) * i / (cfg.points - 1);
    curve(i, 0) = x;
    curve(i, 1) = delta_star(x, rule).value;
  }

  Manifest man = base_manifest("shrink-curve", "data=" + cfg.data + "\nh=" + cfg.h + "\npoints=" +
                                                   std::to_string(cfg.points) + "\n");
  man.set("n", n)
      .set("p", p)
      .set("regime", to_string(rule.regime()))
      .set("h", sc.bandwidth)
      .set("h_source", to_string(sc.bandwidth_source))
      .set("clamp_count", sc.clamp_count);

  OutputBatch batch(resolve_out_dir(cfg.out_dir));
  batch.stage("shrink_curve.csv", to_csv(curve, {"x", "delta"}));
  batch.stage("manifest.txt", man.str());
  batch.commit();
  out << "shrink-curve: " << cfg.points << " points on [" << format_number(lo) << ", " << format_number(hi) << "]\n";
}

void cmd_simulate(const SimulateConfig& cfg, std::ostream& out) {
  const std::uint64_t seed = require_seed(cfg.seed, "simulate");
  DesignSpec spec;
  spec.kind = parse_design_kind(cfg.design);
  spec.n = cfg.n;
  spec.p = cfg.p;
  spec.N = cfg.N;
  spec.n_test = cfg.n_test;
  spec.rho = cfg.rho;
  spec.seed = seed;
  std::vector<MethodSpec> methods;
  for (const std::string& m : cfg.methods) methods.push_back(parse_method(m, cfg.h, cfg.sweeps, cfg.burn_in));

  const SimulationOutput res = run_simulation(spec, cfg.reps, methods);

  std::ostringstream records;
  records << "design,n,p,rho,method,replication,metric,value\n";
  for (const SimulationRecord& r : res.records) {
    records << r.design << ',' << r.n << ',' << r.p << ',' << format_number(r.rho) << ',' << r.method << ','
            << r.replication << ',' << r.metric << ',' << format_number(r.value) << '\n';
  }
  std::ostringstream summary;
  summary << "design,n,p,rho,method,reps,mse_mean,mse_sd,pe_mean,pe_sd\n";
  for (const MethodSummary& s : res.summaries) {
    summary << cfg.design << ',' << cfg.n << ',' << cfg.p << ',' << format_number(cfg.rho) << ',' << s.method << ','
            << s.mse.count() << ',' << format_number(s.mse.mean()) << ',' << format_number(s.mse.sd()) << ','
            << format_number(s.pe.mean()) << ',' << format_number(s.pe.sd()) << '\n';
  }

  const std::string canonical = "design=" + cfg.design + "\nn=" + std::to_string(cfg.n) + "\np=" +
                                std::to_string(cfg.p) + "\nN=" + std::to_string(cfg.N) + "\nn_test=" +
                                std::to_string(cfg.n_test) + "\nrho=" + format_number(cfg.rho) + "\nreps=" +
                                std::to_string(cfg.reps) + "\nmethods=" + join(cfg.methods) + "\nh=" + cfg.h +
                                "\nsweeps=" + std::to_string(cfg.sweeps) + "\nburn_in=" +
                                std::to_string(cfg.burn_in) + "\nseed=" + std::to_string(seed) + "\n";
  Manifest man = base_manifest("simulate", canonical);
  man.set("seed", std::to_string(seed))
      .set("seed_rule", "replication r uses splitmix64(seed + 0x9E3779B97F4A7C15 * (r + 1))")
      .set("design", cfg.design)
      .set("reps", cfg.reps)
      .set("methods", join(cfg.methods));
  for (const MethodSummary& s : res.summaries) {
    if (s.sure_fallbacks > 0) man.set("h_fallbacks_" + s.method, s.sure_fallbacks);
  }

  OutputBatch batch(resolve_out_dir(cfg.out_dir));
  batch.stage("simulation.csv", records.str());
  if (cfg.summary) batch.stage("summary.csv", summary.str());
  batch.stage("manifest.txt", man.str());
  batch.commit();
  out << summary.str();
}

void cmd_crossval(const CrossvalConfig& cfg, std::ostream& out) {
  const std::uint64_t seed = require_seed(cfg.seed, "crossval");
  SourceBundle bundle{read_csv(cfg.design), read_csv(cfg.response)};
  bundle.validate();
  const Eigen::Index N = bundle.N();
  const Eigen::Index p = bundle.p();
  if (cfg.folds < 2) throw PreconditionError("crossval: need at least 2 folds");
  if (N < cfg.folds) throw PreconditionError("crossval: fewer rows than folds");
  std::vector<MethodSpec> methods;
  for (const std::string& m : cfg.methods) methods.push_back(parse_method(m, cfg.h, cfg.sweeps, cfg.burn_in));

  Rng rng(derive_seed(seed, 0));
  const std::vector<Eigen::Index> perm = rng.permutation(N);
  std::vector<int> fold_of(static_cast<std::size_t>(N));
  for (Eigen::Index pos = 0; pos < N; ++pos) fold_of[perm[pos]] = static_cast<int>(pos % cfg.folds);

  std::ostringstream cells;
  cells << "method,fold,n_train,n_val,pmse,status\n";
  std::vector<ExperimentResult> per_method(methods.size());
  for (int f = 0; f < cfg.folds; ++f) {
    std::vector<Eigen::Index> train, val;
    for (Eigen::Index i = 0; i < N; ++i) (fold_of[i] == f ? val : train).push_back(i);
    const auto n_train = static_cast<Eigen::Index>(train.size());
    if (n_train <= p) {
      for (const MethodSpec& m : methods) {
        cells << m.tag() << ',' << f << ',' << n_train << ',' << val.size() << ",,skipped: training rows <= p\n";
      }
      continue;
    }
    const SourceBundle tr = bundle.rows(train);
    const SourceBundle va = bundle.rows(val);
    const OlsFit fit = fit_ols(tr);
    for (std::size_t k = 0; k < methods.size(); ++k) {
      const Matrix b = estimate_for(methods[k], fit, derive_seed(seed, static_cast<std::uint64_t>(f) + 1), nullptr);
      const Matrix err = va.Y - va.X * b.transpose();
      const double pmse = err.squaredNorm() / static_cast<double>(va.N() * va.n());
      per_method[k].add(pmse);
      cells << methods[k].tag() << ',' << f << ',' << n_train << ',' << val.size() << ',' << format_number(pmse)
            << ",ok\n";
    }
  }

  std::ostringstream summary;
  summary << "method,folds_used,pmse_mean,pmse_sd\n";
  for (std::size_t k = 0; k < methods.size(); ++k) {
    summary << methods[k].tag() << ',' << per_method[k].count() << ',' << format_number(per_method[k].mean()) << ','
            << format_number(per_method[k].sd()) << '\n';
  }

  const std::string canonical = "design=" + cfg.design + "\nresponse=" + cfg.response + "\nfolds=" +
                                std::to_string(cfg.folds) + "\nmethods=" + join(cfg.methods) + "\nh=" + cfg.h +
                                "\nsweeps=" + std::to_string(cfg.sweeps) + "\nburn_in=" +
                                std::to_string(cfg.burn_in) + "\nseed=" + std::to_string(seed) + "\n";
  Manifest man = base_manifest("crossval", canonical);
  man.set("seed", std::to_string(seed)).set("folds", cfg.folds).set("methods", join(cfg.methods));

  OutputBatch batch(resolve_out_dir(cfg.out_dir));
  batch.stage("crossval.csv", cells.str());
  batch.stage("crossval_summary.csv", summary.str());
  batch.stage("manifest.txt", man.str());
  batch.commit();
  out << summary.str();
}

void cmd_prial(const PrialConfig& cfg, std::ostream& out) {
  const std::uint64_t seed = require_seed(cfg.seed, "prial");
  PrialSpec spec;
  spec.np_product = cfg.np_product;
  spec.c_grid = cfg.c_grid;
  spec.factor_rank = cfg.factor_rank;
  spec.reps = cfg.reps;
  spec.seed = seed;
  spec.policies.clear();
  for (const std::string& s : cfg.policies) spec.policies.push_back(parse_policy(s));

  const std::vector<PrialCell> cells = prial_experiment(spec);
  std::ostringstream table;
  table << "c,n,p,policy,prial,defined,mean_loss,sample_loss,oracle_loss,oracle_h,mean_h\n";
  for (const PrialCell& c : cells) {
    table << format_number(c.c) << ',' << c.n << ',' << c.p << ',' << to_string(c.policy) << ','
          << (c.defined ? format_number(c.prial) : "") << ',' << (c.defined ? 1 : 0) << ','
          << format_number(c.loss.mean()) << ',' << format_number(c.sample_loss) << ','
          << format_number(c.oracle_loss) << ',' << format_number(c.oracle_h) << ','
          << format_number(c.bandwidth.mean()) << '\n';
  }

  std::vector<std::string> c_text;
  for (double c : cfg.c_grid) c_text.push_back(format_number(c));
  const std::string canonical = "np_product=" + std::to_string(cfg.np_product) + "\nc_grid=" + join(c_text) +
                                "\nfactor_rank=" + std::to_string(cfg.factor_rank) + "\nreps=" +
                                std::to_string(cfg.reps) + "\npolicies=" + join(cfg.policies) +
                                "\nseed=" + std::to_string(seed) + "\n";
  Manifest man = base_manifest("prial", canonical);
  man.set("seed", std::to_string(seed)).set("np_product", cfg.np_product).set("reps", cfg.reps);

  OutputBatch batch(resolve_out_dir(cfg.out_dir));
  batch.stage("prial.csv", table.str());
  batch.stage("manifest.txt", man.str());
  batch.commit();
  out << table.str();
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Empirical Bayes shrinkage of covariance spectra and multi-source regression coefficients"};
  app.set_config("--config", "", "Flat key=value configuration file; flags override it");
  app.config_formatter(std::make_shared<FlatConfig>(app));
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);
  // "-h" stays free for the bandwidth option; subcommands inherit this help flag.
  app.set_help_flag("--help", "Print this help message and exit");

  auto add_seed = [](CLI::App* sub, std::optional<std::uint64_t>& seed) {
    sub->add_option("--seed", seed, "64-bit seed; all randomness derives from it");
  };
  auto add_out = [](CLI::App* sub, std::string& dir) {
    sub->add_option("--out-dir", dir, std::string("Output directory (else $") + kOutDirEnv + ", else .)");
  };

  FitConfig fit;
  auto* fit_cmd = app.add_subcommand("fit", "Estimate per-source coefficients from design and response CSVs");
  fit_cmd->add_option("--design", fit.design, "N x p design CSV")->required();
  fit_cmd->add_option("--response", fit.response, "N x n response CSV")->required();
  fit_cmd->add_option("--method", fit.method, "ols | global | local")
      ->check(CLI::IsMember({"ols", "global", "local"}))
      ->capture_default_str();
  fit_cmd->add_option("--h,--bandwidth", fit.h, "Bandwidth: auto | default | value")->capture_default_str();
  fit_cmd->add_option("--K", fit.K, "Mixture components for local")->capture_default_str();
  fit_cmd->add_option("--sweeps", fit.sweeps, "Sampler sweeps")->capture_default_str();
  fit_cmd->add_option("--burn-in", fit.burn_in, "Discarded initial sweeps")->capture_default_str();
  add_seed(fit_cmd, fit.seed);
  add_out(fit_cmd, fit.out_dir);

  TuneConfig tune;
  auto* tune_cmd = app.add_subcommand("tune", "Risk-estimate curve over bandwidths for an n x p data CSV");
  tune_cmd->add_option("--data", tune.data, "n x p data CSV")->required();
  tune_cmd->add_option("--grid", tune.grid, "Bandwidth grid (default: 15 log points around the default rule)")
      ->delimiter(',');
  add_out(tune_cmd, tune.out_dir);

  ShrinkCurveConfig curve;
  auto* curve_cmd = app.add_subcommand("shrink-curve", "Tabulate the eigenvalue shrinkage map for a data CSV");
  curve_cmd->add_option("--data", curve.data, "n x p data CSV")->required();
  curve_cmd->add_option("--h,--bandwidth", curve.h, "Bandwidth: auto | default | value")->capture_default_str();
  curve_cmd->add_option("--points", curve.points, "Grid size")->capture_default_str();
  add_out(curve_cmd, curve.out_dir);

  SimulateConfig sim;
  auto* sim_cmd = app.add_subcommand("simulate", "Monte Carlo comparison of estimators on a synthetic design");
  sim_cmd->add_option("--design", sim.design, "lr | as | hs | mix")->capture_default_str();
  sim_cmd->add_option("--n", sim.n, "Sources")->capture_default_str();
  sim_cmd->add_option("--p", sim.p, "Covariates")->capture_default_str();
  sim_cmd->add_option("--N", sim.N, "Training rows")->capture_default_str();
  sim_cmd->add_option("--n-test", sim.n_test, "Test rows")->capture_default_str();
  sim_cmd->add_option("--rho", sim.rho, "Covariate equicorrelation")->capture_default_str();
  sim_cmd->add_option("--reps", sim.reps, "Replications")->capture_default_str();
  sim_cmd->add_option("--methods", sim.methods, "ols,global,local:K")->delimiter(',')->capture_default_str();
  sim_cmd->add_option("--h,--bandwidth", sim.h, "Bandwidth for global: auto | default | value")->capture_default_str();
  sim_cmd->add_option("--sweeps", sim.sweeps, "Sampler sweeps")->capture_default_str();
  sim_cmd->add_option("--burn-in", sim.burn_in, "Discarded initial sweeps")->capture_default_str();
  sim_cmd->add_flag("--summary", sim.summary, "Also write mean/sd table");
  add_seed(sim_cmd, sim.seed);
  add_out(sim_cmd, sim.out_dir);

  CrossvalConfig cv;
  auto* cv_cmd = app.add_subcommand("crossval", "k-fold prediction error of estimators on CSV data");
  cv_cmd->add_option("--design", cv.design, "N x p design CSV")->required();
  cv_cmd->add_option("--response", cv.response, "N x n response CSV")->required();
  cv_cmd->add_option("--folds", cv.folds, "Number of folds")->capture_default_str();
  cv_cmd->add_option("--methods", cv.methods, "ols,global,local:K")->delimiter(',')->capture_default_str();
  cv_cmd->add_option("--h,--bandwidth", cv.h, "Bandwidth for global: auto | default | value")->capture_default_str();
  cv_cmd->add_option("--sweeps", cv.sweeps, "Sampler sweeps")->capture_default_str();
  cv_cmd->add_option("--burn-in", cv.burn_in, "Discarded initial sweeps")->capture_default_str();
  add_seed(cv_cmd, cv.seed);
  add_out(cv_cmd, cv.out_dir);

  PrialConfig pr;
  auto* pr_cmd = app.add_subcommand("prial", "Improvement of shrunk inverses over the raw inverse sample covariance");
  pr_cmd->add_option("--np-product", pr.np_product, "Fixed n * p")->capture_default_str();
  pr_cmd->add_option("--c-grid", pr.c_grid, "Ratios p/n in (0,1)")->delimiter(',')->capture_default_str();
  pr_cmd->add_option("--factor-rank", pr.factor_rank, "Factor count of the population covariance")
      ->capture_default_str();
  pr_cmd->add_option("--reps", pr.reps, "Replications per ratio")->capture_default_str();
  pr_cmd->add_option("--policies", pr.policies, "default,sure,oracle")->delimiter(',')->capture_default_str();
  add_seed(pr_cmd, pr.seed);
  add_out(pr_cmd, pr.out_dir);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e, out, err);
    err << "error kind=precondition: " << e.what() << '\n';
    return 3;
  }

  try {
    if (fit_cmd->parsed()) cmd_fit(fit, out);
    else if (tune_cmd->parsed()) cmd_tune(tune, out);
    else if (curve_cmd->parsed()) cmd_shrink_curve(curve, out);
    else if (sim_cmd->parsed()) cmd_simulate(sim, out);
    else if (cv_cmd->parsed()) cmd_crossval(cv, out);
    else if (pr_cmd->parsed()) cmd_prial(pr, out);
  } catch (const Error& e) {
    static const char* names[] = {"io", "precondition", "numerical"};
    err << "error kind=" << names[static_cast<int>(e.kind())] << ": " << e.what() << '\n';
    return exit_code_for(e.kind());
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error kind=io: " << e.what() << '\n';
    return 2;
  }
  return 0;
}

}  // namespace ebshrink::cli
