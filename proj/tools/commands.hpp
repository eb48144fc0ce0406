#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace ebshrink::cli {

inline constexpr const char* kToolVersion = "1.0.0";
// Bumped whenever a default (sweeps, burn-in, grids, bandwidth rule) changes.
inline constexpr const char* kDefaultsVersion = "1";
inline constexpr const char* kOutDirEnv = "EBSHRINK_OUT_DIR";

struct FitConfig {
  std::string design;
  std::string response;
  std::string method = "ols";  // ols | global | local
  std::string h = "auto";      // auto | default | positive number
  int K = 2;
  int sweeps = 200;
  int burn_in = 50;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
};

struct TuneConfig {
  std::string data;
  std::vector<double> grid;  // empty: default grid
  std::string out_dir;
};

struct ShrinkCurveConfig {
  std::string data;
  std::string h = "default";
  int points = 200;
  std::string out_dir;
};

struct SimulateConfig {
  std::string design = "mix";
  int n = 40;
  int p = 10;
  int N = 200;
  int n_test = 20;
  double rho = 0.0;
  int reps = 20;
  std::vector<std::string> methods{"ols", "global"};
  std::string h = "auto";
  int sweeps = 200;
  int burn_in = 50;
  bool summary = false;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
};

struct CrossvalConfig {
  std::string design;
  std::string response;
  int folds = 10;
  std::vector<std::string> methods{"ols", "global"};
  std::string h = "auto";
  int sweeps = 200;
  int burn_in = 50;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
};

struct PrialConfig {
  int np_product = 2000;
  std::vector<double> c_grid{0.3, 0.5, 0.7};
  int factor_rank = 5;
  int reps = 50;
  std::vector<std::string> policies{"default", "sure", "oracle"};
  std::optional<std::uint64_t> seed;
  std::string out_dir;
};

// Each command throws ebshrink::Error on failure and writes nothing in that case.
void cmd_fit(const FitConfig& cfg, std::ostream& out);
void cmd_tune(const TuneConfig& cfg, std::ostream& out);
void cmd_shrink_curve(const ShrinkCurveConfig& cfg, std::ostream& out);
void cmd_simulate(const SimulateConfig& cfg, std::ostream& out);
void cmd_crossval(const CrossvalConfig& cfg, std::ostream& out);
void cmd_prial(const PrialConfig& cfg, std::ostream& out);

/// Flag value if given, else $EBSHRINK_OUT_DIR, else the working directory.
std::string resolve_out_dir(const std::string& flag);

/// Parses argv, dispatches, and maps failures to exit codes (0 ok, 2 I/O, 3 precondition,
/// 4 numerical). Failure reasons go to `err` as one line: "error kind=<kind>: <message>".
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace ebshrink::cli
