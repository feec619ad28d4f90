// fastpower command-line tool: curve, verify, variance-study, serve.

#include <csignal>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <pthread.h>

#include <CLI11.hpp>

#include "fastpower/errors.hpp"
#include "fastpower/oracle.hpp"
#include "fastpower/service/config.hpp"
#include "fastpower/service/design_json.hpp"
#include "fastpower/service/http_api.hpp"

using namespace fastpower;
using service::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitWarnings = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

DesignSpec load_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read spec file " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw UsageError(path + ": invalid JSON: " + e.what());
  }
  return service::design_from_json(j);
}

std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> grid;
  if (text.find(':') != std::string::npos) {
    std::istringstream in(text);
    double a, b, c;
    char s1, s2;
    if (!(in >> a >> s1 >> b >> s2 >> c) || s1 != ':' || s2 != ':' || !(c > 0.0) || b < a)
      throw UsageError("--n-grid: expected start:stop:step");
    for (double n = a; n <= b + 1e-9 * c; n += c) grid.push_back(n);
  } else {
    std::istringstream in(text);
    std::string tok;
    while (std::getline(in, tok, ',')) grid.push_back(std::stod(tok));
  }
  if (grid.empty()) throw UsageError("--n-grid: empty grid");
  for (double n : grid)
    if (!(n >= 2.0)) throw UsageError("--n-grid: sample sizes must be at least 2");
  return grid;
}

class Output {
 public:
  explicit Output(const std::string& path) {
    if (!path.empty() && path != "-") {
      file_.open(path);
      if (!file_) throw UsageError("cannot write " + path);
    }
  }
  std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }

 private:
  std::ofstream file_;
};

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", x);
  return buf;
}

int report_warnings(const std::vector<std::string>& warnings) {
  if (warnings.empty()) return kExitOk;
  std::cerr << json{{"warnings", warnings}}.dump() << "\n";
  return kExitWarnings;
}

struct CurveArgs {
  std::string spec, out, csv;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> m;
  std::size_t parallelism = 0;
  std::size_t grid_points = 200;
};

int run_curve(const CurveArgs& a) {
  DesignSpec spec = load_spec(a.spec);
  if (a.seed) spec.seed = *a.seed;
  if (a.m) spec.m = *a.m;
  validate(spec);
  CurveOptions opts;
  opts.workers = a.parallelism;
  const PowerCurve curve = power_curve(spec, opts);
  const json result = service::curve_to_json(spec, curve, a.grid_points);
  {
    Output out(a.out);
    out.stream() << json{{"spec", service::design_to_json(spec)}, {"result", result}}.dump(2) << "\n";
  }
  if (!a.csv.empty()) {
    Output out(a.csv);
    out.stream() << "n,power\n";
    for (const auto& p : result["curve"]) out.stream() << fmt(p["n"].get<double>()) << "," << fmt(p["power"].get<double>()) << "\n";
  }
  return report_warnings(curve.warnings);
}

struct VerifyArgs {
  std::string spec, grid, out;
  std::size_t reps = 2000;
  std::optional<std::uint64_t> seed;
  std::size_t parallelism = 0;
};

int run_verify(const VerifyArgs& a) {
  const DesignSpec spec = load_spec(a.spec);
  const std::vector<double> grid = parse_grid(a.grid);
  OracleOptions opts;
  opts.workers = a.parallelism;
  const auto reports = conventional_curve(spec, grid, a.reps, a.seed.value_or(spec.seed), opts);
  Output out(a.out);
  out.stream() << "n,power,ci_lower,ci_upper,reps\n";
  for (const auto& r : reports)
    out.stream() << fmt(r.n) << "," << fmt(r.power) << "," << fmt(r.ci_lower) << "," << fmt(r.ci_upper) << "," << r.reps
                 << "\n";
  return kExitOk;
}

struct VarianceArgs {
  std::string spec, grid, out;
  std::size_t m = 1024;
  std::size_t reps = 200;
  std::optional<std::uint64_t> seed;
  std::size_t parallelism = 0;
};

int run_variance(const VarianceArgs& a) {
  DesignSpec spec = load_spec(a.spec);
  spec.m = a.m;
  if (a.seed) spec.seed = *a.seed;
  std::vector<double> grid;
  if (!a.grid.empty()) {
    grid = parse_grid(a.grid);
  } else {
    // Spread the grid over the body of the curve.
    CurveOptions opts;
    opts.workers = a.parallelism;
    PowerCurve curve = power_curve(spec, opts);
    std::sort(curve.roots.begin(), curve.roots.end());
    for (double level : {0.1, 0.3, 0.5, 0.7, 0.9})
      grid.push_back(std::round(empirical_quantile(curve.roots, level)));
  }
  const auto rows = variance_study(spec, grid, a.m, a.reps, spec.seed, a.parallelism);
  Output out(a.out);
  out.stream() << "n,sobol_mean,sobol_sd,prng_mean,prng_sd,sd_ratio\n";
  for (const auto& r : rows)
    out.stream() << fmt(r.n) << "," << fmt(r.sobol_mean) << "," << fmt(r.sobol_sd) << "," << fmt(r.prng_mean) << ","
                 << fmt(r.prng_sd) << "," << (r.prng_sd > 0 ? fmt(r.sobol_sd / r.prng_sd) : "nan") << "\n";
  return kExitOk;
}

struct ServeArgs {
  std::string config;
  std::optional<int> port;
  std::optional<std::size_t> parallelism;
};

int run_serve(const ServeArgs& a) {
  service::ServiceConfig cfg = a.config.empty() ? service::ServiceConfig{} : service::load_config(a.config);
  service::apply_env_overrides(cfg);
  if (a.port) cfg.port = *a.port;
  if (a.parallelism) cfg.workers = *a.parallelism;

  // Block the stop signals before any thread starts so only the waiter sees them.
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);

  service::ApiServer server(cfg);
  if (!server.bind()) {
    std::cerr << "error: cannot bind " << cfg.host << ":" << cfg.port << "\n";
    return kExitError;
  }
  std::cout << "listening on http://" << cfg.host << ":" << server.port() << std::endl;

  std::thread waiter([&] {
    int sig = 0;
    sigwait(&set, &sig);
    std::cerr << "shutting down, draining jobs\n";
    server.stop(true);
  });
  server.listen();
  pthread_kill(waiter.native_handle(), SIGTERM);  // no-op if the waiter already returned
  waiter.join();
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fast power curves for two-group Bayesian interval tests"};
  app.require_subcommand(1);

  CurveArgs ca;
  auto* curve = app.add_subcommand("curve", "Approximate the power curve and recommend a sample size");
  curve->add_option("--spec", ca.spec, "Design spec (JSON)")->required()->check(CLI::ExistingFile);
  curve->add_option("--seed", ca.seed, "Override the spec's seed");
  curve->add_option("--m", ca.m, "Override the number of points")->check(CLI::PositiveNumber);
  curve->add_option("--out", ca.out, "JSON output path (default stdout)");
  curve->add_option("--csv", ca.csv, "Also write the curve as CSV (n,power)");
  curve->add_option("--grid-points", ca.grid_points, "Points on the emitted curve")->check(CLI::Range(2, 100000));
  curve->add_option("--parallelism", ca.parallelism, "Worker threads (0 = all cores)");

  VerifyArgs va;
  auto* verify = app.add_subcommand("verify", "Simulation-based power at a grid of sample sizes");
  verify->add_option("--spec", va.spec, "Design spec (JSON)")->required()->check(CLI::ExistingFile);
  verify->add_option("--n-grid", va.grid, "start:stop:step or a comma list")->required();
  verify->add_option("--reps", va.reps, "Replicates per sample size (>= 100)")->check(CLI::Range(100, 100000000));
  verify->add_option("--seed", va.seed, "Base seed (default: spec seed)");
  verify->add_option("--out", va.out, "CSV output path (default stdout)");
  verify->add_option("--parallelism", va.parallelism, "Worker threads (0 = all cores)");

  VarianceArgs sa;
  auto* vstudy = app.add_subcommand("variance-study", "Spread of power estimates: Sobol' vs pseudo-random points");
  vstudy->add_option("--spec", sa.spec, "Design spec (JSON)")->required()->check(CLI::ExistingFile);
  vstudy->add_option("--m", sa.m, "Points per estimate")->check(CLI::PositiveNumber);
  vstudy->add_option("--reps", sa.reps, "Replications per point type")->check(CLI::Range(50, 1000000));
  vstudy->add_option("--n-grid", sa.grid, "start:stop:step or a comma list (default: spread over the curve)");
  vstudy->add_option("--seed", sa.seed, "Override the spec's seed");
  vstudy->add_option("--out", sa.out, "CSV output path (default stdout)");
  vstudy->add_option("--parallelism", sa.parallelism, "Worker threads (0 = all cores)");

  ServeArgs sv;
  auto* serve = app.add_subcommand("serve", "Run the HTTP API until interrupted");
  serve->add_option("--config", sv.config, "Config file (TOML subset)")->check(CLI::ExistingFile);
  serve->add_option("--port", sv.port, "Override the configured port")->check(CLI::Range(0, 65535));
  serve->add_option("--parallelism", sv.parallelism, "Worker threads per computation");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitError;
  }

  try {
    if (*curve) return run_curve(ca);
    if (*verify) return run_verify(va);
    if (*vstudy) return run_variance(sa);
    if (*serve) return run_serve(sv);
  } catch (const InvalidDesign& e) {
    std::cerr << "error: invalid design: " << e.what() << "\n";
  } catch (const UnattainableDesign& e) {
    std::cerr << "error: unattainable design: " << e.what() << "\n";
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
  }
  return kExitError;
}
