#include "fastpower/oracle.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include "fastpower/errors.hpp"

namespace fastpower {

std::string to_string(PosteriorMethod m) { return m == PosteriorMethod::conjugate_beta ? "conjugate_beta" : "grid"; }

namespace {

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b) {
  std::seed_seq seq{static_cast<std::uint32_t>(base), static_cast<std::uint32_t>(base >> 32),
                    static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(b)};
  std::array<std::uint32_t, 2> out{};
  seq.generate(out.begin(), out.end());
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

double uniform01(std::mt19937_64& rng) { return (static_cast<double>(rng() >> 11) + 0.5) / 9007199254740992.0; }

std::vector<double> conjugate_beta_draws(const ParamPrior& prior, std::span<const double> data, std::size_t draws,
                                         std::mt19937_64& rng) {
  const double s = std::accumulate(data.begin(), data.end(), 0.0);
  const double n = static_cast<double>(data.size());
  std::gamma_distribution<double> ga(prior.a + s, 1.0), gb(prior.b + n - s, 1.0);
  std::vector<double> out(draws);
  for (auto& t : out) {
    const double x = ga(rng), y = gb(rng);
    t = x / (x + y);
  }
  return out;
}

struct GridResult {
  std::vector<double> thetas;
  double boundary_mass = 0.0;
};

GridResult grid_draws(const DesignSpec& spec, const Model& model, const Prior& prior, std::span<const double> data,
                      const ParamVector& start, std::size_t draws, std::size_t cells, double halfwidth,
                      std::mt19937_64& rng) {
  const std::size_t d = model.dim();
  std::function<double(const Vec&)> logpost;
  Objective obj;
  if (model.exp_family()) {
    const SuffStats stats = model.suffstats(data);
    logpost = [&model, &prior, stats](const Vec& e) {
      return model.loglik_stats(e, stats, nullptr, nullptr) + log_prior(model, prior, e);
    };
    obj.gradient = [&model, &prior, stats](const Vec& e) {
      Vec gl, gp;
      model.loglik_stats(e, stats, &gl, nullptr);
      log_prior(model, prior, e, &gp, nullptr);
      return gl + gp;
    };
    obj.hessian = [&model, &prior, stats](const Vec& e) {
      Matrix hl, hp;
      model.loglik_stats(e, stats, nullptr, &hl);
      log_prior(model, prior, e, nullptr, &hp);
      hl += hp;
      return hl;
    };
  } else {
    logpost = [&model, &prior, data](const Vec& e) { return model.loglik_data(e, data) + log_prior(model, prior, e); };
  }
  obj.value = logpost;
  const MaximizeResult mode = local_maximize(obj, start, 1e-8 * std::max<double>(1.0, data.size()));
  Matrix neg_h = obj.hessian ? obj.hessian(mode.x) : numeric_hessian(logpost, mode.x);
  neg_h *= -1.0;
  const Matrix l = cholesky_lower(inverse_spd(neg_h));

  // Grid in whitened coordinates x, eta = mode + L x, so every cell has equal volume.
  const auto per_axis = static_cast<std::size_t>(std::llround(std::pow(static_cast<double>(cells), 1.0 / d)));
  const double width = 2.0 * halfwidth / static_cast<double>(per_axis);
  std::size_t total = 1;
  for (std::size_t k = 0; k < d; ++k) total *= per_axis;

  auto cell_x = [&](std::size_t c, Vec& x, bool& edge) {
    edge = false;
    for (std::size_t k = 0; k < d; ++k) {
      const std::size_t idx = c % per_axis;
      c /= per_axis;
      x[k] = -halfwidth + (static_cast<double>(idx) + 0.5) * width;
      if (idx == 0 || idx + 1 == per_axis) edge = true;
    }
  };

  std::vector<double> logw(total);
  std::vector<char> is_edge(total);
  double max_lw = -INFINITY;
  Vec x(d);
  for (std::size_t c = 0; c < total; ++c) {
    bool edge;
    cell_x(c, x, edge);
    is_edge[c] = edge;
    const double lw = logpost(mode.x + l * x);
    logw[c] = std::isfinite(lw) ? lw : -INFINITY;
    max_lw = std::max(max_lw, logw[c]);
  }
  std::vector<double> cdf(total);
  double sum = 0.0, edge_mass = 0.0;
  for (std::size_t c = 0; c < total; ++c) {
    const double w = std::exp(logw[c] - max_lw);
    sum += w;
    if (is_edge[c]) edge_mass += w;
    cdf[c] = sum;
  }
  GridResult out;
  out.boundary_mass = edge_mass / sum;
  out.thetas.resize(draws);
  for (auto& t : out.thetas) {
    const double target = uniform01(rng) * sum;
    std::size_t c = static_cast<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), target) - cdf.begin());
    c = std::min(c, total - 1);
    bool edge;
    cell_x(c, x, edge);
    for (std::size_t k = 0; k < d; ++k) x[k] += (uniform01(rng) - 0.5) * width;
    t = g_eval(spec.g, model, mode.x + l * x);
  }
  return out;
}

ParamVector mode_start(const DesignSpec& spec, const Model& model, int group, std::span<const double> data) {
  if (model.family() == Family::bernoulli) {
    const double s = std::accumulate(data.begin(), data.end(), 0.0);
    const double n = static_cast<double>(data.size());
    return ParamVector{std::log((s + 0.5) / (n - s + 0.5))};
  }
  try {
    const ParamVector e = model.mle(data);
    if (e.all_finite()) return e;
  } catch (const std::exception&) {
  }
  return model.to_working(spec.design[group]);
}

OracleReport binomial_report(double n, std::size_t reps, std::size_t hits, PosteriorMethod method) {
  OracleReport r;
  r.n = n;
  r.reps = reps;
  r.method = method;
  const double k = static_cast<double>(reps);
  r.power = static_cast<double>(hits) / k;
  const double half = 1.959963984540054 * std::sqrt(r.power * (1.0 - r.power) / k);
  r.ci_lower = std::max(0.0, r.power - half);
  r.ci_upper = std::min(1.0, r.power + half);
  return r;
}

}  // namespace

std::vector<double> posterior_theta_draws(const DesignSpec& spec, int group, std::span<const double> data,
                                          std::uint64_t seed, const OracleOptions& options, PosteriorMethod* used) {
  const auto model = make_model(spec.model);
  std::mt19937_64 rng(seed);
  const Prior& prior = spec.priors[group];
  if (model->family() == Family::bernoulli && !options.force_grid) {
    if (used) *used = PosteriorMethod::conjugate_beta;
    return conjugate_beta_draws(prior.params[0], data, options.theta_draws, rng);
  }
  if (used) *used = PosteriorMethod::grid;
  const ParamVector start = mode_start(spec, *model, group, data);
  double halfwidth = options.grid_halfwidth_sd;
  for (int attempt = 0; attempt < 2; ++attempt) {
    GridResult res = grid_draws(spec, *model, prior, data, start, options.theta_draws, options.grid_cells, halfwidth, rng);
    if (res.boundary_mass <= options.boundary_mass_tol) return std::move(res.thetas);
    if (attempt == 1)
      throw GridTruncation("posterior grid edge carries more than the allowed mass", res.boundary_mass);
    halfwidth *= 2.0;
  }
  throw GridTruncation("unreachable", 0.0);
}

OracleReport mc_power(const DesignSpec& spec, double n, std::size_t reps, std::uint64_t seed,
                      const OracleOptions& options) {
  if (reps < 100) throw std::invalid_argument("mc_power: reps must be at least 100");
  const PreparedDesign design(spec, true);
  const DecisionRule rule = resolve_rule(design, options.rule);
  const auto n1 = static_cast<std::size_t>(std::llround(n));
  const auto n2 = static_cast<std::size_t>(std::ceil(spec.q * static_cast<double>(n1) - 1e-9));
  if (n1 < 1 || n2 < 1) throw std::invalid_argument("mc_power: group sizes must be at least 1");
  const Model& model = design.model();

  std::vector<char> hit(reps);
  std::vector<PosteriorMethod> methods(reps, PosteriorMethod::grid);
  parallel_for(
      reps, options.workers,
      [&](std::size_t r) {
        const std::uint64_t rep_seed = seed + r;
        std::array<std::vector<double>, 2> thetas;
        for (int j = 0; j < 2; ++j) {
          const auto data = model.simulate(design.eta0(j), j == 0 ? n1 : n2, derive_seed(rep_seed, 1, j));
          thetas[j] = posterior_theta_draws(spec, j, data, derive_seed(rep_seed, 2, j), options, &methods[r]);
        }
        std::size_t in = 0, below = 0, above = 0;
        for (std::size_t i = 0; i < options.theta_draws; ++i) {
          const double w = h_eval(spec.h, thetas[0][i], thetas[1][i]);
          if (w <= rule.lower) ++below;
          else if (w >= rule.upper) ++above;
          else ++in;
        }
        const double k = static_cast<double>(options.theta_draws);
        if (rule.kind == DecisionRule::Kind::interval) {
          hit[r] = static_cast<double>(in) / k >= rule.gamma;
        } else {
          hit[r] = static_cast<double>(below) / k <= 0.5 * rule.alpha && static_cast<double>(above) / k <= 0.5 * rule.alpha;
        }
      },
      options.cancel);
  const auto hits = static_cast<std::size_t>(std::count(hit.begin(), hit.end(), 1));
  return binomial_report(static_cast<double>(n1), reps, hits, methods.front());
}

std::vector<OracleReport> conventional_curve(const DesignSpec& spec, std::span<const double> n_grid, std::size_t reps,
                                             std::uint64_t seed, const OracleOptions& options) {
  std::vector<OracleReport> out;
  out.reserve(n_grid.size());
  for (std::size_t i = 0; i < n_grid.size(); ++i) out.push_back(mc_power(spec, n_grid[i], reps, seed + 1'000'003ull * i, options));
  return out;
}

std::vector<VarianceRow> variance_study(const DesignSpec& spec, std::span<const double> n_grid, std::size_t m,
                                        std::size_t replications, std::uint64_t seed, std::size_t workers) {
  if (replications < 50) throw std::invalid_argument("variance_study: need at least 50 replications");
  DesignSpec s = spec;
  s.m = m;
  const PreparedDesign design(s);
  const DecisionRule rule = resolve_rule(design);
  const std::size_t dim = design.point_dimension();

  auto mean_sd = [](const std::vector<double>& v) {
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return std::pair{mean, std::sqrt(ss / static_cast<double>(v.size() - 1))};
  };

  std::vector<VarianceRow> rows;
  for (double n : n_grid) {
    std::vector<double> sob(replications), prn(replications);
    parallel_for(replications, workers, [&](std::size_t r) {
      sob[r] = power_at(design, rule, n, sobol_points(dim, m, seed + r));
      prn[r] = power_at(design, rule, n, prng_points(dim, m, derive_seed(seed, 7, r)));
    });
    VarianceRow row;
    row.n = n;
    std::tie(row.sobol_mean, row.sobol_sd) = mean_sd(sob);
    std::tie(row.prng_mean, row.prng_sd) = mean_sd(prn);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace fastpower
