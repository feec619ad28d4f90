#include <benchmark/benchmark.h>

#include "fastpower/lowdisc.hpp"
#include "fastpower/oracle.hpp"
#include "fastpower/powercurve.hpp"

using namespace fastpower;

namespace {

DesignSpec gamma_spec() {
  DesignSpec s;
  s.model = Family::gamma;
  s.design = {std::vector<double>{2.11, 0.69}, std::vector<double>{2.43, 0.79}};
  const Prior vague{{{ParamPrior::Kind::gamma, 2, 0.25}, {ParamPrior::Kind::gamma, 2, 0.25}}};
  s.priors = {vague, vague};
  s.g = GSpec{GSpec::Kind::tail_prob, 4.29};
  s.h = HKind::ratio;
  s.lower = 0.8;
  s.upper = 1.25;
  s.analysis.gamma = 0.5;
  s.target_power = 0.6;
  s.seed = 1;
  return s;
}

DesignSpec bernoulli_spec() {
  DesignSpec s;
  s.model = Family::bernoulli;
  s.design = {std::vector<double>{0.15}, std::vector<double>{0.14}};
  const Prior flat{{{ParamPrior::Kind::beta, 1, 1}}};
  s.priors = {flat, flat};
  s.g = GSpec{GSpec::Kind::identity};
  s.h = HKind::proportion_difference;
  s.lower = -0.05;
  s.upper = 0.05;
  s.analysis.gamma = 0.8;
  s.target_power = 0.6;
  s.method = Method::bvm;
  s.seed = 1;
  return s;
}

void BM_SobolPoints(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(sobol_points(4, m, 1));
  state.SetItemsProcessed(static_cast<int64_t>(state.iterations() * m));
}
BENCHMARK(BM_SobolPoints)->Arg(1024)->Arg(65536);

void BM_Posterior(benchmark::State& state) {
  DesignSpec s = gamma_spec();
  s.method = static_cast<Method>(state.range(0));
  const PreparedDesign d(s);
  const PointSet pts = sobol_points(4, 256, 1);
  std::size_t r = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(approx_posterior(d, 400.0, pts.point(r)));
    r = (r + 1) % pts.size();
  }
}
BENCHMARK(BM_Posterior)->Arg(0)->Arg(1)->Arg(2)->ArgNames({"method"});

void BM_PowerCurve(benchmark::State& state) {
  DesignSpec s = state.range(0) == 0 ? bernoulli_spec() : gamma_spec();
  s.m = static_cast<std::size_t>(state.range(1));
  CurveOptions opts;
  opts.workers = 1;
  for (auto _ : state) benchmark::DoNotOptimize(power_curve(s, opts).n_star);
}
BENCHMARK(BM_PowerCurve)->Args({0, 1024})->Args({1, 1024})->ArgNames({"gamma", "m"})->Unit(benchmark::kMillisecond);

void BM_McPower(benchmark::State& state) {
  const DesignSpec s = gamma_spec();
  OracleOptions opts;
  opts.workers = 1;
  for (auto _ : state) benchmark::DoNotOptimize(mc_power(s, 90, 100, 3, opts).power);
}
BENCHMARK(BM_McPower)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
