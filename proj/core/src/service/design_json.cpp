#include "fastpower/service/design_json.hpp"

#include <cmath>
#include <limits>
#include <set>
#include <string>

#include "fastpower/errors.hpp"

namespace fastpower::service {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string join(const std::string& base, const std::string& key) { return base.empty() ? key : base + "." + key; }

const json& require(const json& obj, const std::string& key, const std::string& path) {
  auto it = obj.find(key);
  if (it == obj.end()) throw InvalidDesign(join(path, key), "required field is missing");
  return *it;
}

void expect_object(const json& j, const std::string& path) {
  if (!j.is_object()) throw InvalidDesign(path.empty() ? "$" : path, "expected an object");
}

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& path) {
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!allowed.count(it.key())) throw InvalidDesign(join(path, it.key()), "unknown field");
}

double number(const json& j, const std::string& path) {
  if (!j.is_number()) throw InvalidDesign(path, "expected a number");
  return j.get<double>();
}

std::string text(const json& j, const std::string& path) {
  if (!j.is_string()) throw InvalidDesign(path, "expected a string");
  return j.get<std::string>();
}

double bound(const json& j, const std::string& path, double infinite) {
  if (j.is_null()) return infinite;
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    if (s == "inf" || s == "+inf") return kInf;
    if (s == "-inf") return -kInf;
    throw InvalidDesign(path, "expected a number, null, \"inf\" or \"-inf\"");
  }
  return number(j, path);
}

json bound_json(double x) { return std::isinf(x) ? json(nullptr) : json(x); }

std::size_t count(const json& j, const std::string& path) {
  if (!j.is_number_integer() || j.get<long long>() < 1) throw InvalidDesign(path, "expected a positive integer");
  return j.get<std::size_t>();
}

template <class F>
auto with_path(const std::string& path, F&& f) {
  try {
    return f();
  } catch (const InvalidDesign&) {
    throw;
  } catch (const std::exception& e) {
    throw InvalidDesign(path, e.what());
  }
}

}  // namespace

DesignSpec design_from_json(const json& j, const ParseDefaults& defaults) {
  expect_object(j, "");
  reject_unknown(j, {"model", "design", "priors", "g", "h", "interval", "analysis", "target_power", "m", "method", "q",
                     "seed", "n_max", "label"},
                 "");
  DesignSpec s;
  s.model = family_from_string(text(require(j, "model", ""), "model"));
  const auto model = make_model(s.model);
  const std::size_t d = model->dim();

  const json& design = require(j, "design", "");
  expect_object(design, "design");
  reject_unknown(design, {"group1", "group2"}, "design");
  const json& priors = require(j, "priors", "");
  expect_object(priors, "priors");
  reject_unknown(priors, {"group1", "group2"}, "priors");
  for (int g = 0; g < 2; ++g) {
    const std::string grp = "group" + std::to_string(g + 1);
    const json& dv = require(design, grp, "design");
    const std::string dpath = "design." + grp;
    expect_object(dv, dpath);
    std::set<std::string> names;
    for (std::size_t k = 0; k < d; ++k) {
      names.insert(model->param_name(k));
      s.design[g].push_back(number(require(dv, model->param_name(k), dpath), dpath + "." + model->param_name(k)));
    }
    reject_unknown(dv, names, dpath);

    const json& pv = require(priors, grp, "priors");
    const std::string ppath = "priors." + grp;
    if (!pv.is_array()) throw InvalidDesign(ppath, "expected an array with one prior per parameter");
    if (pv.size() != d) throw InvalidDesign(ppath, "expected " + std::to_string(d) + " prior(s)");
    for (std::size_t k = 0; k < d; ++k) {
      const std::string path = ppath + "[" + std::to_string(k) + "]";
      const json& p = pv[k];
      expect_object(p, path);
      reject_unknown(p, {"family", "a", "b"}, path);
      ParamPrior pp;
      const std::string fam = text(require(p, "family", path), path + ".family");
      if (fam == "gamma") pp.kind = ParamPrior::Kind::gamma;
      else if (fam == "beta") pp.kind = ParamPrior::Kind::beta;
      else throw InvalidDesign(path + ".family", "expected \"gamma\" or \"beta\"");
      pp.a = number(require(p, "a", path), path + ".a");
      pp.b = number(require(p, "b", path), path + ".b");
      s.priors[g].params.push_back(pp);
    }
  }

  if (auto it = j.find("g"); it != j.end()) {
    expect_object(*it, "g");
    reject_unknown(*it, {"kind", "threshold", "gradient", "step"}, "g");
    const std::string kind = text(require(*it, "kind", "g"), "g.kind");
    if (kind == "tail_prob") s.g.kind = GSpec::Kind::tail_prob;
    else if (kind == "identity") s.g.kind = GSpec::Kind::identity;
    else throw InvalidDesign("g.kind", "expected \"tail_prob\" or \"identity\"");
    if (auto t = it->find("threshold"); t != it->end()) s.g.threshold = number(*t, "g.threshold");
    if (auto t = it->find("gradient"); t != it->end()) {
      const std::string gm = text(*t, "g.gradient");
      if (gm == "analytic") s.g.gradient = GSpec::Gradient::analytic;
      else if (gm == "numeric") s.g.gradient = GSpec::Gradient::numeric;
      else throw InvalidDesign("g.gradient", "expected \"analytic\" or \"numeric\"");
    }
    if (auto t = it->find("step"); t != it->end()) s.g.step = number(*t, "g.step");
  } else if (d != 1) {
    throw InvalidDesign("g", "required field is missing");
  }

  s.h = hkind_from_string(text(require(j, "h", ""), "h"));

  const json& iv = require(j, "interval", "");
  expect_object(iv, "interval");
  reject_unknown(iv, {"lower", "upper"}, "interval");
  s.lower = iv.contains("lower") ? bound(iv["lower"], "interval.lower", -kInf) : -kInf;
  s.upper = iv.contains("upper") ? bound(iv["upper"], "interval.upper", kInf) : kInf;

  const json& an = require(j, "analysis", "");
  expect_object(an, "analysis");
  const std::string type = text(require(an, "type", "analysis"), "analysis.type");
  if (type == "posterior_prob") {
    reject_unknown(an, {"type", "gamma"}, "analysis");
    s.analysis.type = AnalysisType::posterior_prob;
    s.analysis.gamma = number(require(an, "gamma", "analysis"), "analysis.gamma");
  } else if (type == "bayes_factor") {
    reject_unknown(an, {"type", "K", "pi0"}, "analysis");
    s.analysis.type = AnalysisType::bayes_factor;
    s.analysis.bf_k = number(require(an, "K", "analysis"), "analysis.K");
    if (an.contains("pi0") && !an["pi0"].is_null()) s.analysis.pi0 = number(an["pi0"], "analysis.pi0");
  } else if (type == "credible_interval") {
    reject_unknown(an, {"type", "alpha"}, "analysis");
    s.analysis.type = AnalysisType::credible_interval;
    s.analysis.alpha = number(require(an, "alpha", "analysis"), "analysis.alpha");
  } else {
    throw InvalidDesign("analysis.type", "expected \"posterior_prob\", \"bayes_factor\" or \"credible_interval\"");
  }

  s.target_power = number(require(j, "target_power", ""), "target_power");
  s.m = j.contains("m") ? count(j["m"], "m") : defaults.m;
  s.method = j.contains("method") ? method_from_string(text(j["method"], "method"))
                                  : (model->exp_family() ? Method::laplace : Method::hybrid);
  if (j.contains("q")) s.q = number(j["q"], "q");
  if (j.contains("seed")) {
    const json& sd = j["seed"];
    if (!sd.is_number_integer() || (sd.is_number_integer() && !sd.is_number_unsigned() && sd.get<long long>() < 0))
      throw InvalidDesign("seed", "expected a non-negative integer");
    s.seed = sd.get<std::uint64_t>();
  }
  if (j.contains("n_max")) s.n_max = number(j["n_max"], "n_max");
  if (j.contains("label")) s.label = text(j["label"], "label");

  with_path("", [&] {
    validate(s);
    return 0;
  });
  return s;
}

json design_to_json(const DesignSpec& s) {
  const auto model = make_model(s.model);
  json out;
  out["model"] = to_string(s.model);
  for (int g = 0; g < 2; ++g) {
    const std::string grp = "group" + std::to_string(g + 1);
    json dv = json::object();
    for (std::size_t k = 0; k < s.design[g].size(); ++k) dv[model->param_name(k)] = s.design[g][k];
    out["design"][grp] = dv;
    json pv = json::array();
    for (const auto& p : s.priors[g].params)
      pv.push_back({{"family", p.kind == ParamPrior::Kind::gamma ? "gamma" : "beta"}, {"a", p.a}, {"b", p.b}});
    out["priors"][grp] = pv;
  }
  json g = {{"kind", to_string(s.g.kind)}};
  if (s.g.kind == GSpec::Kind::tail_prob) g["threshold"] = s.g.threshold;
  g["gradient"] = s.g.gradient == GSpec::Gradient::analytic ? "analytic" : "numeric";
  if (s.g.gradient == GSpec::Gradient::numeric || s.g.kind == GSpec::Kind::tail_prob) g["step"] = s.g.step;
  out["g"] = g;
  out["h"] = to_string(s.h);
  out["interval"] = {{"lower", bound_json(s.lower)}, {"upper", bound_json(s.upper)}};
  json an = {{"type", to_string(s.analysis.type)}};
  switch (s.analysis.type) {
    case AnalysisType::posterior_prob: an["gamma"] = s.analysis.gamma; break;
    case AnalysisType::bayes_factor:
      an["K"] = s.analysis.bf_k;
      if (s.analysis.pi0) an["pi0"] = *s.analysis.pi0;
      break;
    case AnalysisType::credible_interval: an["alpha"] = s.analysis.alpha; break;
  }
  out["analysis"] = an;
  out["target_power"] = s.target_power;
  out["m"] = s.m;
  out["method"] = to_string(s.method);
  out["q"] = s.q;
  out["seed"] = s.seed;
  out["n_max"] = s.n_max;
  if (!s.label.empty()) out["label"] = s.label;
  return out;
}

json curve_to_json(const DesignSpec& spec, const PowerCurve& c, std::size_t grid_points) {
  json rule = {{"kind", c.rule.kind == DecisionRule::Kind::interval ? "interval" : "equal_tailed"},
               {"lower", bound_json(c.rule.lower)},
               {"upper", bound_json(c.rule.upper)}};
  if (c.rule.kind == DecisionRule::Kind::interval) rule["gamma"] = c.rule.gamma;
  else rule["alpha"] = c.rule.alpha;
  if (!std::isnan(c.rule.pi0)) rule["pi0"] = c.rule.pi0;

  json curve = json::array();
  for (const auto& [n, p] : curve_grid(c, grid_points)) curve.push_back({{"n", n}, {"power", p}});

  return {
      {"recommendation", c.recommendation},
      {"n_star", c.n_star},
      {"n_star_initial", c.n_star_initial},
      {"n0", c.n0},
      {"target_power", spec.target_power},
      {"method", to_string(spec.method)},
      {"m", spec.m},
      {"seed", spec.seed},
      {"rule", rule},
      {"diagnostics",
       {{"reinit_count", c.reinit_count},
        {"consistency_passes", c.consistency_passes},
        {"gap_evaluations", c.gap_evaluations},
        {"clamped_low", c.count(PointFlag::clamped_low)},
        {"clamped_high", c.count(PointFlag::clamped_high)},
        {"failed", c.count(PointFlag::failed)}}},
      {"warnings", c.warnings},
      {"curve", curve},
  };
}

json oracle_to_json(const std::vector<OracleReport>& reports) {
  json out = json::array();
  for (const auto& r : reports)
    out.push_back({{"n", r.n},
                   {"reps", r.reps},
                   {"power", r.power},
                   {"ci_lower", r.ci_lower},
                   {"ci_upper", r.ci_upper},
                   {"posterior", to_string(r.method)}});
  return out;
}

void check_attainable(const DesignSpec& spec) {
  const PreparedDesign design(spec);
  const double t = design.theta0();
  if (!(t > design.lower() && t < design.upper()))
    throw UnattainableDesign("the comparison at the design values lies outside the interval; power tends to 0");
}

}  // namespace fastpower::service
