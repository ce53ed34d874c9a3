#include "bayesbreak/serialize.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "bayesbreak/numeric.hpp"

namespace bayesbreak {

void reject_unknown_keys(const Json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw InputError(where + ": expected a JSON object");
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw InputError(where + ": unknown key '" + key + "'");
  }
}

Json number(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

namespace {

double get_number(const Json& j, const char* key, double fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(key);
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s == "-inf") return kNegInf;
    if (s == "inf") return -kNegInf;
  }
  throw InputError(where + ": '" + key + "' must be a number");
}

std::vector<double> get_numbers(const Json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) return {};
  const auto& v = j.at(key);
  if (!v.is_array()) throw InputError(where + ": '" + key + "' must be an array of numbers");
  std::vector<double> out;
  for (const auto& e : v) {
    if (e.is_number()) {
      out.push_back(e.get<double>());
    } else if (e.is_string() && e.get<std::string>() == "-inf") {
      out.push_back(kNegInf);
    } else {
      throw InputError(where + ": '" + key + "' must be an array of numbers");
    }
  }
  return out;
}

Json numbers(const std::vector<double>& v) {
  Json a = Json::array();
  for (double d : v) a.push_back(number(d));
  return a;
}

Json midpoints(const std::vector<std::size_t>& t, const std::vector<double>& x) {
  Json a = Json::array();
  for (std::size_t p = 1; p + 1 < t.size(); ++p) a.push_back(0.5 * (x[t[p] - 1] + x[t[p]]));
  return a;
}

}  // namespace

Json to_json(const FamilyHyper& hyper) {
  return std::visit(
      [](const auto& h) -> Json {
        using T = std::decay_t<decltype(h)>;
        if constexpr (std::is_same_v<T, GaussianHyper>) {
          return {{"nu", h.nu}, {"rho2", h.rho2}, {"sigma2", h.sigma2}};
        } else if constexpr (std::is_same_v<T, BetaObsHyper>) {
          return {{"phi", h.phi}, {"a0", h.a0}, {"b0", h.b0}, {"nodes", h.nodes}};
        } else {
          return {{"a0", h.a0}, {"b0", h.b0}};
        }
      },
      hyper);
}

FamilyHyper hyper_from_json(const Json& j, Family family) {
  const std::string where = "hyper";
  FamilyHyper h = default_hyper(family);
  switch (family) {
    case Family::Gaussian: {
      reject_unknown_keys(j, {"nu", "rho2", "sigma2"}, where);
      auto g = std::get<GaussianHyper>(h);
      g.nu = get_number(j, "nu", g.nu, where);
      g.rho2 = get_number(j, "rho2", g.rho2, where);
      g.sigma2 = get_number(j, "sigma2", g.sigma2, where);
      h = g;
      break;
    }
    case Family::Poisson: {
      reject_unknown_keys(j, {"a0", "b0"}, where);
      auto p = std::get<PoissonHyper>(h);
      p.a0 = get_number(j, "a0", p.a0, where);
      p.b0 = get_number(j, "b0", p.b0, where);
      h = p;
      break;
    }
    case Family::Binomial: {
      reject_unknown_keys(j, {"a0", "b0"}, where);
      auto b = std::get<BinomialHyper>(h);
      b.a0 = get_number(j, "a0", b.a0, where);
      b.b0 = get_number(j, "b0", b.b0, where);
      h = b;
      break;
    }
    case Family::BetaObs: {
      reject_unknown_keys(j, {"phi", "a0", "b0", "nodes"}, where);
      auto b = std::get<BetaObsHyper>(h);
      b.phi = get_number(j, "phi", b.phi, where);
      b.a0 = get_number(j, "a0", b.a0, where);
      b.b0 = get_number(j, "b0", b.b0, where);
      const double nodes = get_number(j, "nodes", double(b.nodes), where);
      if (!(nodes >= 2.0) || nodes != std::floor(nodes)) throw InputError("hyper: 'nodes' must be an integer >= 2");
      b.nodes = static_cast<std::size_t>(nodes);
      h = b;
      break;
    }
  }
  validate(h);
  return h;
}

Json to_json(const LengthFactor& g) {
  Json j{{"kind", length_factor_name(g.kind)}};
  switch (g.kind) {
    case LengthFactor::Kind::Geometric:
      j["rho"] = g.rho;
      j["unit"] = g.unit;
      break;
    case LengthFactor::Kind::GeometricIndex: j["rho"] = g.rho; break;
    case LengthFactor::Kind::MinLength: j["min_length"] = g.min_length; break;
    case LengthFactor::Kind::Custom:
      j["dx"] = g.custom_dx;
      j["log_g"] = numbers(g.custom_log_g);
      break;
    default: break;
  }
  if (g.origin) j["origin"] = *g.origin;
  return j;
}

LengthFactor length_factor_from_json(const Json& j) {
  const std::string where = "prior.g";
  if (j.is_string()) return length_factor_from_json(Json{{"kind", j}});
  reject_unknown_keys(j, {"kind", "rho", "unit", "min_length", "dx", "g", "log_g", "origin"}, where);
  LengthFactor g;
  if (j.contains("kind")) {
    if (!j.at("kind").is_string()) throw InputError(where + ": 'kind' must be a string");
    g.kind = parse_length_factor_kind(j.at("kind").get<std::string>());
  }
  g.rho = get_number(j, "rho", g.rho, where);
  g.unit = get_number(j, "unit", g.unit, where);
  g.min_length = get_number(j, "min_length", g.min_length, where);
  if (j.contains("origin")) g.origin = get_number(j, "origin", 0.0, where);
  if (g.kind == LengthFactor::Kind::Custom) {
    const auto dx = get_numbers(j, "dx", where);
    if (j.contains("g") == j.contains("log_g")) throw InputError(where + ": custom g needs exactly one of 'g' or 'log_g'");
    if (j.contains("g")) {
      g = LengthFactor::custom(dx, get_numbers(j, "g", where));
    } else {
      g.custom_dx = dx;
      g.custom_log_g = get_numbers(j, "log_g", where);
    }
    if (j.contains("origin")) g.origin = get_number(j, "origin", 0.0, where);
  }
  validate(g);
  return g;
}

Json to_json(const CountPriorSpec& p) {
  Json j{{"kind", count_prior_name(p.kind)}};
  if (p.kind == CountPriorSpec::Kind::Geometric) j["q"] = p.q;
  if (p.kind == CountPriorSpec::Kind::Renewal) j["rho"] = p.rho;
  if (p.kind == CountPriorSpec::Kind::Custom) j["table"] = p.table;
  return j;
}

CountPriorSpec count_prior_from_json(const Json& j) {
  const std::string where = "prior.p_k";
  if (j.is_string()) return count_prior_from_json(Json{{"kind", j}});
  reject_unknown_keys(j, {"kind", "q", "rho", "table"}, where);
  CountPriorSpec p;
  if (j.contains("kind")) {
    if (!j.at("kind").is_string()) throw InputError(where + ": 'kind' must be a string");
    p.kind = parse_count_prior_kind(j.at("kind").get<std::string>());
  }
  p.q = get_number(j, "q", p.q, where);
  p.rho = get_number(j, "rho", p.rho, where);
  p.table = get_numbers(j, "table", where);
  if (p.kind == CountPriorSpec::Kind::Custom && p.table.empty()) throw InputError(where + ": custom prior needs 'table'");
  return p;
}

Json to_json(const PriorConfig& cfg) {
  return {{"g", to_json(cfg.g)}, {"p_k", to_json(cfg.p_k)}, {"k_max", cfg.k_max}};
}

PriorConfig prior_config_from_json(const Json& j) {
  reject_unknown_keys(j, {"g", "p_k", "k_max"}, "prior");
  PriorConfig cfg;
  if (j.contains("g")) cfg.g = length_factor_from_json(j.at("g"));
  if (j.contains("p_k")) cfg.p_k = count_prior_from_json(j.at("p_k"));
  if (j.contains("k_max")) {
    const auto& v = j.at("k_max");
    if (!v.is_number_integer() || v.get<long long>() < 1) throw InputError("prior: 'k_max' must be a positive integer");
    cfg.k_max = v.get<std::size_t>();
  }
  return cfg;
}

Json to_json(const SegmentationPosterior& fit, const std::vector<double>& x) {
  Json j;
  j["n"] = x.size();
  j["k_max"] = fit.k_max;
  j["k_hat"] = fit.count.k_hat;
  j["log_marginal"] = number(fit.count.log_marginal);
  j["log_evidence_k"] = numbers(std::vector<double>(fit.count.log_evidence.begin() + 1, fit.count.log_evidence.end()));
  j["posterior_k"] = numbers(std::vector<double>(fit.count.post.begin() + 1, fit.count.post.end()));
  j["map"] = {{"k", fit.map.k_used},
              {"boundaries_index", fit.map.boundaries},
              {"boundaries_x", midpoints(fit.map.boundaries, x)},
              {"score", number(fit.map.score)}};
  Json segs = Json::array();
  for (const auto& s : fit.segments) {
    segs.push_back({{"begin", s.begin}, {"end", s.end}, {"mean", number(s.mean)}, {"var", number(s.var)}});
  }
  j["segments"] = segs;
  j["boundary_event"] = numbers(fit.boundary_event);
  j["boundary_event_avg"] = numbers(fit.boundary_event_avg);
  if (!fit.curve.mean.empty()) j["curve"] = {{"x", x}, {"mean", numbers(fit.curve.mean)}, {"var", numbers(fit.curve.var)}};
  return j;
}

Json to_json(const MixtureState& state, const std::vector<double>& x) {
  Json j;
  j["pi"] = numbers(state.pi);
  Json t = Json::array();
  for (const auto& tau : state.templates) {
    t.push_back({{"k", tau.k}, {"boundaries_index", tau.t}, {"boundaries_x", midpoints(tau.t, x)}});
  }
  j["templates"] = t;
  Json r = Json::array();
  for (const auto& row : state.resp) r.push_back(numbers(row));
  j["responsibilities"] = r;
  j["assignments"] = hard_assignments(state);
  j["obs_loglik"] = numbers(state.obs_loglik);
  j["iterations"] = state.iterations;
  j["converged"] = state.converged;
  j["restart"] = state.restart;
  j["warnings"] = state.warnings;
  return j;
}

Json to_json(const ExportedModel& m) {
  Json j;
  j["label"] = m.label;
  j["family"] = std::string(family_name(m.family()));
  j["hyper"] = to_json(m.hyper);
  j["domain"] = {m.x_min, m.x_max};
  j["boundaries_x"] = m.boundaries_x;
  j["boundaries_index"] = m.boundaries_index;
  Json segs = Json::array();
  for (const auto& s : m.segments) {
    Json e;
    if (m.family() == Family::Gaussian) {
      e["nu"] = s.a;
      e["rho2"] = s.b;
    } else {
      e["a"] = s.a;
      e["b"] = s.b;
    }
    e["mean"] = s.mean;
    e["var"] = s.var;
    segs.push_back(e);
  }
  j["segments"] = segs;
  if (m.bayes_grid) j["bayes_grid"] = {{"x", m.bayes_grid->x}, {"mean", m.bayes_grid->mean}, {"var", m.bayes_grid->var}};
  return j;
}

ExportedModel model_from_json(const Json& j) {
  const std::string where = "model";
  reject_unknown_keys(j, {"label", "family", "hyper", "domain", "boundaries_x", "boundaries_index", "segments", "bayes_grid"},
                      where);
  for (const char* key : {"family", "hyper", "domain", "boundaries_x", "segments"}) {
    if (!j.contains(key)) throw InputError(where + ": missing '" + key + "'");
  }
  ExportedModel m;
  if (j.contains("label")) m.label = j.at("label").is_string() ? j.at("label").get<std::string>() : j.at("label").dump();
  if (!j.at("family").is_string()) throw InputError(where + ": 'family' must be a string");
  const Family f = parse_family(j.at("family").get<std::string>());
  m.hyper = hyper_from_json(j.at("hyper"), f);
  const auto dom = j.at("domain");
  if (!dom.is_array() || dom.size() != 2 || !dom[0].is_number() || !dom[1].is_number()) {
    throw InputError(where + ": 'domain' must be [x_min, x_max]");
  }
  m.x_min = dom[0].get<double>();
  m.x_max = dom[1].get<double>();
  m.boundaries_x = get_numbers(j, "boundaries_x", where);
  if (j.contains("boundaries_index")) {
    for (double v : get_numbers(j, "boundaries_index", where)) m.boundaries_index.push_back(static_cast<std::size_t>(v));
  }
  if (!j.at("segments").is_array()) throw InputError(where + ": 'segments' must be an array");
  for (const auto& e : j.at("segments")) {
    SegmentPosterior s;
    if (f == Family::Gaussian) {
      reject_unknown_keys(e, {"nu", "rho2", "mean", "var"}, where + ".segments");
      s.a = get_number(e, "nu", NAN, where);
      s.b = get_number(e, "rho2", NAN, where);
      s.mean = get_number(e, "mean", s.a, where);
      s.var = get_number(e, "var", s.b, where);
    } else {
      reject_unknown_keys(e, {"a", "b", "mean", "var"}, where + ".segments");
      s.a = get_number(e, "a", NAN, where);
      s.b = get_number(e, "b", NAN, where);
      double mean = 0.0, var = 0.0;
      if (f == Family::Poisson) {
        mean = s.a / s.b;
        var = s.a / (s.b * s.b);
      } else {
        const double c = s.a + s.b;
        mean = s.a / c;
        var = s.a * s.b / (c * c * (c + 1.0));
      }
      s.mean = get_number(e, "mean", mean, where);
      s.var = get_number(e, "var", var, where);
    }
    m.segments.push_back(s);
  }
  if (j.contains("bayes_grid")) {
    const auto& g = j.at("bayes_grid");
    reject_unknown_keys(g, {"x", "mean", "var"}, where + ".bayes_grid");
    m.bayes_grid = BayesGrid{get_numbers(g, "x", where), get_numbers(g, "mean", where), get_numbers(g, "var", where)};
  }
  validate(m);
  return m;
}

std::vector<ExportedModel> load_models(const std::filesystem::path& path) {
  const auto j = read_json_file(path);
  std::vector<ExportedModel> out;
  try {
    if (j.is_array()) {
      for (const auto& e : j) out.push_back(model_from_json(e));
    } else {
      out.push_back(model_from_json(j));
    }
  } catch (const InputError& e) {
    throw InputError(path.string() + ": " + e.what());
  }
  if (out.empty()) throw InputError(path.string() + ": no models");
  return out;
}

Json to_json(const PredictionResult& r) {
  Json j;
  j["labels"] = r.labels;
  j["log_liks"] = numbers(r.log_liks);
  j["group_posterior"] = numbers(r.group_posterior);
  if (!r.unit_resp.empty()) {
    Json u = Json::array();
    for (const auto& row : r.unit_resp) u.push_back(numbers(row));
    j["unit_resp"] = u;
  }
  j["warnings"] = r.warnings;
  return j;
}

Json to_json(const SignalPrediction& s, const std::vector<double>& queries) {
  Json j;
  j["x"] = queries;
  j["value"] = numbers(s.value);
  j["var"] = numbers(s.var);
  j["clamped"] = s.clamped;
  j["warnings"] = s.warnings;
  return j;
}

Json to_json(const StabilityReport& r) {
  return {{"epsilon", r.epsilon},
          {"trials", r.trials},
          {"pairs_checked", r.pairs_checked},
          {"violations", r.violations},
          {"max_k_odds_dev", r.max_k_odds_dev},
          {"max_k_odds_ratio", r.max_k_odds_ratio},
          {"max_b_odds_dev", r.max_b_odds_dev},
          {"max_b_odds_ratio", r.max_b_odds_ratio},
          {"max_sandwich_ratio", r.max_sandwich_ratio},
          {"first_violation", r.first_violation}};
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return Json::parse(ss.str());
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

void write_json_file(const std::filesystem::path& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  out << j.dump(2) << "\n";
}

}  // namespace bayesbreak
