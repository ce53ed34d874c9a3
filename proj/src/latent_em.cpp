#include "bayesbreak/latent_em.hpp"

#include <algorithm>
#include <cmath>

#include "bayesbreak/dp_engine.hpp"
#include "bayesbreak/map_engine.hpp"
#include "bayesbreak/numeric.hpp"
#include "bayesbreak/parallel.hpp"
#include "bayesbreak/pooling.hpp"

namespace bayesbreak {

std::string mstep_objective_name(MStepObjective o) {
  return o == MStepObjective::Exact ? "exact" : "displayed";
}

MStepObjective parse_mstep_objective(const std::string& name) {
  if (name == "exact") return MStepObjective::Exact;
  if (name == "displayed") return MStepObjective::Displayed;
  throw InputError("unknown M-step objective '" + name + "' (expected exact or displayed)");
}

EmProblem make_em_problem(std::vector<BlockEvidenceTable> tables, const PriorConfig& cfg) {
  if (tables.empty()) throw InputError("EM needs at least one subject");
  for (const auto& t : tables) {
    if (t.with_prior) throw InputError("EM expects tables without the length factor");
    if (t.grid != tables.front().grid) throw InputError("EM subjects must share the grid");
  }
  EmProblem p;
  p.prior = build_prior(tables.front().grid, cfg);
  p.tables = std::move(tables);
  return p;
}

double template_loglik(const BlockEvidenceTable& subject, const Template& tau, const TriangularArray& log_g,
                       const PriorNormalizers& norm, const CountPrior& prior) {
  validate_boundaries(tau.t, subject.n);
  if (tau.k != tau.t.size() - 1) throw InputError("template k does not match its boundaries");
  if (tau.k > norm.k_max || norm.log_C[tau.k] == kNegInf) return kNegInf;
  double v = prior.log_p[tau.k] - norm.log_C[tau.k];
  for (std::size_t q = 1; q <= tau.k; ++q) {
    v += subject.log_A0(tau.t[q - 1], tau.t[q]) + log_g(tau.t[q - 1], tau.t[q]);
  }
  return std::isnan(v) ? kNegInf : v;
}

std::vector<std::vector<double>> template_logliks(const EmProblem& prob, const std::vector<Template>& templates) {
  std::vector<std::vector<double>> ll(prob.tables.size(), std::vector<double>(templates.size()));
  parallel_for(prob.tables.size(), [&](std::size_t s) {
    for (std::size_t g = 0; g < templates.size(); ++g) {
      ll[s][g] = template_loglik(prob.tables[s], templates[g], prob.prior.log_g, prob.prior.norm, prob.prior.prior);
    }
  });
  return ll;
}

double observed_loglik(const std::vector<double>& pi, const std::vector<std::vector<double>>& ll) {
  long double total = 0.0L;
  std::vector<double> row(pi.size());
  for (const auto& r : ll) {
    for (std::size_t g = 0; g < pi.size(); ++g) row[g] = std::log(pi[g]) + r[g];
    total += logsumexp(row);
  }
  return static_cast<double>(total);
}

std::vector<std::vector<double>> estep(const std::vector<double>& pi,
                                       const std::vector<std::vector<double>>& ll) {
  std::vector<std::vector<double>> resp(ll.size());
  for (std::size_t s = 0; s < ll.size(); ++s) {
    std::vector<double> row(pi.size());
    for (std::size_t g = 0; g < pi.size(); ++g) row[g] = std::log(pi[g]) + ll[s][g];
    if (std::all_of(row.begin(), row.end(), [](double v) { return v == kNegInf; })) {
      throw NumericError("subject " + std::to_string(s) + " incompatible with all templates");
    }
    normalize_log_weights(row);
    resp[s] = std::move(row);
  }
  return resp;
}

namespace {

// Responsibility-weighted block scores and count offsets for one group.
struct GroupScores {
  TriangularArray B;
  std::vector<double> offset;
};

GroupScores group_scores(const EmProblem& prob, const std::vector<double>& resp_g, MStepObjective objective) {
  const std::size_t n = prob.n();
  double R = 0.0;
  for (double r : resp_g) R += r;
  const double prior_scale = objective == MStepObjective::Exact ? R : 1.0;
  GroupScores gs;
  gs.B = TriangularArray(n, 0.0);
  auto& b = gs.B.raw();
  const auto& lg = prob.prior.log_g.raw();
  for (std::size_t c = 0; c < b.size(); ++c) b[c] = prior_scale * lg[c];
  // subjects in ascending order; a zero responsibility contributes nothing
  for (std::size_t s = 0; s < prob.tables.size(); ++s) {
    if (resp_g[s] == 0.0) continue;
    const auto& a = prob.tables[s].log_A0.raw();
    for (std::size_t c = 0; c < b.size(); ++c) b[c] += resp_g[s] * a[c];
  }
  const auto& norm = prob.prior.norm;
  gs.offset.assign(norm.k_max + 1, kNegInf);
  for (std::size_t k = 1; k <= norm.k_max; ++k) {
    if (norm.log_C[k] == kNegInf || prob.prior.prior.log_p[k] == kNegInf) continue;
    gs.offset[k] = prior_scale * (prob.prior.prior.log_p[k] - norm.log_C[k]);
  }
  return gs;
}

}  // namespace

double template_objective(const EmProblem& prob, const std::vector<double>& resp_g, const Template& tau,
                          MStepObjective objective) {
  const auto& norm = prob.prior.norm;
  if (objective == MStepObjective::Exact) {
    long double q = 0.0L;
    for (std::size_t s = 0; s < prob.tables.size(); ++s) {
      if (resp_g[s] == 0.0) continue;
      const double ll = template_loglik(prob.tables[s], tau, prob.prior.log_g, norm, prob.prior.prior);
      if (ll == kNegInf) return kNegInf;
      q += resp_g[s] * ll;
    }
    return static_cast<double>(q);
  }
  validate_boundaries(tau.t, prob.n());
  if (tau.k > norm.k_max || norm.log_C[tau.k] == kNegInf) return kNegInf;
  double q = prob.prior.prior.log_p[tau.k] - norm.log_C[tau.k];
  for (std::size_t p = 1; p <= tau.k; ++p) {
    const std::size_t i = tau.t[p - 1], j = tau.t[p];
    q += prob.prior.log_g(i, j);
    for (std::size_t s = 0; s < prob.tables.size(); ++s) {
      if (resp_g[s] != 0.0) q += resp_g[s] * prob.tables[s].log_A0(i, j);
    }
  }
  return q;
}

std::vector<Template> random_templates(const EmProblem& prob, std::size_t groups, std::mt19937_64& rng) {
  const std::size_t n = prob.n();
  const std::size_t k_max = prob.prior.norm.k_max;
  const TriangularArray flat(n, 0.0);
  const auto flat_norm = compute_Ck(flat, k_max);
  std::uniform_int_distribution<std::size_t> pick_k(1, k_max);
  std::vector<Template> out;
  for (std::size_t g = 0; g < groups; ++g) {
    Template tau;
    bool ok = false;
    for (int attempt = 0; attempt < 1000 && !ok; ++attempt) {
      tau.k = pick_k(rng);
      tau.t = sample_renewal(flat, flat_norm, tau.k, rng);
      ok = template_loglik(prob.tables.front(), tau, prob.prior.log_g, prob.prior.norm, prob.prior.prior) != kNegInf;
    }
    if (!ok) {
      // hard length constraints reject most flat draws; sample under g itself
      std::vector<std::size_t> feasible;
      for (std::size_t k = 1; k <= k_max; ++k) {
        if (prob.prior.norm.log_C[k] != kNegInf && prob.prior.prior.log_p[k] != kNegInf) feasible.push_back(k);
      }
      if (feasible.empty()) throw NumericError("no admissible segmentation");
      std::uniform_int_distribution<std::size_t> pick(0, feasible.size() - 1);
      tau.k = feasible[pick(rng)];
      tau.t = sample_renewal(prob.prior.log_g, prob.prior.norm, tau.k, rng);
    }
    out.push_back(std::move(tau));
  }
  return out;
}

MStepResult mstep(const EmProblem& prob, const std::vector<std::vector<double>>& resp,
                  MStepObjective objective, std::mt19937_64& rng) {
  const std::size_t S = resp.size();
  const std::size_t G = resp.front().size();
  MStepResult out;
  out.pi.assign(G, 0.0);
  for (const auto& row : resp) {
    for (std::size_t g = 0; g < G; ++g) out.pi[g] += row[g];
  }
  for (double& p : out.pi) p /= static_cast<double>(S);
  out.templates.resize(G);
  out.q.assign(G, 0.0);
  std::vector<std::vector<double>> columns(G, std::vector<double>(S));
  for (std::size_t s = 0; s < S; ++s) {
    for (std::size_t g = 0; g < G; ++g) columns[g][s] = resp[s][g];
  }
  std::vector<char> dead(G, 0);
  for (std::size_t g = 0; g < G; ++g) dead[g] = out.pi[g] == 0.0;
  parallel_for(G, [&](std::size_t g) {
    if (dead[g]) return;
    const auto gs = group_scores(prob, columns[g], objective);
    const auto ms = maxsum_forward(gs.B, prob.prior.norm.k_max);
    const std::size_t k = select_k_with_offsets(ms, gs.offset);
    out.templates[g].k = k;
    out.templates[g].t = backtrack(ms, k);
    out.q[g] = ms.M[k][prob.n()] + gs.offset[k];
  });
  for (std::size_t g = 0; g < G; ++g) {
    if (!dead[g]) continue;
    out.templates[g] = random_templates(prob, 1, rng).front();
    out.q[g] = 0.0;
    out.reset.push_back(g);
  }
  return out;
}

MixtureState em_run(const EmProblem& prob, std::vector<double> pi, std::vector<Template> templates,
                    const EmConfig& cfg, std::mt19937_64& rng) {
  if (pi.size() != templates.size() || pi.empty()) throw InputError("EM state needs one weight per template");
  MixtureState st;
  auto ll = template_logliks(prob, templates);
  st.obs_loglik.push_back(observed_loglik(pi, ll));
  for (std::size_t it = 0; it < cfg.max_iter; ++it) {
    const auto resp = estep(pi, ll);
    auto m = mstep(prob, resp, cfg.objective, rng);
    for (std::size_t g : m.reset) {
      st.warnings.push_back("iteration " + std::to_string(it + 1) + ": group " + std::to_string(g + 1) +
                            " lost all weight; template reset");
    }
    pi = std::move(m.pi);
    templates = std::move(m.templates);
    ll = template_logliks(prob, templates);
    const double cur = observed_loglik(pi, ll);
    const double prev = st.obs_loglik.back();
    st.obs_loglik.push_back(cur);
    st.iterations = it + 1;
    if (std::abs(cur - prev) < cfg.tol) {
      st.converged = true;
      break;
    }
  }
  st.resp = estep(pi, ll);
  st.pi = std::move(pi);
  st.templates = std::move(templates);
  return st;
}

MixtureState em_fit(const EmProblem& prob, const EmConfig& cfg) {
  if (cfg.groups < 1) throw InputError("number of groups must be at least 1");
  if (cfg.restarts < 1) throw InputError("restarts must be at least 1");
  std::mt19937_64 rng(cfg.seed);
  MixtureState best;
  bool have = false;
  for (std::size_t r = 0; r < cfg.restarts; ++r) {
    std::vector<double> pi(cfg.groups, 1.0 / static_cast<double>(cfg.groups));
    auto templates = random_templates(prob, cfg.groups, rng);
    auto st = em_run(prob, std::move(pi), std::move(templates), cfg, rng);
    st.restart = r;
    if (!have || st.obs_loglik.back() > best.obs_loglik.back()) {
      best = std::move(st);
      have = true;
    }
  }
  return best;
}

MixtureState em_fit(const Dataset& data, const FamilyHyper& hyper, const EmConfig& cfg) {
  return em_fit(make_em_problem(subject_tables(data, hyper), cfg.prior), cfg);
}

std::vector<int> hard_assignments(const MixtureState& state) {
  std::vector<int> out;
  for (const auto& row : state.resp) {
    out.push_back(static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin()) + 1);
  }
  return out;
}

}  // namespace bayesbreak
