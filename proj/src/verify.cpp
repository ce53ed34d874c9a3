#include "bayesbreak/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

#include "bayesbreak/dp_engine.hpp"
#include "bayesbreak/latent_em.hpp"
#include "bayesbreak/map_engine.hpp"
#include "bayesbreak/nonconjugate.hpp"
#include "bayesbreak/numeric.hpp"
#include "bayesbreak/oracle.hpp"
#include "bayesbreak/pipeline.hpp"
#include "bayesbreak/pooling.hpp"

namespace bayesbreak {

namespace {

constexpr Family kFamilies[] = {Family::Gaussian, Family::Poisson, Family::Binomial, Family::BetaObs};

std::vector<LengthFactor> test_gs() {
  return {LengthFactor::uniform(), LengthFactor::geometric(0.3), LengthFactor::min_len(2.0)};
}

class Tracker {
 public:
  explicit Tracker(CheckResult& r, double tol) : r_(r), tol_(tol) {}

  // Relative error, scaled by max(1, |a|, |b|); equal infinities agree.
  void close(double got, double want, const std::string& what) {
    double err = 0.0;
    if (got == want) {
      err = 0.0;
    } else if (!std::isfinite(got) || !std::isfinite(want)) {
      err = INFINITY;
    } else {
      err = std::abs(got - want) / std::max({1.0, std::abs(got), std::abs(want)});
    }
    r_.max_error = std::max(r_.max_error, err);
    if (!(err <= tol_)) fail(what + ": got " + fmt(got) + ", expected " + fmt(want));
  }

  void same(bool ok, const std::string& what) {
    if (!ok) fail(what);
  }

  bool failed_since(std::size_t before) const { return r_.mismatches > before; }
  std::size_t mismatches() const { return r_.mismatches; }

 private:
  void fail(const std::string& what) {
    if (r_.mismatches == 0) r_.first_mismatch = what;
    ++r_.mismatches;
  }
  static std::string fmt(double v) {
    std::ostringstream ss;
    ss.precision(17);
    ss << v;
    return ss.str();
  }
  CheckResult& r_;
  double tol_;
};

void corrupt_one(BlockEvidenceTable& t, std::mt19937_64& rng) {
  std::vector<std::pair<std::size_t, std::size_t>> finite;
  for (std::size_t i = 0; i < t.n; ++i) {
    for (std::size_t j = i + 1; j <= t.n; ++j) {
      if (std::isfinite(t.log_A0(i, j))) finite.emplace_back(i, j);
    }
  }
  if (finite.empty()) return;
  const auto [i, j] = finite[std::uniform_int_distribution<std::size_t>(0, finite.size() - 1)(rng)];
  t.log_A0(i, j) += 0.75;
}

template <class F>
CheckResult timed(const std::string& name, F&& body) {
  CheckResult r;
  r.name = name;
  const auto t0 = std::chrono::steady_clock::now();
  body(r);
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

double logistic(double t) { return glm_mean(GlmLink::Logit, t); }

}  // namespace

Sequence random_instance(Family family, std::size_t n, std::mt19937_64& rng, bool allow_missing) {
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  Sequence s;
  s.family = family;
  double x = 0.0;
  double level = u01(rng);
  for (std::size_t t = 0; t < n; ++t) {
    x += 0.5 + u01(rng);
    s.x.push_back(x);
    if (u01(rng) < 0.3) level = u01(rng);
    double w = 1.0, y = 0.0;
    switch (family) {
      case Family::Gaussian:
        w = 0.5 + 1.5 * u01(rng);
        y = 3.0 * level + std::normal_distribution<double>(0.0, 1.0)(rng) / std::sqrt(w);
        break;
      case Family::Poisson:
        w = 0.5 + 2.0 * u01(rng);
        y = static_cast<double>(std::poisson_distribution<int>(1.0 + 6.0 * level * w)(rng));
        break;
      case Family::Binomial:
        w = static_cast<double>(1 + static_cast<int>(u01(rng) * 8));
        y = static_cast<double>(std::binomial_distribution<int>(static_cast<int>(w), 0.05 + 0.9 * level)(rng));
        break;
      case Family::BetaObs: {
        const double m = 0.1 + 0.8 * level;
        std::gamma_distribution<double> ga(10.0 * m, 1.0), gb(10.0 * (1 - m), 1.0);
        const double a = ga(rng), b = gb(rng);
        y = std::clamp(a / (a + b), 1e-6, 1 - 1e-6);
        break;
      }
    }
    if (allow_missing && u01(rng) < 0.15) {
      w = 0.0;
      y = family == Family::BetaObs ? 0.5 : 0.0;
    }
    s.y.push_back(y);
    s.w.push_back(w);
  }
  return s;
}

FamilyHyper random_hyper(Family family, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  switch (family) {
    case Family::Gaussian: return GaussianHyper{3.0 * u(rng) - 1.0, 0.3 + 3.0 * u(rng), 0.2 + 1.5 * u(rng)};
    case Family::Poisson: return PoissonHyper{0.5 + 3.0 * u(rng), 0.3 + 2.0 * u(rng)};
    case Family::Binomial: return BinomialHyper{0.5 + 3.0 * u(rng), 0.5 + 3.0 * u(rng)};
    case Family::BetaObs: return BetaObsHyper{3.0 + 20.0 * u(rng), 0.7 + 2.0 * u(rng), 0.7 + 2.0 * u(rng), 64};
  }
  return GaussianHyper{};
}

double quadrature_log_evidence(std::span<const double> y, std::span<const double> w, const FamilyHyper& hyper) {
  switch (family_of(hyper)) {
    case Family::Gaussian: {
      const auto& h = std::get<GaussianHyper>(hyper);
      return quadrature_block(glm_block(y, w, GlmLink::Identity, h.sigma2), gaussian_glm_prior(h.nu, h.rho2))
          .log_evidence;
    }
    case Family::Poisson: {
      // Gamma(a0, b0) on lambda is a log-gamma density on theta = log lambda
      const auto& h = std::get<PoissonHyper>(hyper);
      GlmPrior p;
      p.log_pdf = [=](double t) { return h.a0 * std::log(h.b0) - std::lgamma(h.a0) + h.a0 * t - h.b0 * std::exp(t); };
      p.d1 = [=](double t) { return h.a0 - h.b0 * std::exp(t); };
      p.d2 = [=](double t) { return -h.b0 * std::exp(t); };
      p.center = std::log(h.a0 / h.b0);
      p.scale = 1.0 / std::sqrt(h.a0);
      return quadrature_block(glm_block(y, w, GlmLink::Log), p).log_evidence;
    }
    case Family::Binomial: {
      // Beta(a0, b0) on p is a logit-beta density on theta = logit p
      const auto& h = std::get<BinomialHyper>(hyper);
      GlmPrior p;
      p.log_pdf = [=](double t) {
        return -h.a0 * std::log1p(std::exp(-t)) - h.b0 * std::log1p(std::exp(t)) - log_beta(h.a0, h.b0);
      };
      p.d1 = [=](double t) { return h.a0 - (h.a0 + h.b0) * logistic(t); };
      p.d2 = [=](double t) { return -(h.a0 + h.b0) * glm_b2(GlmLink::Logit, t); };
      p.center = std::log(h.a0 / h.b0);
      p.scale = std::sqrt(1.0 / h.a0 + 1.0 / h.b0);
      return quadrature_block(glm_block(y, w, GlmLink::Logit), p).log_evidence;
    }
    case Family::BetaObs: return quadrature_betaobs_block(y, w, std::get<BetaObsHyper>(hyper)).log_evidence;
  }
  return kNegInf;
}

CheckResult verify_dp_oracle(const VerifyOptions& opt) {
  return timed("dp_vs_enumeration", [&](CheckResult& r) {
    Tracker tr(r, opt.tol);
    std::mt19937_64 rng(opt.seed);
    const auto gs = test_gs();
    const CountPriorSpec priors[] = {CountPriorSpec{}, CountPriorSpec{CountPriorSpec::Kind::Geometric, 0.4}};
    for (Family f : kFamilies) {
      for (std::size_t rep = 0; rep < opt.instances; ++rep) {
        const std::size_t n = 1 + rep % 8;
        const auto s = random_instance(f, n, rng, true);
        const auto h = random_hyper(f, rng);
        PriorConfig cfg;
        cfg.g = gs[rep % gs.size()];
        cfg.p_k = priors[(rep / gs.size()) % 2];
        cfg.k_max = std::min<std::size_t>(1 + rep % 4, n);
        const auto table = precompute_blocks(s, h);
        BrutePosterior brute;
        bool admissible = true;
        try {
          brute = brute_posterior(table, cfg.g, cfg.p_k, cfg.k_max);
        } catch (const NumericError&) {
          admissible = false;
        }
        ++r.cases;
        if (!admissible) {
          // no admissible segmentation at any k: the DP must agree
          bool dp_infeasible = false;
          try {
            const auto pt = build_prior(s.x, cfg);
            const auto withg = absorb_length_factor(table, pt.log_g);
            const auto count = posterior_k(forward_backward(withg, cfg.k_max), pt.norm, pt.prior);
            dp_infeasible = std::all_of(count.log_evidence.begin(), count.log_evidence.end(),
                                        [](double v) { return v == kNegInf; });
          } catch (const NumericError&) {
            dp_infeasible = true;
          }
          tr.same(dp_infeasible, std::string(family_name(f)) + " instance " + std::to_string(rep) +
                                     " has no admissible segmentation");
          continue;
        }
        const auto pt = build_prior(s.x, cfg);
        auto withg = absorb_length_factor(table, pt.log_g);
        if (opt.corrupt) corrupt_one(withg, rng);
        const auto msgs = forward_backward(withg, cfg.k_max);
        const auto count = posterior_k(msgs, pt.norm, pt.prior);
        const auto ms = maxsum_forward(withg.log_A0, cfg.k_max);
        const std::string tag = std::string(family_name(f)) + " instance " + std::to_string(rep);
        for (std::size_t k = 1; k <= cfg.k_max; ++k) {
          const auto& b = brute.per_k[k];
          if (!b.feasible) {
            tr.same(count.log_evidence[k] == kNegInf, tag + ": k=" + std::to_string(k) + " should be infeasible");
            continue;
          }
          tr.close(count.log_evidence[k], b.log_evidence, tag + " log P(y|k=" + std::to_string(k) + ")");
          tr.close(count.post[k], brute.post_k[k], tag + " P(k=" + std::to_string(k) + "|y)");
          for (std::size_t p = 1; p < k; ++p) {
            const auto m = boundary_marginal(msgs, k, p);
            for (std::size_t hh = 0; hh <= n; ++hh) {
              tr.close(m[hh], b.marginals[p - 1][hh], tag + " marginal k=" + std::to_string(k));
            }
          }
          const auto e = boundary_event_probs(msgs, k);
          for (std::size_t hh = 0; hh <= n; ++hh) tr.close(e[hh], b.event[hh], tag + " boundary event");
          const auto c = bayes_curve(msgs, withg, k);
          for (std::size_t u = 0; u < n; ++u) {
            tr.close(c.mean[u], b.mean[u], tag + " curve mean");
            tr.close(c.var[u], b.var[u], tag + " curve var");
          }
          const auto path = backtrack(ms, k);
          if (path != b.map) {
            // a different argmax is fine only as an exact tie on the true table
            const auto clean = absorb_length_factor(table, pt.log_g);
            double score = 0.0;
            for (std::size_t q = 1; q < path.size(); ++q) score += clean.log_A0(path[q - 1], path[q]);
            tr.close(score, b.map_score, tag + " MAP at k=" + std::to_string(k));
          }
          tr.close(ms.M[k][n], b.map_score, tag + " MAP score");
        }
      }
    }
  });
}

CheckResult verify_closed_forms(const VerifyOptions& opt) {
  return timed("closed_form_vs_quadrature", [&](CheckResult& r) {
    Tracker tr(r, opt.quadrature_tol);
    std::mt19937_64 rng(opt.seed + 1);
    for (Family f : kFamilies) {
      for (std::size_t rep = 0; rep < opt.instances; ++rep) {
        const auto s = random_instance(f, 1 + rep % 6, rng, true);
        const auto h = random_hyper(f, rng);
        auto table = precompute_blocks(s, h);
        if (opt.corrupt) corrupt_one(table, rng);
        ++r.cases;
        for (std::size_t i = 0; i < s.size(); ++i) {
          for (std::size_t j = i + 1; j <= s.size(); ++j) {
            const auto y = std::span(s.y).subspan(i, j - i);
            const auto w = std::span(s.w).subspan(i, j - i);
            tr.close(table.log_A0(i, j), quadrature_log_evidence(y, w, h),
                     std::string(family_name(f)) + " instance " + std::to_string(rep) + " block (" +
                         std::to_string(i) + "," + std::to_string(j) + "]");
          }
        }
      }
    }
  });
}

CheckResult verify_pooling(const VerifyOptions& opt) {
  return timed("pooled_dp_vs_enumeration", [&](CheckResult& r) {
    Tracker tr(r, opt.tol);
    std::mt19937_64 rng(opt.seed + 2);
    const auto gs = test_gs();
    for (Family f : kFamilies) {
      for (std::size_t rep = 0; rep < std::max<std::size_t>(opt.instances / 4, 5); ++rep) {
        const std::size_t n = 1 + rep % 6, S = 1 + rep % 3;
        const auto h = random_hyper(f, rng);
        const auto& g = gs[rep % gs.size()];
        std::vector<BlockEvidenceTable> tables;
        const auto first = random_instance(f, n, rng, true);
        for (std::size_t s = 0; s < S; ++s) {
          auto seq = random_instance(f, n, rng, true);
          seq.x = first.x;
          tables.push_back(precompute_blocks(seq, h));
        }
        auto pooled = pool_evidences(tables, g).pooled;
        if (opt.corrupt) corrupt_one(pooled, rng);
        const std::size_t k_max = std::min<std::size_t>(4, n);
        const auto msgs = forward_backward(pooled, k_max);
        ++r.cases;
        for (std::size_t k = 1; k <= k_max; ++k) {
          tr.close(msgs.logL[k][n], brute_pooled_log_evidence(tables, g, k),
                   std::string(family_name(f)) + " pooled S=" + std::to_string(S) + " k=" + std::to_string(k));
        }
      }
    }
  });
}

CheckResult verify_mstep(const VerifyOptions& opt) {
  return timed("mstep_vs_enumeration", [&](CheckResult& r) {
    Tracker tr(r, opt.tol);
    std::mt19937_64 rng(opt.seed + 3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (std::size_t rep = 0; rep < std::max<std::size_t>(opt.instances / 5, 5); ++rep) {
      const Family f = kFamilies[rep % 3];
      const std::size_t n = 3 + rep % 6, S = 4;
      const auto h = random_hyper(f, rng);
      std::vector<BlockEvidenceTable> tables;
      const auto first = random_instance(f, n, rng);
      for (std::size_t s = 0; s < S; ++s) {
        auto seq = random_instance(f, n, rng);
        seq.x = first.x;
        tables.push_back(precompute_blocks(seq, h));
      }
      PriorConfig cfg;
      cfg.k_max = std::min<std::size_t>(3, n);
      cfg.g = rep % 2 ? LengthFactor::geometric(0.3) : LengthFactor::uniform();
      const auto prob = make_em_problem(tables, cfg);
      auto dp_prob = prob;
      if (opt.corrupt) {
        auto bad = tables;
        for (auto& t : bad) corrupt_one(t, rng);
        dp_prob = make_em_problem(bad, cfg);
      }
      std::vector<std::vector<double>> resp(S, std::vector<double>(2));
      for (auto& row : resp) {
        row[0] = u(rng);
        row[1] = 1.0 - row[0];
      }
      for (auto objective : {MStepObjective::Exact, MStepObjective::Displayed}) {
        const auto ms = mstep(dp_prob, resp, objective, rng);
        for (std::size_t g = 0; g < 2; ++g) {
          std::vector<double> rg(S);
          for (std::size_t s = 0; s < S; ++s) rg[s] = resp[s][g];
          double best = kNegInf;
          for (std::size_t k = 1; k <= cfg.k_max; ++k) {
            for (const auto& t : enumerate_segmentations(n, k)) {
              best = std::max(best, template_objective(prob, rg, Template{k, t}, objective));
            }
          }
          const double got = template_objective(prob, rg, ms.templates[g], objective);
          ++r.cases;
          tr.close(got, best, "M-step " + mstep_objective_name(objective) + " group " + std::to_string(g + 1) +
                                  " instance " + std::to_string(rep));
        }
      }
    }
  });
}

bool VerifyReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.mismatches == 0; });
}

VerifyReport run_verification(const VerifyOptions& opt) {
  VerifyReport rep;
  rep.seed = opt.seed;
  rep.corrupt = opt.corrupt;
  rep.checks.push_back(verify_dp_oracle(opt));
  rep.checks.push_back(verify_closed_forms(opt));
  rep.checks.push_back(verify_pooling(opt));
  rep.checks.push_back(verify_mstep(opt));
  return rep;
}

Json to_json(const VerifyReport& r) {
  Json j;
  j["seed"] = r.seed;
  j["corrupt"] = r.corrupt;
  j["passed"] = r.passed();
  Json checks = Json::array();
  for (const auto& c : r.checks) {
    checks.push_back({{"name", c.name},
                      {"cases", c.cases},
                      {"mismatches", c.mismatches},
                      {"max_error", number(c.max_error)},
                      {"first_mismatch", c.first_mismatch}});
  }
  j["checks"] = checks;
  return j;
}

}  // namespace bayesbreak
