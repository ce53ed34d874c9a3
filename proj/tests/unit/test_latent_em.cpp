#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "bayesbreak/latent_em.hpp"
#include "bayesbreak/metrics.hpp"
#include "bayesbreak/numeric.hpp"
#include "bayesbreak/oracle.hpp"
#include "bayesbreak/pooling.hpp"
#include "bayesbreak/simulate.hpp"
#include "test_support.hpp"

using namespace bayesbreak;
using testsupport::close_rel;

namespace {

// Two groups of Gaussian subjects with different jump sets.
Dataset two_group_data(std::size_t per_group, std::size_t n, std::mt19937_64& rng, double jump = 4.0) {
  std::vector<Sequence> seqs;
  for (int g = 0; g < 2; ++g) {
    SimSpec spec = default_sim_spec(Family::Gaussian);
    spec.n = n;
    spec.jump = jump;
    spec.boundaries = g == 0 ? std::vector<std::size_t>{n / 4, n / 2} : std::vector<std::size_t>{3 * n / 4};
    spec.subjects = per_group;
    spec.sigma = 0.5;
    const auto sim = simulate(spec, rng);
    for (const auto& s : sim.data.subjects) seqs.push_back(s);
  }
  return align_grids(seqs);
}

EmProblem problem_for(const Dataset& d, const FamilyHyper& h, const PriorConfig& cfg) {
  return make_em_problem(subject_tables(d, h), cfg);
}

std::vector<std::vector<double>> random_resp(std::size_t S, std::size_t G, std::mt19937_64& rng) {
  std::gamma_distribution<double> ga(0.7, 1.0);
  std::vector<std::vector<double>> r(S, std::vector<double>(G));
  for (auto& row : r) {
    double t = 0;
    for (auto& v : row) t += (v = ga(rng) + 1e-3);
    for (auto& v : row) v /= t;
  }
  return r;
}

}  // namespace

TEST_CASE("template log-likelihood") {
  std::mt19937_64 rng(1);
  const auto s = testsupport::random_sequence(Family::Gaussian, 6, rng);
  const auto t = precompute_blocks(s, GaussianHyper{});
  PriorConfig cfg;
  cfg.k_max = 3;
  cfg.g = LengthFactor::geometric(0.3);
  cfg.p_k.kind = CountPriorSpec::Kind::Geometric;
  const auto prob = make_em_problem({t}, cfg);
  const auto& pr = prob.prior;
  SUBCASE("single segment") {
    const double v = template_loglik(t, Template{1, {0, 6}}, pr.log_g, pr.norm, pr.prior);
    CHECK(v == doctest::Approx(pr.prior.log_p[1] - pr.norm.log_C[1] + t.log_A0(0, 6) + pr.log_g(0, 6)));
  }
  SUBCASE("equal-k templates differ only by block evidences under flat priors") {
    PriorConfig flat;
    flat.k_max = 3;
    const auto p2 = make_em_problem({t}, flat);
    const Template a{2, {0, 2, 6}}, b{2, {0, 4, 6}};
    const double da = template_loglik(t, a, p2.prior.log_g, p2.prior.norm, p2.prior.prior) -
                      template_loglik(t, b, p2.prior.log_g, p2.prior.norm, p2.prior.prior);
    const double db = t.log_A0(0, 2) + t.log_A0(2, 6) - t.log_A0(0, 4) - t.log_A0(4, 6);
    CHECK(da == doctest::Approx(db).epsilon(1e-12));
  }
  CHECK_THROWS_AS(template_loglik(t, Template{2, {0, 3}}, pr.log_g, pr.norm, pr.prior), InputError);
}

TEST_CASE("true template scores higher than a shifted one") {
  std::mt19937_64 rng(2);
  SimSpec spec = default_sim_spec(Family::Gaussian);
  spec.n = 40;
  spec.boundaries = {15, 28};
  spec.sigma = 0.5;
  const auto sim = simulate(spec, rng);
  const auto t = precompute_blocks(sim.data.subjects[0], GaussianHyper{0.0, 16.0, 0.25});
  PriorConfig cfg;
  cfg.k_max = 5;
  const auto prob = make_em_problem({t}, cfg);
  const auto& pr = prob.prior;
  const double a = template_loglik(t, Template{3, {0, 15, 28, 40}}, pr.log_g, pr.norm, pr.prior);
  const double b = template_loglik(t, Template{3, {0, 10, 33, 40}}, pr.log_g, pr.norm, pr.prior);
  CHECK(a > b + 5.0);
}

TEST_CASE("E-step") {
  const std::vector<std::vector<double>> ll{{-3.0}, {-10.0}};
  const auto r1 = estep({1.0}, ll);
  CHECK(r1[0][0] == 1.0);
  CHECK(r1[1][0] == 1.0);
  const std::vector<std::vector<double>> ll2{{-1.0, -2.0, kNegInf}, {-700.0, -800.0, -750.0}};
  const auto r = estep({0.2, 0.5, 0.3}, ll2);
  for (const auto& row : r) {
    double s = 0;
    for (double v : row) s += v;
    CHECK(std::abs(s - 1.0) < 1e-12);
  }
  CHECK(r[0][2] == 0.0);
  CHECK_THROWS_AS(estep({0.5, 0.5}, {{kNegInf, kNegInf}}), NumericError);

  std::mt19937_64 rng(3);
  const auto d = two_group_data(4, 40, rng);
  const FamilyHyper h = GaussianHyper{0.0, 16.0, 0.25};
  PriorConfig cfg;
  cfg.k_max = 4;
  const auto prob = problem_for(d, h, cfg);
  const std::vector<Template> truth{{3, {0, 10, 20, 40}}, {2, {0, 30, 40}}};
  const auto resp = estep({0.5, 0.5}, template_logliks(prob, truth));
  for (std::size_t s = 0; s < 8; ++s) CHECK(resp[s][s < 4 ? 0 : 1] >= 0.99);
}

TEST_CASE("M-step with one-hot responsibilities reduces to pooled MAP") {
  std::mt19937_64 rng(4);
  const auto d = two_group_data(3, 30, rng);
  const FamilyHyper h = GaussianHyper{0.0, 16.0, 0.25};
  PriorConfig cfg;
  cfg.k_max = 4;
  cfg.g = LengthFactor::geometric(0.1);
  const auto prob = problem_for(d, h, cfg);
  std::vector<std::vector<double>> resp(6, std::vector<double>(2, 0.0));
  for (std::size_t s = 0; s < 6; ++s) resp[s][s < 3 ? 0 : 1] = 1.0;
  const auto m = mstep(prob, resp, MStepObjective::Displayed, rng);
  CHECK(m.pi == std::vector<double>{0.5, 0.5});
  for (std::size_t g = 0; g < 2; ++g) {
    std::vector<BlockEvidenceTable> group;
    for (std::size_t s = 3 * g; s < 3 * g + 3; ++s) group.push_back(prob.tables[s]);
    const auto pooled = pool_evidences(group, prob.prior.log_g);
    const auto ms = maxsum_forward(pooled.pooled.log_A0, prob.prior.norm.k_max);
    const auto k = select_k_map(ms, prob.prior.norm, prob.prior.prior);
    CHECK(m.templates[g].k == k);
    CHECK(m.templates[g].t == backtrack(ms, k));
  }
  // the exact objective recovers the same jumps at this signal level
  const auto e = mstep(prob, resp, MStepObjective::Exact, rng);
  CHECK(e.templates[0].t == std::vector<std::size_t>{0, 7, 15, 30});
  CHECK(e.templates[1].t == std::vector<std::size_t>{0, 22, 30});
}

TEST_CASE("M-step equals brute-force template maximization") {
  std::mt19937_64 rng(5);
  for (auto objective : {MStepObjective::Exact, MStepObjective::Displayed}) {
    for (int rep = 0; rep < 30; ++rep) {
      const std::size_t n = 3 + rep % 6;
      const std::size_t S = 2 + rep % 3;
      const Family f = rep % 2 ? Family::Poisson : Family::Gaussian;
      const auto h = testsupport::random_hyper(f, rng);
      std::vector<BlockEvidenceTable> tables;
      const auto base = testsupport::random_sequence(f, n, rng);
      for (std::size_t s = 0; s < S; ++s) {
        auto q = testsupport::random_sequence(f, n, rng, true);
        q.x = base.x;
        tables.push_back(precompute_blocks(q, h));
      }
      PriorConfig cfg;
      cfg.k_max = std::min<std::size_t>(3, n);
      cfg.g = rep % 3 == 0 ? LengthFactor::geometric(0.4) : (rep % 3 == 1 ? LengthFactor::min_len(2.0) : LengthFactor::uniform());
      cfg.p_k.kind = rep % 2 ? CountPriorSpec::Kind::Geometric : CountPriorSpec::Kind::Uniform;
      const auto prob = make_em_problem(tables, cfg);
      const auto resp = random_resp(S, 2, rng);
      const auto m = mstep(prob, resp, objective, rng);
      for (std::size_t g = 0; g < 2; ++g) {
        std::vector<double> col(S);
        for (std::size_t s = 0; s < S; ++s) col[s] = resp[s][g];
        double best = kNegInf;
        for (std::size_t k = 1; k <= cfg.k_max; ++k) {
          for (const auto& t : enumerate_segmentations(n, k)) {
            best = std::max(best, template_objective(prob, col, Template{k, t}, objective));
          }
        }
        CHECK(close_rel(m.q[g], best, 1e-9));
        CHECK(close_rel(template_objective(prob, col, m.templates[g], objective), best, 1e-9));
      }
    }
  }
}

TEST_CASE("observed log-likelihood never decreases") {
  std::mt19937_64 rng(6);
  const auto d = two_group_data(5, 30, rng, 2.0);
  const FamilyHyper h = GaussianHyper{0.0, 4.0, 0.25};
  EmConfig cfg;
  cfg.prior.k_max = 5;
  cfg.prior.g = LengthFactor::geometric(0.1);
  cfg.max_iter = 50;
  cfg.tol = 0.0;
  const auto prob = problem_for(d, h, cfg.prior);
  for (int restart = 0; restart < 20; ++restart) {
    cfg.groups = 2 + restart % 2;
    auto templates = random_templates(prob, cfg.groups, rng);
    const auto st = em_run(prob, std::vector<double>(cfg.groups, 1.0 / cfg.groups), templates, cfg, rng);
    for (std::size_t i = 1; i < st.obs_loglik.size(); ++i) {
      CHECK(st.obs_loglik[i] >= st.obs_loglik[i - 1] - 1e-9);
    }
    for (const auto& row : st.resp) {
      double s = 0;
      for (double v : row) s += v;
      CHECK(std::abs(s - 1.0) < 1e-12);
    }
  }
}

TEST_CASE("label permutation") {
  std::mt19937_64 rng(7);
  const auto d = two_group_data(4, 24, rng, 3.0);
  const FamilyHyper h = GaussianHyper{0.0, 9.0, 0.25};
  EmConfig cfg;
  cfg.prior.k_max = 4;
  cfg.groups = 3;
  const auto prob = problem_for(d, h, cfg.prior);
  const auto templates = random_templates(prob, 3, rng);
  const std::vector<double> pi{0.2, 0.3, 0.5};
  std::mt19937_64 r1(1), r2(1);
  const auto a = em_run(prob, pi, templates, cfg, r1);
  const std::vector<std::size_t> perm{2, 0, 1};
  std::vector<Template> pt;
  std::vector<double> ppi;
  for (std::size_t g : perm) {
    pt.push_back(templates[g]);
    ppi.push_back(pi[g]);
  }
  const auto b = em_run(prob, ppi, pt, cfg, r2);
  CHECK(close_rel(a.obs_loglik.back(), b.obs_loglik.back(), 1e-12));
  for (std::size_t g = 0; g < 3; ++g) {
    CHECK(b.templates[g] == a.templates[perm[g]]);
    CHECK(b.pi[g] == doctest::Approx(a.pi[perm[g]]).epsilon(1e-12));
  }
}

TEST_CASE("EM recovers two latent groups") {
  std::mt19937_64 rng(8);
  const auto d = two_group_data(6, 40, rng);
  const FamilyHyper h = GaussianHyper{0.0, 16.0, 0.25};
  EmConfig cfg;
  cfg.prior.k_max = 5;
  cfg.groups = 2;
  const auto st = em_fit(d, h, cfg);
  std::vector<int> truth;
  for (int s = 0; s < 12; ++s) truth.push_back(s < 6 ? 1 : 2);
  CHECK(adjusted_rand_index(truth, hard_assignments(st)) >= 0.9);
  for (std::size_t i = 1; i < st.obs_loglik.size(); ++i) CHECK(st.obs_loglik[i] >= st.obs_loglik[i - 1] - 1e-9);
}

TEST_CASE("one group is the pooled MAP under the displayed objective") {
  std::mt19937_64 rng(9);
  const auto d = two_group_data(3, 20, rng);
  const FamilyHyper h = GaussianHyper{0.0, 16.0, 0.25};
  EmConfig cfg;
  cfg.prior.k_max = 4;
  cfg.groups = 1;
  cfg.objective = MStepObjective::Displayed;
  const auto st = em_fit(d, h, cfg);
  const auto prob = problem_for(d, h, cfg.prior);
  const auto pooled = pool_evidences(prob.tables, prob.prior.log_g);
  const auto ms = maxsum_forward(pooled.pooled.log_A0, 4);
  const auto k = select_k_map(ms, prob.prior.norm, prob.prior.prior);
  CHECK(st.templates[0].t == backtrack(ms, k));
  CHECK(st.pi == std::vector<double>{1.0});
}

TEST_CASE("a group that loses all weight is reset with a warning") {
  std::mt19937_64 rng(10);
  const auto d = two_group_data(3, 20, rng);
  const FamilyHyper h = GaussianHyper{0.0, 16.0, 0.25};
  EmConfig cfg;
  cfg.prior.k_max = 3;
  cfg.groups = 2;
  const auto prob = problem_for(d, h, cfg.prior);
  std::vector<std::vector<double>> resp(6, {1.0, 0.0});
  const auto m = mstep(prob, resp, MStepObjective::Exact, rng);
  CHECK(m.pi[1] == 0.0);
  CHECK(m.reset == std::vector<std::size_t>{1});
  validate_boundaries(m.templates[1].t, 20);
}

TEST_CASE("objective names") {
  CHECK(parse_mstep_objective("exact") == MStepObjective::Exact);
  CHECK(parse_mstep_objective(mstep_objective_name(MStepObjective::Displayed)) == MStepObjective::Displayed);
  CHECK_THROWS_AS(parse_mstep_objective("other"), InputError);
}
