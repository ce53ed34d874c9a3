#include "doctest.h"

#include <cmath>
#include <random>

#include "bayesbreak/block_families.hpp"
#include "bayesbreak/nonconjugate.hpp"
#include "bayesbreak/numeric.hpp"
#include "bayesbreak/pipeline.hpp"
#include "test_support.hpp"

using namespace bayesbreak;

namespace {

struct Binomials {
  std::vector<double> y;
  std::vector<double> m;
};

Binomials random_binomials(std::size_t count, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Binomials b;
  const double p = 0.05 + 0.9 * u(rng);
  for (std::size_t t = 0; t < count; ++t) {
    const int m = 1 + static_cast<int>(u(rng) * 10);
    b.m.push_back(m);
    b.y.push_back(std::binomial_distribution<int>(m, p)(rng));
  }
  return b;
}

// Independent reference: direct binomial pmf times the Gaussian prior.
double logistic_reference(const Binomials& b, double mean, double var) {
  auto lf = [&](double t) {
    double s = testsupport::log_normal_pdf(t, mean, var);
    for (std::size_t i = 0; i < b.y.size(); ++i) {
      const double p = 1.0 / (1.0 + std::exp(-t));
      s += std::lgamma(b.m[i] + 1) - std::lgamma(b.y[i] + 1) - std::lgamma(b.m[i] - b.y[i] + 1) +
           b.y[i] * std::log(p) + (b.m[i] - b.y[i]) * std::log1p(-p);
    }
    return s;
  };
  return testsupport::log_integral(lf, mean, 0.05);
}

}  // namespace

TEST_CASE("GLM cumulant functions") {
  for (double t : {-40.0, -3.0, 0.0, 0.7, 35.0}) {
    CHECK(glm_b(GlmLink::Logit, t) == doctest::Approx(std::log1p(std::exp(t))).epsilon(1e-14));
    const double h = 1e-5;
    CHECK(glm_b1(GlmLink::Logit, t) ==
          doctest::Approx((glm_b(GlmLink::Logit, t + h) - glm_b(GlmLink::Logit, t - h)) / (2 * h)).epsilon(1e-7));
  }
  CHECK(glm_b2(GlmLink::Logit, 0.0) == 0.25);
  CHECK(glm_link_for(Family::Poisson) == GlmLink::Log);
  CHECK_THROWS_AS(glm_link_for(Family::BetaObs), InputError);
  CHECK(parse_block_method("pgvb") == BlockMethod::PGVB);
  CHECK_THROWS_AS(parse_block_method("mcmc"), InputError);
}

TEST_CASE("Newton mode") {
  SUBCASE("Gaussian converges after one step") {
    const std::vector<double> y{1.0, 2.5, 0.3}, w{1.0, 2.0, 0.5};
    const auto b = glm_block(y, w, GlmLink::Identity, 0.7);
    const auto r = newton_mode(b, gaussian_glm_prior(0.2, 3.0));
    CHECK(r.iterations == 1);
    const double post_prec = 1.0 / 3.0 + 3.5 / 0.7;
    CHECK(r.theta == doctest::Approx((0.2 / 3.0 + (1.0 + 5.0 + 0.15) / 0.7) / post_prec).epsilon(1e-13));
    CHECK(r.curvature == doctest::Approx(post_prec).epsilon(1e-13));
  }
  SUBCASE("balanced logistic block sits at zero") {
    const std::vector<double> y{3.0, 2.0}, m{6.0, 4.0};
    const auto r = newton_mode(glm_block(y, m, GlmLink::Logit), gaussian_glm_prior(0.0, 2.0));
    CHECK(std::abs(r.theta) < 1e-12);
  }
  SUBCASE("all successes still has a finite mode") {
    const std::vector<double> y{5.0, 5.0}, m{5.0, 5.0};
    const auto r = newton_mode(glm_block(y, m, GlmLink::Logit), gaussian_glm_prior(0.0, 4.0));
    CHECK(std::isfinite(r.theta));
    CHECK(r.theta > 2.0);
  }
  SUBCASE("Poisson against golden section") {
    std::mt19937_64 rng(3);
    for (int rep = 0; rep < 20; ++rep) {
      const auto s = testsupport::random_sequence(Family::Poisson, 6, rng);
      const auto b = glm_block(s.y, s.w, GlmLink::Log);
      for (const auto& prior : {gaussian_glm_prior(0.5, 2.0), logistic_glm_prior(-0.3, 1.5)}) {
        const auto r = newton_mode(b, prior);
        // bisection on the score, written out from the Poisson likelihood
        auto score = [&](double t) {
          double d = prior.d1(t);
          for (std::size_t i = 0; i < s.y.size(); ++i) d += s.y[i] - s.w[i] * std::exp(t);
          return d;
        };
        double lo = -10, hi = 10;
        for (int it = 0; it < 200; ++it) (score(0.5 * (lo + hi)) > 0 ? lo : hi) = 0.5 * (lo + hi);
        CHECK(r.theta == doctest::Approx(0.5 * (lo + hi)).epsilon(1e-8).scale(1.0));
        const double g = golden_section_max([&](double t) { return b.loglik(t) + prior.log_pdf(t); }, -10, 10, 1e-12);
        CHECK(r.theta == doctest::Approx(g).epsilon(1e-6).scale(1.0));
      }
    }
  }
}

TEST_CASE("Laplace blocks") {
  SUBCASE("exact for the Gaussian family") {
    std::mt19937_64 rng(9);
    for (int rep = 0; rep < 50; ++rep) {
      const auto s = testsupport::random_sequence(Family::Gaussian, 1 + rep % 7, rng, true);
      const auto h = std::get<GaussianHyper>(testsupport::random_hyper(Family::Gaussian, rng));
      const auto b = glm_block(s.y, s.w, GlmLink::Identity, h.sigma2);
      const auto lap = laplace_block(b, gaussian_glm_prior(h.nu, h.rho2));
      const auto exact = conjugate_block(s, 0, s.size(), h);
      CHECK(lap.log_evidence == doctest::Approx(exact.log_evidence).epsilon(1e-12));
      CHECK(lap.mean == doctest::Approx(exact.post_mean).epsilon(1e-12));
      CHECK(lap.var == doctest::Approx(exact.post_var).epsilon(1e-12));
      const auto cl = glm_block_result(b, GlmModel{GlmLink::Identity, h.sigma2, gaussian_glm_prior(h.nu, h.rho2)},
                                       BlockMethod::Closed);
      CHECK(cl.log_evidence == doctest::Approx(exact.log_evidence).epsilon(1e-12));
    }
  }
  SUBCASE("logistic error shrinks as the block grows") {
    double prev = INFINITY;
    for (std::size_t W : {2u, 8u, 32u}) {
      Binomials bin;
      for (std::size_t t = 0; t < W / 2; ++t) {
        bin.y.push_back(1.0);
        bin.m.push_back(2.0);
      }
      const auto prior = gaussian_glm_prior(1.0, 4.0);
      const auto lap = laplace_block(glm_block(bin.y, bin.m, GlmLink::Logit), prior);
      const double err = std::abs(lap.log_evidence - logistic_reference(bin, 1.0, 4.0));
      CHECK(err < prev);
      prev = err;
    }
  }
}

TEST_CASE("JJ and PG-VB bounds") {
  std::mt19937_64 rng(77);
  for (int rep = 0; rep < 40; ++rep) {
    const auto bin = random_binomials(1 + rep % 9, rng);
    const double mean = rep % 3 - 1.0, var = 0.5 + rep % 4;
    const auto block = glm_block(bin.y, bin.m, GlmLink::Logit);
    const auto prior = gaussian_glm_prior(mean, var);
    const double ref = logistic_reference(bin, mean, var);
    const auto jj = jj_block(block, prior);
    const auto pg = pg_vb_block(block, prior);
    CHECK(jj.converged);
    CHECK(pg.converged);
    for (std::size_t i = 1; i < jj.trace.size(); ++i) CHECK(jj.trace[i] >= jj.trace[i - 1] - 1e-9);
    for (std::size_t i = 1; i < pg.trace.size(); ++i) CHECK(pg.trace[i] >= pg.trace[i - 1] - 1e-9);
    CHECK(jj.elbo <= ref + 1e-9);
    CHECK(pg.elbo <= ref + 1e-9);
    CHECK(jj.elbo == doctest::Approx(pg.elbo).epsilon(1e-6));
    CHECK(jj.mu == doctest::Approx(pg.mu).epsilon(1e-6));
    // quadrature agrees with the independent reference
    CHECK(quadrature_block(block, prior).log_evidence == doctest::Approx(ref).epsilon(1e-9));
  }
  const std::vector<double> y{1.0}, w{1.0};
  CHECK_THROWS_AS(jj_block(glm_block(y, w, GlmLink::Log), gaussian_glm_prior(0, 1)), InputError);
  CHECK_THROWS_AS(pg_vb_block(glm_block(y, w, GlmLink::Logit), logistic_glm_prior(0, 1)), InputError);
}

TEST_CASE("EP blocks") {
  SUBCASE("exact on Gaussian sites") {
    std::mt19937_64 rng(12);
    for (int rep = 0; rep < 30; ++rep) {
      const auto s = testsupport::random_sequence(Family::Gaussian, 1 + rep % 6, rng, true);
      const auto h = std::get<GaussianHyper>(testsupport::random_hyper(Family::Gaussian, rng));
      const auto ep = ep_block(glm_block(s.y, s.w, GlmLink::Identity, h.sigma2), gaussian_glm_prior(h.nu, h.rho2));
      const auto exact = conjugate_block(s, 0, s.size(), h);
      CHECK(ep.converged);
      CHECK(ep.log_evidence == doctest::Approx(exact.log_evidence).epsilon(1e-10));
      CHECK(ep.mean == doctest::Approx(exact.post_mean).epsilon(1e-10));
    }
  }
  SUBCASE("closer to quadrature than Laplace on logistic blocks") {
    std::mt19937_64 rng(31);
    int ep_better = 0, total = 0;
    for (int rep = 0; rep < 30; ++rep) {
      const auto bin = random_binomials(2 + rep % 6, rng);
      const auto block = glm_block(bin.y, bin.m, GlmLink::Logit);
      const auto prior = gaussian_glm_prior(0.0, 2.0);
      const double ref = quadrature_block(block, prior).log_evidence;
      const auto ep = ep_block(block, prior);
      CHECK(ep.converged);
      CHECK(ep.skipped == 0);
      ++total;
      if (std::abs(ep.log_evidence - ref) <= std::abs(laplace_block(block, prior).log_evidence - ref)) ++ep_better;
      CHECK(std::abs(ep.log_evidence - ref) < 0.05);
    }
    CHECK(ep_better >= total * 8 / 10);
  }
  SUBCASE("Poisson sites") {
    const std::vector<double> y{3, 7, 0, 4}, w{1.0, 2.0, 0.5, 1.5};
    const auto block = glm_block(y, w, GlmLink::Log);
    const auto prior = gaussian_glm_prior(0.5, 1.0);
    const auto ep = ep_block(block, prior);
    CHECK(ep.converged);
    CHECK(ep.log_evidence == doctest::Approx(quadrature_block(block, prior).log_evidence).epsilon(1e-3));
  }
}

TEST_CASE("quadrature blocks reproduce the closed forms") {
  std::mt19937_64 rng(5);
  for (int rep = 0; rep < 30; ++rep) {
    const std::size_t n = 1 + rep % 7;
    {
      const auto s = testsupport::random_sequence(Family::Poisson, n, rng, true);
      // a Gamma prior on lambda is a log-gamma density on theta = log lambda
      const double a0 = 1.5, b0 = 0.8;
      GlmPrior prior;
      prior.log_pdf = [=](double t) { return a0 * std::log(b0) - std::lgamma(a0) + a0 * t - b0 * std::exp(t); };
      prior.d1 = [=](double t) { return a0 - b0 * std::exp(t); };
      prior.d2 = [=](double t) { return -b0 * std::exp(t); };
      prior.center = std::log(a0 / b0);
      prior.scale = 1.0 / std::sqrt(a0);
      const auto q = quadrature_block(glm_block(s.y, s.w, GlmLink::Log), prior);
      const auto c = conjugate_block(s, 0, n, PoissonHyper{a0, b0});
      CHECK(q.log_evidence == doctest::Approx(c.log_evidence).epsilon(1e-10));
      CHECK(q.post_mean == doctest::Approx(c.post_mean).epsilon(1e-9));
      CHECK(q.post_var == doctest::Approx(c.post_var).epsilon(1e-8));
    }
    {
      const auto s = testsupport::random_sequence(Family::BetaObs, n, rng, true);
      const auto h = std::get<BetaObsHyper>(testsupport::random_hyper(Family::BetaObs, rng));
      const auto q = quadrature_betaobs_block(s.y, s.w, h);
      const auto c = betaobs_block(s.y, s.w, h);
      CHECK(q.log_evidence == doctest::Approx(c.log_evidence).epsilon(1e-8));
      CHECK(q.post_mean == doctest::Approx(c.post_mean).epsilon(1e-8));
      auto h2 = h;
      h2.nodes = 128;
      CHECK(betaobs_block(s.y, s.w, h2).log_evidence == doctest::Approx(c.log_evidence).epsilon(1e-10));
    }
  }
}

TEST_CASE("approximate tables feed the unchanged DP") {
  std::mt19937_64 rng(8);
  Sequence s;
  s.family = Family::Binomial;
  for (std::size_t t = 0; t < 24; ++t) {
    const double p = t < 12 ? 0.1 : 0.9;
    s.x.push_back(double(t + 1));
    s.w.push_back(10.0);
    s.y.push_back(std::binomial_distribution<int>(10, p)(rng));
  }
  GlmModel model;
  PriorConfig cfg;
  cfg.k_max = 4;
  const auto quad = fit_table(glm_table(s, model, BlockMethod::Quadrature), cfg);
  CHECK(quad.count.k_hat == 2);
  CHECK(quad.map.boundaries == std::vector<std::size_t>{0, 12, 24});
  for (auto m : {BlockMethod::Laplace, BlockMethod::JJ, BlockMethod::PGVB, BlockMethod::EP}) {
    const auto fit = fit_table(glm_table(s, model, m), cfg);
    CHECK(fit.count.k_hat == 2);
    CHECK(fit.map.boundaries == quad.map.boundaries);
    CHECK(fit.boundary_marginals[0][12] == doctest::Approx(quad.boundary_marginals[0][12]).epsilon(0.05));
  }
  CHECK_THROWS_AS(glm_table(s, model, BlockMethod::Closed), InputError);
}

TEST_CASE("stability under bounded log-evidence errors") {
  std::mt19937_64 rng(21);
  for (Family f : {Family::Gaussian, Family::Binomial}) {
    const auto s = testsupport::random_sequence(f, 12, rng);
    const auto table = precompute_blocks(s, default_hyper(f), LengthFactor::geometric(0.3));
    std::mt19937_64 prng(1);
    const auto zero = stability_harness(table, 4, 0.0, 3, prng);
    CHECK(zero.violations == 0);
    CHECK(zero.max_k_odds_dev == 0.0);
    CHECK(zero.max_b_odds_dev == 0.0);
    for (double eps : {0.001, 0.01, 0.05}) {
      const auto rep = stability_harness(table, 4, eps, 30, prng);
      CHECK(rep.violations == 0);
      CHECK(rep.pairs_checked > 0);
      CHECK(rep.max_sandwich_ratio <= 1.0 + 1e-9);
      CHECK(rep.max_k_odds_ratio > 0.0);
    }
  }
}
