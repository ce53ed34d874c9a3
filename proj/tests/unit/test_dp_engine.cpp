#include "doctest.h"

#include <cmath>

#include "bayesbreak/dp_engine.hpp"
#include "bayesbreak/map_engine.hpp"
#include "bayesbreak/numeric.hpp"
#include "bayesbreak/oracle.hpp"
#include "bayesbreak/pipeline.hpp"
#include "test_support.hpp"

using namespace bayesbreak;
using testsupport::close_rel;

namespace {

BlockEvidenceTable flat_table(std::size_t n) {
  BlockEvidenceTable t;
  t.n = n;
  for (std::size_t i = 0; i < n; ++i) t.grid.push_back(double(i + 1));
  t.log_A0 = TriangularArray(n, 0.0);
  t.post_mean = TriangularArray(n, 0.0);
  t.post_var = TriangularArray(n, 0.0);
  return t;
}

Sequence jump_sequence(std::size_t n, std::size_t at, double lo, double hi, double noise,
                       std::mt19937_64& rng) {
  Sequence s;
  s.family = Family::Gaussian;
  std::normal_distribution<double> nd(0.0, noise);
  for (std::size_t i = 0; i < n; ++i) {
    s.x.push_back(double(i + 1));
    s.y.push_back((i < at ? lo : hi) + nd(rng));
    s.w.push_back(1.0);
  }
  return s;
}

}  // namespace

TEST_CASE("forward pass on a flat table counts segmentations") {
  const auto msgs = forward_backward(flat_table(3), 3);
  CHECK(msgs.logL[2][3] == doctest::Approx(std::log(2.0)));
  for (std::size_t k = 0; k <= 3; ++k) {
    for (std::size_t j = 0; j < k; ++j) CHECK(msgs.logL[k][j] == kNegInf);
  }
}

TEST_CASE("prefix and suffix evidences agree") {
  std::mt19937_64 rng(17);
  for (int rep = 0; rep < 20; ++rep) {
    const auto s = testsupport::random_sequence(Family::Poisson, 12, rng, true);
    const auto t = precompute_blocks(s, testsupport::random_hyper(Family::Poisson, rng));
    const auto msgs = forward_backward(t, 6);
    for (std::size_t k = 1; k <= 6; ++k) CHECK(std::abs(msgs.logL[k][12] - msgs.logR[k][0]) < 1e-9);
  }
}

TEST_CASE("posterior over k recovers the prior on a flat table") {
  PriorConfig cfg;
  cfg.k_max = 4;
  cfg.p_k.kind = CountPriorSpec::Kind::Geometric;
  cfg.p_k.q = 0.3;
  const auto fit = fit_table(flat_table(7), cfg);
  for (std::size_t k = 1; k <= 4; ++k) {
    CHECK(fit.count.log_evidence[k] == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
    CHECK(fit.count.post[k] == doctest::Approx(std::exp(fit.prior.log_p[k])).epsilon(1e-12));
  }
}

TEST_CASE("symmetric data gives symmetric boundary marginals") {
  const auto msgs = forward_backward(flat_table(3), 2);
  const auto m = boundary_marginal(msgs, 2, 1);
  CHECK(m[1] == doctest::Approx(0.5));
  CHECK(m[2] == doctest::Approx(0.5));
  CHECK_THROWS_AS(boundary_marginal(msgs, 2, 2), InputError);
  CHECK_THROWS_AS(boundary_marginal(msgs, 2, 0), InputError);
}

TEST_CASE("sharp jump is located by marginals and MAP") {
  std::mt19937_64 rng(8);
  const auto s = jump_sequence(20, 10, 0.0, 5.0, 0.3, rng);
  const auto t = precompute_blocks(s, GaussianHyper{2.5, 25.0, 0.09});
  const auto msgs = forward_backward(t, 2);
  const auto m = boundary_marginal(msgs, 2, 1);
  const auto it = std::max_element(m.begin(), m.end());
  CHECK(std::distance(m.begin(), it) == 10);
  const auto ms = maxsum_forward(t.log_A0, 2);
  CHECK(backtrack(ms, 2) == std::vector<std::size_t>{0, 10, 20});
}

TEST_CASE("event probabilities") {
  std::mt19937_64 rng(21);
  const auto s = testsupport::random_sequence(Family::Gaussian, 9, rng);
  const auto t = precompute_blocks(s, testsupport::random_hyper(Family::Gaussian, rng));
  const auto msgs = forward_backward(t, 4);
  const auto m = boundary_marginal(msgs, 2, 1);
  for (std::size_t h = 1; h < 9; ++h) CHECK(boundary_event_prob(msgs, 2, h) == doctest::Approx(m[h]));
  for (std::size_t k = 1; k <= 4; ++k) {
    const auto e = boundary_event_probs(msgs, k);
    double sum = 0;
    for (double v : e) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0 + 1e-9);
      sum += v;
    }
    CHECK(sum == doctest::Approx(double(k - 1)).epsilon(1e-9));
    if (k == 1) {
      for (double v : e) CHECK(v == 0.0);
    }
    for (std::size_t p = 1; p < k; ++p) {
      const auto bm = boundary_marginal(msgs, k, p);
      double tot = 0;
      for (double v : bm) tot += v;
      CHECK(tot == doctest::Approx(1.0).epsilon(1e-9));
    }
  }
}

TEST_CASE("Bayes curve coverage and degenerate cases") {
  std::mt19937_64 rng(23);
  const auto s1 = make_sequence({2.0}, {0.7}, Family::Gaussian);
  const GaussianHyper h{0.0, 1.0, 1.0};
  const auto t1 = precompute_blocks(s1, h);
  const auto c1 = bayes_curve(forward_backward(t1, 1), t1, 1);
  CHECK(c1.mean[0] == doctest::Approx(t1.post_mean(0, 1)));

  for (Family f : {Family::Gaussian, Family::Poisson, Family::Binomial, Family::BetaObs}) {
    const auto s = testsupport::random_sequence(f, 10, rng, true);
    const auto t = precompute_blocks(s, testsupport::random_hyper(f, rng), LengthFactor::geometric(0.2));
    const auto msgs = forward_backward(t, 5);
    for (std::size_t k = 1; k <= 5; ++k) {
      const auto c = bayes_curve(msgs, t, k);
      for (std::size_t u = 0; u < 10; ++u) {
        CHECK(c.coverage[u] == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(c.var[u] >= 0.0);
      }
    }
  }

  // constant data under a tight observation model
  Sequence flat;
  flat.family = Family::Gaussian;
  for (int i = 0; i < 12; ++i) {
    flat.x.push_back(i);
    flat.y.push_back(1.3);
    flat.w.push_back(1.0);
  }
  const auto tf = precompute_blocks(flat, GaussianHyper{0.0, 10.0, 0.01});
  const auto cf = bayes_curve(forward_backward(tf, 3), tf, 3);
  for (std::size_t u = 0; u < 12; ++u) {
    CHECK(std::abs(cf.mean[u] - 1.3) < 0.01);
    CHECK(cf.var[u] > 0.0);
  }
}

TEST_CASE("segment moments on a fixed segmentation") {
  std::mt19937_64 rng(31);
  const auto s = testsupport::random_sequence(Family::Gaussian, 8, rng);
  const FamilyHyper h = GaussianHyper{0.2, 1.5, 0.6};
  const auto plain = precompute_blocks(s, h, LengthFactor::uniform());
  const auto geo = precompute_blocks(s, h, LengthFactor::geometric(0.4));
  const std::vector<std::size_t> t{0, 3, 5, 8};
  const auto a = segment_moments_fixed(plain, t);
  const auto b = segment_moments_fixed(geo, t);
  REQUIRE(a.size() == 3);
  for (std::size_t q = 0; q < 3; ++q) {
    CHECK(a[q].mean == b[q].mean);
    CHECK(a[q].var == b[q].var);
    const auto direct = conjugate_block(s, t[q], t[q + 1], h);
    CHECK(close_rel(a[q].mean, direct.post_mean, 1e-12));
    CHECK(close_rel(a[q].var, direct.post_var, 1e-12));
  }
  const auto whole = segment_moments_fixed(plain, {0, 8});
  CHECK(whole[0].mean == plain.post_mean(0, 8));
  CHECK_THROWS_AS(segment_moments_fixed(plain, {0, 4, 4, 8}), InputError);
  CHECK_THROWS_AS(segment_moments_fixed(plain, {1, 8}), InputError);
}

TEST_CASE("no admissible segmentation is reported") {
  std::mt19937_64 rng(2);
  const auto s = testsupport::random_sequence(Family::Gaussian, 4, rng);
  PriorConfig cfg;
  cfg.k_max = 2;
  cfg.g = LengthFactor::min_len(100.0);
  CHECK_THROWS_WITH(fit_sequence(s, GaussianHyper{}, cfg), doctest::Contains("no admissible segmentation"));
}

TEST_CASE("DP agrees with enumeration on random instances") {
  std::mt19937_64 rng(77);
  const std::vector<LengthFactor> gs{LengthFactor::uniform(), LengthFactor::geometric(0.3),
                                     LengthFactor::min_len(2.0)};
  for (Family f : {Family::Gaussian, Family::Poisson, Family::Binomial, Family::BetaObs}) {
    for (int rep = 0; rep < 15; ++rep) {
      const std::size_t n = 2 + rep % 7;
      const auto s = testsupport::random_sequence(f, n, rng, true);
      const auto h = testsupport::random_hyper(f, rng);
      const auto& g = gs[rep % 3];
      PriorConfig cfg;
      cfg.g = g;
      cfg.k_max = 1 + rep % 4;
      const auto table = precompute_blocks(s, h);
      BrutePosterior brute;
      try {
        brute = brute_posterior(table, g, cfg.p_k, cfg.k_max);
      } catch (const NumericError&) {
        CHECK_THROWS(fit_table(table, cfg));
        continue;
      }
      const auto fit = fit_table(table, cfg);
      CHECK(fit.count.k_hat == brute.k_hat);
      for (std::size_t k = 1; k <= fit.k_max; ++k) {
        CHECK(fit.count.post[k] == doctest::Approx(brute.post_k[k]).epsilon(1e-9));
        if (brute.per_k[k].feasible) {
          CHECK(std::abs(fit.count.log_evidence[k] - brute.per_k[k].log_evidence) < 1e-9);
        }
      }
    }
  }
}
