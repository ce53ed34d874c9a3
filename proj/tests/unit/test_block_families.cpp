#include "doctest.h"

#include <cmath>
#include <numbers>

#include "bayesbreak/block_families.hpp"
#include "bayesbreak/numeric.hpp"
#include "test_support.hpp"

using namespace bayesbreak;
using testsupport::close_rel;

namespace {

BlockResult single(Family f, std::vector<double> y, std::vector<double> w, const FamilyHyper& h) {
  std::vector<double> x(y.size());
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = static_cast<double>(i + 1);
  Sequence s;
  s.x = x;
  s.y = y;
  s.w = w;
  s.family = f;
  return conjugate_block(s, 0, y.size(), h);
}

}  // namespace

TEST_CASE("Gaussian single observation") {
  const auto r = single(Family::Gaussian, {1.0}, {1.0}, GaussianHyper{0.0, 1.0, 1.0});
  CHECK(r.log_evidence == doctest::Approx(-0.5 * std::log(4.0 * std::numbers::pi) - 0.25).epsilon(1e-14));
  CHECK(r.log_evidence == doctest::Approx(-1.515512).epsilon(1e-6));
  CHECK(r.post_mean == doctest::Approx(0.5));
  CHECK(r.post_var == doctest::Approx(0.5));
}

TEST_CASE("empty Gaussian block returns the prior") {
  const auto r = gaussian_block(BlockSummaries{}, GaussianHyper{0.7, 2.5, 1.0});
  CHECK(r.log_evidence == 0.0);
  CHECK(r.post_mean == doctest::Approx(0.7));
  CHECK(r.post_var == doctest::Approx(2.5));
}

TEST_CASE("Gaussian weighted block matches quadrature") {
  const GaussianHyper h{0.1, 2.0, 0.5};
  const std::vector<double> y{0.3, 0.7, -0.2}, w{1, 2, 1};
  const auto r = single(Family::Gaussian, y, w, h);
  const double q = testsupport::quadrature_block_evidence(y, w, h);
  CHECK(std::abs(r.log_evidence - q) < 1e-8 * std::max(1.0, std::abs(q)));
}

TEST_CASE("Poisson closed forms") {
  const PoissonHyper h{1.0, 1.0};
  const auto a = single(Family::Poisson, {0}, {1}, h);
  CHECK(a.log_evidence == doctest::Approx(std::log(0.5)).epsilon(1e-14));
  CHECK(a.post_mean == doctest::Approx(0.5));
  const auto b = single(Family::Poisson, {2}, {1}, h);
  CHECK(b.log_evidence == doctest::Approx(std::log(0.125)).epsilon(1e-14));

  const std::vector<double> y{3, 1, 0}, w{2, 1, 0.5};
  const PoissonHyper h2{2.0, 1.0};
  const auto c = single(Family::Poisson, y, w, h2);
  const double q = testsupport::quadrature_block_evidence(y, w, h2);
  CHECK(std::abs(c.log_evidence - q) < 1e-8);
  CHECK(c.post_var == c.post_mean / (h2.b0 + 3.5));
}

TEST_CASE("Binomial closed forms") {
  const BinomialHyper h{1.0, 1.0};
  CHECK(single(Family::Binomial, {1}, {2}, h).log_evidence ==
        doctest::Approx(std::log(1.0 / 3.0)).epsilon(1e-14));
  const auto r = single(Family::Binomial, {1}, {1}, h);
  CHECK(r.log_evidence == doctest::Approx(std::log(0.5)).epsilon(1e-14));
  CHECK(r.post_mean == doctest::Approx(2.0 / 3.0));

  const std::vector<double> y{3, 0, 2}, m{5, 2, 4};
  const BinomialHyper h2{2.0, 3.0};
  const double q = testsupport::quadrature_block_evidence(y, m, h2);
  CHECK(std::abs(single(Family::Binomial, y, m, h2).log_evidence - q) < 1e-8);
}

TEST_CASE("BetaObs quadrature converges and respects symmetry") {
  std::mt19937_64 rng(11);
  auto seq = testsupport::random_sequence(Family::BetaObs, 10, rng);
  BetaObsHyper h{10.0, 1.0, 1.0, 64};
  const double g64 = conjugate_block(seq, 0, 10, h).log_evidence;
  h.nodes = 128;
  const double g128 = conjugate_block(seq, 0, 10, h).log_evidence;
  CHECK(std::abs(g64 - g128) < 1e-8);

  const auto sym = single(Family::BetaObs, {0.5}, {1}, BetaObsHyper{7.0, 2.0, 2.0, 64});
  CHECK(sym.post_mean == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("BetaObs posterior mean agrees with importance sampling") {
  std::mt19937_64 rng(5);
  const double phi = 20.0;
  std::gamma_distribution<double> ga(phi * 0.7, 1.0), gb(phi * 0.3, 1.0);
  std::vector<double> y, w(5, 1.0);
  for (int i = 0; i < 5; ++i) {
    const double a = ga(rng), b = gb(rng);
    y.push_back(a / (a + b));
  }
  const BetaObsHyper h{phi, 1.0, 1.0, 64};
  const auto r = single(Family::BetaObs, y, w, h);
  // prior draws as proposals, likelihood as weights
  std::uniform_real_distribution<double> u(0.0, 1.0);
  long double sw = 0, swm = 0;
  for (int s = 0; s < 1000000; ++s) {
    const double mu = u(rng);
    double lw = 0;
    for (double yy : y) {
      lw += (phi * mu - 1) * std::log(yy) + (phi * (1 - mu) - 1) * std::log1p(-yy) -
            (std::lgamma(phi * mu) + std::lgamma(phi * (1 - mu)) - std::lgamma(phi));
    }
    const long double wt = std::exp(static_cast<long double>(lw));
    sw += wt;
    swm += wt * mu;
  }
  const double mc = static_cast<double>(swm / sw);
  CHECK(r.post_mean > 0.0);
  CHECK(r.post_mean < 1.0);
  CHECK(std::abs(r.post_mean - mc) < 3.0 * std::sqrt(r.post_var));
  CHECK(std::abs(r.post_mean - mc) < 1e-2);
}

TEST_CASE("every family matches quadrature on random blocks") {
  std::mt19937_64 rng(2024);
  for (Family f : {Family::Gaussian, Family::Poisson, Family::Binomial, Family::BetaObs}) {
    CAPTURE(family_name(f));
    for (int rep = 0; rep < 40; ++rep) {
      const std::size_t len = 1 + rep % 10;
      const auto s = testsupport::random_sequence(f, len, rng, true);
      const auto h = testsupport::random_hyper(f, rng);
      const double exact = conjugate_block(s, 0, len, h).log_evidence;
      const double quad = testsupport::quadrature_block_evidence(s.y, s.w, h);
      CHECK(std::abs(exact - quad) < 1e-8 * std::max(1.0, std::abs(quad)));
    }
  }
}

TEST_CASE("zero-weight rows contribute nothing") {
  for (Family f : {Family::Gaussian, Family::Poisson, Family::Binomial, Family::BetaObs}) {
    const auto h = default_hyper(f);
    const auto s = row_summary(0.0, 0.0, h);
    CHECK(s.S == 0.0);
    CHECK(s.W == 0.0);
    CHECK(s.H == 0.0);
    CHECK(s.Q == 0.0);
    CHECK(s.count == 0);
  }
}

TEST_CASE("summaries are additive and merged evidences agree") {
  std::mt19937_64 rng(3);
  for (Family f : {Family::Gaussian, Family::Poisson, Family::Binomial}) {
    const auto s = testsupport::random_sequence(f, 9, rng, true);
    const auto h = testsupport::random_hyper(f, rng);
    const auto left = summarize(s, 1, 4, h);
    const auto right = summarize(s, 4, 8, h);
    const auto whole = summarize(s, 1, 8, h);
    const auto merged = left + right;
    CHECK(merged.S == doctest::Approx(whole.S).epsilon(1e-13));
    CHECK(merged.W == doctest::Approx(whole.W).epsilon(1e-13));
    CHECK(merged.H == doctest::Approx(whole.H).epsilon(1e-13));
    CHECK(merged.Q == doctest::Approx(whole.Q).epsilon(1e-13));
    const auto direct = conjugate_block(s, 1, 8, h);
    BlockResult from_merged;
    switch (f) {
      case Family::Gaussian: from_merged = gaussian_block(merged, std::get<GaussianHyper>(h)); break;
      case Family::Poisson: from_merged = poisson_block(merged, std::get<PoissonHyper>(h)); break;
      default: from_merged = binomial_block(merged, std::get<BinomialHyper>(h)); break;
    }
    CHECK(close_rel(from_merged.log_evidence, direct.log_evidence, 1e-12));
  }
}

TEST_CASE("single-point predictive masses sum to one") {
  const BinomialHyper hb{1.7, 0.6};
  for (int m : {1, 4, 9}) {
    double total = 0.0;
    for (int y = 0; y <= m; ++y) {
      total += std::exp(single(Family::Binomial, {double(y)}, {double(m)}, hb).log_evidence);
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-10));
  }
  const PoissonHyper hp{2.3, 0.8};
  double total = 0.0;
  for (int y = 0; y < 2000; ++y) {
    const double p = std::exp(single(Family::Poisson, {double(y)}, {1.5}, hp).log_evidence);
    total += p;
    if (y > 50 && p < 1e-14) break;
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("prefix-sum table equals naive recomputation") {
  std::mt19937_64 rng(9);
  for (Family f : {Family::Gaussian, Family::Poisson, Family::Binomial, Family::BetaObs}) {
    const auto s = testsupport::random_sequence(f, 6, rng, true);
    const auto h = testsupport::random_hyper(f, rng);
    const auto table = precompute_blocks(s, h);
    for (std::size_t i = 0; i < 6; ++i) {
      for (std::size_t j = i + 1; j <= 6; ++j) {
        const auto r = conjugate_block(s, i, j, h);
        CHECK(close_rel(table.log_A0(i, j), r.log_evidence, 1e-12));
        CHECK(close_rel(table.post_mean(i, j), r.post_mean, 1e-12));
        CHECK(close_rel(table.post_var(i, j), r.post_var, 1e-12));
      }
    }
  }
}

TEST_CASE("precompute edge cases") {
  const auto s = make_sequence({1.0}, {0.4}, Family::Gaussian);
  const GaussianHyper h{};
  const auto t = precompute_blocks(s, h);
  CHECK(t.n == 1);
  CHECK(t.log_A0(0, 1) == conjugate_block(s, 0, 1, h).log_evidence);

  std::mt19937_64 rng(1);
  const auto s2 = testsupport::random_sequence(Family::Gaussian, 5, rng);
  const auto plain = precompute_blocks(s2, h);
  const auto absorbed = precompute_blocks(s2, h, LengthFactor::uniform());
  CHECK(absorbed.with_prior);
  CHECK(absorbed.log_A0 == plain.log_A0);
  CHECK(absorbed.post_mean == plain.post_mean);

  const auto geo = precompute_blocks(s2, h, LengthFactor::geometric(0.3));
  CHECK(geo.post_mean == plain.post_mean);
  CHECK(geo.post_var == plain.post_var);
  CHECK_THROWS_AS(absorb_length_factor(geo, LengthFactor::uniform()), InputError);
}

TEST_CASE("hyperparameter validation") {
  CHECK_THROWS_AS(validate(FamilyHyper{GaussianHyper{0.0, -1.0, 1.0}}), InputError);
  CHECK_THROWS_AS(validate(FamilyHyper{PoissonHyper{0.0, 1.0}}), InputError);
  CHECK_THROWS_AS(validate(FamilyHyper{BetaObsHyper{1.0, 1.0, 1.0, 1}}), InputError);
  CHECK_THROWS_AS(gaussian_block(BlockSummaries{}, GaussianHyper{0.0, 1.0, 0.0}), InputError);
}
