// Acceptance checks, one line per criterion. Usage: acceptance <path to bayesbreak>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "../unit/test_support.hpp"
#include "bayesbreak/block_families.hpp"
#include "bayesbreak/latent_em.hpp"
#include "bayesbreak/metrics.hpp"
#include "bayesbreak/nonconjugate.hpp"
#include "bayesbreak/numeric.hpp"
#include "bayesbreak/pipeline.hpp"
#include "bayesbreak/simulate.hpp"
#include "bayesbreak/verify.hpp"
#include "commands.hpp"

using namespace bayesbreak;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string summary(const CheckResult& c) {
  std::ostringstream s;
  s << c.name << " " << c.cases << " cases, " << c.mismatches << " mismatches, max err " << c.max_error;
  if (!c.first_mismatch.empty()) s << " [" << c.first_mismatch << "]";
  return s.str();
}

constexpr Family kFamilies[] = {Family::Gaussian, Family::Poisson, Family::Binomial, Family::BetaObs};

Outcome oracle_equivalence() {
  const auto t0 = std::chrono::steady_clock::now();
  VerifyOptions opt;
  opt.instances = 200;
  opt.seed = 11;
  opt.tol = 1e-9;
  const auto r = verify_dp_oracle(opt);
  const double secs = seconds_since(t0);
  std::ostringstream s;
  s << summary(r) << ", " << secs << " s";
  return {r.mismatches == 0 && r.cases == 4 * opt.instances && secs < 60.0, s.str()};
}

Outcome closed_forms() {
  std::mt19937_64 rng(12);
  std::size_t bad = 0, cases = 0;
  double worst = 0.0;
  for (Family f : kFamilies) {
    for (int rep = 0; rep < 100; ++rep) {
      const auto s = testsupport::random_sequence(f, 1 + rep % 10, rng, true);
      const auto h = testsupport::random_hyper(f, rng);
      const double closed = conjugate_block(s, 0, s.size(), h).log_evidence;
      const double quad = testsupport::quadrature_block_evidence(s.y, s.w, h);
      const double rel = std::abs(closed - quad) / std::max(1.0, std::abs(quad));
      worst = std::max(worst, rel);
      ++cases;
      if (!(rel <= 1e-8)) ++bad;
    }
  }
  std::ostringstream s;
  s << cases << " blocks against Gauss-Kronrod, " << bad << " outside 1e-8, worst rel err " << worst;
  return {bad == 0, s.str()};
}

Outcome pooling() {
  VerifyOptions opt;
  opt.instances = 200;  // S cycles 1..3, n cycles 1..6
  opt.seed = 13;
  const auto r = verify_pooling(opt);
  return {r.mismatches == 0 && r.cases > 0, summary(r)};
}

Outcome em_monotone() {
  std::mt19937_64 rng(14);
  // two groups of four subjects with different boundaries
  std::vector<BlockEvidenceTable> tables;
  const GaussianHyper h{0.0, 16.0, 1.0};
  for (auto bounds : {std::vector<std::size_t>{10, 24}, std::vector<std::size_t>{16, 30}}) {
    SimSpec spec;
    spec.n = 40;
    spec.boundaries = bounds;
    spec.subjects = 4;
    spec.jump = 2.5;
    const auto sim = simulate(spec, rng);
    for (const auto& seq : sim.data.subjects) tables.push_back(precompute_blocks(seq, h));
  }
  PriorConfig pc;
  pc.k_max = 5;
  const auto prob = make_em_problem(tables, pc);
  EmConfig cfg;
  cfg.groups = 2;
  cfg.prior = pc;
  std::size_t drops = 0, steps = 0;
  double worst = 0.0;
  for (int restart = 0; restart < 20; ++restart) {
    std::mt19937_64 r(1000 + restart);
    auto templates = random_templates(prob, cfg.groups, r);
    const auto state = em_run(prob, std::vector<double>(cfg.groups, 1.0 / double(cfg.groups)), templates, cfg, r);
    for (std::size_t i = 1; i < state.obs_loglik.size(); ++i) {
      const double d = state.obs_loglik[i] - state.obs_loglik[i - 1];
      ++steps;
      worst = std::min(worst, d);
      if (d < -1e-9) ++drops;
    }
  }
  VerifyOptions opt;
  opt.instances = 100;
  opt.seed = 14;
  const auto m = verify_mstep(opt);
  std::ostringstream s;
  s << "20 restarts, " << steps << " EM steps, " << drops << " decreases (most negative step " << worst << "); "
    << summary(m);
  return {drops == 0 && steps > 0 && m.mismatches == 0, s.str()};
}

struct Binomials {
  std::vector<double> y, m;
};

double logistic_reference(const Binomials& b, double mean, double var) {
  auto lf = [&](double t) {
    double s = testsupport::log_normal_pdf(t, mean, var);
    const double lp = -std::log1p(std::exp(-t)), lq = -std::log1p(std::exp(t));
    for (std::size_t i = 0; i < b.y.size(); ++i) {
      s += std::lgamma(b.m[i] + 1) - std::lgamma(b.y[i] + 1) - std::lgamma(b.m[i] - b.y[i] + 1) + b.y[i] * lp +
           (b.m[i] - b.y[i]) * lq;
    }
    return s;
  };
  return testsupport::log_integral(lf, mean, 0.05);
}

Outcome variational_bounds() {
  std::mt19937_64 rng(15);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::size_t above = 0, trace_drops = 0, blocks = 0;
  for (int rep = 0; rep < 100; ++rep) {
    Binomials b;
    const double p = 0.05 + 0.9 * u(rng);
    const std::size_t len = 1 + rep % 12;
    for (std::size_t t = 0; t < len; ++t) {
      const int m = 1 + int(u(rng) * 10);
      b.m.push_back(m);
      b.y.push_back(std::binomial_distribution<int>(m, p)(rng));
    }
    const double mean = 2.0 * u(rng) - 1.0, var = 0.3 + 4.0 * u(rng);
    const auto block = glm_block(b.y, b.m, GlmLink::Logit);
    const auto prior = gaussian_glm_prior(mean, var);
    const double truth = logistic_reference(b, mean, var);
    for (const auto& r : {jj_block(block, prior), pg_vb_block(block, prior)}) {
      ++blocks;
      if (r.elbo > truth + 1e-9) ++above;
      for (std::size_t i = 1; i < r.trace.size(); ++i) {
        if (r.trace[i] < r.trace[i - 1] - 1e-9) ++trace_drops;
      }
    }
  }
  std::ostringstream s;
  s << blocks << " JJ/PG-VB blocks, " << above << " above quadrature, " << trace_drops << " ELBO decreases";
  return {above == 0 && trace_drops == 0, s.str()};
}

Outcome laplace() {
  std::mt19937_64 rng(16);
  double worst = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    const auto s = testsupport::random_sequence(Family::Gaussian, 1 + rep % 9, rng, true);
    const auto h = std::get<GaussianHyper>(testsupport::random_hyper(Family::Gaussian, rng));
    const auto lap = laplace_block(glm_block(s.y, s.w, GlmLink::Identity, h.sigma2), gaussian_glm_prior(h.nu, h.rho2));
    const double exact = conjugate_block(s, 0, s.size(), h).log_evidence;
    worst = std::max(worst, std::abs(lap.log_evidence - exact) / std::max(1.0, std::abs(exact)));
  }
  // fixed success rate 1/2 at two trials per point
  std::vector<double> errs;
  for (std::size_t W : {2u, 8u, 32u}) {
    Binomials b;
    for (std::size_t t = 0; t < W / 2; ++t) {
      b.y.push_back(1.0);
      b.m.push_back(2.0);
    }
    const auto prior = gaussian_glm_prior(1.0, 4.0);
    const auto lap = laplace_block(glm_block(b.y, b.m, GlmLink::Logit), prior);
    errs.push_back(std::abs(lap.log_evidence - logistic_reference(b, 1.0, 4.0)));
  }
  const bool decreasing = errs[1] < errs[0] && errs[2] < errs[1];
  std::ostringstream s;
  s << "Gaussian max rel err " << worst << "; logistic errors at W=2,8,32: " << errs[0] << ", " << errs[1] << ", "
    << errs[2];
  return {worst <= 1e-12 && decreasing, s.str()};
}

Outcome stability() {
  std::mt19937_64 rng(17);
  std::size_t violations = 0, pairs = 0;
  double worst_k = 0.0, worst_b = 0.0;
  for (Family f : kFamilies) {
    const auto s = testsupport::random_sequence(f, 12, rng);
    const auto table = precompute_blocks(s, testsupport::random_hyper(f, rng), LengthFactor::geometric(0.3));
    for (double eps : {0.001, 0.01, 0.05}) {
      const auto r = stability_harness(table, 4, eps, 100, rng);
      violations += r.violations;
      pairs += r.pairs_checked;
      worst_k = std::max(worst_k, r.max_k_odds_ratio);
      worst_b = std::max(worst_b, r.max_b_odds_ratio);
    }
  }
  std::ostringstream s;
  s << pairs << " odds pairs, " << violations << " violations; largest fraction of bound used: counts " << worst_k
    << ", boundaries " << worst_b;
  return {violations == 0 && pairs > 0, s.str()};
}

Outcome calibration() {
  const auto t0 = std::chrono::steady_clock::now();
  cli::CalibrateOptions opt;  // 200 replications, n = 100, two jumps, SNR 4
  const auto run = cli::run_calibration(opt, 18);
  const auto cal = reliability(run.prob, run.outcome, opt.bins);
  const double secs = seconds_since(t0);
  std::ostringstream s;
  s << "ECE " << cal.ece << ", bin rank correlation " << cal.rank_corr << ", " << secs << " s";
  return {cal.ece <= 0.05 && cal.rank_corr >= 0.8 && secs < 300.0, s.str()};
}

Outcome runtime_scaling() {
  cli::BenchmarkOptions opt;
  opt.reps = 9;
  const auto cells = cli::run_benchmark(opt, 19);
  const double slope = cli::loglog_slope(cells, 10);
  bool slower = true;
  for (const auto& a : cells) {
    if (a.k_max != 10) continue;
    for (const auto& b : cells) {
      if (b.k_max == 20 && b.n == a.n && !(b.median > a.median)) slower = false;
    }
  }
  std::ostringstream s;
  s << "slope at k_max=10: " << slope << "; k_max=20 slower at every n: " << (slower ? "yes" : "no");
  return {slope >= 1.6 && slope <= 2.4 && slower, s.str()};
}

FamilyHyper recovery_hyper(Family f) {
  switch (f) {
    case Family::Gaussian: return GaussianHyper{0.0, 16.0, 1.0};
    case Family::Poisson: return PoissonHyper{1.0, 0.2};
    case Family::Binomial: return BinomialHyper{1.0, 1.0};
    case Family::BetaObs: return BetaObsHyper{30.0, 1.0, 1.0};
  }
  return GaussianHyper{};
}

// High-SNR fixture: default generator jumps scaled by 1.5, geometric count
// prior, boundaries called where posterior mass within +-2 indices reaches 1/2.
Outcome boundary_recovery() {
  std::ostringstream s;
  bool pass = true;
  PriorConfig pc;
  pc.p_k = CountPriorSpec{CountPriorSpec::Kind::Geometric, 0.5};
  for (Family f : kFamilies) {
    BoundaryMatch total;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      std::mt19937_64 rng(seed);
      auto spec = default_sim_spec(f);
      spec.jump *= 1.5;
      const auto sim = simulate(spec, rng);
      const auto fit = fit_sequence(sim.data.subjects.front(), recovery_hyper(f), pc);
      const auto m = boundary_f1(sim.boundaries, boundary_calls(fit.boundary_event_avg, 2), 2);
      total.true_positive += m.true_positive;
      total.n_true += m.n_true;
      total.n_est += m.n_est;
    }
    const double prec = total.n_est ? double(total.true_positive) / double(total.n_est) : 1.0;
    const double rec = total.n_true ? double(total.true_positive) / double(total.n_true) : 1.0;
    const double f1 = prec + rec > 0 ? 2 * prec * rec / (prec + rec) : 0.0;
    const double need = f == Family::Poisson ? 0.8 : 1.0;
    if (f1 < need) pass = false;
    s << family_name(f) << " F1 " << f1 << " (" << total.n_est - total.true_positive << " extra, "
      << total.n_true - total.true_positive << " missed) ";
  }
  return {pass, s.str()};
}

int run_cli(const std::string& cmd) {
  const int st = std::system(cmd.c_str());
  return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

Outcome cli_verify(const std::string& exe) {
  const std::string out = "acceptance_verify";
  const int ok = run_cli(exe + " verify --out-dir " + out + " > " + out + ".log 2>&1");
  const int bad = run_cli(exe + " verify --corrupt --out-dir " + out + "_corrupt > " + out + "_corrupt.log 2>&1");
  std::ostringstream s;
  s << "verify exit " << ok << ", verify --corrupt exit " << bad;
  return {ok == 0 && bad == 4, s.str()};
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << "usage: acceptance <path to bayesbreak>\n";
    return 2;
  }
  const std::string exe = argv[1];
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"oracle equivalence", oracle_equivalence},
      {"closed forms vs quadrature", closed_forms},
      {"pooling exactness", pooling},
      {"EM monotonicity and M-step argmax", em_monotone},
      {"variational bound validity", variational_bounds},
      {"Laplace exactness and trend", laplace},
      {"stability bounds", stability},
      {"calibration", calibration},
      {"runtime scaling", runtime_scaling},
      {"boundary recovery", boundary_recovery},
      {"verify command and negative control", [&] { return cli_verify(exe); }},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::cout << (o.pass ? "PASS" : "FAIL") << " " << (i + 1) << " " << criteria[i].first << ": " << o.detail
              << std::endl;
  }
  std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed" << std::endl;
  return failed == 0 ? 0 : 1;
}
