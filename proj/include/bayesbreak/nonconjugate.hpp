#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "bayesbreak/block_families.hpp"
#include "bayesbreak/data_model.hpp"
#include "bayesbreak/dp_engine.hpp"
#include "bayesbreak/partition_prior.hpp"

namespace bayesbreak {

// One-parameter canonical GLM blocks: per observation
//   log p(y_t | theta) = (s_t theta - w_t b(theta)) / dispersion + h_t
// with s_t = w_t y_t for the Gaussian link and s_t = y_t otherwise
// (Poisson exposure, Binomial trials carried by w_t).
enum class GlmLink { Identity, Log, Logit };

std::string glm_link_name(GlmLink link);
GlmLink glm_link_for(Family family);  // BetaObs has no canonical GLM form

double glm_b(GlmLink link, double theta);
double glm_b1(GlmLink link, double theta);
double glm_b2(GlmLink link, double theta);
double glm_mean(GlmLink link, double theta);  // m(theta) = E[y | theta]

struct GlmObservation {
  double s = 0.0;
  double w = 0.0;
  double h = 0.0;
};

struct GlmBlock {
  GlmLink link = GlmLink::Logit;
  double dispersion = 1.0;  // sigma^2 for the Gaussian link, 1 otherwise
  double S = 0.0;
  double W = 0.0;
  double H = 0.0;
  std::vector<GlmObservation> obs;  // w = 0 rows are dropped

  double loglik(double theta) const { return (S * theta - W * glm_b(link, theta)) / dispersion + H; }
};

GlmBlock glm_block(const Sequence& seq, std::size_t i, std::size_t j, GlmLink link, double dispersion = 1.0);
GlmBlock glm_block(std::span<const double> y, std::span<const double> w, GlmLink link, double dispersion = 1.0);

// Log-concave prior on theta. Gaussian priors also expose their parameters,
// which the variational and EP routines require.
struct GlmPrior {
  std::function<double(double)> log_pdf;
  std::function<double(double)> d1;
  std::function<double(double)> d2;
  double center = 0.0;
  double scale = 1.0;
  std::optional<double> gaussian_mean;
  std::optional<double> gaussian_var;
};

GlmPrior gaussian_glm_prior(double mean, double var);
// Logistic density on theta: log-concave with heavier tails than a Gaussian.
GlmPrior logistic_glm_prior(double location, double scale);

struct NewtonResult {
  double theta = 0.0;
  double curvature = 0.0;  // -Psi''(theta) > 0
  double psi = 0.0;        // Psi(theta)
  std::size_t iterations = 0;
};

NewtonResult newton_mode(const GlmBlock& block, const GlmPrior& prior);

struct LaplaceResult {
  double theta_hat = 0.0;
  double H_star = 0.0;
  double log_evidence = 0.0;
  double mean = 0.0;  // m(theta_hat)
  double var = 0.0;   // m'(theta_hat)^2 / H_star
};

LaplaceResult laplace_block(const GlmBlock& block, const GlmPrior& prior);

struct VariationalResult {
  double elbo = 0.0;
  double mu = 0.0;  // q(theta) = N(mu, s2)
  double s2 = 0.0;
  double xi = 0.0;
  std::vector<double> trace;        // ELBO after every coordinate update
  std::vector<double> omega_means;  // PG-VB only, per observation
  std::size_t iterations = 0;
  bool converged = false;
  double mean = 0.0;  // E_q[m(theta)]
  double var = 0.0;
};

// Jaakkola-Jordan bound for logistic blocks under a Gaussian prior.
VariationalResult jj_block(const GlmBlock& block, const GlmPrior& prior, double tol = 1e-12,
                           std::size_t max_iter = 1000);

// Polya-Gamma mean-field bound for logistic blocks under a Gaussian prior.
VariationalResult pg_vb_block(const GlmBlock& block, const GlmPrior& prior, double tol = 1e-12,
                              std::size_t max_iter = 1000);

struct EPResult {
  double log_evidence = 0.0;
  double mu = 0.0;
  double s2 = 0.0;
  std::vector<double> site_precision;
  std::vector<double> site_shift;
  std::size_t sweeps = 0;
  std::size_t skipped = 0;  // site updates skipped for a non-positive cavity precision
  bool converged = false;
  double mean = 0.0;
  double var = 0.0;
};

EPResult ep_block(const GlmBlock& block, const GlmPrior& prior, double damping = 0.8,
                  std::size_t max_sweeps = 50, double tol = 1e-10);

// Adaptive quadrature of the block posterior around its mode.
BlockResult quadrature_block(const GlmBlock& block, const GlmPrior& prior, double rel_tol = 1e-13);
// The same reference for Beta observations, integrated on the logit scale.
BlockResult quadrature_betaobs_block(std::span<const double> y, std::span<const double> w,
                                     const BetaObsHyper& hyper, double rel_tol = 1e-13);

enum class BlockMethod { Closed, Laplace, JJ, PGVB, EP, Quadrature };
std::string block_method_name(BlockMethod m);
BlockMethod parse_block_method(const std::string& name);

struct GlmModel {
  GlmLink link = GlmLink::Logit;
  double dispersion = 1.0;
  GlmPrior prior = gaussian_glm_prior(0.0, 4.0);
};

BlockResult glm_block_result(const GlmBlock& block, const GlmModel& model, BlockMethod method);

// Prior-free table of approximate block evidences; feeds the unchanged DP.
BlockEvidenceTable glm_table(const Sequence& seq, const GlmModel& model, BlockMethod method);

struct StabilityReport {
  double epsilon = 0.0;
  std::size_t trials = 0;
  double max_k_odds_dev = 0.0;     // largest |delta log odds(k : k')|
  double max_k_odds_ratio = 0.0;   // largest deviation / ((k + k') eps)
  double max_b_odds_dev = 0.0;     // largest |delta log odds(t_p = h : t_p = h')|
  double max_b_odds_ratio = 0.0;   // largest deviation / (2 k eps)
  double max_sandwich_ratio = 0.0; // largest |delta log L[k][j]| / (k eps)
  std::size_t pairs_checked = 0;
  std::size_t violations = 0;
  std::string first_violation;
};

// Perturbs every finite entry of a table (g already absorbed) by i.i.d.
// uniform [-eps, eps] log errors, reruns the DP and checks the odds bounds.
// The count prior and C_k cancel from every ratio checked, so they are not needed.
StabilityReport stability_harness(const BlockEvidenceTable& table, std::size_t k_max, double epsilon,
                                  std::size_t trials, std::mt19937_64& rng);

}  // namespace bayesbreak
