#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "bayesbreak/block_families.hpp"
#include "bayesbreak/data_model.hpp"
#include "bayesbreak/pipeline.hpp"

namespace bayesbreak {

struct Template {
  std::size_t k = 1;
  std::vector<std::size_t> t;  // 0 = t_0 < ... < t_k = n
  bool operator==(const Template&) const = default;
};

// How the template update weighs the prior terms. Exact maximizes
// sum_s r_sg log p(y_s | tau): log g and log p(k) - log C_k are scaled by
// R_g = sum_s r_sg. Displayed adds them once, unscaled.
enum class MStepObjective { Exact, Displayed };

std::string mstep_objective_name(MStepObjective o);
MStepObjective parse_mstep_objective(const std::string& name);

struct EmConfig {
  std::size_t groups = 2;
  PriorConfig prior;
  double tol = 1e-8;
  std::size_t max_iter = 200;
  std::size_t restarts = 5;
  std::uint64_t seed = 1;
  MStepObjective objective = MStepObjective::Exact;
};

// Prior-free subject tables plus the prior pieces shared by every subject.
struct EmProblem {
  std::vector<BlockEvidenceTable> tables;
  PriorTables prior;
  std::size_t n() const { return tables.front().n; }
};

EmProblem make_em_problem(std::vector<BlockEvidenceTable> tables, const PriorConfig& cfg);

struct MixtureState {
  std::vector<double> pi;
  std::vector<Template> templates;
  std::vector<std::vector<double>> resp;  // S x G
  std::vector<double> obs_loglik;         // trace, starting at the initial state
  std::vector<std::string> warnings;
  std::size_t iterations = 0;
  bool converged = false;
  std::size_t restart = 0;  // which restart produced this state
};

// log p(k) - log C_k + sum_q [log A_s(block q) + log g(block q)].
double template_loglik(const BlockEvidenceTable& subject, const Template& tau, const TriangularArray& log_g,
                       const PriorNormalizers& norm, const CountPrior& prior);

// S x G matrix of template log-likelihoods.
std::vector<std::vector<double>> template_logliks(const EmProblem& prob, const std::vector<Template>& templates);

double observed_loglik(const std::vector<double>& pi, const std::vector<std::vector<double>>& ll);

std::vector<std::vector<double>> estep(const std::vector<double>& pi,
                                       const std::vector<std::vector<double>>& ll);

// Q_g(tau) for one group under the chosen objective.
double template_objective(const EmProblem& prob, const std::vector<double>& resp_g, const Template& tau,
                          MStepObjective objective);

struct MStepResult {
  std::vector<double> pi;
  std::vector<Template> templates;
  std::vector<double> q;  // attained Q_g
  std::vector<std::size_t> reset;  // groups whose weight vanished
};

// Closed-form weights and exact template maximization. Groups with zero
// weight keep a template redrawn from `rng`.
MStepResult mstep(const EmProblem& prob, const std::vector<std::vector<double>>& resp,
                  MStepObjective objective, std::mt19937_64& rng);

// Random restart state: uniform weights, templates drawn from the g = 1
// renewal prior with k uniform.
std::vector<Template> random_templates(const EmProblem& prob, std::size_t groups, std::mt19937_64& rng);

MixtureState em_run(const EmProblem& prob, std::vector<double> pi, std::vector<Template> templates,
                    const EmConfig& cfg, std::mt19937_64& rng);

// Best of cfg.restarts runs by final observed log-likelihood.
MixtureState em_fit(const EmProblem& prob, const EmConfig& cfg);
MixtureState em_fit(const Dataset& data, const FamilyHyper& hyper, const EmConfig& cfg);

std::vector<int> hard_assignments(const MixtureState& state);  // 1-based group per subject

}  // namespace bayesbreak
