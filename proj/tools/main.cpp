#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "bayesbreak/numeric.hpp"
#include "commands.hpp"

using namespace bayesbreak;
using namespace bayesbreak::cli;

namespace {

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<std::string> data;
  std::optional<std::string> format;
  std::optional<std::string> groups;
  std::optional<std::string> family;
  std::optional<std::string> hyper;
  std::optional<std::string> g;
  std::optional<std::string> p_k;
  std::optional<std::size_t> k_max;
  std::optional<std::string> block_method;
};

void add_common(CLI::App* app, CommonFlags& f, bool with_data) {
  app->add_option("--config", f.config, "JSON run configuration");
  app->add_option("--seed", f.seed, "random seed");
  app->add_option("--out-dir", f.out_dir, "directory for output files");
  app->add_option("--family", f.family, "gaussian, poisson, binomial or betaobs");
  if (!with_data) return;
  app->add_option("--data", f.data, "input data file");
  app->add_option("--format", f.format, "csv or json");
  app->add_option("--groups", f.groups, "subject,group label file");
  app->add_option("--hyper", f.hyper, "family hyperparameters as inline JSON");
  app->add_option("--g", f.g, "length factor kind (uniform, poisson, min_length, ...)");
  app->add_option("--p-k", f.p_k, "segment count prior kind (uniform, geometric, renewal)");
  app->add_option("--k-max", f.k_max, "largest number of segments");
  app->add_option("--block-method", f.block_method, "closed, laplace, jj, pg_vb, ep or quadrature");
}

RunConfig resolve(const CommonFlags& f) {
  RunConfig cfg = f.config.empty() ? RunConfig{} : load_config(f.config);
  if (f.seed) cfg.seed = *f.seed;
  if (f.out_dir) cfg.out_dir = *f.out_dir;
  if (f.data) cfg.data = *f.data;
  if (f.format) cfg.format = *f.format;
  if (f.groups) cfg.groups_file = *f.groups;
  if (f.family) cfg.family = parse_family(*f.family);
  if (f.hyper) {
    try {
      cfg.hyper_json = Json::parse(*f.hyper);
    } catch (const nlohmann::json::exception& e) {
      throw InputError(std::string("--hyper: ") + e.what());
    }
  }
  if (f.g) cfg.prior.g = length_factor_from_json(Json(*f.g));
  if (f.p_k) cfg.prior.p_k = count_prior_from_json(Json(*f.p_k));
  if (f.k_max) cfg.prior.k_max = *f.k_max;
  if (f.block_method) cfg.block_method = parse_block_method(*f.block_method);
  if (cfg.prior.k_max == 0) throw InputError("k_max must be at least 1");
  (void)cfg.hyper();  // validates against the final family
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"bayesbreak: exact Bayesian changepoint inference"};
  app.require_subcommand(1);

  CommonFlags common;

  auto* fit = app.add_subcommand("fit", "segment one sequence, or pool several");
  add_common(fit, common, true);

  auto* em = app.add_subcommand("em", "cluster subjects into groups with shared boundaries");
  add_common(em, common, true);
  std::optional<std::size_t> em_groups, em_restarts;
  std::optional<std::string> em_objective;
  em->add_option("--num-groups", em_groups, "number of latent groups");
  em->add_option("--restarts", em_restarts, "random restarts");
  em->add_option("--objective", em_objective, "exact or displayed");

  auto* predict = app.add_subcommand("predict", "score or forecast new data with exported models");
  add_common(predict, common, true);
  PredictOptions popt;
  predict->add_option("--model", popt.models, "model file (repeatable)")->required();
  predict->add_option("--mode", popt.mode, "pointwise, units, map, bayes or resegment");
  predict->add_option("--group-prior", popt.prior, "prior weight per model");

  auto* verify = app.add_subcommand("verify", "check the engine against brute-force oracles");
  add_common(verify, common, false);
  VerifyCliOptions vopt;
  verify->add_option("--instances", vopt.instances, "random instances per family");
  verify->add_flag("--corrupt", vopt.corrupt, "perturb one block before the recursions (must fail)");

  auto* bench = app.add_subcommand("benchmark", "time the exact pipeline");
  add_common(bench, common, false);
  BenchmarkOptions bopt;
  bench->add_option("--sizes", bopt.sizes, "sequence lengths");
  bench->add_option("--k-max", bopt.k_max, "segment count limits");
  bench->add_option("--reps", bopt.reps, "repetitions per cell");
  bench->add_flag("--tradeoff", bopt.tradeoff, "also compare the nonconjugate block methods");

  auto* cal = app.add_subcommand("calibrate", "reliability of boundary probabilities on simulated data");
  add_common(cal, common, false);
  CalibrateOptions copt;
  cal->add_option("--reps", copt.reps, "simulated sequences");
  cal->add_option("--n", copt.n, "sequence length");
  cal->add_option("--snr", copt.snr, "jump size over noise sd");
  cal->add_option("--jumps", copt.jumps, "changepoints per sequence");
  cal->add_option("--bins", copt.bins, "reliability bins");

  auto* sim = app.add_subcommand("simulate", "write a synthetic data set with known boundaries");
  add_common(sim, common, false);
  std::optional<std::size_t> s_n, s_jumps, s_subjects, s_min_gap;
  std::optional<double> s_jump, s_sigma, s_missing;
  sim->add_option("--n", s_n, "sequence length");
  sim->add_option("--jumps", s_jumps, "changepoints");
  sim->add_option("--jump", s_jump, "jump size on the natural scale");
  sim->add_option("--sigma", s_sigma, "Gaussian noise sd");
  sim->add_option("--subjects", s_subjects, "subjects sharing the boundaries");
  sim->add_option("--min-gap", s_min_gap, "minimum segment length");
  sim->add_option("--missing", s_missing, "probability a point is missing");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    RunConfig cfg = resolve(common);
    if (fit->parsed()) return cmd_fit(cfg);
    if (em->parsed()) {
      if (em_groups) cfg.em.groups = *em_groups;
      if (em_restarts) cfg.em.restarts = *em_restarts;
      if (em_objective) cfg.em.objective = parse_mstep_objective(*em_objective);
      return cmd_em(cfg);
    }
    if (predict->parsed()) return cmd_predict(cfg, popt);
    if (verify->parsed()) return cmd_verify(cfg, vopt);
    if (bench->parsed()) return cmd_benchmark(cfg, bopt);
    if (cal->parsed()) {
      copt.sigma = 1.0;
      return cmd_calibrate(cfg, copt);
    }
    if (sim->parsed()) {
      SimSpec spec = default_sim_spec(cfg.family);
      if (s_n) spec.n = *s_n;
      if (s_jumps) spec.jumps = *s_jumps;
      if (s_jump) spec.jump = *s_jump;
      if (s_sigma) spec.sigma = *s_sigma;
      if (s_subjects) spec.subjects = *s_subjects;
      if (s_min_gap) spec.min_gap = *s_min_gap;
      if (s_missing) spec.missing = *s_missing;
      return cmd_simulate(cfg, spec);
    }
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 3;
  } catch (const VerificationFailure& e) {
    std::cerr << "verification failed: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
