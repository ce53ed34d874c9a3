#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "bayesbreak/latent_em.hpp"
#include "bayesbreak/nonconjugate.hpp"
#include "bayesbreak/pipeline.hpp"
#include "bayesbreak/serialize.hpp"
#include "bayesbreak/simulate.hpp"

namespace bayesbreak::cli {

// Exit code 4.
class VerificationFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct GlmSettings {
  std::string prior = "gaussian";  // or "logistic"
  double location = 0.0;
  double scale2 = 4.0;  // variance (gaussian) or squared scale (logistic)
  bool explicit_prior = false;
};

struct RunConfig {
  Family family = Family::Gaussian;
  std::optional<Json> hyper_json;  // resolved once the family is final
  PriorConfig prior;
  BlockMethod block_method = BlockMethod::Closed;
  GlmSettings glm;
  EmConfig em;
  std::uint64_t seed = 1;
  std::string data;
  std::string format = "csv";
  std::string groups_file;
  std::filesystem::path out_dir = ".";

  FamilyHyper hyper() const;
};

RunConfig load_config(const std::filesystem::path& path);

int cmd_fit(const RunConfig& cfg);
int cmd_em(const RunConfig& cfg);

struct PredictOptions {
  std::vector<std::string> models;
  std::string mode = "pointwise";  // pointwise | units | map | bayes | resegment
  std::vector<double> prior;
};
int cmd_predict(const RunConfig& cfg, const PredictOptions& opt);

struct VerifyCliOptions {
  std::size_t instances = 50;
  bool corrupt = false;
};
int cmd_verify(const RunConfig& cfg, const VerifyCliOptions& opt);

struct BenchmarkOptions {
  std::vector<std::size_t> sizes{50, 100, 200, 400};
  std::vector<std::size_t> k_max{10, 20};
  std::size_t reps = 5;
  bool tradeoff = false;
  std::size_t tradeoff_n = 40;
};
int cmd_benchmark(const RunConfig& cfg, const BenchmarkOptions& opt);

struct CalibrateOptions {
  std::size_t reps = 200;
  std::size_t n = 100;
  double snr = 4.0;
  double sigma = 1.0;
  std::size_t jumps = 2;
  std::size_t bins = 10;
};
int cmd_calibrate(const RunConfig& cfg, const CalibrateOptions& opt);

int cmd_simulate(const RunConfig& cfg, const SimSpec& spec);

// Pieces shared with the acceptance checks.
struct BenchmarkCell {
  std::size_t n = 0;
  std::size_t k_max = 0;
  double mean = 0.0;
  double sd = 0.0;
  double median = 0.0;
};
std::vector<BenchmarkCell> run_benchmark(const BenchmarkOptions& opt, std::uint64_t seed);
// Least squares of log median time on log n.
double loglog_slope(const std::vector<BenchmarkCell>& cells, std::size_t k_max);

struct CalibrationRun {
  std::vector<double> prob;
  std::vector<int> outcome;
};
CalibrationRun run_calibration(const CalibrateOptions& opt, std::uint64_t seed);

}  // namespace bayesbreak::cli
