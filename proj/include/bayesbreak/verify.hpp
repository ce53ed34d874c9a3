#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "bayesbreak/block_families.hpp"
#include "bayesbreak/data_model.hpp"
#include "bayesbreak/serialize.hpp"

namespace bayesbreak {

// Random small instances shared by the verification suite and the tests.
Sequence random_instance(Family family, std::size_t n, std::mt19937_64& rng, bool allow_missing = false);
FamilyHyper random_hyper(Family family, std::mt19937_64& rng);

// The closed-form block evidence recomputed by adaptive quadrature over the
// natural parameter, with the conjugate prior written as a density on theta.
double quadrature_log_evidence(std::span<const double> y, std::span<const double> w, const FamilyHyper& hyper);

struct CheckResult {
  std::string name;
  std::size_t cases = 0;
  std::size_t mismatches = 0;
  double max_error = 0.0;
  std::string first_mismatch;
  double seconds = 0.0;
};

struct VerifyOptions {
  std::size_t instances = 50;  // per family for the DP and quadrature checks
  std::uint64_t seed = 1;
  double tol = 1e-9;            // exactness checks
  double quadrature_tol = 1e-8;
  // Adds an offset to one block of every table before the DP runs, while the
  // oracle keeps the true table. Every check that involves the DP must fail.
  bool corrupt = false;
};

struct VerifyReport {
  std::uint64_t seed = 0;
  bool corrupt = false;
  std::vector<CheckResult> checks;
  bool passed() const;
};

CheckResult verify_dp_oracle(const VerifyOptions& opt);
CheckResult verify_closed_forms(const VerifyOptions& opt);
CheckResult verify_pooling(const VerifyOptions& opt);
CheckResult verify_mstep(const VerifyOptions& opt);

VerifyReport run_verification(const VerifyOptions& opt);

Json to_json(const VerifyReport& r);

}  // namespace bayesbreak
