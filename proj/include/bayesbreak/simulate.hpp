#pragma once

#include <cstddef>
#include <random>
#include <vector>

#include "bayesbreak/data_model.hpp"

namespace bayesbreak {

// Piecewise-constant synthetic data on the grid x = 1..n. The jump size is
// in noise sd units for Gaussian data and on the log (Poisson) or logit
// (Binomial, BetaObs) scale otherwise.
struct SimSpec {
  Family family = Family::Gaussian;
  std::size_t n = 100;
  std::size_t jumps = 2;
  std::vector<std::size_t> boundaries;  // interior indices; drawn at random when empty
  std::size_t min_gap = 10;             // minimum segment length for random boundaries
  double jump = 4.0;
  double sigma = 1.0;     // Gaussian noise sd
  double base = 0.0;      // first-segment level on the family's natural scale
  double trials = 20.0;   // Binomial trials per point
  double phi = 30.0;      // BetaObs precision
  std::size_t subjects = 1;
  double missing = 0.0;   // probability that a point is dropped (w = 0)
};

struct SimResult {
  Dataset data;
  std::vector<std::size_t> boundaries;  // interior, ascending
  std::vector<double> signal;           // observation-scale mean per index
};

SimResult simulate(const SimSpec& spec, std::mt19937_64& rng);

// Jump sizes where the default `jump` is not meaningful for the family.
SimSpec default_sim_spec(Family family);

}  // namespace bayesbreak
