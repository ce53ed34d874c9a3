#pragma once

#include <cstddef>
#include <vector>

namespace bayesbreak {

// Interior boundaries only (indices strictly between 0 and n).
struct BoundaryMatch {
  std::size_t true_positive = 0;
  std::size_t n_true = 0;
  std::size_t n_est = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// Greedy one-to-one matching, closest pairs first, within `tau` indices.
// Two empty sets score F1 = 1.
BoundaryMatch boundary_f1(const std::vector<std::size_t>& truth, const std::vector<std::size_t>& est,
                          std::size_t tau);

// Interior boundary calls from per-index boundary probabilities (index 0..n):
// repeatedly take the window of half-width tau with the most mass, call its
// most probable index if that mass reaches `threshold`, and clear the window.
std::vector<std::size_t> boundary_calls(const std::vector<double>& event, std::size_t tau, double threshold = 0.5);

// Mean over true boundaries of the distance to the nearest estimate.
double boundary_mae(const std::vector<std::size_t>& truth, const std::vector<std::size_t>& est);

double signal_mse(const std::vector<double>& truth, const std::vector<double>& est);

double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b);

struct ReliabilityBin {
  double lower = 0.0;
  double upper = 0.0;
  std::size_t count = 0;
  double mean_pred = 0.0;
  double frequency = 0.0;
};

struct Calibration {
  std::vector<ReliabilityBin> bins;
  double ece = 0.0;        // count-weighted |frequency - mean prediction|
  double rank_corr = 0.0;  // Spearman over non-empty bins
};

// Equal-width bins on [0,1]; the last bin is closed.
Calibration reliability(const std::vector<double>& prob, const std::vector<int>& outcome, std::size_t bins = 10);

}  // namespace bayesbreak
