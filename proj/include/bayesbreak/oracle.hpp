#pragma once

#include <cstddef>
#include <vector>

#include "bayesbreak/block_families.hpp"
#include "bayesbreak/partition_prior.hpp"

namespace bayesbreak {

// All boundary vectors 0 = t_0 < ... < t_k = n in lexicographic order.
std::vector<std::vector<std::size_t>> enumerate_segmentations(std::size_t n, std::size_t k);

struct BruteFixedK {
  bool feasible = false;
  double log_C = 0.0;         // log sum_t prod g
  double log_evidence = 0.0;  // log P(y | k)
  std::vector<std::vector<double>> marginals;  // [p-1][h], p = 1..k-1
  std::vector<double> event;                   // P(h is a boundary | y, k), h = 0..n
  std::vector<double> mean;                    // Bayes curve, t = 1..n
  std::vector<double> var;
  std::vector<std::size_t> map;  // joint MAP on log A0 + log g
  double map_score = 0.0;
};

struct BrutePosterior {
  std::size_t n = 0;
  std::size_t k_max = 0;
  std::vector<BruteFixedK> per_k;  // index k; entry 0 unused
  std::vector<double> post_k;      // index k
  std::size_t k_hat = 0;
  std::size_t k_map = 0;  // argmax_k max_t score + log p(k) - log C_k
};

inline constexpr std::size_t kOracleMaxN = 12;

// Exhaustive posterior from a prior-free table. Evaluates g on the grid itself
// and sums over every segmentation in extended precision.
BrutePosterior brute_posterior(const BlockEvidenceTable& prior_free, const LengthFactor& g,
                               const CountPriorSpec& p_k, std::size_t k_max);

// log sum_t prod_q g prod_s A_s for subjects sharing the boundaries.
double brute_pooled_log_evidence(const std::vector<BlockEvidenceTable>& subjects,
                                 const LengthFactor& g, std::size_t k);

}  // namespace bayesbreak
