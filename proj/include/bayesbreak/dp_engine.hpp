#pragma once

#include <cstddef>
#include <vector>

#include "bayesbreak/block_families.hpp"
#include "bayesbreak/partition_prior.hpp"
#include "bayesbreak/triangular.hpp"

namespace bayesbreak {

// Prefix and suffix log evidences. logL[k][j] sums over k-segmentations of
// (0, j]; logR[k][i] over k-segmentations of (i, n].
struct DPMessages {
  std::size_t n = 0;
  std::size_t k_max = 0;
  std::vector<std::vector<double>> logL;
  std::vector<std::vector<double>> logR;
};

DPMessages forward_backward(const TriangularArray& log_A0, std::size_t k_max);
DPMessages forward_backward(const BlockEvidenceTable& table, std::size_t k_max);

struct CountPosterior {
  std::vector<double> log_evidence;  // log P(y | k), index k; entry 0 is -inf
  std::vector<double> post;          // P(k | y), index k; entry 0 is 0
  std::size_t k_hat = 0;
  double log_marginal = 0.0;  // log sum_k p(k) P(y | k)
};

CountPosterior posterior_k(const DPMessages& msgs, const PriorNormalizers& norm,
                           const CountPrior& prior);

// P(t_p = h | y, k) for h = 0..n (zero outside the admissible range).
std::vector<double> boundary_marginal(const DPMessages& msgs, std::size_t k, std::size_t p);

// P(h is a boundary | y, k) for 1 <= h <= n-1.
double boundary_event_prob(const DPMessages& msgs, std::size_t k, std::size_t h);
// The same for every h = 0..n; entries 0 and n are 0.
std::vector<double> boundary_event_probs(const DPMessages& msgs, std::size_t k);
// Boundary-event probabilities averaged over P(k | y).
std::vector<double> averaged_boundary_event_probs(const DPMessages& msgs,
                                                  const CountPosterior& post);

struct BayesCurve {
  std::vector<double> mean;      // index t-1 for t = 1..n
  std::vector<double> var;
  std::vector<double> coverage;  // sum of block weights covering t; 1 up to rounding
};

// Curve within k segments. Block weights come from `log_A0` (the table the
// messages were built from); moments may come from a different table, which
// is how pooled fits report each subject's curve.
BayesCurve bayes_curve(const DPMessages& msgs, const TriangularArray& log_A0,
                       const TriangularArray& post_mean, const TriangularArray& post_var,
                       std::size_t k);
BayesCurve bayes_curve(const DPMessages& msgs, const BlockEvidenceTable& table, std::size_t k);

struct SegmentMoments {
  std::size_t begin = 0;  // block (begin, end]
  std::size_t end = 0;
  double mean = 0.0;
  double var = 0.0;
};

std::vector<SegmentMoments> segment_moments_fixed(const BlockEvidenceTable& table,
                                                  const std::vector<std::size_t>& t);

// Throws InputError unless t is 0 = t_0 < ... < t_k = n.
void validate_boundaries(const std::vector<std::size_t>& t, std::size_t n);

}  // namespace bayesbreak
