#pragma once

#include <cstddef>
#include <vector>

#include "bayesbreak/block_families.hpp"
#include "bayesbreak/dp_engine.hpp"
#include "bayesbreak/map_engine.hpp"
#include "bayesbreak/partition_prior.hpp"

namespace bayesbreak {

struct PriorConfig {
  LengthFactor g;
  CountPriorSpec p_k;
  std::size_t k_max = 10;
};

// Everything the single-sequence routine produces. Marginals, the curve and
// the MAP export are all taken at k_hat = argmax P(k | y).
struct SegmentationPosterior {
  std::vector<double> grid;
  std::size_t k_max = 0;  // after clamping to n
  CountPosterior count;
  std::vector<std::vector<double>> boundary_marginals;  // p = 1..k_hat-1, each over h = 0..n
  std::vector<double> boundary_event;      // at k_hat, h = 0..n
  std::vector<double> boundary_event_avg;  // averaged over P(k | y)
  BayesCurve curve;
  MapResult map;
  std::vector<SegmentMoments> segments;  // moments on the MAP segmentation
  PriorNormalizers norm;
  CountPrior prior;
  DPMessages msgs;
};

// Builds normalizers and the count prior for a grid.
struct PriorTables {
  TriangularArray log_g;
  PriorNormalizers norm;
  CountPrior prior;
};
PriorTables build_prior(std::span<const double> grid, const PriorConfig& cfg);

// Runs both passes on a table that already carries g from `pt`. With
// has_moments false the curve and segment moments are left empty.
SegmentationPosterior fit_absorbed(const BlockEvidenceTable& with_g, PriorTables pt,
                                   bool has_moments = true);

// Runs the sum-product and max-sum passes on a table that does not yet carry g.
SegmentationPosterior fit_table(const BlockEvidenceTable& prior_free, const PriorConfig& cfg);
SegmentationPosterior fit_sequence(const Sequence& seq, const FamilyHyper& hyper,
                                   const PriorConfig& cfg);

// log sum_k p(k) P(y | k) for a prior-free table.
double log_marginal_evidence(const BlockEvidenceTable& prior_free, const PriorConfig& cfg);

}  // namespace bayesbreak
