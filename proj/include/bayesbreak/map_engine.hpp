#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "bayesbreak/partition_prior.hpp"
#include "bayesbreak/triangular.hpp"

namespace bayesbreak {

// M[k][j]: best summed block score over k-segmentations of (0, j].
// back[k][j]: the maximizing last split point, smallest on ties.
struct MaxSumTables {
  std::size_t n = 0;
  std::size_t k_max = 0;
  std::vector<std::vector<double>> M;
  std::vector<std::vector<std::size_t>> back;
};

MaxSumTables maxsum_forward(const TriangularArray& scores, std::size_t k_max);

std::vector<std::size_t> backtrack(const MaxSumTables& tables, std::size_t k);

// argmax_k M[k][n] + log p(k) - log C_k, smallest k on ties.
std::size_t select_k_map(const MaxSumTables& tables, const PriorNormalizers& norm,
                         const CountPrior& prior);
// argmax_k M[k][n] + offset[k] for an arbitrary per-k offset.
std::size_t select_k_with_offsets(const MaxSumTables& tables, std::span<const double> offset);

struct MapResult {
  std::size_t k_used = 0;
  std::vector<std::size_t> boundaries;
  double score = 0.0;  // M[k_used][n]
};

MapResult map_segmentation(const MaxSumTables& tables, std::size_t k);

}  // namespace bayesbreak
