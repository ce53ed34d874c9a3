#pragma once

#include <cstddef>
#include <vector>

#include "bayesbreak/block_families.hpp"
#include "bayesbreak/data_model.hpp"
#include "bayesbreak/pipeline.hpp"

namespace bayesbreak {

// Subjects sharing boundaries but not segment parameters. `pooled.log_A0` is
// the subject sum with g added once; its moment tables are left empty and the
// per-subject moments are kept alongside.
struct PooledTable {
  BlockEvidenceTable pooled;
  std::vector<TriangularArray> subject_mean;
  std::vector<TriangularArray> subject_var;
};

PooledTable pool_evidences(const std::vector<BlockEvidenceTable>& prior_free,
                           const TriangularArray& log_g);
PooledTable pool_evidences(const std::vector<BlockEvidenceTable>& prior_free, const LengthFactor& g);

struct PooledFit {
  SegmentationPosterior posterior;  // curve and segments left empty
  std::vector<BayesCurve> subject_curves;
  std::vector<std::vector<SegmentMoments>> subject_segments;  // on the shared MAP
};

PooledFit fit_pooled(const std::vector<BlockEvidenceTable>& prior_free, const PriorConfig& cfg);

struct GroupFit {
  int label = 0;
  std::vector<std::size_t> members;  // subject indices, ascending
  PooledFit fit;
};

// One pooled fit per label 1..G. Without labels every subject forms group 1.
std::vector<GroupFit> fit_known_groups(const Dataset& data, const FamilyHyper& hyper,
                                       const PriorConfig& cfg);

// Prior-free tables for every subject, built in parallel.
std::vector<BlockEvidenceTable> subject_tables(const Dataset& data, const FamilyHyper& hyper);

}  // namespace bayesbreak
