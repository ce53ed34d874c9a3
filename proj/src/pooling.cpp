#include "bayesbreak/pooling.hpp"

#include <map>

#include "bayesbreak/numeric.hpp"

namespace bayesbreak {

PooledTable pool_evidences(const std::vector<BlockEvidenceTable>& tables,
                           const TriangularArray& log_g) {
  if (tables.empty()) throw InputError("pooling needs at least one subject");
  const std::size_t n = tables.front().n;
  PooledTable out;
  out.pooled.n = n;
  out.pooled.grid = tables.front().grid;
  out.pooled.log_A0 = TriangularArray(n, 0.0);
  for (const auto& t : tables) {
    if (t.n != n) throw InputError("pooled subjects must share the grid size");
    if (t.with_prior) throw InputError("pooling expects tables without the length factor");
    if (t.grid != out.pooled.grid) throw InputError("pooled subjects must share the grid");
  }
  if (log_g.n() != n) throw InputError("length-factor table does not match the grid");
  auto& acc = out.pooled.log_A0.raw();
  for (const auto& t : tables) {
    const auto& src = t.log_A0.raw();
    for (std::size_t c = 0; c < acc.size(); ++c) acc[c] += src[c];
    out.subject_mean.push_back(t.post_mean);
    out.subject_var.push_back(t.post_var);
  }
  const auto& lg = log_g.raw();
  for (std::size_t c = 0; c < acc.size(); ++c) acc[c] += lg[c];
  out.pooled.with_prior = true;
  return out;
}

PooledTable pool_evidences(const std::vector<BlockEvidenceTable>& tables, const LengthFactor& g) {
  if (tables.empty()) throw InputError("pooling needs at least one subject");
  return pool_evidences(tables, length_log_table(tables.front().grid, g));
}

PooledFit fit_pooled(const std::vector<BlockEvidenceTable>& tables, const PriorConfig& cfg) {
  if (tables.empty()) throw InputError("pooling needs at least one subject");
  auto pt = build_prior(tables.front().grid, cfg);
  const auto pooled = pool_evidences(tables, pt.log_g);
  PooledFit out;
  out.posterior = fit_absorbed(pooled.pooled, std::move(pt), false);
  const std::size_t k = out.posterior.count.k_hat;
  for (std::size_t s = 0; s < tables.size(); ++s) {
    out.subject_curves.push_back(bayes_curve(out.posterior.msgs, pooled.pooled.log_A0,
                                             pooled.subject_mean[s], pooled.subject_var[s], k));
    out.subject_segments.push_back(segment_moments_fixed(tables[s], out.posterior.map.boundaries));
  }
  return out;
}

std::vector<BlockEvidenceTable> subject_tables(const Dataset& data, const FamilyHyper& hyper) {
  std::vector<BlockEvidenceTable> out(data.subjects.size());
  // each precompute is itself parallel over i; keep the outer loop serial
  for (std::size_t s = 0; s < data.subjects.size(); ++s) out[s] = precompute_blocks(data.subjects[s], hyper);
  return out;
}

std::vector<GroupFit> fit_known_groups(const Dataset& data, const FamilyHyper& hyper,
                                       const PriorConfig& cfg) {
  if (data.subjects.empty()) throw InputError("dataset has no subjects");
  const auto tables = subject_tables(data, hyper);
  std::map<int, std::vector<std::size_t>> members;
  int g_count = 1;
  if (data.group_labels) {
    if (data.group_labels->size() != data.subjects.size()) {
      throw InputError("group labels do not cover every subject");
    }
    for (std::size_t s = 0; s < data.subjects.size(); ++s) members[(*data.group_labels)[s]].push_back(s);
    g_count = data.num_groups();
  } else {
    for (std::size_t s = 0; s < data.subjects.size(); ++s) members[1].push_back(s);
  }
  std::vector<GroupFit> out;
  for (int g = 1; g <= g_count; ++g) {
    auto it = members.find(g);
    if (it == members.end()) throw InputError("group " + std::to_string(g) + " has no subjects");
    std::vector<BlockEvidenceTable> group;
    for (std::size_t s : it->second) group.push_back(tables[s]);
    GroupFit gf;
    gf.label = g;
    gf.members = it->second;
    gf.fit = fit_pooled(group, cfg);
    out.push_back(std::move(gf));
  }
  return out;
}

}  // namespace bayesbreak
