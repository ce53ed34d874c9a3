#include "bayesbreak/pipeline.hpp"

#include <algorithm>

#include "bayesbreak/numeric.hpp"

namespace bayesbreak {

PriorTables build_prior(std::span<const double> grid, const PriorConfig& cfg) {
  if (cfg.k_max < 1) throw InputError("k_max must be at least 1");
  const std::size_t k_max = std::min(cfg.k_max, grid.size());
  PriorTables t;
  t.log_g = length_log_table(grid, cfg.g);
  t.norm = compute_Ck(t.log_g, k_max);
  t.prior = make_count_prior(cfg.p_k, t.norm);
  return t;
}

SegmentationPosterior fit_absorbed(const BlockEvidenceTable& table, PriorTables pt, bool has_moments) {
  if (!table.with_prior) throw InputError("fit_absorbed expects a table carrying the length factor");
  const std::size_t k_max = pt.norm.k_max;
  SegmentationPosterior out;
  out.grid = table.grid;
  out.k_max = k_max;
  out.msgs = forward_backward(table, k_max);
  out.count = posterior_k(out.msgs, pt.norm, pt.prior);
  const std::size_t k = out.count.k_hat;
  for (std::size_t p = 1; p < k; ++p) out.boundary_marginals.push_back(boundary_marginal(out.msgs, k, p));
  out.boundary_event = boundary_event_probs(out.msgs, k);
  out.boundary_event_avg = averaged_boundary_event_probs(out.msgs, out.count);
  const auto ms = maxsum_forward(table.log_A0, k_max);
  out.map = map_segmentation(ms, k);
  if (has_moments) {
    out.curve = bayes_curve(out.msgs, table, k);
    out.segments = segment_moments_fixed(table, out.map.boundaries);
  }
  out.norm = std::move(pt.norm);
  out.prior = std::move(pt.prior);
  return out;
}

SegmentationPosterior fit_table(const BlockEvidenceTable& prior_free, const PriorConfig& cfg) {
  if (prior_free.with_prior) throw InputError("fit_table expects a table without the length factor");
  auto pt = build_prior(prior_free.grid, cfg);
  const auto table = absorb_length_factor(prior_free, pt.log_g);
  return fit_absorbed(table, std::move(pt));
}

SegmentationPosterior fit_sequence(const Sequence& seq, const FamilyHyper& hyper,
                                   const PriorConfig& cfg) {
  return fit_table(precompute_blocks(seq, hyper), cfg);
}

double log_marginal_evidence(const BlockEvidenceTable& prior_free, const PriorConfig& cfg) {
  auto pt = build_prior(prior_free.grid, cfg);
  const auto table = absorb_length_factor(prior_free, pt.log_g);
  const auto msgs = forward_backward(table, pt.norm.k_max);
  return posterior_k(msgs, pt.norm, pt.prior).log_marginal;
}

}  // namespace bayesbreak
