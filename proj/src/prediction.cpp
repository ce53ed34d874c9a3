#include "bayesbreak/prediction.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "bayesbreak/numeric.hpp"

namespace bayesbreak {

namespace {

BlockSummaries summarize_rows(std::span<const double> y, std::span<const double> w, const FamilyHyper& hyper) {
  BlockSummaries s;
  for (std::size_t t = 0; t < y.size(); ++t) {
    if (w[t] > 0.0) s += row_summary(y[t], w[t], hyper);
  }
  return s;
}

BlockResult rows_block(std::span<const double> y, std::span<const double> w, const FamilyHyper& hyper) {
  if (y.size() != w.size()) throw InputError("y and w differ in length");
  switch (family_of(hyper)) {
    case Family::Gaussian: return gaussian_block(summarize_rows(y, w, hyper), std::get<GaussianHyper>(hyper));
    case Family::Poisson: return poisson_block(summarize_rows(y, w, hyper), std::get<PoissonHyper>(hyper));
    case Family::Binomial: return binomial_block(summarize_rows(y, w, hyper), std::get<BinomialHyper>(hyper));
    case Family::BetaObs: return betaobs_block(y, w, std::get<BetaObsHyper>(hyper));
  }
  return {};
}

std::vector<double> normalized_prior(std::vector<double> prior, std::size_t groups) {
  if (groups == 0) throw InputError("no group models to score against");
  if (prior.empty()) prior.assign(groups, 1.0 / double(groups));
  if (prior.size() != groups) {
    throw InputError("group prior has " + std::to_string(prior.size()) + " entries for " + std::to_string(groups) +
                     " models");
  }
  double total = 0.0;
  for (double p : prior) {
    if (!(p >= 0.0) || !std::isfinite(p)) throw InputError("group prior entries must be finite and nonnegative");
    total += p;
  }
  if (!(total > 0.0)) throw InputError("group prior sums to zero");
  for (double& p : prior) p /= total;
  return prior;
}

std::vector<double> posterior_from(const std::vector<double>& prior, const std::vector<double>& ll) {
  std::vector<double> lw(ll.size());
  for (std::size_t g = 0; g < ll.size(); ++g) lw[g] = std::log(prior[g]) + ll[g];
  normalize_log_weights(lw);
  return lw;
}

// Sum of segment predictives for the rows of one sequence under one model.
double score_rows(std::span<const double> x, std::span<const double> y, std::span<const double> w,
                  const ExportedModel& model, std::size_t& outside) {
  const std::size_t k = model.segments.size();
  std::vector<std::vector<double>> ys(k), ws(k);
  for (std::size_t t = 0; t < x.size(); ++t) {
    if (x[t] < model.x_min || x[t] > model.x_max) ++outside;
    const std::size_t s = model.segment_of(x[t]);
    ys[s].push_back(y[t]);
    ws[s].push_back(w[t]);
  }
  double total = 0.0;
  for (std::size_t s = 0; s < k; ++s) {
    if (!ys[s].empty()) total += segment_predictive(ys[s], ws[s], model, s);
  }
  return total;
}

void check_family(Family data, const ExportedModel& m) {
  if (data != m.family()) {
    throw InputError("data family " + std::string(family_name(data)) + " does not match model '" + m.label +
                     "' family " + std::string(family_name(m.family())));
  }
}

}  // namespace

std::size_t ExportedModel::segment_of(double x) const {
  return static_cast<std::size_t>(std::lower_bound(boundaries_x.begin(), boundaries_x.end(), x) -
                                  boundaries_x.begin());
}

void validate(const ExportedModel& m) {
  validate(m.hyper);
  if (m.segments.empty()) throw InputError("model '" + m.label + "' has no segments");
  if (m.boundaries_x.size() + 1 != m.segments.size()) {
    throw InputError("model '" + m.label + "' has " + std::to_string(m.boundaries_x.size()) +
                     " interior boundaries for " + std::to_string(m.segments.size()) + " segments");
  }
  if (!(m.x_min <= m.x_max)) throw InputError("model '" + m.label + "' has an empty domain");
  double prev = m.x_min;
  for (double b : m.boundaries_x) {
    if (!(b > prev) || !(b < m.x_max)) {
      throw InputError("model '" + m.label + "' boundaries must increase strictly inside the domain");
    }
    prev = b;
  }
  for (const auto& s : m.segments) {
    const bool gaussian = m.family() == Family::Gaussian;
    if (!std::isfinite(s.a) || !(s.b > 0.0) || (!gaussian && !(s.a > 0.0))) {
      throw InputError("model '" + m.label + "' has invalid segment hyperparameters");
    }
  }
  if (m.bayes_grid) {
    const auto& g = *m.bayes_grid;
    if (g.x.empty() || g.x.size() != g.mean.size() || g.x.size() != g.var.size()) {
      throw InputError("model '" + m.label + "' bayes_grid columns differ in length");
    }
    if (!std::is_sorted(g.x.begin(), g.x.end()) ||
        std::adjacent_find(g.x.begin(), g.x.end()) != g.x.end()) {
      throw InputError("model '" + m.label + "' bayes_grid x is not strictly increasing");
    }
  }
}

SegmentPosterior segment_posterior(std::span<const double> y, std::span<const double> w, const FamilyHyper& hyper) {
  SegmentPosterior p;
  switch (family_of(hyper)) {
    case Family::Gaussian: {
      const auto r = rows_block(y, w, hyper);
      p.a = p.mean = r.post_mean;
      p.b = p.var = r.post_var;
      break;
    }
    case Family::Poisson: {
      const auto& h = std::get<PoissonHyper>(hyper);
      const auto s = summarize_rows(y, w, hyper);
      p.a = h.a0 + s.S;
      p.b = h.b0 + s.W;
      p.mean = p.a / p.b;
      p.var = p.a / (p.b * p.b);
      break;
    }
    case Family::Binomial: {
      const auto& h = std::get<BinomialHyper>(hyper);
      const auto s = summarize_rows(y, w, hyper);
      p.a = h.a0 + s.S;
      p.b = h.b0 + s.W - s.S;
      const double c = p.a + p.b;
      p.mean = p.a / c;
      p.var = p.a * p.b / (c * c * (c + 1.0));
      break;
    }
    case Family::BetaObs: {
      const auto& h = std::get<BetaObsHyper>(hyper);
      const auto r = rows_block(y, w, hyper);
      p.mean = r.post_mean;
      p.var = r.post_var;
      const double c = p.mean * (1.0 - p.mean) / p.var - 1.0;
      if (std::isfinite(c) && c > 0.0) {
        p.a = p.mean * c;
        p.b = (1.0 - p.mean) * c;
      } else {
        p.a = h.a0;
        p.b = h.b0;
      }
      break;
    }
  }
  return p;
}

FamilyHyper predictive_hyper(const FamilyHyper& hyper, const SegmentPosterior& seg) {
  switch (family_of(hyper)) {
    case Family::Gaussian: return GaussianHyper{seg.a, seg.b, std::get<GaussianHyper>(hyper).sigma2};
    case Family::Poisson: return PoissonHyper{seg.a, seg.b};
    case Family::Binomial: return BinomialHyper{seg.a, seg.b};
    case Family::BetaObs: {
      auto h = std::get<BetaObsHyper>(hyper);
      h.a0 = seg.a;
      h.b0 = seg.b;
      return h;
    }
  }
  return hyper;
}

ExportedModel export_model(const std::vector<Sequence>& subjects, const FamilyHyper& hyper,
                           const std::vector<std::size_t>& boundaries, std::optional<BayesGrid> curve,
                           std::string label) {
  if (subjects.empty()) throw InputError("export needs at least one training subject");
  const auto& x = subjects.front().x;
  const std::size_t n = x.size();
  validate_boundaries(boundaries, n);
  for (const auto& s : subjects) {
    if (s.x != x) throw InputError("exported subjects must share one grid");
  }
  ExportedModel m;
  m.label = std::move(label);
  m.hyper = hyper;
  m.boundaries_index = boundaries;
  m.x_min = x.front();
  m.x_max = x.back();
  for (std::size_t p = 1; p + 1 < boundaries.size(); ++p) {
    m.boundaries_x.push_back(0.5 * (x[boundaries[p] - 1] + x[boundaries[p]]));
  }
  for (std::size_t p = 1; p < boundaries.size(); ++p) {
    std::vector<double> y, w;
    for (const auto& s : subjects) {
      for (std::size_t t = boundaries[p - 1]; t < boundaries[p]; ++t) {
        y.push_back(s.y[t]);
        w.push_back(s.w[t]);
      }
    }
    m.segments.push_back(segment_posterior(y, w, hyper));
  }
  m.bayes_grid = std::move(curve);
  validate(m);
  return m;
}

ExportedModel export_fit(const Sequence& seq, const FamilyHyper& hyper, const SegmentationPosterior& fit,
                         std::string label) {
  std::optional<BayesGrid> grid;
  if (!fit.curve.mean.empty()) grid = BayesGrid{seq.x, fit.curve.mean, fit.curve.var};
  return export_model({seq}, hyper, fit.map.boundaries, std::move(grid), std::move(label));
}

double segment_predictive(std::span<const double> y, std::span<const double> w, const ExportedModel& model,
                          std::size_t segment) {
  if (segment >= model.segments.size()) throw InputError("segment index out of range");
  return rows_block(y, w, predictive_hyper(model.hyper, model.segments[segment])).log_evidence;
}

PredictionResult score_pointwise(const Sequence& data, const std::vector<ExportedModel>& models,
                                 std::vector<double> prior) {
  if (data.size() == 0) throw InputError("no new data to score");
  validate(data);
  prior = normalized_prior(std::move(prior), models.size());
  PredictionResult r;
  std::size_t outside = 0;
  for (const auto& m : models) {
    check_family(data.family, m);
    r.labels.push_back(m.label);
    std::size_t out_m = 0;
    r.log_liks.push_back(score_rows(data.x, data.y, data.w, m, out_m));
    outside = std::max(outside, out_m);
  }
  if (outside > 0) {
    r.warnings.push_back(std::to_string(outside) + " new point(s) outside a model domain were assigned to the edge segment");
  }
  r.group_posterior = posterior_from(prior, r.log_liks);
  return r;
}

void validate(const PredictionUnit& u) {
  if (u.x.size() != u.y.size() || u.x.size() != u.w.size()) throw InputError("unit columns differ in length");
  if (!(u.a < u.b)) throw InputError("unit support (a, b] is empty");
  for (std::size_t r = 0; r < u.x.size(); ++r) {
    if (!(u.x[r] > u.a && u.x[r] <= u.b)) throw InputError("unit point x=" + std::to_string(u.x[r]) + " lies outside its support");
    if (r > 0 && !(u.x[r] > u.x[r - 1])) throw InputError("unit points are not strictly increasing in x");
  }
}

PredictionResult score_units(const std::vector<PredictionUnit>& units, const std::vector<ExportedModel>& models,
                             std::vector<double> prior) {
  prior = normalized_prior(std::move(prior), models.size());
  PredictionResult r;
  r.log_liks.assign(models.size(), 0.0);
  for (const auto& m : models) r.labels.push_back(m.label);
  std::size_t outside = 0;
  for (const auto& u : units) {
    validate(u);
    std::vector<double> ll(models.size());
    for (std::size_t g = 0; g < models.size(); ++g) {
      ll[g] = score_rows(u.x, u.y, u.w, models[g], outside);
      r.log_liks[g] += ll[g];
    }
    r.unit_resp.push_back(posterior_from(prior, ll));
  }
  if (outside > 0) r.warnings.push_back("some unit points fell outside a model domain and were assigned to the edge segment");
  r.group_posterior = posterior_from(prior, r.log_liks);
  return r;
}

PredictionResult score_vector_response(const std::vector<Sequence>& dims,
                                       const std::vector<std::vector<ExportedModel>>& models,
                                       std::vector<double> prior) {
  if (dims.empty()) throw InputError("vector response has no dimensions");
  prior = normalized_prior(std::move(prior), models.size());
  PredictionResult r;
  for (std::size_t g = 0; g < models.size(); ++g) {
    if (models[g].size() != dims.size()) {
      throw InputError("group " + std::to_string(g + 1) + " has " + std::to_string(models[g].size()) +
                       " dimension models for " + std::to_string(dims.size()) + "-dimensional data");
    }
    r.labels.push_back(models[g].front().label);
    double total = 0.0;
    for (std::size_t l = 0; l < dims.size(); ++l) {
      const auto one = score_pointwise(dims[l], {models[g][l]});
      total += one.log_liks.front();
      for (const auto& wmsg : one.warnings) r.warnings.push_back("dimension " + std::to_string(l + 1) + ": " + wmsg);
    }
    r.log_liks.push_back(total);
  }
  r.group_posterior = posterior_from(prior, r.log_liks);
  return r;
}

SignalPrediction predict_map_signal(const ExportedModel& model, std::span<const double> queries) {
  SignalPrediction p;
  std::size_t clamped = 0;
  for (double q : queries) {
    const auto& s = model.segments[model.segment_of(q)];
    p.value.push_back(s.mean);
    p.var.push_back(s.var);
    const bool out = q < model.x_min || q > model.x_max;
    p.clamped.push_back(out);
    clamped += out;
  }
  if (clamped > 0) p.warnings.push_back(std::to_string(clamped) + " query point(s) outside the model domain were clamped");
  return p;
}

SignalPrediction predict_bayes_signal(const ExportedModel& model, std::span<const double> queries) {
  if (!model.bayes_grid) {
    throw InputError("model '" + model.label + "' carries no Bayes curve; use the MAP signal mode");
  }
  const auto& g = *model.bayes_grid;
  SignalPrediction p;
  std::size_t clamped = 0;
  for (double q : queries) {
    const auto it = std::upper_bound(g.x.begin(), g.x.end(), q);
    const std::size_t i = it == g.x.begin() ? 0 : static_cast<std::size_t>(it - g.x.begin()) - 1;
    p.value.push_back(g.mean[i]);
    p.var.push_back(g.var[i]);
    const bool out = q < g.x.front() || q > g.x.back();
    p.clamped.push_back(out);
    clamped += out;
  }
  if (clamped > 0) p.warnings.push_back(std::to_string(clamped) + " query point(s) outside the model domain were clamped");
  return p;
}

std::vector<double> rescore_by_resegmentation(const Sequence& data, const std::vector<GroupConfig>& groups) {
  validate(data);
  std::vector<double> out;
  for (const auto& g : groups) {
    if (family_of(g.hyper) != data.family) throw InputError("group configuration family does not match the data");
    out.push_back(log_marginal_evidence(precompute_blocks(data, g.hyper), g.prior));
  }
  return out;
}

}  // namespace bayesbreak
