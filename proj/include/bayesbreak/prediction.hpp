#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bayesbreak/block_families.hpp"
#include "bayesbreak/data_model.hpp"
#include "bayesbreak/pipeline.hpp"

namespace bayesbreak {

// Posterior hyperparameters of one exported segment. Gaussian uses
// (a, b) = (nu_B, rho_B^2); Poisson, Binomial and BetaObs use the Gamma or
// Beta parameters. BetaObs is moment matched to a Beta law on the mean.
struct SegmentPosterior {
  double a = 0.0;
  double b = 0.0;
  double mean = 0.0;  // E[m(theta) | segment]
  double var = 0.0;
};

struct BayesGrid {
  std::vector<double> x;
  std::vector<double> mean;
  std::vector<double> var;
};

struct ExportedModel {
  std::string label;
  FamilyHyper hyper;
  // Interior boundaries in x, each the midpoint between the last point of one
  // segment and the first of the next. Segment s covers (b_{s-1}, b_s].
  std::vector<double> boundaries_x;
  std::vector<std::size_t> boundaries_index;  // 0 = t_0 < ... < t_k = n on the training grid
  std::vector<SegmentPosterior> segments;
  std::optional<BayesGrid> bayes_grid;
  double x_min = 0.0;
  double x_max = 0.0;

  Family family() const { return family_of(hyper); }
  std::size_t segment_of(double x) const;
};

void validate(const ExportedModel& m);

// Hyperparameters of the segment posterior given the rows it contains; the
// rows may come from several subjects.
SegmentPosterior segment_posterior(std::span<const double> y, std::span<const double> w, const FamilyHyper& hyper);

// The prior with its hyperparameters replaced by the segment posterior.
FamilyHyper predictive_hyper(const FamilyHyper& hyper, const SegmentPosterior& seg);

// Builds an export from training subjects sharing `boundaries` on `grid`.
ExportedModel export_model(const std::vector<Sequence>& subjects, const FamilyHyper& hyper,
                           const std::vector<std::size_t>& boundaries, std::optional<BayesGrid> curve = {},
                           std::string label = "1");
ExportedModel export_fit(const Sequence& seq, const FamilyHyper& hyper, const SegmentationPosterior& fit,
                         std::string label = "1");

// log p(y_new | segment posterior) for rows assigned to one segment.
double segment_predictive(std::span<const double> y, std::span<const double> w, const ExportedModel& model,
                          std::size_t segment);

struct PredictionResult {
  std::vector<std::string> labels;
  std::vector<double> log_liks;
  std::vector<double> group_posterior;
  std::vector<std::vector<double>> unit_resp;  // U x G when units were scored
  std::vector<std::string> warnings;
};

// Empty `prior` means uniform over groups.
PredictionResult score_pointwise(const Sequence& data, const std::vector<ExportedModel>& models,
                                 std::vector<double> prior = {});

struct PredictionUnit {
  double a = 0.0;  // support (a, b]
  double b = 0.0;
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> w;
};

void validate(const PredictionUnit& u);

PredictionResult score_units(const std::vector<PredictionUnit>& units, const std::vector<ExportedModel>& models,
                             std::vector<double> prior = {});

// dims[l] is dimension l of the new data; models[g][l] the matching model of group g.
PredictionResult score_vector_response(const std::vector<Sequence>& dims,
                                       const std::vector<std::vector<ExportedModel>>& models,
                                       std::vector<double> prior = {});

struct SignalPrediction {
  std::vector<double> value;
  std::vector<double> var;
  std::vector<bool> clamped;  // query fell outside [x_min, x_max]
  std::vector<std::string> warnings;
};

SignalPrediction predict_map_signal(const ExportedModel& model, std::span<const double> queries);
SignalPrediction predict_bayes_signal(const ExportedModel& model, std::span<const double> queries);

// Reruns the full pipeline on the new data under each group's configuration
// and returns log sum_k p(k) P(new | k) per group.
struct GroupConfig {
  FamilyHyper hyper;
  PriorConfig prior;
};
std::vector<double> rescore_by_resegmentation(const Sequence& data, const std::vector<GroupConfig>& groups);

}  // namespace bayesbreak
