#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "bayesbreak/block_families.hpp"
#include "bayesbreak/latent_em.hpp"
#include "bayesbreak/nonconjugate.hpp"
#include "bayesbreak/pipeline.hpp"
#include "bayesbreak/prediction.hpp"

namespace bayesbreak {

using Json = nlohmann::ordered_json;

// Strict readers: every reader rejects keys it does not know, naming `where`.
void reject_unknown_keys(const Json& j, std::initializer_list<const char*> allowed, const std::string& where);

Json to_json(const FamilyHyper& hyper);
FamilyHyper hyper_from_json(const Json& j, Family family);

Json to_json(const LengthFactor& g);
LengthFactor length_factor_from_json(const Json& j);

Json to_json(const CountPriorSpec& p);
CountPriorSpec count_prior_from_json(const Json& j);

Json to_json(const PriorConfig& cfg);
PriorConfig prior_config_from_json(const Json& j);

Json to_json(const SegmentationPosterior& fit, const std::vector<double>& x);
Json to_json(const MixtureState& state, const std::vector<double>& x);

Json to_json(const ExportedModel& m);
ExportedModel model_from_json(const Json& j);
// A file holds one model object or an array of them.
std::vector<ExportedModel> load_models(const std::filesystem::path& path);

Json to_json(const PredictionResult& r);
Json to_json(const SignalPrediction& s, const std::vector<double>& queries);

Json to_json(const StabilityReport& r);

Json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const Json& j);

// Finite doubles as numbers, infinities and NaN as strings.
Json number(double v);

}  // namespace bayesbreak
