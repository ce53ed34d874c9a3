#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace bayesbreak {

enum class Family { Gaussian, Poisson, Binomial, BetaObs };

std::string_view family_name(Family f);
Family parse_family(std::string_view name);

/// One observed sequence on strictly increasing design points. For Binomial
/// data `w` holds the trial counts; for Poisson the exposures; for Gaussian
/// the precision weights. A zero weight marks a missing observation.
struct Sequence {
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> w;
  Family family = Family::Gaussian;

  std::size_t size() const { return x.size(); }
  bool operator==(const Sequence&) const = default;
};

/// Throws InputError describing the first violated invariant.
void validate(const Sequence& s);

/// Builds a sequence with unit weights and validates it.
Sequence make_sequence(std::vector<double> x, std::vector<double> y, Family family,
                       std::vector<double> w = {});

struct Dataset {
  std::vector<Sequence> subjects;
  std::vector<std::string> subject_ids;  // labels as read, parallel to `subjects`
  std::optional<std::vector<int>> group_labels;  // values in 1..G, parallel to `subjects`
  std::vector<double> grid;

  std::size_t n() const { return grid.size(); }
  std::size_t num_subjects() const { return subjects.size(); }
  int num_groups() const;
  bool operator==(const Dataset&) const = default;
};

void validate(const Dataset& d);

/// Expands every sequence onto the sorted union of design points. Indices a
/// subject lacks receive y = 0 and w = 0.
Dataset align_grids(const std::vector<Sequence>& sequences);

enum class DataFormat { Csv, Json };

/// Reads `subject,x,y,w` rows (subject and w optional) from CSV or JSON.
Dataset load_sequences(const std::filesystem::path& path, DataFormat format, Family family);

/// Parses CSV text directly; `source` names the origin in error messages.
Dataset parse_csv(std::string_view text, Family family, std::string_view source = "<csv>");
Dataset parse_json(std::string_view text, Family family, std::string_view source = "<json>");

/// Writes the dataset in long CSV form with every aligned row, so that a
/// reload reproduces it exactly.
void save_csv(const Dataset& d, const std::filesystem::path& path);
std::string to_csv(const Dataset& d);

/// Attaches group labels read from a `subject,group` CSV.
void load_group_labels(Dataset& d, const std::filesystem::path& path);
void parse_group_labels(Dataset& d, std::string_view text, std::string_view source = "<groups>");

}  // namespace bayesbreak
