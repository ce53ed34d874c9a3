#pragma once

#include <cstddef>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "bayesbreak/triangular.hpp"

namespace bayesbreak {

// Segment-length cohesion g. Evaluated on the physical span x_j - x_i of a
// block; the index count j - i is passed along for the index-based kinds.
struct LengthFactor {
  enum class Kind { Uniform, Geometric, GeometricIndex, LengthProportional, MinLength, Custom };

  Kind kind = Kind::Uniform;
  double rho = 0.5;         // hazard for the geometric kinds
  double unit = 1.0;        // physical length of one step for Geometric
  double min_length = 0.0;  // MinLength threshold on the span
  // Custom: log g is linearly interpolated in the span between tabulated
  // points and held constant beyond the ends.
  std::vector<double> custom_dx;
  std::vector<double> custom_log_g;
  // Left edge x_0 of the first block. Defaults to x_1 - (x_2 - x_1).
  std::optional<double> origin;

  static LengthFactor uniform();
  static LengthFactor geometric(double rho, double unit = 1.0);
  static LengthFactor geometric_index(double rho);
  static LengthFactor length_proportional();
  static LengthFactor min_len(double l_min);
  static LengthFactor custom(std::vector<double> dx, std::vector<double> g);

  double log_g(double span, std::size_t count) const;
  bool is_uniform() const { return kind == Kind::Uniform; }
};

std::string length_factor_name(LengthFactor::Kind kind);
LengthFactor::Kind parse_length_factor_kind(const std::string& name);
void validate(const LengthFactor& g);

// Grid with the left edge prepended: element 0 is x_0, element j is x_j.
std::vector<double> extended_grid(std::span<const double> x, const LengthFactor& g);

// log g(x_j - x_i) for every block (i, j].
TriangularArray length_log_table(std::span<const double> x, const LengthFactor& g);

// log C_k from the g-only forward recursion. log_C[0] is unused (-inf);
// log_L holds the full recursion so that it can be sampled from.
struct PriorNormalizers {
  std::vector<double> log_C;
  std::vector<std::vector<double>> log_L;
  std::size_t k_max = 0;
  std::size_t n = 0;
};

PriorNormalizers compute_Ck(const TriangularArray& log_g, std::size_t k_max);
PriorNormalizers compute_Ck(std::span<const double> x, const LengthFactor& g, std::size_t k_max);

// log p(k) indexed by k = 0..k_max, entry 0 is -inf.
struct CountPrior {
  std::vector<double> log_p;
  std::size_t k_max() const { return log_p.empty() ? 0 : log_p.size() - 1; }
};

struct CountPriorSpec {
  enum class Kind { Uniform, Geometric, Custom, Renewal };
  Kind kind = Kind::Uniform;
  double q = 0.5;              // Geometric: p(k) proportional to (1-q)^(k-1)
  double rho = 0.5;            // Renewal: per-boundary hazard
  std::vector<double> table;   // Custom: unnormalized p(1..k_max)
};

std::string count_prior_name(CountPriorSpec::Kind kind);
CountPriorSpec::Kind parse_count_prior_kind(const std::string& name);

CountPrior uniform_count_prior(std::size_t k_max);
CountPrior geometric_count_prior(std::size_t k_max, double q);
CountPrior custom_count_prior(std::span<const double> weights);
// Prior of a renewal process with boundary hazard rho whose segment lengths
// carry weight g: p(k) proportional to rho^(k-1) C_k.
CountPrior renewal_count_prior(const PriorNormalizers& norm, double rho);
CountPrior make_count_prior(const CountPriorSpec& spec, const PriorNormalizers& norm);

// Exact draw from p(t | k) proportional to prod g, by backward sampling
// through the g-only forward table. Returns t_0 = 0 < ... < t_k = n.
std::vector<std::size_t> sample_renewal(const TriangularArray& log_g, const PriorNormalizers& norm,
                                        std::size_t k, std::mt19937_64& rng);

}  // namespace bayesbreak
