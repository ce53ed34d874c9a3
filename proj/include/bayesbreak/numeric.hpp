#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace bayesbreak {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();
inline constexpr double kLog2Pi = 1.8378770664093454835606594728112;

/// Raised for malformed input data or configuration (CLI exit code 2).
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when a numerical routine fails to converge or hits a singularity
/// (CLI exit code 3).
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// -inf aware; an empty span yields -inf.
double logsumexp(std::span<const double> v);

inline double logaddexp(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double m = a > b ? a : b;
  return m + std::log1p(std::exp(-std::abs(a - b)));
}

inline double log_beta(double a, double b) {
  return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

inline double log_binomial_coef(double m, double y) {
  return std::lgamma(m + 1.0) - std::lgamma(y + 1.0) - std::lgamma(m - y + 1.0);
}

// Normalizes log weights in place to probabilities (max-shifted).
// Returns the log normalizer; throws NumericError if every entry is -inf.
double normalize_log_weights(std::vector<double>& log_w);

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Gauss-Legendre rule with `n` nodes on the interval (a, b).
QuadratureRule gauss_legendre(std::size_t n, double a = -1.0, double b = 1.0);
// Gaussian rule for expectations under Beta(a, b) on (0,1); weights sum to one.
QuadratureRule gauss_beta(std::size_t n, double a, double b);
// Gaussian rule for expectations under N(0, 1); weights sum to one.
QuadratureRule gauss_hermite(std::size_t n);

/// Result of integrating exp(log_f) over a one-dimensional domain, along with
/// the first two moments of a user-supplied transform m(theta) under the
/// normalized density.
struct LogIntegral {
  double log_value = kNegInf;
  double mean = 0.0;      // E[m(theta)]
  double variance = 0.0;  // V[m(theta)]
  double theta_mode = 0.0;
  std::size_t panels = 0;
};

struct LogDensity1D {
  std::function<double(double)> log_f;
  double lower = -std::numeric_limits<double>::infinity();
  double upper = std::numeric_limits<double>::infinity();
  double guess = 0.0;  // starting point for the mode search
  double scale = 1.0;  // rough width of the density
};

/// Mode-centred composite Gauss-Legendre integration of a unimodal density.
/// Panels are doubled until the log integral and the moments of `transform`
/// are stable to `rel_tol`.
LogIntegral integrate_unimodal(const LogDensity1D& density,
                               const std::function<double(double)>& transform,
                               double rel_tol = 1e-13,
                               std::size_t max_panels = 1 << 14);

/// Golden-section search for the maximizer of a unimodal function on [a, b].
double golden_section_max(const std::function<double(double)>& f, double a, double b,
                          double tol = 1e-12);

/// Spearman rank correlation (average ranks for ties).
double spearman(std::span<const double> a, std::span<const double> b);

}  // namespace bayesbreak
