#include "bayesbreak/partition_prior.hpp"

#include <algorithm>
#include <cmath>

#include "bayesbreak/numeric.hpp"

namespace bayesbreak {

LengthFactor LengthFactor::uniform() { return {}; }

LengthFactor LengthFactor::geometric(double rho, double unit) {
  LengthFactor g;
  g.kind = Kind::Geometric;
  g.rho = rho;
  g.unit = unit;
  return g;
}

LengthFactor LengthFactor::geometric_index(double rho) {
  LengthFactor g;
  g.kind = Kind::GeometricIndex;
  g.rho = rho;
  return g;
}

LengthFactor LengthFactor::length_proportional() {
  LengthFactor g;
  g.kind = Kind::LengthProportional;
  return g;
}

LengthFactor LengthFactor::min_len(double l_min) {
  LengthFactor g;
  g.kind = Kind::MinLength;
  g.min_length = l_min;
  return g;
}

LengthFactor LengthFactor::custom(std::vector<double> dx, std::vector<double> g) {
  LengthFactor f;
  f.kind = Kind::Custom;
  f.custom_dx = std::move(dx);
  f.custom_log_g.reserve(g.size());
  for (double v : g) f.custom_log_g.push_back(v > 0.0 ? std::log(v) : kNegInf);
  return f;
}

double LengthFactor::log_g(double span, std::size_t count) const {
  switch (kind) {
    case Kind::Uniform:
      return 0.0;
    case Kind::Geometric:
      return (span / unit - 1.0) * std::log1p(-rho);
    case Kind::GeometricIndex:
      return (static_cast<double>(count) - 1.0) * std::log1p(-rho);
    case Kind::LengthProportional:
      return std::log(span);
    case Kind::MinLength:
      return span < min_length ? kNegInf : 0.0;
    case Kind::Custom: {
      if (span <= custom_dx.front()) return custom_log_g.front();
      if (span >= custom_dx.back()) return custom_log_g.back();
      const auto it = std::upper_bound(custom_dx.begin(), custom_dx.end(), span);
      const std::size_t hi = static_cast<std::size_t>(it - custom_dx.begin());
      const std::size_t lo = hi - 1;
      const double a = custom_log_g[lo];
      const double b = custom_log_g[hi];
      if (a == kNegInf || b == kNegInf) return span == custom_dx[lo] ? a : kNegInf;
      const double t = (span - custom_dx[lo]) / (custom_dx[hi] - custom_dx[lo]);
      return a + t * (b - a);
    }
  }
  return 0.0;
}

std::string length_factor_name(LengthFactor::Kind kind) {
  switch (kind) {
    case LengthFactor::Kind::Uniform: return "uniform";
    case LengthFactor::Kind::Geometric: return "geometric";
    case LengthFactor::Kind::GeometricIndex: return "geometric_index";
    case LengthFactor::Kind::LengthProportional: return "length_proportional";
    case LengthFactor::Kind::MinLength: return "min_length";
    case LengthFactor::Kind::Custom: return "custom";
  }
  return "uniform";
}

LengthFactor::Kind parse_length_factor_kind(const std::string& name) {
  using K = LengthFactor::Kind;
  for (K k : {K::Uniform, K::Geometric, K::GeometricIndex, K::LengthProportional, K::MinLength,
              K::Custom}) {
    if (length_factor_name(k) == name) return k;
  }
  throw InputError("unknown length factor kind '" + name + "'");
}

void validate(const LengthFactor& g) {
  using K = LengthFactor::Kind;
  if ((g.kind == K::Geometric || g.kind == K::GeometricIndex) && !(g.rho > 0.0 && g.rho < 1.0)) {
    throw InputError("geometric length factor needs 0 < rho < 1");
  }
  if (g.kind == K::Geometric && !(g.unit > 0.0)) {
    throw InputError("geometric length factor needs a positive unit");
  }
  if (g.kind == K::MinLength && !(g.min_length >= 0.0)) {
    throw InputError("min_length must be nonnegative");
  }
  if (g.kind == K::Custom) {
    if (g.custom_dx.empty() || g.custom_dx.size() != g.custom_log_g.size()) {
      throw InputError("custom length factor needs matching, nonempty dx and g tables");
    }
    for (std::size_t i = 1; i < g.custom_dx.size(); ++i) {
      if (!(g.custom_dx[i] > g.custom_dx[i - 1])) {
        throw InputError("custom length factor dx must be strictly increasing");
      }
    }
  }
}

std::vector<double> extended_grid(std::span<const double> x, const LengthFactor& g) {
  std::vector<double> ext(x.size() + 1);
  double x0;
  if (g.origin) {
    x0 = *g.origin;
  } else if (x.size() >= 2) {
    x0 = x[0] - (x[1] - x[0]);
  } else {
    x0 = x[0] - 1.0;
  }
  if (!(x0 < x[0])) throw InputError("length-factor origin must lie left of the first design point");
  ext[0] = x0;
  std::copy(x.begin(), x.end(), ext.begin() + 1);
  return ext;
}

TriangularArray length_log_table(std::span<const double> x, const LengthFactor& g) {
  validate(g);
  const std::size_t n = x.size();
  TriangularArray out(n, 0.0);
  if (g.is_uniform()) return out;
  const auto ext = extended_grid(x, g);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j <= n; ++j) out(i, j) = g.log_g(ext[j] - ext[i], j - i);
  }
  return out;
}

PriorNormalizers compute_Ck(const TriangularArray& log_g, std::size_t k_max) {
  const std::size_t n = log_g.n();
  if (k_max < 1 || k_max > n) throw InputError("k_max must lie in 1..n");
  PriorNormalizers out;
  out.n = n;
  out.k_max = k_max;
  out.log_L.assign(k_max + 1, std::vector<double>(n + 1, kNegInf));
  out.log_L[0][0] = 0.0;
  std::vector<double> terms;
  for (std::size_t k = 0; k < k_max; ++k) {
    for (std::size_t j = k + 1; j <= n; ++j) {
      terms.clear();
      for (std::size_t h = k; h < j; ++h) terms.push_back(out.log_L[k][h] + log_g(h, j));
      out.log_L[k + 1][j] = logsumexp(terms);
    }
  }
  out.log_C.assign(k_max + 1, kNegInf);
  for (std::size_t k = 1; k <= k_max; ++k) out.log_C[k] = out.log_L[k][n];
  return out;
}

PriorNormalizers compute_Ck(std::span<const double> x, const LengthFactor& g, std::size_t k_max) {
  return compute_Ck(length_log_table(x, g), k_max);
}

std::string count_prior_name(CountPriorSpec::Kind kind) {
  switch (kind) {
    case CountPriorSpec::Kind::Uniform: return "uniform";
    case CountPriorSpec::Kind::Geometric: return "geometric";
    case CountPriorSpec::Kind::Custom: return "custom";
    case CountPriorSpec::Kind::Renewal: return "renewal";
  }
  return "uniform";
}

CountPriorSpec::Kind parse_count_prior_kind(const std::string& name) {
  using K = CountPriorSpec::Kind;
  for (K k : {K::Uniform, K::Geometric, K::Custom, K::Renewal}) {
    if (count_prior_name(k) == name) return k;
  }
  throw InputError("unknown count prior kind '" + name + "'");
}

namespace {

CountPrior from_log_weights(std::vector<double> lw) {
  std::vector<double> tail(lw.begin() + 1, lw.end());
  const double z = logsumexp(tail);
  if (!std::isfinite(z)) throw InputError("count prior has no mass");
  for (std::size_t k = 1; k < lw.size(); ++k) lw[k] -= z;
  lw[0] = kNegInf;
  return CountPrior{std::move(lw)};
}

}  // namespace

CountPrior uniform_count_prior(std::size_t k_max) {
  std::vector<double> lw(k_max + 1, 0.0);
  return from_log_weights(std::move(lw));
}

CountPrior geometric_count_prior(std::size_t k_max, double q) {
  if (!(q > 0.0 && q < 1.0)) throw InputError("geometric count prior needs 0 < q < 1");
  std::vector<double> lw(k_max + 1, 0.0);
  for (std::size_t k = 1; k <= k_max; ++k) lw[k] = (static_cast<double>(k) - 1.0) * std::log1p(-q);
  return from_log_weights(std::move(lw));
}

CountPrior custom_count_prior(std::span<const double> weights) {
  std::vector<double> lw(weights.size() + 1, 0.0);
  for (std::size_t k = 0; k < weights.size(); ++k) {
    if (!(weights[k] >= 0.0)) throw InputError("custom count prior weights must be nonnegative");
    lw[k + 1] = weights[k] > 0.0 ? std::log(weights[k]) : kNegInf;
  }
  return from_log_weights(std::move(lw));
}

CountPrior renewal_count_prior(const PriorNormalizers& norm, double rho) {
  if (!(rho > 0.0 && rho < 1.0)) throw InputError("renewal count prior needs 0 < rho < 1");
  std::vector<double> lw(norm.k_max + 1, kNegInf);
  for (std::size_t k = 1; k <= norm.k_max; ++k) {
    lw[k] = (static_cast<double>(k) - 1.0) * std::log(rho) + norm.log_C[k];
  }
  return from_log_weights(std::move(lw));
}

CountPrior make_count_prior(const CountPriorSpec& spec, const PriorNormalizers& norm) {
  switch (spec.kind) {
    case CountPriorSpec::Kind::Uniform: return uniform_count_prior(norm.k_max);
    case CountPriorSpec::Kind::Geometric: return geometric_count_prior(norm.k_max, spec.q);
    case CountPriorSpec::Kind::Custom:
      if (spec.table.size() != norm.k_max) {
        throw InputError("custom count prior must list k_max weights");
      }
      return custom_count_prior(spec.table);
    case CountPriorSpec::Kind::Renewal: return renewal_count_prior(norm, spec.rho);
  }
  return uniform_count_prior(norm.k_max);
}

std::vector<std::size_t> sample_renewal(const TriangularArray& log_g, const PriorNormalizers& norm,
                                        std::size_t k, std::mt19937_64& rng) {
  const std::size_t n = norm.n;
  if (k < 1 || k > norm.k_max) throw InputError("segment count out of range for sampling");
  if (norm.log_C[k] == kNegInf) throw InputError("no admissible segmentation with this many segments");
  std::vector<std::size_t> t(k + 1, 0);
  t[k] = n;
  std::vector<double> w;
  for (std::size_t q = k; q >= 2; --q) {
    // P(t_{q-1} = h | t_q) proportional to L^g[q-1][h] g(x_{t_q} - x_h)
    const std::size_t lo = q - 1;
    const std::size_t hi = t[q] - 1;
    w.assign(hi - lo + 1, kNegInf);
    for (std::size_t h = lo; h <= hi; ++h) w[h - lo] = norm.log_L[q - 1][h] + log_g(h, t[q]);
    normalize_log_weights(w);
    std::discrete_distribution<std::size_t> pick(w.begin(), w.end());
    t[q - 1] = lo + pick(rng);
  }
  t[0] = 0;
  return t;
}

}  // namespace bayesbreak
