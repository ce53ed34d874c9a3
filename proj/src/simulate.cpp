#include "bayesbreak/simulate.hpp"

#include <algorithm>
#include <cmath>

#include "bayesbreak/numeric.hpp"

namespace bayesbreak {

namespace {

std::vector<std::size_t> draw_boundaries(const SimSpec& spec, std::mt19937_64& rng) {
  if (spec.jumps == 0) return {};
  if ((spec.jumps + 1) * spec.min_gap > spec.n) throw InputError("too many jumps for n and min_gap");
  std::uniform_int_distribution<std::size_t> pos(spec.min_gap, spec.n - spec.min_gap);
  for (int attempt = 0; attempt < 100000; ++attempt) {
    std::vector<std::size_t> b(spec.jumps);
    for (auto& v : b) v = pos(rng);
    std::sort(b.begin(), b.end());
    bool ok = true;
    for (std::size_t q = 1; q < b.size(); ++q) ok = ok && b[q] - b[q - 1] >= spec.min_gap;
    if (ok) return b;
  }
  throw InputError("could not place boundaries with the requested spacing");
}

double logistic(double v) { return 1.0 / (1.0 + std::exp(-v)); }

}  // namespace

SimSpec default_sim_spec(Family family) {
  SimSpec s;
  s.family = family;
  switch (family) {
    case Family::Gaussian: s.jump = 4.0; s.base = 0.0; break;
    case Family::Poisson: s.jump = 1.2; s.base = std::log(4.0); break;
    case Family::Binomial: s.jump = 1.5; s.base = -0.5; break;
    case Family::BetaObs: s.jump = 1.5; s.base = -0.5; break;
  }
  return s;
}

SimResult simulate(const SimSpec& spec, std::mt19937_64& rng) {
  if (spec.n < 1) throw InputError("n must be positive");
  if (spec.subjects < 1) throw InputError("need at least one subject");
  if (!(spec.missing >= 0.0 && spec.missing < 1.0)) throw InputError("missing must lie in [0,1)");
  SimResult out;
  out.boundaries = spec.boundaries.empty() ? draw_boundaries(spec, rng) : spec.boundaries;
  for (std::size_t q = 0; q < out.boundaries.size(); ++q) {
    const std::size_t b = out.boundaries[q];
    if (b == 0 || b >= spec.n || (q > 0 && b <= out.boundaries[q - 1])) {
      throw InputError("boundaries must be increasing and inside 1..n-1");
    }
  }
  // level per segment: alternating direction from a random start keeps the
  // signal within a band
  std::bernoulli_distribution coin(0.5);
  double dir = coin(rng) ? 1.0 : -1.0;
  const double step = spec.family == Family::Gaussian ? spec.jump * spec.sigma : spec.jump;
  std::vector<double> level{spec.base};
  for (std::size_t q = 0; q < out.boundaries.size(); ++q) {
    level.push_back(level.back() + dir * step);
    dir = -dir;
  }
  std::vector<double> lin(spec.n);
  std::size_t seg = 0;
  for (std::size_t i = 0; i < spec.n; ++i) {
    while (seg < out.boundaries.size() && i >= out.boundaries[seg]) ++seg;
    lin[i] = level[seg];
    switch (spec.family) {
      case Family::Gaussian: out.signal.push_back(lin[i]); break;
      case Family::Poisson: out.signal.push_back(std::exp(lin[i])); break;
      case Family::Binomial:
      case Family::BetaObs: out.signal.push_back(logistic(lin[i])); break;
    }
  }

  std::bernoulli_distribution drop(spec.missing);
  std::normal_distribution<double> noise(0.0, spec.sigma);
  std::vector<Sequence> seqs;
  for (std::size_t s = 0; s < spec.subjects; ++s) {
    Sequence q;
    q.family = spec.family;
    for (std::size_t i = 0; i < spec.n; ++i) {
      q.x.push_back(double(i + 1));
      const double m = out.signal[i];
      double y = 0.0, w = 1.0;
      switch (spec.family) {
        case Family::Gaussian: y = m + noise(rng); break;
        case Family::Poisson: y = double(std::poisson_distribution<long>(m)(rng)); break;
        case Family::Binomial:
          w = spec.trials;
          y = double(std::binomial_distribution<long>(static_cast<long>(spec.trials), m)(rng));
          break;
        case Family::BetaObs: {
          const double a = std::gamma_distribution<double>(spec.phi * m, 1.0)(rng);
          const double b = std::gamma_distribution<double>(spec.phi * (1.0 - m), 1.0)(rng);
          y = std::clamp(a / (a + b), 1e-12, 1.0 - 1e-12);
          break;
        }
      }
      if (spec.missing > 0.0 && drop(rng)) {
        y = 0.0;
        w = 0.0;
      }
      q.y.push_back(y);
      q.w.push_back(w);
    }
    seqs.push_back(std::move(q));
  }
  out.data = align_grids(seqs);
  return out;
}

}  // namespace bayesbreak
