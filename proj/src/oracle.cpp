#include "bayesbreak/oracle.hpp"

#include <algorithm>
#include <cmath>

#include "bayesbreak/numeric.hpp"

namespace bayesbreak {

std::vector<std::vector<std::size_t>> enumerate_segmentations(std::size_t n, std::size_t k) {
  if (k < 1 || k > n) throw InputError("enumeration needs 1 <= k <= n");
  std::vector<std::vector<std::size_t>> out;
  std::vector<std::size_t> t(k + 1);
  t[0] = 0;
  t[k] = n;
  for (std::size_t q = 1; q < k; ++q) t[q] = q;
  for (;;) {
    out.push_back(t);
    // advance the rightmost interior boundary that still has room
    std::size_t q = k - 1;
    while (q >= 1 && t[q] == n - (k - q)) --q;
    if (q == 0) break;
    ++t[q];
    for (std::size_t r = q + 1; r < k; ++r) t[r] = t[r - 1] + 1;
  }
  return out;
}

namespace {

double segmentation_log_g(const std::vector<double>& ext, const LengthFactor& g,
                          const std::vector<std::size_t>& t) {
  double s = 0.0;
  for (std::size_t q = 1; q < t.size(); ++q) s += g.log_g(ext[t[q]] - ext[t[q - 1]], t[q] - t[q - 1]);
  return s;
}

// Reverse-lexicographic comparison, matching leftmost-split backtracking.
bool colex_less(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
  for (std::size_t q = a.size() - 1; q-- > 1;) {
    if (a[q] != b[q]) return a[q] < b[q];
  }
  return false;
}

}  // namespace

BrutePosterior brute_posterior(const BlockEvidenceTable& prior_free, const LengthFactor& g,
                               const CountPriorSpec& p_k, std::size_t k_max) {
  const std::size_t n = prior_free.n;
  if (n > kOracleMaxN) throw InputError("oracle is limited to n <= 12");
  if (prior_free.with_prior) throw InputError("oracle expects a prior-free table");
  k_max = std::min(k_max, n);
  const auto ext = extended_grid(prior_free.grid, g);

  BrutePosterior out;
  out.n = n;
  out.k_max = k_max;
  out.per_k.resize(k_max + 1);

  for (std::size_t k = 1; k <= k_max; ++k) {
    auto& r = out.per_k[k];
    const auto segs = enumerate_segmentations(n, k);
    std::vector<double> prior_score(segs.size());
    std::vector<double> lik_score(segs.size());
    std::vector<double> map_score(segs.size());
    for (std::size_t s = 0; s < segs.size(); ++s) {
      const auto& t = segs[s];
      prior_score[s] = segmentation_log_g(ext, g, t);
      double lik = 0.0;
      double joint = 0.0;
      for (std::size_t q = 1; q <= k; ++q) {
        const double a = prior_free.log_A0(t[q - 1], t[q]);
        lik += a;
        joint += a + g.log_g(ext[t[q]] - ext[t[q - 1]], t[q] - t[q - 1]);
      }
      lik_score[s] = lik + prior_score[s];
      map_score[s] = joint;
    }
    const double pmax = *std::max_element(prior_score.begin(), prior_score.end());
    const double smax = *std::max_element(lik_score.begin(), lik_score.end());
    r.log_C = kNegInf;
    r.log_evidence = kNegInf;
    if (pmax != kNegInf) {
      long double csum = 0.0L;
      for (double v : prior_score) csum += std::exp(static_cast<long double>(v - pmax));
      r.log_C = pmax + static_cast<double>(std::log(csum));
    }
    if (smax == kNegInf) continue;
    r.feasible = true;

    std::vector<long double> w(segs.size());
    long double z = 0.0L;
    for (std::size_t s = 0; s < segs.size(); ++s) {
      w[s] = std::exp(static_cast<long double>(lik_score[s] - smax));
      z += w[s];
    }
    r.log_evidence = smax + static_cast<double>(std::log(z)) - r.log_C;
    for (auto& v : w) v /= z;

    r.marginals.assign(k > 0 ? k - 1 : 0, std::vector<double>(n + 1, 0.0));
    std::vector<long double> ev(n + 1, 0.0L), m1(n, 0.0L), m2(n, 0.0L);
    std::vector<std::vector<long double>> marg(k - 1, std::vector<long double>(n + 1, 0.0L));
    for (std::size_t s = 0; s < segs.size(); ++s) {
      const auto& t = segs[s];
      for (std::size_t p = 1; p < k; ++p) {
        marg[p - 1][t[p]] += w[s];
        ev[t[p]] += w[s];
      }
      for (std::size_t q = 1; q <= k; ++q) {
        const long double mu = prior_free.post_mean(t[q - 1], t[q]);
        const long double sec = prior_free.post_var(t[q - 1], t[q]) + mu * mu;
        for (std::size_t u = t[q - 1]; u < t[q]; ++u) {
          m1[u] += w[s] * mu;
          m2[u] += w[s] * sec;
        }
      }
    }
    for (std::size_t p = 0; p + 1 < k; ++p) {
      for (std::size_t h = 0; h <= n; ++h) r.marginals[p][h] = static_cast<double>(marg[p][h]);
    }
    r.event.assign(n + 1, 0.0);
    for (std::size_t h = 0; h <= n; ++h) r.event[h] = static_cast<double>(ev[h]);
    r.mean.resize(n);
    r.var.resize(n);
    for (std::size_t u = 0; u < n; ++u) {
      r.mean[u] = static_cast<double>(m1[u]);
      r.var[u] = std::max(0.0, static_cast<double>(m2[u] - m1[u] * m1[u]));
    }

    std::size_t best = 0;
    for (std::size_t s = 1; s < segs.size(); ++s) {
      if (map_score[s] > map_score[best] ||
          (map_score[s] == map_score[best] && colex_less(segs[s], segs[best]))) {
        best = s;
      }
    }
    r.map = segs[best];
    r.map_score = map_score[best];
  }

  // count prior, normalized over k = 1..k_max
  std::vector<double> lp(k_max + 1, kNegInf);
  for (std::size_t k = 1; k <= k_max; ++k) {
    switch (p_k.kind) {
      case CountPriorSpec::Kind::Uniform: lp[k] = 0.0; break;
      case CountPriorSpec::Kind::Geometric:
        lp[k] = static_cast<double>(k - 1) * std::log(1.0 - p_k.q);
        break;
      case CountPriorSpec::Kind::Custom:
        lp[k] = p_k.table.at(k - 1) > 0.0 ? std::log(p_k.table[k - 1]) : kNegInf;
        break;
      case CountPriorSpec::Kind::Renewal:
        lp[k] = static_cast<double>(k - 1) * std::log(p_k.rho) + out.per_k[k].log_C;
        break;
    }
  }
  {
    const double z = logsumexp(std::span(lp).subspan(1));
    for (std::size_t k = 1; k <= k_max; ++k) lp[k] -= z;
  }

  std::vector<double> score(k_max + 1, kNegInf);
  double best_map = kNegInf;
  for (std::size_t k = 1; k <= k_max; ++k) {
    const auto& r = out.per_k[k];
    if (!r.feasible) continue;
    score[k] = lp[k] + r.log_evidence;
    const double crit = r.map_score + lp[k] - r.log_C;
    if (crit > best_map) {
      best_map = crit;
      out.k_map = k;
    }
  }
  const double z = logsumexp(score);
  if (!std::isfinite(z)) throw NumericError("no admissible segmentation");
  out.post_k.assign(k_max + 1, 0.0);
  double best = kNegInf;
  for (std::size_t k = 1; k <= k_max; ++k) {
    out.post_k[k] = std::exp(score[k] - z);
    if (score[k] > best) {
      best = score[k];
      out.k_hat = k;
    }
  }
  return out;
}

double brute_pooled_log_evidence(const std::vector<BlockEvidenceTable>& subjects,
                                 const LengthFactor& g, std::size_t k) {
  if (subjects.empty()) throw InputError("no subjects");
  const std::size_t n = subjects.front().n;
  if (n > kOracleMaxN) throw InputError("oracle is limited to n <= 12");
  const auto ext = extended_grid(subjects.front().grid, g);
  std::vector<double> scores;
  for (const auto& t : enumerate_segmentations(n, k)) {
    double s = 0.0;
    for (std::size_t q = 1; q <= k; ++q) {
      s += g.log_g(ext[t[q]] - ext[t[q - 1]], t[q] - t[q - 1]);
      for (const auto& tab : subjects) s += tab.log_A0(t[q - 1], t[q]);
    }
    scores.push_back(s);
  }
  const double m = *std::max_element(scores.begin(), scores.end());
  if (m == kNegInf) return kNegInf;
  long double acc = 0.0L;
  for (double v : scores) acc += std::exp(static_cast<long double>(v - m));
  return m + static_cast<double>(std::log(acc));
}

}  // namespace bayesbreak
