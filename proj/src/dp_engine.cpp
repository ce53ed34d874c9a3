#include "bayesbreak/dp_engine.hpp"

#include <algorithm>
#include <cmath>

#include "bayesbreak/numeric.hpp"
#include "bayesbreak/parallel.hpp"

namespace bayesbreak {

DPMessages forward_backward(const TriangularArray& A, std::size_t k_max) {
  const std::size_t n = A.n();
  if (k_max < 1 || k_max > n) throw InputError("k_max must lie in 1..n");
  DPMessages m;
  m.n = n;
  m.k_max = k_max;
  m.logL.assign(k_max + 1, std::vector<double>(n + 1, kNegInf));
  m.logR.assign(k_max + 1, std::vector<double>(n + 1, kNegInf));
  m.logL[0][0] = 0.0;
  m.logR[0][n] = 0.0;
  for (std::size_t k = 0; k < k_max; ++k) {
    const auto& Lk = m.logL[k];
    auto& Lnext = m.logL[k + 1];
    parallel_for(n - k, [&](std::size_t off) {
      const std::size_t j = k + 1 + off;
      std::vector<double> terms;
      terms.reserve(j - k);
      for (std::size_t h = k; h < j; ++h) terms.push_back(Lk[h] + A(h, j));
      Lnext[j] = logsumexp(terms);
    });
    const auto& Rk = m.logR[k];
    auto& Rnext = m.logR[k + 1];
    parallel_for(n - k, [&](std::size_t i) {
      std::vector<double> terms;
      terms.reserve(n - k - i);
      for (std::size_t h = i + 1; h <= n - k; ++h) terms.push_back(A(i, h) + Rk[h]);
      Rnext[i] = logsumexp(terms);
    });
  }
  return m;
}

DPMessages forward_backward(const BlockEvidenceTable& table, std::size_t k_max) {
  return forward_backward(table.log_A0, k_max);
}

CountPosterior posterior_k(const DPMessages& msgs, const PriorNormalizers& norm,
                           const CountPrior& prior) {
  const std::size_t K = msgs.k_max;
  if (norm.k_max < K || prior.k_max() < K) {
    throw InputError("prior normalizers or count prior shorter than k_max");
  }
  CountPosterior out;
  out.log_evidence.assign(K + 1, kNegInf);
  std::vector<double> score(K + 1, kNegInf);
  for (std::size_t k = 1; k <= K; ++k) {
    if (norm.log_C[k] == kNegInf) continue;
    out.log_evidence[k] = msgs.logL[k][msgs.n] - norm.log_C[k];
    score[k] = prior.log_p[k] + out.log_evidence[k];
  }
  const double z = logsumexp(score);
  if (!std::isfinite(z)) throw NumericError("no admissible segmentation");
  out.log_marginal = z;
  out.post.assign(K + 1, 0.0);
  out.k_hat = 0;
  double best = kNegInf;
  for (std::size_t k = 1; k <= K; ++k) {
    out.post[k] = std::exp(score[k] - z);
    if (score[k] > best) {
      best = score[k];
      out.k_hat = k;
    }
  }
  return out;
}

namespace {

void check_k(const DPMessages& msgs, std::size_t k) {
  if (k < 1 || k > msgs.k_max) throw InputError("segment count out of range");
  if (msgs.logL[k][msgs.n] == kNegInf) {
    throw NumericError("no admissible segmentation with " + std::to_string(k) + " segments");
  }
}

}  // namespace

std::vector<double> boundary_marginal(const DPMessages& msgs, std::size_t k, std::size_t p) {
  check_k(msgs, k);
  if (p < 1 || p >= k) throw InputError("boundary position must lie in 1..k-1");
  const std::size_t n = msgs.n;
  const double z = msgs.logL[k][n];
  std::vector<double> out(n + 1, 0.0);
  for (std::size_t h = p; h + (k - p) <= n; ++h) {
    out[h] = std::exp(msgs.logL[p][h] + msgs.logR[k - p][h] - z);
  }
  return out;
}

double boundary_event_prob(const DPMessages& msgs, std::size_t k, std::size_t h) {
  check_k(msgs, k);
  if (h < 1 || h >= msgs.n) throw InputError("boundary location must lie in 1..n-1");
  const double z = msgs.logL[k][msgs.n];
  double acc = 0.0;
  for (std::size_t r = 1; r < k; ++r) acc += std::exp(msgs.logL[r][h] + msgs.logR[k - r][h] - z);
  return acc;
}

std::vector<double> boundary_event_probs(const DPMessages& msgs, std::size_t k) {
  std::vector<double> out(msgs.n + 1, 0.0);
  for (std::size_t h = 1; h < msgs.n; ++h) out[h] = boundary_event_prob(msgs, k, h);
  return out;
}

std::vector<double> averaged_boundary_event_probs(const DPMessages& msgs,
                                                  const CountPosterior& post) {
  std::vector<double> out(msgs.n + 1, 0.0);
  for (std::size_t k = 1; k <= msgs.k_max; ++k) {
    if (post.post[k] == 0.0) continue;
    const auto e = boundary_event_probs(msgs, k);
    for (std::size_t h = 0; h <= msgs.n; ++h) out[h] += post.post[k] * e[h];
  }
  return out;
}

BayesCurve bayes_curve(const DPMessages& msgs, const TriangularArray& A,
                       const TriangularArray& post_mean, const TriangularArray& post_var,
                       std::size_t k) {
  check_k(msgs, k);
  const std::size_t n = msgs.n;
  const double z = msgs.logL[k][n];
  // difference arrays over t; block (i, j] covers t = i+1..j
  std::vector<long double> d0(n + 1, 0.0L), d1(n + 1, 0.0L), d2(n + 1, 0.0L);
  std::vector<double> terms(k);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j <= n; ++j) {
      const double a = A(i, j);
      if (a == kNegInf) continue;
      for (std::size_t m = 1; m <= k; ++m) terms[m - 1] = msgs.logL[m - 1][i] + msgs.logR[k - m][j];
      const double lw = logsumexp(terms) + a - z;
      if (lw == kNegInf) continue;
      const long double w = std::exp(static_cast<long double>(lw));
      const long double mu = post_mean(i, j);
      const long double second = static_cast<long double>(post_var(i, j)) + mu * mu;
      d0[i] += w;
      d0[j] -= w;
      d1[i] += w * mu;
      d1[j] -= w * mu;
      d2[i] += w * second;
      d2[j] -= w * second;
    }
  }
  BayesCurve c;
  c.mean.resize(n);
  c.var.resize(n);
  c.coverage.resize(n);
  long double s0 = 0.0L, s1 = 0.0L, s2 = 0.0L;
  for (std::size_t t = 0; t < n; ++t) {
    s0 += d0[t];
    s1 += d1[t];
    s2 += d2[t];
    c.coverage[t] = static_cast<double>(s0);
    c.mean[t] = static_cast<double>(s1);
    c.var[t] = std::max(0.0, static_cast<double>(s2 - s1 * s1));
  }
  return c;
}

BayesCurve bayes_curve(const DPMessages& msgs, const BlockEvidenceTable& table, std::size_t k) {
  return bayes_curve(msgs, table.log_A0, table.post_mean, table.post_var, k);
}

void validate_boundaries(const std::vector<std::size_t>& t, std::size_t n) {
  if (t.size() < 2 || t.front() != 0 || t.back() != n) {
    throw InputError("boundary vector must start at 0 and end at n");
  }
  for (std::size_t q = 1; q < t.size(); ++q) {
    if (t[q] <= t[q - 1]) throw InputError("boundary vector must be strictly increasing");
  }
}

std::vector<SegmentMoments> segment_moments_fixed(const BlockEvidenceTable& table,
                                                  const std::vector<std::size_t>& t) {
  validate_boundaries(t, table.n);
  std::vector<SegmentMoments> out;
  for (std::size_t q = 1; q < t.size(); ++q) {
    out.push_back({t[q - 1], t[q], table.post_mean(t[q - 1], t[q]), table.post_var(t[q - 1], t[q])});
  }
  return out;
}

}  // namespace bayesbreak
