#include "bayesbreak/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <tuple>

#include "bayesbreak/numeric.hpp"

namespace bayesbreak {

BoundaryMatch boundary_f1(const std::vector<std::size_t>& truth, const std::vector<std::size_t>& est,
                          std::size_t tau) {
  BoundaryMatch m;
  m.n_true = truth.size();
  m.n_est = est.size();
  std::vector<std::tuple<std::size_t, std::size_t, std::size_t>> pairs;  // distance, true, est
  for (std::size_t a = 0; a < truth.size(); ++a) {
    for (std::size_t b = 0; b < est.size(); ++b) {
      const std::size_t d = truth[a] > est[b] ? truth[a] - est[b] : est[b] - truth[a];
      if (d <= tau) pairs.emplace_back(d, a, b);
    }
  }
  std::sort(pairs.begin(), pairs.end());
  std::vector<char> used_t(truth.size(), 0), used_e(est.size(), 0);
  for (const auto& [d, a, b] : pairs) {
    if (used_t[a] || used_e[b]) continue;
    used_t[a] = used_e[b] = 1;
    ++m.true_positive;
  }
  if (m.n_true == 0 && m.n_est == 0) {
    m.precision = m.recall = m.f1 = 1.0;
    return m;
  }
  m.precision = m.n_est ? double(m.true_positive) / double(m.n_est) : 0.0;
  m.recall = m.n_true ? double(m.true_positive) / double(m.n_true) : 0.0;
  m.f1 = m.true_positive ? 2.0 * m.true_positive / double(m.n_true + m.n_est) : 0.0;
  return m;
}

std::vector<std::size_t> boundary_calls(const std::vector<double>& event, std::size_t tau, double threshold) {
  std::vector<std::size_t> calls;
  if (event.size() < 3) return calls;
  const std::size_t last = event.size() - 2;  // interior indices 1..n-1
  std::vector<double> e(event);
  auto lo = [&](std::size_t h) { return h > tau ? std::max<std::size_t>(1, h - tau) : 1; };
  auto hi = [&](std::size_t h) { return std::min(last, h + tau); };
  while (true) {
    double best = 0.0;
    std::size_t centre = 0;
    for (std::size_t h = 1; h <= last; ++h) {
      double mass = 0.0;
      for (std::size_t u = lo(h); u <= hi(h); ++u) mass += e[u];
      if (mass > best) {
        best = mass;
        centre = h;
      }
    }
    if (centre == 0 || best < threshold) break;
    std::size_t pick = centre;
    for (std::size_t u = lo(centre); u <= hi(centre); ++u) {
      if (e[u] > e[pick]) pick = u;
    }
    calls.push_back(pick);
    for (std::size_t u = lo(centre); u <= hi(centre); ++u) e[u] = 0.0;
  }
  std::sort(calls.begin(), calls.end());
  return calls;
}

double boundary_mae(const std::vector<std::size_t>& truth, const std::vector<std::size_t>& est) {
  if (truth.empty()) return 0.0;
  if (est.empty()) return std::nan("");
  double total = 0.0;
  for (std::size_t t : truth) {
    double best = INFINITY;
    for (std::size_t e : est) best = std::min(best, std::abs(double(t) - double(e)));
    total += best;
  }
  return total / double(truth.size());
}

double signal_mse(const std::vector<double>& truth, const std::vector<double>& est) {
  if (truth.size() != est.size() || truth.empty()) throw InputError("signal lengths differ");
  double s = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) s += (truth[i] - est[i]) * (truth[i] - est[i]);
  return s / double(truth.size());
}

double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) throw InputError("label vectors differ in length");
  const double n = double(a.size());
  std::map<std::pair<int, int>, double> joint;
  std::map<int, double> ra, rb;
  for (std::size_t i = 0; i < a.size(); ++i) {
    joint[{a[i], b[i]}] += 1;
    ra[a[i]] += 1;
    rb[b[i]] += 1;
  }
  auto c2 = [](double v) { return v * (v - 1.0) / 2.0; };
  double sum_joint = 0, sum_a = 0, sum_b = 0;
  for (const auto& [k, v] : joint) sum_joint += c2(v);
  for (const auto& [k, v] : ra) sum_a += c2(v);
  for (const auto& [k, v] : rb) sum_b += c2(v);
  const double expected = sum_a * sum_b / c2(n);
  const double max_index = 0.5 * (sum_a + sum_b);
  if (max_index == expected) return 1.0;  // both partitions trivial
  return (sum_joint - expected) / (max_index - expected);
}

Calibration reliability(const std::vector<double>& prob, const std::vector<int>& outcome, std::size_t nbins) {
  if (prob.size() != outcome.size()) throw InputError("probabilities and outcomes differ in length");
  if (nbins == 0) throw InputError("need at least one bin");
  Calibration c;
  c.bins.resize(nbins);
  std::vector<double> sum_p(nbins, 0.0), sum_y(nbins, 0.0);
  for (std::size_t b = 0; b < nbins; ++b) {
    c.bins[b].lower = double(b) / double(nbins);
    c.bins[b].upper = double(b + 1) / double(nbins);
  }
  for (std::size_t i = 0; i < prob.size(); ++i) {
    const double p = std::clamp(prob[i], 0.0, 1.0);
    const std::size_t b = std::min(nbins - 1, static_cast<std::size_t>(p * double(nbins)));
    ++c.bins[b].count;
    sum_p[b] += p;
    sum_y[b] += outcome[i] ? 1.0 : 0.0;
  }
  std::vector<double> xs, ys;
  for (std::size_t b = 0; b < nbins; ++b) {
    auto& bin = c.bins[b];
    if (bin.count == 0) continue;
    bin.mean_pred = sum_p[b] / double(bin.count);
    bin.frequency = sum_y[b] / double(bin.count);
    c.ece += double(bin.count) / double(prob.size()) * std::abs(bin.frequency - bin.mean_pred);
    xs.push_back(bin.mean_pred);
    ys.push_back(bin.frequency);
  }
  c.rank_corr = xs.size() >= 2 ? spearman(xs, ys) : 1.0;
  return c;
}

}  // namespace bayesbreak
