#include "bayesbreak/map_engine.hpp"

#include "bayesbreak/numeric.hpp"

namespace bayesbreak {

MaxSumTables maxsum_forward(const TriangularArray& A, std::size_t k_max) {
  const std::size_t n = A.n();
  if (k_max < 1 || k_max > n) throw InputError("k_max must lie in 1..n");
  MaxSumTables t;
  t.n = n;
  t.k_max = k_max;
  t.M.assign(k_max + 1, std::vector<double>(n + 1, kNegInf));
  t.back.assign(k_max + 1, std::vector<std::size_t>(n + 1, 0));
  t.M[0][0] = 0.0;
  for (std::size_t k = 1; k <= k_max; ++k) {
    for (std::size_t j = k; j <= n; ++j) {
      double best = kNegInf;
      std::size_t arg = k - 1;
      for (std::size_t h = k - 1; h < j; ++h) {
        const double v = t.M[k - 1][h] + A(h, j);
        if (v > best) {
          best = v;
          arg = h;
        }
      }
      t.M[k][j] = best;
      t.back[k][j] = arg;
    }
  }
  return t;
}

std::vector<std::size_t> backtrack(const MaxSumTables& tables, std::size_t k) {
  if (k < 1 || k > tables.k_max) throw InputError("segment count out of range");
  if (tables.M[k][tables.n] == kNegInf) {
    throw NumericError("no admissible segmentation with " + std::to_string(k) + " segments");
  }
  std::vector<std::size_t> b(k + 1, 0);
  b[k] = tables.n;
  for (std::size_t q = k; q >= 1; --q) b[q - 1] = tables.back[q][b[q]];
  return b;
}

std::size_t select_k_with_offsets(const MaxSumTables& tables, std::span<const double> offset) {
  std::size_t best_k = 0;
  double best = kNegInf;
  for (std::size_t k = 1; k <= tables.k_max && k < offset.size(); ++k) {
    const double v = tables.M[k][tables.n] + offset[k];
    if (v > best) {
      best = v;
      best_k = k;
    }
  }
  if (best_k == 0) throw NumericError("no admissible segmentation");
  return best_k;
}

std::size_t select_k_map(const MaxSumTables& tables, const PriorNormalizers& norm,
                         const CountPrior& prior) {
  std::vector<double> offset(tables.k_max + 1, kNegInf);
  for (std::size_t k = 1; k <= tables.k_max; ++k) {
    if (norm.log_C[k] != kNegInf) offset[k] = prior.log_p[k] - norm.log_C[k];
  }
  return select_k_with_offsets(tables, offset);
}

MapResult map_segmentation(const MaxSumTables& tables, std::size_t k) {
  MapResult r;
  r.k_used = k;
  r.boundaries = backtrack(tables, k);
  r.score = tables.M[k][tables.n];
  return r;
}

}  // namespace bayesbreak
