#include "bayesbreak/block_families.hpp"

#include <algorithm>
#include <cmath>

#include "bayesbreak/numeric.hpp"
#include "bayesbreak/parallel.hpp"

namespace bayesbreak {

Family family_of(const FamilyHyper& hyper) {
  return static_cast<Family>(hyper.index());
}

FamilyHyper default_hyper(Family family) {
  switch (family) {
    case Family::Gaussian: return GaussianHyper{};
    case Family::Poisson: return PoissonHyper{};
    case Family::Binomial: return BinomialHyper{};
    case Family::BetaObs: return BetaObsHyper{};
  }
  return GaussianHyper{};
}

void validate(const FamilyHyper& hyper) {
  auto positive = [](double v, const char* what) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw InputError(std::string(what) + " must be finite and positive");
    }
  };
  std::visit(
      [&](const auto& h) {
        using T = std::decay_t<decltype(h)>;
        if constexpr (std::is_same_v<T, GaussianHyper>) {
          if (!std::isfinite(h.nu)) throw InputError("nu must be finite");
          positive(h.rho2, "rho2");
          positive(h.sigma2, "sigma2");
        } else if constexpr (std::is_same_v<T, BetaObsHyper>) {
          positive(h.phi, "phi");
          positive(h.a0, "a0");
          positive(h.b0, "b0");
          if (h.nodes < 2) throw InputError("BetaObs quadrature needs at least 2 nodes");
        } else {
          positive(h.a0, "a0");
          positive(h.b0, "b0");
        }
      },
      hyper);
}

BlockSummaries& BlockSummaries::operator+=(const BlockSummaries& o) {
  S += o.S;
  W += o.W;
  H += o.H;
  Q += o.Q;
  count += o.count;
  return *this;
}

BlockSummaries operator+(BlockSummaries a, const BlockSummaries& b) { return a += b; }

BlockSummaries row_summary(double y, double w, const FamilyHyper& hyper) {
  BlockSummaries s;
  if (w == 0.0) return s;
  s.count = 1;
  s.W = w;
  switch (family_of(hyper)) {
    case Family::Gaussian: {
      const auto& h = std::get<GaussianHyper>(hyper);
      s.S = w * y;
      s.Q = w * (y - h.nu) * (y - h.nu);
      s.H = -0.5 * (kLog2Pi + std::log(h.sigma2 / w));
      break;
    }
    case Family::Poisson:
      s.S = y;
      s.H = y * std::log(w) - std::lgamma(y + 1.0);
      break;
    case Family::Binomial:
      s.S = y;
      s.H = log_binomial_coef(w, y);
      break;
    case Family::BetaObs:
      // BetaObs blocks are integrated numerically; only the bookkeeping is kept.
      s.S = w * y;
      break;
  }
  return s;
}

BlockSummaries summarize(const Sequence& seq, std::size_t i, std::size_t j,
                         const FamilyHyper& hyper) {
  BlockSummaries s;
  for (std::size_t t = i; t < j; ++t) s += row_summary(seq.y[t], seq.w[t], hyper);
  return s;
}

BlockResult gaussian_block(const BlockSummaries& s, const GaussianHyper& h) {
  if (!(h.sigma2 > 0.0) || !(h.rho2 > 0.0)) throw InputError("Gaussian variances must be positive");
  const double sig2 = h.sigma2;
  const double r2 = h.rho2;
  const double d = s.S - h.nu * s.W;
  const double kappa = r2 * s.W + sig2;
  BlockResult r;
  r.log_evidence = s.H - s.Q / (2.0 * sig2) + d * d / (2.0 * (sig2 * s.W + sig2 * sig2 / r2)) -
                   0.5 * std::log1p(r2 * s.W / sig2);
  r.post_mean = (r2 * s.S + sig2 * h.nu) / kappa;
  r.post_var = sig2 * r2 / kappa;
  return r;
}

BlockResult poisson_block(const BlockSummaries& s, const PoissonHyper& h) {
  if (s.S < 0.0) throw InputError("Poisson counts must be nonnegative");
  const double a = h.a0 + s.S;
  const double b = h.b0 + s.W;
  BlockResult r;
  r.log_evidence = s.H + h.a0 * std::log(h.b0) + std::lgamma(a) - std::lgamma(h.a0) - a * std::log(b);
  r.post_mean = a / b;
  r.post_var = r.post_mean / b;
  return r;
}

BlockResult binomial_block(const BlockSummaries& s, const BinomialHyper& h) {
  if (s.S < 0.0 || s.S > s.W) throw InputError("Binomial successes must lie in [0, trials]");
  const double a = h.a0 + s.S;
  const double b = h.b0 + s.W - s.S;
  const double tot = a + b;
  BlockResult r;
  r.log_evidence = s.H + log_beta(a, b) - log_beta(h.a0, h.b0);
  r.post_mean = a / tot;
  r.post_var = a * b / (tot * tot * (tot + 1.0));
  return r;
}

namespace {

struct BetaNodes {
  std::vector<double> mu;        // node locations on (0,1)
  std::vector<double> log_base;  // log quadrature weight (prior included)
  std::vector<double> alpha;     // phi * mu
  std::vector<double> beta;      // phi * (1 - mu)
  std::vector<double> lbeta;     // log B(alpha, beta)
};

BetaNodes beta_nodes(const BetaObsHyper& h) {
  // the Beta(a0, b0) prior is folded into the rule, which keeps the remaining
  // integrand smooth at the endpoints when a0 or b0 is not an integer
  const auto rule = gauss_beta(h.nodes, h.a0, h.b0);
  BetaNodes nodes;
  for (std::size_t g = 0; g < rule.nodes.size(); ++g) {
    const double m = rule.nodes[g];
    nodes.mu.push_back(m);
    nodes.log_base.push_back(std::log(rule.weights[g]));
    nodes.alpha.push_back(h.phi * m);
    nodes.beta.push_back(h.phi * (1.0 - m));
    nodes.lbeta.push_back(log_beta(h.phi * m, h.phi * (1.0 - m)));
  }
  return nodes;
}

double beta_row_loglik(const BetaNodes& nodes, std::size_t g, double y) {
  return (nodes.alpha[g] - 1.0) * std::log(y) + (nodes.beta[g] - 1.0) * std::log1p(-y) -
         nodes.lbeta[g];
}

// Combines node log-weights into evidence and moments of mu, max-shifted.
BlockResult beta_moments(const BetaNodes& nodes, const std::vector<double>& logw) {
  double m = kNegInf;
  for (double v : logw) m = std::max(m, v);
  if (m == kNegInf) return {kNegInf, 0.5, 0.0};
  long double s0 = 0.0L, s1 = 0.0L, s2 = 0.0L;
  for (std::size_t g = 0; g < logw.size(); ++g) {
    const long double e = std::exp(static_cast<long double>(logw[g] - m));
    s0 += e;
    s1 += e * nodes.mu[g];
    s2 += e * nodes.mu[g] * nodes.mu[g];
  }
  BlockResult r;
  r.log_evidence = m + static_cast<double>(std::log(s0));
  const long double mean = s1 / s0;
  r.post_mean = static_cast<double>(mean);
  r.post_var = std::max(0.0, static_cast<double>(s2 / s0 - mean * mean));
  return r;
}

}  // namespace

BlockResult betaobs_block(std::span<const double> y, std::span<const double> w,
                          const BetaObsHyper& h) {
  if (y.size() != w.size()) throw InputError("betaobs_block: y and w differ in length");
  for (std::size_t t = 0; t < y.size(); ++t) {
    if (w[t] > 0.0 && !(y[t] > 0.0 && y[t] < 1.0)) {
      throw InputError("Beta observations must lie in (0,1)");
    }
  }
  const auto nodes = beta_nodes(h);
  std::vector<double> logw(nodes.mu.size());
  for (std::size_t g = 0; g < nodes.mu.size(); ++g) {
    double acc = nodes.log_base[g];
    for (std::size_t t = 0; t < y.size(); ++t) {
      if (w[t] > 0.0) acc += w[t] * beta_row_loglik(nodes, g, y[t]);
    }
    logw[g] = acc;
  }
  return beta_moments(nodes, logw);
}

BlockResult conjugate_block(const Sequence& seq, std::size_t i, std::size_t j,
                            const FamilyHyper& hyper) {
  if (!(i < j && j <= seq.size())) throw InputError("block indices out of range");
  switch (family_of(hyper)) {
    case Family::Gaussian:
      return gaussian_block(summarize(seq, i, j, hyper), std::get<GaussianHyper>(hyper));
    case Family::Poisson:
      return poisson_block(summarize(seq, i, j, hyper), std::get<PoissonHyper>(hyper));
    case Family::Binomial:
      return binomial_block(summarize(seq, i, j, hyper), std::get<BinomialHyper>(hyper));
    case Family::BetaObs:
      return betaobs_block(std::span(seq.y).subspan(i, j - i), std::span(seq.w).subspan(i, j - i),
                           std::get<BetaObsHyper>(hyper));
  }
  return {};
}

BlockEvidenceTable tabulate_blocks(std::span<const double> grid, const BlockFunction& block) {
  const std::size_t n = grid.size();
  BlockEvidenceTable table;
  table.n = n;
  table.grid.assign(grid.begin(), grid.end());
  table.log_A0 = TriangularArray(n);
  table.post_mean = TriangularArray(n);
  table.post_var = TriangularArray(n);
  parallel_for(n, [&](std::size_t i) {
    for (std::size_t j = i + 1; j <= n; ++j) {
      const BlockResult r = block(i, j);
      if (std::isnan(r.log_evidence) || r.log_evidence == std::numeric_limits<double>::infinity()) {
        throw NumericError("block evidence is not a number for block (" + std::to_string(i) + ", " +
                           std::to_string(j) + "]");
      }
      table.log_A0(i, j) = r.log_evidence;
      table.post_mean(i, j) = r.post_mean;
      table.post_var(i, j) = std::max(0.0, r.post_var);
    }
  });
  return table;
}

namespace {

struct PrefixSums {
  std::vector<long double> S, W, H, Q;
  std::vector<std::size_t> count;

  explicit PrefixSums(const Sequence& seq, const FamilyHyper& hyper) {
    const std::size_t n = seq.size();
    S.assign(n + 1, 0.0L);
    W = H = Q = S;
    count.assign(n + 1, 0);
    for (std::size_t t = 0; t < n; ++t) {
      const auto r = row_summary(seq.y[t], seq.w[t], hyper);
      S[t + 1] = S[t] + r.S;
      W[t + 1] = W[t] + r.W;
      H[t + 1] = H[t] + r.H;
      Q[t + 1] = Q[t] + r.Q;
      count[t + 1] = count[t] + r.count;
    }
  }

  BlockSummaries block(std::size_t i, std::size_t j) const {
    BlockSummaries s;
    s.S = static_cast<double>(S[j] - S[i]);
    s.W = static_cast<double>(W[j] - W[i]);
    s.H = static_cast<double>(H[j] - H[i]);
    s.Q = static_cast<double>(Q[j] - Q[i]);
    s.count = count[j] - count[i];
    return s;
  }
};

BlockEvidenceTable precompute_betaobs(const Sequence& seq, const BetaObsHyper& h) {
  const std::size_t n = seq.size();
  const auto nodes = beta_nodes(h);
  const std::size_t G = nodes.mu.size();
  // per-node prefix sums of w_t log Beta(y_t | phi mu_g, phi (1 - mu_g))
  std::vector<std::vector<long double>> prefix(G, std::vector<long double>(n + 1, 0.0L));
  for (std::size_t g = 0; g < G; ++g) {
    for (std::size_t t = 0; t < n; ++t) {
      const double c = seq.w[t] > 0.0 ? seq.w[t] * beta_row_loglik(nodes, g, seq.y[t]) : 0.0;
      prefix[g][t + 1] = prefix[g][t] + c;
    }
  }
  return tabulate_blocks(seq.x, [&](std::size_t i, std::size_t j) {
    std::vector<double> logw(G);
    for (std::size_t g = 0; g < G; ++g) {
      logw[g] = nodes.log_base[g] + static_cast<double>(prefix[g][j] - prefix[g][i]);
    }
    return beta_moments(nodes, logw);
  });
}

}  // namespace

BlockEvidenceTable precompute_blocks(const Sequence& seq, const FamilyHyper& hyper) {
  validate(seq);
  validate(hyper);
  if (seq.family != family_of(hyper)) {
    throw InputError("sequence family does not match the hyperparameters");
  }
  if (seq.family == Family::BetaObs) return precompute_betaobs(seq, std::get<BetaObsHyper>(hyper));
  const PrefixSums prefix(seq, hyper);
  return tabulate_blocks(seq.x, [&](std::size_t i, std::size_t j) {
    const auto s = prefix.block(i, j);
    switch (seq.family) {
      case Family::Gaussian: return gaussian_block(s, std::get<GaussianHyper>(hyper));
      case Family::Poisson: return poisson_block(s, std::get<PoissonHyper>(hyper));
      case Family::Binomial: return binomial_block(s, std::get<BinomialHyper>(hyper));
      case Family::BetaObs: break;
    }
    return BlockResult{};
  });
}

BlockEvidenceTable precompute_blocks(const Sequence& seq, const FamilyHyper& hyper,
                                     const LengthFactor& g) {
  return absorb_length_factor(precompute_blocks(seq, hyper), g);
}

BlockEvidenceTable absorb_length_factor(BlockEvidenceTable table, const TriangularArray& log_g) {
  if (table.with_prior) throw InputError("length factor already absorbed into this table");
  if (log_g.n() != table.n) throw InputError("length-factor table does not match the grid size");
  auto& a = table.log_A0.raw();
  const auto& lg = log_g.raw();
  for (std::size_t k = 0; k < a.size(); ++k) a[k] += lg[k];
  table.with_prior = true;
  return table;
}

BlockEvidenceTable absorb_length_factor(BlockEvidenceTable table, const LengthFactor& g) {
  const auto log_g = length_log_table(table.grid, g);
  return absorb_length_factor(std::move(table), log_g);
}

}  // namespace bayesbreak
