#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <variant>
#include <vector>

#include "bayesbreak/data_model.hpp"
#include "bayesbreak/partition_prior.hpp"
#include "bayesbreak/triangular.hpp"

namespace bayesbreak {

struct GaussianHyper {
  double nu = 0.0;      // prior mean of the segment level
  double rho2 = 1.0;    // prior variance of the segment level
  double sigma2 = 1.0;  // observation variance at unit weight
};

struct PoissonHyper {
  double a0 = 1.0;  // Gamma shape
  double b0 = 1.0;  // Gamma rate
};

struct BinomialHyper {
  double a0 = 1.0;
  double b0 = 1.0;
};

struct BetaObsHyper {
  double phi = 10.0;  // precision of the Beta observation law
  double a0 = 1.0;    // Beta prior on the segment mean
  double b0 = 1.0;
  std::size_t nodes = 64;
};

using FamilyHyper = std::variant<GaussianHyper, PoissonHyper, BinomialHyper, BetaObsHyper>;

Family family_of(const FamilyHyper& hyper);
FamilyHyper default_hyper(Family family);
void validate(const FamilyHyper& hyper);

// Sufficient statistics of one block. Rows with w = 0 contribute nothing.
struct BlockSummaries {
  double S = 0.0;  // sum w*y (Gaussian), sum y (Poisson, Binomial)
  double W = 0.0;  // sum w: precision weight, exposure or trial count
  double H = 0.0;  // base-measure log terms
  double Q = 0.0;  // Gaussian: sum w (y - nu)^2
  std::size_t count = 0;  // rows with positive weight

  BlockSummaries& operator+=(const BlockSummaries& o);
};

BlockSummaries operator+(BlockSummaries a, const BlockSummaries& b);

// Contribution of a single row (x_t, y_t, w_t).
BlockSummaries row_summary(double y, double w, const FamilyHyper& hyper);

// Direct summation over rows i+1..j (1-based), i.e. block (i, j].
BlockSummaries summarize(const Sequence& seq, std::size_t i, std::size_t j,
                         const FamilyHyper& hyper);

struct BlockResult {
  double log_evidence = 0.0;
  double post_mean = 0.0;  // E[m(theta) | block]
  double post_var = 0.0;   // V[m(theta) | block]
};

BlockResult gaussian_block(const BlockSummaries& s, const GaussianHyper& h);
BlockResult poisson_block(const BlockSummaries& s, const PoissonHyper& h);
BlockResult binomial_block(const BlockSummaries& s, const BinomialHyper& h);
BlockResult betaobs_block(std::span<const double> y, std::span<const double> w,
                          const BetaObsHyper& h);

// Closed-form (or quadrature, for BetaObs) block (i, j] evaluated from scratch.
BlockResult conjugate_block(const Sequence& seq, std::size_t i, std::size_t j,
                            const FamilyHyper& hyper);

struct BlockEvidenceTable {
  std::size_t n = 0;
  std::vector<double> grid;
  TriangularArray log_A0;
  TriangularArray post_mean;
  TriangularArray post_var;
  bool with_prior = false;
};

using BlockFunction = std::function<BlockResult(std::size_t i, std::size_t j)>;

// Fills a prior-free table by evaluating every block (i, j]; rows are
// distributed over worker threads.
BlockEvidenceTable tabulate_blocks(std::span<const double> grid, const BlockFunction& block);

// Prefix-sum precomputation of all blocks, then absorption of log g.
BlockEvidenceTable precompute_blocks(const Sequence& seq, const FamilyHyper& hyper,
                                     const LengthFactor& g);
BlockEvidenceTable precompute_blocks(const Sequence& seq, const FamilyHyper& hyper);

// Adds log g(x_j - x_i) to log_A0; moments are left untouched.
BlockEvidenceTable absorb_length_factor(BlockEvidenceTable table, const TriangularArray& log_g);
BlockEvidenceTable absorb_length_factor(BlockEvidenceTable table, const LengthFactor& g);

}  // namespace bayesbreak
