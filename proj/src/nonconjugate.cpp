#include "bayesbreak/nonconjugate.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "bayesbreak/numeric.hpp"

namespace bayesbreak {

std::string glm_link_name(GlmLink link) {
  switch (link) {
    case GlmLink::Identity: return "identity";
    case GlmLink::Log: return "log";
    case GlmLink::Logit: return "logit";
  }
  return "?";
}

GlmLink glm_link_for(Family family) {
  switch (family) {
    case Family::Gaussian: return GlmLink::Identity;
    case Family::Poisson: return GlmLink::Log;
    case Family::Binomial: return GlmLink::Logit;
    case Family::BetaObs: break;
  }
  throw InputError("the betaobs family has no canonical GLM form; use closed or quadrature blocks");
}

double glm_b(GlmLink link, double t) {
  switch (link) {
    case GlmLink::Identity: return 0.5 * t * t;
    case GlmLink::Log: return std::exp(t);
    case GlmLink::Logit: return t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t));
  }
  return 0.0;
}

double glm_b1(GlmLink link, double t) {
  switch (link) {
    case GlmLink::Identity: return t;
    case GlmLink::Log: return std::exp(t);
    case GlmLink::Logit: return t >= 0.0 ? 1.0 / (1.0 + std::exp(-t)) : std::exp(t) / (1.0 + std::exp(t));
  }
  return 0.0;
}

double glm_b2(GlmLink link, double t) {
  switch (link) {
    case GlmLink::Identity: return 1.0;
    case GlmLink::Log: return std::exp(t);
    case GlmLink::Logit: {
      const double p = glm_b1(link, t);
      return p * (1.0 - p);
    }
  }
  return 0.0;
}

double glm_mean(GlmLink link, double t) { return glm_b1(link, t); }

GlmBlock glm_block(std::span<const double> y, std::span<const double> w, GlmLink link, double dispersion) {
  if (y.size() != w.size()) throw InputError("glm_block: y and w differ in length");
  if (!(dispersion > 0.0)) throw InputError("GLM dispersion must be positive");
  GlmBlock b;
  b.link = link;
  b.dispersion = dispersion;
  for (std::size_t t = 0; t < y.size(); ++t) {
    if (w[t] == 0.0) continue;
    GlmObservation o;
    o.w = w[t];
    switch (link) {
      case GlmLink::Identity:
        o.s = w[t] * y[t];
        o.h = -0.5 * (kLog2Pi + std::log(dispersion / w[t])) - w[t] * y[t] * y[t] / (2.0 * dispersion);
        break;
      case GlmLink::Log:
        o.s = y[t];
        o.h = y[t] * std::log(w[t]) - std::lgamma(y[t] + 1.0);
        break;
      case GlmLink::Logit:
        o.s = y[t];
        o.h = log_binomial_coef(w[t], y[t]);
        break;
    }
    b.S += o.s;
    b.W += o.w;
    b.H += o.h;
    b.obs.push_back(o);
  }
  return b;
}

GlmBlock glm_block(const Sequence& seq, std::size_t i, std::size_t j, GlmLink link, double dispersion) {
  if (i >= j || j > seq.size()) throw InputError("glm_block: invalid block");
  return glm_block(std::span(seq.y).subspan(i, j - i), std::span(seq.w).subspan(i, j - i), link, dispersion);
}

GlmPrior gaussian_glm_prior(double mean, double var) {
  if (!(var > 0.0)) throw InputError("Gaussian prior variance must be positive");
  GlmPrior p;
  p.log_pdf = [=](double t) { return -0.5 * (kLog2Pi + std::log(var)) - (t - mean) * (t - mean) / (2.0 * var); };
  p.d1 = [=](double t) { return -(t - mean) / var; };
  p.d2 = [=](double) { return -1.0 / var; };
  p.center = mean;
  p.scale = std::sqrt(var);
  p.gaussian_mean = mean;
  p.gaussian_var = var;
  return p;
}

GlmPrior logistic_glm_prior(double location, double scale) {
  if (!(scale > 0.0)) throw InputError("logistic prior scale must be positive");
  GlmPrior p;
  p.log_pdf = [=](double t) {
    const double z = std::abs((t - location) / scale);
    return -z - 2.0 * std::log1p(std::exp(-z)) - std::log(scale);
  };
  p.d1 = [=](double t) { return -std::tanh(0.5 * (t - location) / scale) / scale; };
  p.d2 = [=](double t) {
    const double c = std::cosh(0.5 * (t - location) / scale);
    return -0.5 / (scale * scale * c * c);
  };
  p.center = location;
  p.scale = scale * std::numbers::pi / std::sqrt(3.0);
  return p;
}

namespace {

double psi(const GlmBlock& b, const GlmPrior& prior, double t) {
  const double v = b.loglik(t) + prior.log_pdf(t);
  return std::isnan(v) ? kNegInf : v;
}

double initial_theta(const GlmBlock& b, const GlmPrior& prior) {
  if (b.W <= 0.0) return prior.center;
  const double r = b.S / b.W;
  switch (b.link) {
    case GlmLink::Identity: return r;
    case GlmLink::Log: return r > 0.0 ? std::log(r) : prior.center;
    case GlmLink::Logit: return r > 0.0 && r < 1.0 ? std::clamp(std::log(r / (1.0 - r)), -30.0, 30.0) : prior.center;
  }
  return prior.center;
}

// Gaussian log normalizer of exp(-P t^2 / 2 + h t).
double gauss_G(double P, double h) { return h * h / (2.0 * P) - 0.5 * std::log(P) + 0.5 * kLog2Pi; }

const QuadratureRule& hermite64() {
  static const QuadratureRule rule = gauss_hermite(64);
  return rule;
}

// E[m(theta)] and V[m(theta)] for theta ~ N(mu, s2).
std::pair<double, double> gaussian_moments_of_mean(GlmLink link, double mu, double s2) {
  if (link == GlmLink::Identity) return {mu, s2};
  const auto& gh = hermite64();
  const double sd = std::sqrt(s2);
  double m1 = 0.0, m2 = 0.0;
  for (std::size_t i = 0; i < gh.nodes.size(); ++i) {
    const double v = glm_mean(link, mu + sd * gh.nodes[i]);
    m1 += gh.weights[i] * v;
    m2 += gh.weights[i] * v * v;
  }
  return {m1, std::max(0.0, m2 - m1 * m1)};
}

void require_gaussian_prior(const GlmPrior& prior, const char* what) {
  if (!prior.gaussian_mean || !prior.gaussian_var) {
    throw InputError(std::string(what) + " needs a Gaussian prior on theta");
  }
}

double jj_lambda(double xi) {
  xi = std::abs(xi);
  if (xi < 1e-4) return 0.125 - xi * xi / 192.0;
  return std::tanh(0.5 * xi) / (4.0 * xi);
}

double log_two_cosh_half(double xi) {
  xi = std::abs(xi);
  return 0.5 * xi + std::log1p(std::exp(-xi));
}

double log_cosh_half(double c) { return log_two_cosh_half(c) - std::numbers::ln2; }

}  // namespace

NewtonResult newton_mode(const GlmBlock& b, const GlmPrior& prior) {
  NewtonResult r;
  double t = initial_theta(b, prior);
  double f = psi(b, prior, t);
  if (!std::isfinite(f)) {
    t = prior.center;
    f = psi(b, prior, t);
  }
  std::ostringstream trace;
  for (std::size_t it = 0; it < 100; ++it) {
    const double g = (b.S - b.W * glm_b1(b.link, t)) / b.dispersion + prior.d1(t);
    const double h = -b.W * glm_b2(b.link, t) / b.dispersion + prior.d2(t);
    if (!(std::abs(h) >= 1e-12)) throw NumericError("Newton: singular curvature at theta=" + std::to_string(t));
    const double step = g / h;
    trace << " " << std::abs(step);
    r.iterations = it;
    if (std::abs(step) < 1e-10) {
      r.theta = t;
      r.curvature = -h;
      r.psi = f;
      return r;
    }
    double lambda = 1.0;
    double tn = t - step;
    double fn = psi(b, prior, tn);
    for (int halve = 0; halve < 30 && !(fn >= f); ++halve) {
      lambda *= 0.5;
      tn = t - lambda * step;
      fn = psi(b, prior, tn);
    }
    // at working precision the gradient stalls slightly above the tolerance;
    // a tiny step that no longer raises Psi means the mode has been reached
    if (!(fn > f) && std::abs(step) * std::sqrt(std::abs(h)) < 1e-6) {
      r.theta = t;
      r.curvature = -h;
      r.psi = f;
      return r;
    }
    if (!(fn >= f)) {
      throw NumericError("Newton: line search failed; |step| trace:" + trace.str());
    }
    t = tn;
    f = fn;
  }
  throw NumericError("Newton: no convergence in 100 iterations; |step| trace:" + trace.str());
}

LaplaceResult laplace_block(const GlmBlock& b, const GlmPrior& prior) {
  const auto nr = newton_mode(b, prior);
  LaplaceResult r;
  r.theta_hat = nr.theta;
  r.H_star = nr.curvature;
  r.log_evidence = nr.psi + 0.5 * kLog2Pi - 0.5 * std::log(nr.curvature);
  r.mean = glm_mean(b.link, nr.theta);
  const double slope = glm_b2(b.link, nr.theta);
  r.var = slope * slope / nr.curvature;
  return r;
}

VariationalResult jj_block(const GlmBlock& b, const GlmPrior& prior, double tol, std::size_t max_iter) {
  if (b.link != GlmLink::Logit) throw InputError("the JJ bound applies to logistic blocks only");
  require_gaussian_prior(prior, "the JJ bound");
  const double m0 = *prior.gaussian_mean, v0 = *prior.gaussian_var;
  const double kappa = b.S - 0.5 * b.W;
  VariationalResult r;
  r.mu = m0;
  r.s2 = v0;
  auto elbo = [&](double mu, double s2, double xi) {
    const double lam = jj_lambda(xi);
    return b.H + kappa * mu - b.W * lam * (mu * mu + s2 - xi * xi) - b.W * log_two_cosh_half(xi) -
           0.5 * (kLog2Pi + std::log(v0)) - ((mu - m0) * (mu - m0) + s2) / (2.0 * v0) +
           0.5 * (kLog2Pi + 1.0 + std::log(s2));
  };
  r.xi = std::sqrt(r.mu * r.mu + r.s2);
  r.trace.push_back(elbo(r.mu, r.s2, r.xi));
  for (std::size_t it = 0; it < max_iter; ++it) {
    r.xi = std::sqrt(r.mu * r.mu + r.s2);
    r.trace.push_back(elbo(r.mu, r.s2, r.xi));
    const double P = 1.0 / v0 + 2.0 * b.W * jj_lambda(r.xi);
    r.s2 = 1.0 / P;
    r.mu = (m0 / v0 + kappa) / P;
    const double cur = elbo(r.mu, r.s2, r.xi);
    const double prev = r.trace.back();
    r.trace.push_back(cur);
    r.iterations = it + 1;
    if (std::abs(cur - prev) <= tol * std::max(1.0, std::abs(cur))) {
      r.converged = true;
      break;
    }
  }
  r.elbo = r.trace.back();
  std::tie(r.mean, r.var) = gaussian_moments_of_mean(b.link, r.mu, r.s2);
  return r;
}

VariationalResult pg_vb_block(const GlmBlock& b, const GlmPrior& prior, double tol, std::size_t max_iter) {
  if (b.link != GlmLink::Logit) throw InputError("PG-VB applies to logistic blocks only");
  require_gaussian_prior(prior, "PG-VB");
  const double m0 = *prior.gaussian_mean, v0 = *prior.gaussian_var;
  const std::size_t T = b.obs.size();
  VariationalResult r;
  r.mu = m0;
  r.s2 = v0;
  std::vector<double> c(T), kappa(T);
  r.omega_means.assign(T, 0.0);
  for (std::size_t t = 0; t < T; ++t) kappa[t] = b.obs[t].s - 0.5 * b.obs[t].w;

  // q(omega_t) = PG(m_t, c_t); E[omega] = m/(2c) tanh(c/2)
  auto update_omega = [&]() {
    const double c_all = std::sqrt(r.mu * r.mu + r.s2);
    for (std::size_t t = 0; t < T; ++t) {
      c[t] = c_all;
      r.omega_means[t] = 2.0 * b.obs[t].w * jj_lambda(c[t]);
    }
  };
  auto elbo = [&]() {
    const double e2 = r.mu * r.mu + r.s2;
    double v = b.H;
    for (std::size_t t = 0; t < T; ++t) {
      const double m = b.obs[t].w;
      const double om = r.omega_means[t];
      // E log p(y, omega | theta) - E log q(omega) + E log p(omega)
      v += -m * std::numbers::ln2 + kappa[t] * r.mu - 0.5 * om * e2 - m * log_cosh_half(c[t]) +
           0.5 * c[t] * c[t] * om;
    }
    v += -0.5 * (kLog2Pi + std::log(v0)) - ((r.mu - m0) * (r.mu - m0) + r.s2) / (2.0 * v0);
    v += 0.5 * (kLog2Pi + 1.0 + std::log(r.s2));
    return v;
  };
  update_omega();
  r.trace.push_back(elbo());
  for (std::size_t it = 0; it < max_iter; ++it) {
    double prec = 1.0 / v0, shift = m0 / v0;
    for (std::size_t t = 0; t < T; ++t) {
      prec += r.omega_means[t];
      shift += kappa[t];
    }
    r.s2 = 1.0 / prec;
    r.mu = r.s2 * shift;
    const double prev = r.trace.back();
    r.trace.push_back(elbo());
    update_omega();
    const double cur = elbo();
    r.trace.push_back(cur);
    r.iterations = it + 1;
    if (std::abs(cur - prev) <= tol * std::max(1.0, std::abs(cur))) {
      r.converged = true;
      break;
    }
  }
  r.elbo = r.trace.back();
  r.xi = std::sqrt(r.mu * r.mu + r.s2);
  std::tie(r.mean, r.var) = gaussian_moments_of_mean(b.link, r.mu, r.s2);
  return r;
}

namespace {

struct Tilted {
  double log_z = 0.0;
  double mean = 0.0;
  double var = 0.0;
};

double site_loglik(const GlmBlock& b, const GlmObservation& o, double t) {
  return (o.s * t - o.w * glm_b(b.link, t)) / b.dispersion + o.h;
}

// Moments of N(theta | mc, vc) p(y_t | theta), with log_z relative to the
// normalized cavity.
Tilted tilted_moments(const GlmBlock& b, const GlmObservation& o, double mc, double vc) {
  Tilted r;
  if (b.link == GlmLink::Identity) {
    const double Pc = 1.0 / vc, hc = mc / vc;
    const double Pt = Pc + o.w / b.dispersion, ht = hc + o.s / b.dispersion;
    r.log_z = o.h + gauss_G(Pt, ht) - gauss_G(Pc, hc);
    r.mean = ht / Pt;
    r.var = 1.0 / Pt;
    return r;
  }
  const double site_curv = o.w * glm_b2(b.link, mc) / b.dispersion;
  if (site_curv * vc < 1.0) {
    const auto& gh = hermite64();
    const double sd = std::sqrt(vc);
    std::vector<double> lw(gh.nodes.size()), th(gh.nodes.size());
    for (std::size_t i = 0; i < gh.nodes.size(); ++i) {
      th[i] = mc + sd * gh.nodes[i];
      lw[i] = std::log(gh.weights[i]) + site_loglik(b, o, th[i]);
    }
    r.log_z = logsumexp(lw);
    double m1 = 0.0, m2 = 0.0;
    for (std::size_t i = 0; i < lw.size(); ++i) {
      const double p = std::exp(lw[i] - r.log_z);
      m1 += p * th[i];
      m2 += p * th[i] * th[i];
    }
    r.mean = m1;
    r.var = std::max(m2 - m1 * m1, 1e-300);
    return r;
  }
  // the site is sharper than the cavity; integrate adaptively
  LogDensity1D d;
  d.log_f = [&](double t) { return -0.5 * (kLog2Pi + std::log(vc)) - (t - mc) * (t - mc) / (2.0 * vc) + site_loglik(b, o, t); };
  d.guess = mc;
  d.scale = 1.0 / std::sqrt(site_curv + 1.0 / vc);
  const auto q = integrate_unimodal(d, [](double t) { return t; }, 1e-12);
  r.log_z = q.log_value;
  r.mean = q.mean;
  r.var = std::max(q.variance, 1e-300);
  return r;
}

}  // namespace

EPResult ep_block(const GlmBlock& b, const GlmPrior& prior, double damping, std::size_t max_sweeps, double tol) {
  require_gaussian_prior(prior, "EP");
  if (!(damping > 0.0 && damping <= 1.0)) throw InputError("EP damping must lie in (0, 1]");
  const double P0 = 1.0 / *prior.gaussian_var;
  const double h0 = *prior.gaussian_mean * P0;
  const std::size_t T = b.obs.size();
  EPResult r;
  r.site_precision.assign(T, 0.0);
  r.site_shift.assign(T, 0.0);
  double P = P0, h = h0;
  for (std::size_t sweep = 0; sweep < max_sweeps; ++sweep) {
    const double old_mu = h / P, old_s2 = 1.0 / P;
    for (std::size_t t = 0; t < T; ++t) {
      const double Pc = P - r.site_precision[t];
      const double hc = h - r.site_shift[t];
      if (!(Pc > 0.0)) {
        ++r.skipped;
        continue;
      }
      const auto tm = tilted_moments(b, b.obs[t], hc / Pc, 1.0 / Pc);
      const double a_new = 1.0 / tm.var - Pc;
      const double b_new = tm.mean / tm.var - hc;
      double a = (1.0 - damping) * r.site_precision[t] + damping * a_new;
      const double s = (1.0 - damping) * r.site_shift[t] + damping * b_new;
      a = std::max(a, 0.0);
      r.site_precision[t] = a;
      r.site_shift[t] = s;
      P = Pc + a;
      h = hc + s;
    }
    r.sweeps = sweep + 1;
    const double mu = h / P, s2 = 1.0 / P;
    if (std::abs(mu - old_mu) <= tol * (1.0 + std::abs(mu)) && std::abs(s2 - old_s2) <= tol * s2) {
      r.converged = true;
      break;
    }
  }
  // evidence: site scales from the final cavities
  long double log_s = 0.0L;
  for (std::size_t t = 0; t < T; ++t) {
    const double Pc = P - r.site_precision[t];
    const double hc = h - r.site_shift[t];
    if (!(Pc > 0.0)) {
      r.converged = false;
      continue;
    }
    const auto tm = tilted_moments(b, b.obs[t], hc / Pc, 1.0 / Pc);
    log_s += tm.log_z + gauss_G(Pc, hc) - gauss_G(P, h);
  }
  r.log_evidence = static_cast<double>(log_s) + gauss_G(P, h) - gauss_G(P0, h0);
  r.mu = h / P;
  r.s2 = 1.0 / P;
  std::tie(r.mean, r.var) = gaussian_moments_of_mean(b.link, r.mu, r.s2);
  return r;
}

BlockResult quadrature_block(const GlmBlock& b, const GlmPrior& prior, double rel_tol) {
  LogDensity1D d;
  d.log_f = [&](double t) { return psi(b, prior, t); };
  d.guess = initial_theta(b, prior);
  const double curv = b.W * glm_b2(b.link, d.guess) / b.dispersion + 1.0 / (prior.scale * prior.scale);
  d.scale = 1.0 / std::sqrt(curv);
  const auto q = integrate_unimodal(d, [&](double t) { return glm_mean(b.link, t); }, rel_tol);
  return {q.log_value, q.mean, q.variance};
}

BlockResult quadrature_betaobs_block(std::span<const double> y, std::span<const double> w,
                                     const BetaObsHyper& h, double rel_tol) {
  validate(FamilyHyper{h});
  if (y.size() != w.size()) throw InputError("betaobs block: y and w differ in length");
  const double lb0 = log_beta(h.a0, h.b0);
  LogDensity1D d;
  d.log_f = [&](double z) {
    const double log_mu = -std::log1p(std::exp(-z));
    const double log_1m = -std::log1p(std::exp(z));
    const double mu = std::exp(log_mu);
    // Beta prior on mu times the logit Jacobian mu (1 - mu)
    double v = h.a0 * log_mu + h.b0 * log_1m - lb0;
    for (std::size_t t = 0; t < y.size(); ++t) {
      if (w[t] == 0.0) continue;
      const double a = h.phi * mu, bb = h.phi * (1.0 - mu);
      v += w[t] * ((a - 1.0) * std::log(y[t]) + (bb - 1.0) * std::log1p(-y[t]) - log_beta(a, bb));
    }
    return v;
  };
  d.guess = 0.0;
  d.scale = 1.0;
  const auto q = integrate_unimodal(d, [](double z) { return 1.0 / (1.0 + std::exp(-z)); }, rel_tol);
  return {q.log_value, q.mean, q.variance};
}

std::string block_method_name(BlockMethod m) {
  switch (m) {
    case BlockMethod::Closed: return "closed";
    case BlockMethod::Laplace: return "laplace";
    case BlockMethod::JJ: return "jj";
    case BlockMethod::PGVB: return "pgvb";
    case BlockMethod::EP: return "ep";
    case BlockMethod::Quadrature: return "quadrature";
  }
  return "?";
}

BlockMethod parse_block_method(const std::string& name) {
  for (auto m : {BlockMethod::Closed, BlockMethod::Laplace, BlockMethod::JJ, BlockMethod::PGVB, BlockMethod::EP,
                 BlockMethod::Quadrature}) {
    if (block_method_name(m) == name) return m;
  }
  throw InputError("unknown block method '" + name + "' (expected closed, laplace, jj, pgvb, ep or quadrature)");
}

BlockResult glm_block_result(const GlmBlock& block, const GlmModel& model, BlockMethod method) {
  switch (method) {
    case BlockMethod::Laplace: {
      const auto r = laplace_block(block, model.prior);
      return {r.log_evidence, r.mean, r.var};
    }
    case BlockMethod::JJ: {
      const auto r = jj_block(block, model.prior);
      return {r.elbo, r.mean, r.var};
    }
    case BlockMethod::PGVB: {
      const auto r = pg_vb_block(block, model.prior);
      return {r.elbo, r.mean, r.var};
    }
    case BlockMethod::EP: {
      const auto r = ep_block(block, model.prior);
      return {r.log_evidence, r.mean, r.var};
    }
    case BlockMethod::Quadrature: return quadrature_block(block, model.prior);
    case BlockMethod::Closed: {
      if (block.link == GlmLink::Identity && model.prior.gaussian_mean) {
        BlockSummaries s;
        s.W = block.W;
        s.S = block.S;
        s.count = block.obs.size();
        // gaussian_block wants H without the quadratic data term; recover Q
        double H = 0.0, Q = 0.0;
        for (const auto& o : block.obs) {
          const double y = o.s / o.w;
          H += -0.5 * (kLog2Pi + std::log(block.dispersion / o.w));
          Q += o.w * (y - *model.prior.gaussian_mean) * (y - *model.prior.gaussian_mean);
        }
        s.H = H;
        s.Q = Q;
        return gaussian_block(s, GaussianHyper{*model.prior.gaussian_mean, *model.prior.gaussian_var, block.dispersion});
      }
      throw InputError("closed-form blocks need a conjugate model; a Gaussian prior on theta is conjugate only for the identity link");
    }
  }
  throw InputError("unknown block method");
}

BlockEvidenceTable glm_table(const Sequence& seq, const GlmModel& model, BlockMethod method) {
  validate(seq);
  return tabulate_blocks(seq.x, [&](std::size_t i, std::size_t j) {
    return glm_block_result(glm_block(seq, i, j, model.link, model.dispersion), model, method);
  });
}

StabilityReport stability_harness(const BlockEvidenceTable& table, std::size_t k_max, double eps,
                                  std::size_t trials, std::mt19937_64& rng) {
  if (eps < 0.0) throw InputError("epsilon must be nonnegative");
  const std::size_t n = table.n;
  k_max = std::min(k_max, n);
  const auto exact = forward_backward(table.log_A0, k_max);
  StabilityReport rep;
  rep.epsilon = eps;
  rep.trials = trials;
  const double slack = 1e-11;
  std::uniform_real_distribution<double> u(-eps, eps);
  auto note = [&](double dev, double bound, const std::string& what, double& max_dev, double& max_ratio) {
    ++rep.pairs_checked;
    max_dev = std::max(max_dev, dev);
    if (bound > 0.0) max_ratio = std::max(max_ratio, dev / bound);
    if (dev > bound + slack) {
      if (rep.violations == 0) rep.first_violation = what;
      ++rep.violations;
    }
  };
  double sandwich_dev = 0.0;
  for (std::size_t trial = 0; trial < trials; ++trial) {
    TriangularArray pert = table.log_A0;
    for (double& v : pert.raw()) {
      if (std::isfinite(v)) v += u(rng);
    }
    const auto msgs = forward_backward(pert, k_max);
    // sandwich on prefix and suffix messages
    for (std::size_t k = 1; k <= k_max; ++k) {
      for (std::size_t j = 0; j <= n; ++j) {
        if (std::isfinite(exact.logL[k][j])) {
          note(std::abs(msgs.logL[k][j] - exact.logL[k][j]), k * eps, "L[" + std::to_string(k) + "][" + std::to_string(j) + "]",
               sandwich_dev, rep.max_sandwich_ratio);
        }
        if (std::isfinite(exact.logR[k][j])) {
          note(std::abs(msgs.logR[k][j] - exact.logR[k][j]), k * eps, "R[" + std::to_string(k) + "][" + std::to_string(j) + "]",
               sandwich_dev, rep.max_sandwich_ratio);
        }
      }
    }
    // count odds
    for (std::size_t k = 1; k <= k_max; ++k) {
      if (!std::isfinite(exact.logL[k][n])) continue;
      for (std::size_t k2 = k + 1; k2 <= k_max; ++k2) {
        if (!std::isfinite(exact.logL[k2][n])) continue;
        const double dev = std::abs((msgs.logL[k][n] - exact.logL[k][n]) - (msgs.logL[k2][n] - exact.logL[k2][n]));
        note(dev, double(k + k2) * eps, "k-odds " + std::to_string(k) + ":" + std::to_string(k2), rep.max_k_odds_dev,
             rep.max_k_odds_ratio);
      }
    }
    // boundary odds within each k
    for (std::size_t k = 2; k <= k_max; ++k) {
      if (!std::isfinite(exact.logL[k][n])) continue;
      for (std::size_t p = 1; p < k; ++p) {
        double lo = INFINITY, hi = -INFINITY;
        for (std::size_t hpos = p; hpos + (k - p) <= n; ++hpos) {
          const double e = exact.logL[p][hpos] + exact.logR[k - p][hpos];
          if (!std::isfinite(e)) continue;
          const double d = msgs.logL[p][hpos] + msgs.logR[k - p][hpos] - e;
          lo = std::min(lo, d);
          hi = std::max(hi, d);
        }
        if (hi >= lo) {
          note(hi - lo, 2.0 * double(k) * eps, "boundary odds k=" + std::to_string(k) + " p=" + std::to_string(p),
               rep.max_b_odds_dev, rep.max_b_odds_ratio);
        }
      }
    }
  }
  return rep;
}

}  // namespace bayesbreak
