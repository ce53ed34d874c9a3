#include "bayesbreak/numeric.hpp"

#include <algorithm>
#include <numbers>
#include <numeric>

#include <Eigen/Eigenvalues>

namespace bayesbreak {

double logsumexp(std::span<const double> v) {
  double m = kNegInf;
  for (double x : v) m = std::max(m, x);
  if (m == kNegInf) return kNegInf;
  if (std::isinf(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

double normalize_log_weights(std::vector<double>& log_w) {
  const double z = logsumexp(log_w);
  if (z == kNegInf || std::isnan(z)) {
    throw NumericError("all log weights are -inf");
  }
  double total = 0.0;
  for (double& x : log_w) total += (x = std::exp(x - z));
  for (double& x : log_w) x /= total;
  return z;
}

QuadratureRule gauss_beta(std::size_t n, double a, double b) {
  if (n == 0) throw std::invalid_argument("gauss_beta: n must be positive");
  if (!(a > 0.0) || !(b > 0.0)) throw std::invalid_argument("gauss_beta: a and b must be positive");
  // Golub-Welsch on the Jacobi matrix for weight (1-t)^al (1+t)^be on [-1,1],
  // mapped to mu = (1+t)/2 so that be = a-1 pairs with mu^(a-1).
  const double al = b - 1.0;
  const double be = a - 1.0;
  Eigen::VectorXd diag(n);
  Eigen::VectorXd sub(n > 1 ? n - 1 : 0);
  for (std::size_t k = 0; k < n; ++k) {
    const double s = 2.0 * k + al + be;
    diag[k] = k == 0 ? (be - al) / (al + be + 2.0) : (be * be - al * al) / (s * (s + 2.0));
  }
  for (std::size_t k = 1; k < n; ++k) {
    const double s = 2.0 * k + al + be;
    double v;
    if (k == 1) {
      v = 4.0 * (1.0 + al) * (1.0 + be) / ((2.0 + al + be) * (2.0 + al + be) * (3.0 + al + be));
    } else {
      v = 4.0 * k * (k + al) * (k + be) * (k + al + be) / (s * s * (s + 1.0) * (s - 1.0));
    }
    sub[k - 1] = std::sqrt(v);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig;
  eig.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
  if (eig.info() != Eigen::Success) throw std::runtime_error("gauss_beta: eigen solver failed");
  QuadratureRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    rule.nodes[i] = std::clamp(0.5 * (1.0 + eig.eigenvalues()[i]), std::nextafter(0.0, 1.0),
                               std::nextafter(1.0, 0.0));
    const double v0 = eig.eigenvectors()(0, i);
    rule.weights[i] = v0 * v0;
    total += rule.weights[i];
  }
  for (double& w : rule.weights) w /= total;
  return rule;
}

QuadratureRule gauss_hermite(std::size_t n) {
  if (n == 0) throw std::invalid_argument("gauss_hermite: n must be positive");
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd sub(n > 1 ? n - 1 : 0);
  for (std::size_t k = 1; k < n; ++k) sub[k - 1] = std::sqrt(static_cast<double>(k));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig;
  eig.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
  if (eig.info() != Eigen::Success) throw std::runtime_error("gauss_hermite: eigen solver failed");
  QuadratureRule rule;
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    rule.nodes.push_back(eig.eigenvalues()[i]);
    const double v0 = eig.eigenvectors()(0, i);
    rule.weights.push_back(v0 * v0);
    total += v0 * v0;
  }
  for (double& w : rule.weights) w /= total;
  return rule;
}

QuadratureRule gauss_legendre(std::size_t n, double a, double b) {
  if (n == 0) throw std::invalid_argument("gauss_legendre: n must be positive");
  QuadratureRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (b + a);
  const std::size_t m = (n + 1) / 2;
  for (std::size_t i = 0; i < m; ++i) {
    double z = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) /
                        (static_cast<double>(n) + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0;
      double p1 = 0.0;
      for (std::size_t k = 1; k <= n; ++k) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p2) / static_cast<double>(k);
      }
      dp = static_cast<double>(n) * (z * p0 - p1) / (z * z - 1.0);
      const double dz = p0 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    // recompute derivative at the converged root
    {
      double p0 = 1.0;
      double p1 = 0.0;
      for (std::size_t k = 1; k <= n; ++k) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p2) / static_cast<double>(k);
      }
      dp = static_cast<double>(n) * (z * p0 - p1) / (z * z - 1.0);
    }
    const double w = 2.0 / ((1.0 - z * z) * dp * dp);
    rule.nodes[i] = mid - half * z;
    rule.nodes[n - 1 - i] = mid + half * z;
    rule.weights[i] = half * w;
    rule.weights[n - 1 - i] = half * w;
  }
  return rule;
}

double golden_section_max(const std::function<double(double)>& f, double a, double b,
                          double tol) {
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - invphi * (b - a);
  double d = a + invphi * (b - a);
  double fc = f(c);
  double fd = f(d);
  for (int iter = 0; iter < 500 && (b - a) > tol * (1.0 + std::abs(a) + std::abs(b)); ++iter) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - invphi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + invphi * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

namespace {

double safe_eval(const std::function<double(double)>& f, double x) {
  const double v = f(x);
  return std::isnan(v) ? kNegInf : v;
}

// Pull a point strictly inside the open domain (lower, upper).
double clamp_open(double x, double lower, double upper) {
  if (std::isfinite(lower)) {
    const double eps = 1e-300 + 1e-15 * std::max(1.0, std::abs(lower));
    x = std::max(x, lower + eps);
  }
  if (std::isfinite(upper)) {
    const double eps = 1e-300 + 1e-15 * std::max(1.0, std::abs(upper));
    x = std::min(x, upper - eps);
  }
  return x;
}

double find_mode(const LogDensity1D& d) {
  const auto f = [&](double x) { return safe_eval(d.log_f, x); };
  double x = clamp_open(d.guess, d.lower, d.upper);
  double h = d.scale > 0.0 ? d.scale : 1.0;
  double fx = f(x);
  int dir = 0;
  {
    const double xr = clamp_open(x + h, d.lower, d.upper);
    const double xl = clamp_open(x - h, d.lower, d.upper);
    const double fr = f(xr);
    const double fl = f(xl);
    if (fr > fx && fr >= fl) dir = 1;
    else if (fl > fx) dir = -1;
    if (dir == 0) return golden_section_max(f, xl, xr);
  }
  double prev = x;
  for (int iter = 0; iter < 200; ++iter) {
    const double nx = clamp_open(x + dir * h, d.lower, d.upper);
    const double fn = f(nx);
    if (fn <= fx || nx == x) {
      const double lo = std::min(prev, nx);
      const double hi = std::max(prev, nx);
      return golden_section_max(f, lo, hi);
    }
    prev = x;
    x = nx;
    fx = fn;
    h *= 2.0;
  }
  throw NumericError("integrate_unimodal: could not bracket the mode");
}

}  // namespace

LogIntegral integrate_unimodal(const LogDensity1D& d,
                               const std::function<double(double)>& transform,
                               double rel_tol, std::size_t max_panels) {
  const auto f = [&](double x) { return safe_eval(d.log_f, x); };
  const double mode = find_mode(d);
  const double fmax = f(mode);
  if (!std::isfinite(fmax)) throw NumericError("integrate_unimodal: density vanishes at mode");

  // width from the curvature at the mode
  double width = d.scale > 0.0 ? d.scale : 1.0;
  {
    const double h = 1e-4 * width;
    const double xl = clamp_open(mode - h, d.lower, d.upper);
    const double xr = clamp_open(mode + h, d.lower, d.upper);
    if (xr > mode && xl < mode) {
      const double hl = mode - xl;
      const double hr = xr - mode;
      const double c = 2.0 * ((f(xr) - fmax) / hr + (f(xl) - fmax) / hl) / (hl + hr);
      if (c < 0.0 && std::isfinite(c)) width = 1.0 / std::sqrt(-c);
    }
  }

  // extend until the log density has dropped by 60 nats
  const double drop = 60.0;
  auto extent = [&](int dir) {
    const double bound = dir > 0 ? d.upper : d.lower;
    double t = width;
    for (int iter = 0; iter < 400; ++iter) {
      const double x = mode + dir * t;
      if (std::isfinite(bound) && (dir > 0 ? x >= bound : x <= bound)) return bound;
      if (f(x) < fmax - drop) return x;
      t *= 1.5;
    }
    throw NumericError("integrate_unimodal: density tail does not decay");
  };
  const double lo = extent(-1);
  const double hi = extent(+1);

  static const QuadratureRule base = gauss_legendre(20);
  LogIntegral out;
  out.theta_mode = mode;
  double prev_log = kNegInf;
  double prev_mean = 0.0;
  double prev_var = 0.0;
  std::vector<double> xs;
  std::vector<double> lw;
  for (std::size_t panels = 8; panels <= max_panels; panels *= 2) {
    xs.clear();
    lw.clear();
    const double pw = (hi - lo) / static_cast<double>(panels);
    for (std::size_t p = 0; p < panels; ++p) {
      const double a = lo + pw * static_cast<double>(p);
      for (std::size_t q = 0; q < base.nodes.size(); ++q) {
        const double x = a + 0.5 * pw * (base.nodes[q] + 1.0);
        xs.push_back(x);
        lw.push_back(std::log(0.5 * pw * base.weights[q]) + f(x));
      }
    }
    const double z = logsumexp(lw);
    double mean = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) mean += std::exp(lw[i] - z) * transform(xs[i]);
    double var = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const double dm = transform(xs[i]) - mean;
      var += std::exp(lw[i] - z) * dm * dm;
    }
    out.log_value = z;
    out.mean = mean;
    out.variance = var;
    out.panels = panels;
    const double sd = std::sqrt(std::max(var, 0.0));
    if (std::abs(z - prev_log) <= rel_tol * std::max(1.0, std::abs(z)) &&
        std::abs(mean - prev_mean) <= 1e3 * rel_tol * (std::abs(mean) + sd) &&
        std::abs(var - prev_var) <= 1e3 * rel_tol * std::max(var, 1e-300)) {
      return out;
    }
    prev_log = z;
    prev_mean = mean;
    prev_var = var;
  }
  throw NumericError("integrate_unimodal: no convergence after maximum refinement");
}

double spearman(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.size() < 2) return 0.0;
  auto ranks = [](std::span<const double> v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t i, std::size_t j) { return v[i] < v[j]; });
    std::vector<double> r(v.size());
    std::size_t i = 0;
    while (i < idx.size()) {
      std::size_t j = i;
      while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
      const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
      for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
      i = j + 1;
    }
    return r;
  };
  const auto ra = ranks(a);
  const auto rb = ranks(b);
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

}  // namespace bayesbreak
