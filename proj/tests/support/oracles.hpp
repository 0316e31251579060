#pragma once

// Reference computations that share no code with the library: plain
// composite Simpson rules, erfc-based normal functions and bisection
// quantiles. Slow but easy to audit.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

namespace oracle {

inline double simpson(const std::function<double(double)>& f, double a, double b, int n = 20000) {
  if (n % 2) ++n;
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
  return s * h / 3.0;
}

inline double phi(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }
inline double Phi(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

struct Comp {
  double w, m, s;
};

// Gaussian mixture on the line.
struct Mix {
  std::vector<Comp> comps;

  double pdf(double x) const {
    double p = 0.0;
    for (const auto& c : comps) p += c.w * phi((x - c.m) / c.s) / c.s;
    return p;
  }
  double dpdf(double x) const {
    double p = 0.0;
    for (const auto& c : comps) {
      const double z = (x - c.m) / c.s;
      p -= c.w * z * phi(z) / (c.s * c.s);
    }
    return p;
  }
  double cdf(double x) const {
    double p = 0.0;
    for (const auto& c : comps) p += c.w * Phi((x - c.m) / c.s);
    return p;
  }
  double quantile(double p) const {
    double lo = -60.0, hi = 60.0;
    for (int i = 0; i < 200 && hi - lo > 1e-15 * (1.0 + std::abs(lo)); ++i) {
      const double mid = 0.5 * (lo + hi);
      (cdf(mid) < p ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
  }
  double moment(int k) const {
    double m = 0.0;
    for (const auto& c : comps) m += c.w * (k == 1 ? c.m : c.m * c.m + c.s * c.s);
    return m;
  }
  double lo() const {
    double v = 0.0;
    for (const auto& c : comps) v = std::min(v, c.m - 12.0 * c.s);
    return v;
  }
  double hi() const {
    double v = 0.0;
    for (const auto& c : comps) v = std::max(v, c.m + 12.0 * c.s);
    return v;
  }
};

inline Mix gauss(double m, double s) { return {{{1.0, m, s}}}; }

// Quantile of `target` at the probability of `source` at x, by bisection
// started from the previous answer's bracket.
inline double transport(const Mix& source, const Mix& target, double x) {
  const double p = source.cdf(x);
  if (p <= 0.0 || p >= 1.0) return target.quantile(std::clamp(p, 1e-300, 1.0 - 1e-16));
  return target.quantile(p);
}

// d(u, v) integrated in the variable of u on a fine uniform grid.
inline double distance_directed(const Mix& u, const Mix& v, int n = 200000) {
  auto integrand = [&](double x) {
    const double p = u.pdf(x);
    if (p < 1e-300) return 0.0;
    const double t = transport(u, v, x);
    const double tp = p / v.pdf(t);
    return std::abs(1.0 - tp) / std::max(1.0, tp) * p;
  };
  return simpson(integrand, u.lo(), u.hi(), n);
}

inline double distance(const Mix& u, const Mix& v, int n = 200000) {
  return 0.5 * (distance_directed(u, v, n) + distance_directed(v, u, n));
}

inline double relative_entropy(const Mix& nu) {
  return simpson([&](double x) {
    const double p = nu.pdf(x);
    return p > 1e-300 ? p * (std::log(p) - std::log(phi(x))) : 0.0;
  }, nu.lo(), nu.hi(), 40000);
}

// int (f')^2 / f dgamma with f = pdf / phi, i.e. int (log pdf' + x)^2 pdf.
inline double relative_fisher(const Mix& nu) {
  return simpson([&](double x) {
    const double p = nu.pdf(x);
    if (p < 1e-300) return 0.0;
    const double g = nu.dpdf(x) / p + x;
    return g * g * p;
  }, nu.lo(), nu.hi(), 40000);
}

inline double w2_to_standard(const Mix& nu) {
  const Mix std_normal = gauss(0.0, 1.0);
  return simpson([&](double t) {
    const double y = transport(std_normal, nu, t);
    return (y - t) * (y - t) * phi(t);
  }, -9.0, 9.0, 20000);
}

// int (T' - 1 - log T') dgamma, T pushing gamma onto nu.
inline double bregman(const Mix& nu) {
  const Mix std_normal = gauss(0.0, 1.0);
  return simpson([&](double t) {
    const double tp = phi(t) / nu.pdf(transport(std_normal, nu, t));
    return (tp - 1.0 - std::log(tp)) * phi(t);
  }, -9.0, 9.0, 20000);
}

// sup_x [g(x) - c (x - z)^2] by dense scan and golden-section polish.
inline double sup_convolution(const std::function<double(double)>& g, double c, double z, double lo = -15.0,
                              double hi = 15.0, int n = 30001) {
  const double h = (hi - lo) / (n - 1);
  auto obj = [&](double x) { return g(x) - c * (x - z) * (x - z); };
  int best = 0;
  double bv = obj(lo);
  for (int i = 1; i < n; ++i)
    if (double v = obj(lo + i * h); v > bv) bv = v, best = i;
  double a = lo + std::max(0, best - 1) * h, b = lo + std::min(n - 1, best + 1) * h;
  const double r = 0.5 * (std::sqrt(5.0) - 1.0);
  for (int i = 0; i < 100; ++i) {
    const double x1 = b - r * (b - a), x2 = a + r * (b - a);
    if (obj(x1) > obj(x2))
      b = x2;
    else
      a = x1;
  }
  return std::max(bv, obj(0.5 * (a + b)));
}

}  // namespace oracle
