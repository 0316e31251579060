#include "bfstab/transport1d.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "bfstab/errors.hpp"

namespace bfstab {

TransportMap1D::TransportMap1D(Density1D source, Density1D target)
    : source_(std::move(source)), target_(std::move(target)) {}

double TransportMap1D::eval(double x) const {
  // Work from whichever tail keeps the probability small, so that both tails
  // keep full relative precision.
  const double p = source_.cdf(x);
  if (p <= 0.5) {
    if (!(p > 0.0)) throw NumericalError("TransportMap1D: source cdf underflow at x=" + std::to_string(x));
    return target_.quantile(p);
  }
  const double q = source_.sf(x);
  if (!(q > 0.0)) throw NumericalError("TransportMap1D: source sf underflow at x=" + std::to_string(x));
  return target_.upper_quantile(q);
}

std::pair<double, double> TransportMap1D::eval_with_derivative(double x) const {
  const double t = eval(x);
  const double d = std::exp(source_.log_pdf(x) - target_.log_pdf(t));
  return {t, d};
}

double TransportMap1D::derivative(double x) const { return eval_with_derivative(x).second; }

TransportMap1D build_map(const Density1D& mu, const Density1D& nu) {
  TransportMap1D map(mu, nu);
  // Probe the map across the working domain so failures surface here.
  const Interval dom = mu.working_domain();
  double prev = -std::numeric_limits<double>::infinity();
  for (int i = 1; i < 16; ++i) {
    const double x = dom.lo + dom.width() * i / 16.0;
    if (!(mu.cdf(x) > 0.0) || !(mu.sf(x) > 0.0)) continue;
    const auto [t, d] = map.eval_with_derivative(x);
    if (!std::isfinite(t) || !(d > 0.0) || !(t >= prev)) {
      throw NumericalError("build_map: quantile inversion produced an invalid map at x=" + std::to_string(x));
    }
    prev = t;
  }
  return map;
}

namespace {

// Integration range in the mu variable: the working domain shrunk to where
// both tail probabilities are representable.
Interval transport_range(const Density1D& mu) {
  Interval dom = mu.working_domain();
  auto representable = [&](double x) { return mu.cdf(x) > 0.0 && mu.sf(x) > 0.0; };
  for (int i = 0; i < 200 && !representable(dom.lo); ++i) dom.lo += 0.01 * dom.width();
  for (int i = 0; i < 200 && !representable(dom.hi); ++i) dom.hi -= 0.01 * dom.width();
  return dom;
}

}  // namespace

double bf_distance_directed(const Density1D& u, const Density1D& v, const QuadratureOptions& opts) {
  if (u.is_standard_gaussian() && v.is_standard_gaussian()) return 0.0;
  TransportMap1D map(u, v);
  const Interval dom = transport_range(u);
  auto integrand = [&](double x) {
    const auto [t, d] = map.eval_with_derivative(x);
    (void)t;
    return std::abs(1.0 - d) / std::max(1.0, d) * u.pdf(x);
  };
  const auto bps = u.breakpoints();
  return integrate_adaptive(integrand, dom.lo, dom.hi, opts, bps).value;
}

DistanceDetail bf_distance_detail(const Density1D& u, const Density1D& v, const QuadratureOptions& opts) {
  DistanceDetail out;
  auto run = [&](const Density1D& a, const Density1D& b, double& err) {
    TransportMap1D map(a, b);
    const Interval dom = transport_range(a);
    auto integrand = [&](double x) {
      const auto [t, d] = map.eval_with_derivative(x);
      (void)t;
      return std::abs(1.0 - d) / std::max(1.0, d) * a.pdf(x);
    };
    const auto bps = a.breakpoints();
    auto r = integrate_adaptive(integrand, dom.lo, dom.hi, opts, bps);
    err = std::max(err, r.error);
    return r.value;
  };
  if (u.is_standard_gaussian() && v.is_standard_gaussian()) return out;
  out.forward = run(u, v, out.error);
  out.backward = run(v, u, out.error);
  out.asymmetric = std::abs(out.forward - out.backward) > 1e-6;
  out.value = std::clamp(0.5 * (out.forward + out.backward), 0.0, 1.0);
  out.error = std::max(out.error, 0.5 * std::abs(out.forward - out.backward));
  return out;
}

double bf_distance(const Density1D& u, const Density1D& v, const QuadratureOptions& opts) {
  return bf_distance_detail(u, v, opts).value;
}

double w2_squared_1d(const Density1D& nu, const Density1D& mu, const QuadratureOptions& opts) {
  if (nu.is_standard_gaussian() && mu.is_standard_gaussian()) return 0.0;
  TransportMap1D map(mu, nu);
  const Interval dom = transport_range(mu);
  auto integrand = [&](double x) {
    const double t = map.eval(x);
    return (t - x) * (t - x) * mu.pdf(x);
  };
  const auto bps = mu.breakpoints();
  auto r = integrate_adaptive(integrand, dom.lo, dom.hi, opts, bps);
  if (!r.converged) throw AccuracyError("w2_squared_1d: quadrature did not converge", r.value, r.error);
  return std::max(r.value, 0.0);
}

double talagrand_deficit_1d(const Density1D& nu, const QuadratureOptions& opts) {
  return 2.0 * entropy_rel_gauss(nu, opts) - w2_squared_1d(nu, Density1D(), opts);
}

double bregman_integral(const TransportMap1D& map, const QuadratureOptions& opts) {
  if (!map.source().is_standard_gaussian())
    throw ValidationError("bregman_integral: map source must be the standard Gaussian");
  const Interval dom = transport_range(map.source());
  auto integrand = [&](double x) {
    const double d = map.derivative(x);
    if (!(d > 0.0)) throw InvariantError("bregman_integral: T' <= 0 at x=" + std::to_string(x));
    // d - 1 - log d loses all digits near d = 1; use log1p on the offset.
    const double e = d - 1.0;
    const double val = std::abs(e) < 1e-3 ? e * e * (0.5 - e / 3.0 + e * e / 4.0) : e - std::log(d);
    return val * normal_pdf(x);
  };
  return integrate_or_throw(integrand, dom.lo, dom.hi, opts, map.source().breakpoints());
}

BregmanBound pointwise_bregman_bound(double s) {
  if (!(s > 0.0) || !std::isfinite(s)) throw DomainError("pointwise_bregman_bound: s must be positive");
  const double e = s - 1.0;
  const double lhs = std::abs(e) < 1e-3 ? e * e * (0.5 - e / 3.0 + e * e / 4.0 - e * e * e / 5.0) : e - std::log(s);
  const double r = (1.0 - s) / std::max(1.0, s);
  return {lhs, 0.5 * r * r};
}

}  // namespace bfstab
