#pragma once

#include <utility>

#include "bfstab/density1d.hpp"

namespace bfstab {

/// Monotone rearrangement T = F_target^{-1} o F_source. T' is the density
/// ratio pdf_source(x) / pdf_target(T(x)); it is never finite-differenced.
class TransportMap1D {
 public:
  TransportMap1D(Density1D source, Density1D target);

  const Density1D& source() const { return source_; }
  const Density1D& target() const { return target_; }

  double operator()(double x) const { return eval(x); }
  double eval(double x) const;
  double derivative(double x) const;
  /// Evaluates T and T' together (one quantile inversion).
  std::pair<double, double> eval_with_derivative(double x) const;

 private:
  Density1D source_;
  Density1D target_;
};

TransportMap1D build_map(const Density1D& mu, const Density1D& nu);

struct DistanceDetail {
  double value = 0.0;     // reported distance
  double forward = 0.0;   // integral with mu = u
  double backward = 0.0;  // integral with mu = v
  double error = 0.0;     // quadrature error estimate
  bool asymmetric = false;  // directed values differ by more than 1e-6
};

/// One directed evaluation: int |1 - T'| / max(1, T') dmu with T pushing u onto v.
double bf_distance_directed(const Density1D& u, const Density1D& v, const QuadratureOptions& opts = {});

/// Symmetrized distance with diagnostics. When the two directed integrals
/// agree to 1e-6 their mean is reported; otherwise the flag is raised and
/// the mean is still returned.
DistanceDetail bf_distance_detail(const Density1D& u, const Density1D& v, const QuadratureOptions& opts = {});

/// Distance modulo translation d(u, v) in [0, 1].
double bf_distance(const Density1D& u, const Density1D& v, const QuadratureOptions& opts = {});

/// W_2^2 between two laws on the line via the monotone coupling, integrated
/// in the variable of `mu`: int (T(x) - x)^2 dmu(x), T pushing mu onto nu.
double w2_squared_1d(const Density1D& nu, const Density1D& mu, const QuadratureOptions& opts = {});

/// 2 H(nu | gamma) - W_2^2(nu, gamma).
double talagrand_deficit_1d(const Density1D& nu, const QuadratureOptions& opts = {});

/// int (T' - 1 - log T') dgamma for a map whose source is the standard Gaussian.
double bregman_integral(const TransportMap1D& map, const QuadratureOptions& opts = {});

struct BregmanBound {
  double lhs;  // s - 1 - log s
  double rhs;  // ((1 - s) / max(1, s))^2 / 2
};

BregmanBound pointwise_bregman_bound(double s);

}  // namespace bfstab
