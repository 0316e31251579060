#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace bfstab {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  double width() const { return hi - lo; }
  bool contains(double x) const { return lo <= x && x <= hi; }
  Interval hull(const Interval& o) const { return {lo < o.lo ? lo : o.lo, hi > o.hi ? hi : o.hi}; }
};

struct Estimate {
  double value = 0.0;
  double error = 0.0;
};

struct QuadratureOptions {
  double abs_tol = 1e-11;
  double rel_tol = 0.0;
  int max_panels = 2000;
};

struct QuadratureResult {
  double value = 0.0;
  double error = 0.0;
  int evaluations = 0;
  int panels = 0;
  bool converged = false;
};

using Integrand1D = std::function<double(double)>;

/// Globally adaptive Gauss-Kronrod (7/15) quadrature over [a, b].
///
/// Panels are bisected largest-error-first until the summed Kronrod-Gauss
/// error estimate falls below max(abs_tol, rel_tol * |I|) or max_panels
/// panels have been added. `breakpoints` seeds the initial partition; points
/// outside (a, b) are ignored.
QuadratureResult integrate_adaptive(const Integrand1D& f, double a, double b,
                                    const QuadratureOptions& opts = {},
                                    std::span<const double> breakpoints = {});

/// Same as integrate_adaptive but throws AccuracyError when not converged.
double integrate_or_throw(const Integrand1D& f, double a, double b,
                          const QuadratureOptions& opts = {},
                          std::span<const double> breakpoints = {});

/// Gauss-Hermite rule for the standard normal weight: sum w_i h(x_i) ~ E[h(Z)], Z ~ N(0,1).
struct HermiteRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Cached; nodes from the Jacobi matrix eigenvalues, polished by Newton on the
/// orthonormal Hermite recurrence, weights from the Christoffel function.
const HermiteRule& gauss_hermite(int order);

/// E[h(Z)], Z ~ N(0, I_dim), via the tensor product of 1-D Hermite rules.
double tensor_hermite_expectation(int dim, int order,
                                  const std::function<double(const Eigen::VectorXd&)>& h);

/// Tensor product of any 1-D rule for the standard normal weight. Nodes whose
/// product weight is at most `weight_floor` are skipped.
double tensor_rule_expectation(int dim, const HermiteRule& rule,
                               const std::function<double(const Eigen::VectorXd&)>& h, double weight_floor = 0.0);

/// Trapezoidal rule for the standard normal weight on [-span, span] with the
/// given number of intervals; `half_shift` moves every node by half a step.
/// Converges geometrically for integrands analytic in a strip around the real
/// axis, which Gauss-Hermite handles poorly when the poles sit close to it
/// (log-densities of mixtures with unequal variances).
HermiteRule uniform_gaussian_rule(int intervals, double span = 8.0, bool half_shift = false);

/// Randomly shifted Sobol points mapped to N(0, I_dim). `budget` points are
/// split over `shifts` independent Cranley-Patterson shifts drawn from `seed`;
/// the error is the standard error across shifts.
Estimate qmc_gaussian_expectation(int dim, std::uint64_t budget, std::uint64_t seed,
                                  const std::function<double(const Eigen::VectorXd&)>& h,
                                  int shifts = 16);

/// Standard normal helpers with full tail precision.
double normal_pdf(double x);
double normal_log_pdf(double x);
double normal_cdf(double x);
double normal_sf(double x);
double normal_quantile(double p);        // Phi^{-1}(p)
double normal_upper_quantile(double q);  // x with 1 - Phi(x) = q

/// Deterministic seed derivation used to split streams per case and per worker.
std::uint64_t split_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace bfstab
