#pragma once

#include <cmath>
#include <filesystem>
#include <functional>
#include <memory>
#include <random>
#include <span>
#include <variant>
#include <vector>

#include "bfstab/quadrature.hpp"

namespace bfstab {

struct MixtureComponent1D {
  double weight = 1.0;
  double mean = 0.0;
  double stddev = 1.0;
};

/// Finite Gaussian mixture on the line. Weights must sum to one within 1e-12.
class GaussianMixture1D {
 public:
  explicit GaussianMixture1D(std::vector<MixtureComponent1D> components);

  /// Rescales the weights to sum to one before validating.
  static GaussianMixture1D normalized(std::vector<MixtureComponent1D> components);
  static GaussianMixture1D gaussian(double mean, double stddev);

  std::span<const MixtureComponent1D> components() const { return components_; }

  double pdf(double x) const;
  double log_pdf(double x) const;
  double dlog_pdf(double x) const;
  double cdf(double x) const;
  double sf(double x) const;
  double quantile(double p) const;
  double upper_quantile(double q) const;

  double mean() const;
  double variance() const;
  Interval working_domain() const;
  std::vector<double> breakpoints() const;
  GaussianMixture1D shifted(double a) const;

 private:
  double solve_lower(double p) const;
  double solve_upper(double q) const;

  std::vector<MixtureComponent1D> components_;
};

/// Gaussian-shaped tail glued to one end of a grid density:
/// density(x) = exp(log_value + log_slope * t - t^2 / (2 stddev^2)), t = x - anchor.
struct GaussianTail {
  double anchor = 0.0;
  double log_value = 0.0;
  double log_slope = 0.0;
  double stddev = 1.0;
  double mass = 0.0;
};

/// Density given on strictly increasing nodes, interpolated linearly in log
/// density, with matched Gaussian tails beyond the node range. The
/// constructor normalizes total mass to one and records the constant it
/// divided out.
class GridDensity1D {
 public:
  static GridDensity1D from_values(std::vector<double> nodes, std::span<const double> values);
  static GridDensity1D from_log_values(std::vector<double> nodes, std::vector<double> log_values);
  /// CSV with header `x,density`.
  static GridDensity1D load_csv(const std::filesystem::path& path);

  double normalization() const { return data_->normalization; }
  std::span<const double> nodes() const { return data_->nodes; }
  std::span<const double> log_values() const { return data_->log_values; }
  const GaussianTail& left_tail() const { return data_->left; }
  const GaussianTail& right_tail() const { return data_->right; }

  double pdf(double x) const;
  double log_pdf(double x) const;
  double dlog_pdf(double x) const;
  double cdf(double x) const;
  double sf(double x) const;
  double quantile(double p) const;
  double upper_quantile(double q) const;

  double mean() const { return data_->mean; }
  double variance() const { return data_->variance; }
  Interval working_domain() const;
  std::vector<double> breakpoints() const;
  GridDensity1D shifted(double a) const;

 private:
  struct Data {
    std::vector<double> nodes;
    std::vector<double> log_values;
    std::vector<double> slopes;          // per segment, d log density / dx
    std::vector<double> nodal_dlog;      // central differences at nodes
    std::vector<double> segment_mass;
    std::vector<double> prefix;          // mass left of node i
    std::vector<double> suffix;          // mass right of node i
    GaussianTail left;
    GaussianTail right;
    double normalization = 1.0;
    double mean = 0.0;
    double variance = 1.0;
  };

  explicit GridDensity1D(std::shared_ptr<const Data> data) : data_(std::move(data)) {}
  std::size_t segment_of(double x) const;

  std::shared_ptr<const Data> data_;
};

struct StandardGaussian {};

/// A strictly positive probability density on R with evaluable cdf and quantile.
class Density1D {
 public:
  enum class Kind { standard_gaussian, mixture, grid };

  Density1D() = default;
  Density1D(StandardGaussian) {}
  Density1D(GaussianMixture1D m) : repr_(std::move(m)) {}
  Density1D(GridDensity1D g) : repr_(std::move(g)) {}

  /// N(mean, variance).
  static Density1D gaussian(double mean, double variance);

  Kind kind() const { return static_cast<Kind>(repr_.index()); }
  /// True for StandardGaussian and for a single N(0,1) mixture component.
  bool is_standard_gaussian() const;
  const GaussianMixture1D* as_mixture() const { return std::get_if<GaussianMixture1D>(&repr_); }
  const GridDensity1D* as_grid() const { return std::get_if<GridDensity1D>(&repr_); }

  double pdf(double x) const;
  double log_pdf(double x) const;
  double dlog_pdf(double x) const;
  double cdf(double x) const;
  double sf(double x) const;
  double quantile(double p) const;
  /// x with sf(x) = q; full relative precision in the upper tail.
  double upper_quantile(double q) const;
  double sample(std::mt19937_64& rng) const;

  double mean() const;
  double variance() const;
  /// Interval outside of which the neglected mass is below ~1e-20.
  Interval working_domain() const;
  std::vector<double> breakpoints() const;
  /// Density of X + a.
  Density1D shifted(double a) const;

 private:
  std::variant<StandardGaussian, GaussianMixture1D, GridDensity1D> repr_;
};

double cdf(const Density1D& d, double x);
double quantile(const Density1D& d, double p);

/// A positive function interpreted as a density relative to the standard
/// Gaussian: the measure is f(x) phi(x) dx. Integrals against gamma run over
/// `domain()`.
class RelFunction1D {
 public:
  using Fn = std::function<double(double)>;

  RelFunction1D(Fn value, Fn derivative = {}, Interval domain = {-10.0, 10.0},
                std::vector<double> breakpoints = {});

  static RelFunction1D constant(double c);
  /// exp(a x + b).
  static RelFunction1D exp_linear(double a, double b);
  /// f = pdf / phi for the given density; derivative analytic (mixtures) or
  /// central differences (grids).
  static RelFunction1D from_density(const Density1D& d);
  /// Log-linear interpolation of nodal values; derivative from central
  /// differences with one-sided stencils at the ends. Domain is the node range.
  static RelFunction1D from_grid(std::vector<double> nodes, std::span<const double> values);

  double operator()(double x) const { return value_(x); }
  double derivative(double x) const;
  bool has_derivative() const { return static_cast<bool>(derivative_); }
  const Interval& domain() const { return domain_; }
  std::span<const double> breakpoints() const { return breakpoints_; }
  /// Integral of f against gamma over the domain.
  double mass() const { return mass_; }
  bool is_normalized(double tol = 1e-9) const { return std::abs(mass_ - 1.0) <= tol; }

  RelFunction1D scaled(double c) const;

 private:
  Fn value_;
  Fn derivative_;
  Interval domain_;
  std::vector<double> breakpoints_;
  double mass_ = 1.0;
};

/// H(nu | gamma) = int log(dnu/dgamma) dnu.
double entropy_rel_gauss(const Density1D& nu, const QuadratureOptions& opts = {});

/// Ent_gamma(f) = int f log f dgamma - m log m, m = int f dgamma.
double ent_gamma(const RelFunction1D& f, const QuadratureOptions& opts = {});

/// int (f')^2 / f dgamma.
double fisher_integral(const RelFunction1D& f, const QuadratureOptions& opts = {});

struct Normalized1D {
  double mass;
  RelFunction1D g;
};

/// Returns (m, f / m) with m = int f dgamma.
Normalized1D normalize(const RelFunction1D& f);

}  // namespace bfstab
