#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "bfstab/density1d.hpp"
#include "bfstab/quadrature.hpp"

namespace bfstab {

inline constexpr int kMaxDimension = 8;

struct MixtureComponentND {
  double weight = 1.0;
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

/// Finite Gaussian mixture on R^n, n in [1, 8]. Each covariance must be
/// symmetric with smallest eigenvalue above 1e-10.
class GaussianMixtureND {
 public:
  explicit GaussianMixtureND(std::vector<MixtureComponentND> components);

  static GaussianMixtureND standard(int dim);
  static GaussianMixtureND gaussian(Eigen::VectorXd mean, Eigen::MatrixXd cov);
  /// Coordinatewise product of 1-D mixtures (one component per index tuple).
  static GaussianMixtureND product(std::span<const GaussianMixture1D> factors);
  /// {"dim": n, "components": [{"weight": w, "mean": [...], "cov": [[...], ...]}]};
  /// cov may also be a flat row-major array of n*n numbers.
  static GaussianMixtureND from_json(std::string_view text);
  static GaussianMixtureND load_json(const std::filesystem::path& path);
  std::string to_json() const;

  int dim() const { return dim_; }
  std::size_t size() const { return components_.size(); }
  const std::vector<MixtureComponentND>& components() const { return components_; }
  /// Coordinate factors when built by product(); empty otherwise.
  std::span<const GaussianMixture1D> factors() const { return factors_; }

  double log_pdf(const Eigen::VectorXd& x) const;
  double pdf(const Eigen::VectorXd& x) const { return std::exp(log_pdf(x)); }
  Eigen::VectorXd grad_log_pdf(const Eigen::VectorXd& x) const;
  Eigen::VectorXd sample(std::mt19937_64& rng) const;

  /// Law of Q X for X ~ this mixture.
  GaussianMixtureND pushforward(const Eigen::MatrixXd& q) const;
  /// Law of X + a.
  GaussianMixtureND shifted(const Eigen::VectorXd& a) const;

  /// Sum_k w_k E[h(m_k + L_k Z)], tensor Gauss-Hermite of the given order.
  double expectation(const std::function<double(const Eigen::VectorXd&)>& h, int order) const;
  /// Same expectation with an arbitrary 1-D rule per axis in each component's frame.
  double expectation(const std::function<double(const Eigen::VectorXd&)>& h, const HermiteRule& rule) const;
  /// Same expectation by randomly shifted QMC; error is the standard error.
  Estimate expectation_qmc(const std::function<double(const Eigen::VectorXd&)>& h, std::uint64_t budget,
                           std::uint64_t seed) const;

  /// Lower Cholesky factor of component k's covariance.
  const Eigen::MatrixXd& cholesky(std::size_t k) const { return chol_[k]; }
  /// Largest covariance condition number among the components.
  double max_condition_number() const;

 private:
  int dim_ = 0;
  std::vector<MixtureComponentND> components_;
  std::vector<GaussianMixture1D> factors_;
  std::vector<Eigen::MatrixXd> chol_;
  std::vector<Eigen::MatrixXd> precision_;
  std::vector<double> log_norm_;  // log w_k - log det L_k - n/2 log(2 pi)
};

/// A unit vector of R^n.
class Direction {
 public:
  explicit Direction(Eigen::VectorXd xi);
  static Direction normalized(const Eigen::VectorXd& v);
  static Direction axis(int dim, int index);

  const Eigen::VectorXd& vector() const { return xi_; }
  int dim() const { return static_cast<int>(xi_.size()); }
  /// Representative of {xi, -xi} whose first non-negligible entry is positive.
  Direction canonical() const;

 private:
  Eigen::VectorXd xi_;
};

/// Coordinate slice y -> f(xbar^i y): `index` is 0-based, `anchor` holds the
/// remaining n-1 coordinates in order.
struct SliceSpec {
  int index = 0;
  Eigen::VectorXd anchor;
};

/// Tensor product h_1(x_1) ... h_n(x_n) of normalized relative functions.
struct ProductFunction {
  std::vector<RelFunction1D> factors;

  explicit ProductFunction(std::vector<RelFunction1D> fs);
  int dim() const { return static_cast<int>(factors.size()); }
};

/// Density f = dnu/dgamma_n. Keeps the mixture (or product) it came from so
/// that integrals can be taken against nu and slices in closed form.
class RelativeDensityND {
 public:
  using ScalarFn = std::function<double(const Eigen::VectorXd&)>;
  using VectorFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

  /// Opaque density from log f and grad log f.
  RelativeDensityND(int dim, ScalarFn log_value, VectorFn grad_log);
  explicit RelativeDensityND(GaussianMixtureND source);
  explicit RelativeDensityND(ProductFunction source);

  int dim() const { return dim_; }
  double log_value(const Eigen::VectorXd& x) const { return log_value_(x); }
  double value(const Eigen::VectorXd& x) const { return std::exp(log_value_(x)); }
  Eigen::VectorXd grad_log(const Eigen::VectorXd& x) const { return grad_log_(x); }
  Eigen::VectorXd gradient(const Eigen::VectorXd& x) const { return value(x) * grad_log_(x); }

  const GaussianMixtureND* mixture() const { return mixture_ ? &*mixture_ : nullptr; }
  const ProductFunction* product() const { return product_ ? &*product_ : nullptr; }

 private:
  int dim_;
  ScalarFn log_value_;
  VectorFn grad_log_;
  std::optional<GaussianMixtureND> mixture_;
  std::optional<ProductFunction> product_;
};

/// Density of <X, xi> for X ~ nu.
GaussianMixture1D directional_marginal(const GaussianMixtureND& nu, const Direction& xi);

/// f = pdf_nu / phi_n with analytic gradient. Throws NumericalError when a
/// covariance has condition number above 1e12.
RelativeDensityND relative_density(const GaussianMixtureND& nu);

/// Precomputed conditioning of a mixture on all coordinates but one.
class CoordinateSlicer {
 public:
  CoordinateSlicer(const GaussianMixtureND& nu, int index);

  int index() const { return index_; }
  /// Law of the remaining n-1 coordinates (empty for n = 1).
  const std::optional<GaussianMixtureND>& others() const { return others_; }
  /// Law of X_i given the other coordinates equal `anchor`.
  GaussianMixture1D conditional(const Eigen::VectorXd& anchor) const;
  /// log of p_others(anchor) / phi_{n-1}(anchor), i.e. log of the slice mass.
  double log_slice_mass(const Eigen::VectorXd& anchor) const;

 private:
  struct Piece {
    double log_weight;
    double mean_i;
    Eigen::RowVectorXd gain;
    double cond_std;
  };
  int index_;
  std::optional<GaussianMixtureND> others_;
  std::vector<Piece> pieces_;
};

/// (mass, g) with mass = int f(xbar^i y) dgamma(y) and g the normalized slice.
Normalized1D conditional_slice(const RelativeDensityND& f, const SliceSpec& s);

struct NdIntegrationOptions {
  int hermite_order = 64;  // per-axis order; mixtures use a trapezoidal rule with this many intervals
  std::uint64_t mc_budget = 1'000'000;
  std::uint64_t seed = 0;
};

/// Ent_{gamma_n}(f). Product mixtures and product functions are summed over
/// their 1-D factors. For other n <= 3 mixtures the value is the mean of two
/// interleaved trapezoidal grids and the error is half their difference; other
/// densities use Gauss-Hermite at two orders. For n >= 4, QMC with its standard error.
Estimate entropy_nd(const RelativeDensityND& f, const NdIntegrationOptions& opts = {});

/// int |grad f|^2 / f dgamma_n.
Estimate fisher_nd(const RelativeDensityND& f, const NdIntegrationOptions& opts = {});

/// Right side of the entropy tensorization inequality:
/// sum_i E_{xbar ~ gamma_{n-1}} Ent_gamma(f_{xbar^i}).
/// Quadrature for n <= 3, Monte Carlo with `mc_budget` anchors otherwise.
Estimate tensorize_entropy_bound(const RelativeDensityND& f, std::uint64_t mc_budget = 4096,
                                 const NdIntegrationOptions& opts = {});

}  // namespace bfstab
