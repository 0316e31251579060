#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "bfstab/densitynd.hpp"
#include "bfstab/sphereopt.hpp"

namespace bfstab {

enum class Status { pass, fail, inconclusive };

std::string_view to_string(Status s);

struct DeficitReport {
  std::string case_id;
  std::string theorem;
  double deficit = 0.0;
  double lower_bound = 0.0;
  double margin = 0.0;  // deficit - lower_bound
  double error_estimate = 0.0;
  Status status = Status::pass;
  std::string method;
  double tolerance = 0.0;
  std::vector<std::pair<std::string, double>> diagnostics;

  /// Fills margin and status: pass iff margin >= -(tolerance + error_estimate).
  void finalize();
  double diagnostic(std::string_view name) const;
};

struct VerifyOptions {
  std::optional<double> tolerance;  // per-theorem default when empty
  SphereSearchConfig sphere;
  NdIntegrationOptions integration;
  QuadratureOptions quadrature;
  QuadratureOptions slice_quadrature{1e-9};  // per-slice distances in the slice bound
  int slice_order = 16;               // Hermite order per axis over slice anchors (n <= 3)
  std::uint64_t mc_budget = 4096;     // slice anchors per coordinate for n >= 4
  int sample_size = 2048;             // empirical W_2 sample size
  int repetitions = 16;               // empirical W_2 repetitions
  double sampled_error_limit = 0.05;  // empirical W_2 error above this is inconclusive
  std::uint64_t seed = 0;
};

inline constexpr double kMainTolerance = 1e-6;
inline constexpr double kCorollaryTolerance = 1e-5;
inline constexpr double kTalagrandTolerance = 1e-6;

/// 1/2 int (f')^2 / f dgamma - Ent_gamma(f).
double lsi_deficit(const RelFunction1D& f, const QuadratureOptions& opts = {});

/// 1/2 int |grad f|^2 / f dgamma_n - Ent_{gamma_n}(f) with combined error.
Estimate lsi_deficit(const RelativeDensityND& f, const NdIntegrationOptions& opts = {});

/// delta_LS(f) >= d_n(f phi_n, phi_n)^2 / 2 with f = dnu / dgamma_n.
DeficitReport verify_thm_main(const GaussianMixtureND& nu, const VerifyOptions& opts = {});

/// One-dimensional form for any density (mixture or grid).
DeficitReport verify_thm_main(const Density1D& nu, const VerifyOptions& opts = {});

/// Slice form of the bound. The pass criterion uses the mass-weighted sum
/// 1/2 sum_i int mass(xbar) d(g_xbar phi, phi)^2 dgamma_{n-1}; the unweighted
/// sum over normalized slices is reported as the diagnostic "literal_bound".
DeficitReport verify_corollary(const GaussianMixtureND& nu, const VerifyOptions& opts = {});

struct ProductMeasure {
  std::vector<Density1D> factors;
};

using MeasureSpec = std::variant<Density1D, ProductMeasure, GaussianMixtureND>;

enum class TalagrandMode { one_d, product, sampled_nd };

/// Product view of a single-component mixture with diagonal covariance.
std::optional<ProductMeasure> as_product(const GaussianMixtureND& nu);

/// 2 H(nu | gamma_n) - W_2^2(nu, gamma_n) >= d_n^2 / 2.
DeficitReport verify_talagrand(const MeasureSpec& nu, TalagrandMode mode, const VerifyOptions& opts = {});

struct EmpiricalW2 {
  double mean = 0.0;
  double spread = 0.0;  // standard deviation across repetitions
  double bias = 0.0;    // mean assignment cost between two independent gamma_n samples
};

/// Optimal assignment between m samples of nu and m samples of gamma_n, averaged over repetitions.
EmpiricalW2 empirical_w2_squared(const GaussianMixtureND& nu, int sample_size, int repetitions, std::uint64_t seed);

/// Minimum-cost perfect matching on a square cost matrix; returns the column
/// assigned to each row.
std::vector<int> solve_assignment(const Eigen::MatrixXd& cost);

}  // namespace bfstab
