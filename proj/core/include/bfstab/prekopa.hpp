#pragma once

#include <functional>
#include <string>
#include <vector>

#include "bfstab/deficits.hpp"

namespace bfstab {

/// Exponent g of f = e^g for the Prekopa-Leindler check. Constant, linear and
/// concave quadratic g use closed forms; anything else goes through the grid.
class GFunction {
 public:
  enum class Kind { constant, linear, quadratic, general };
  using Fn = std::function<double(double)>;

  static GFunction constant(double b);
  static GFunction linear(double a, double b = 0.0);
  /// q x^2 + a x + b with q <= 0.
  static GFunction quadratic(double q, double a, double b = 0.0);
  /// Smooth bounded g with derivative. Integrals run over `domain`.
  static GFunction general(Fn value, Fn derivative, Interval domain = {-10.0, 10.0}, std::string name = "general");
  /// 0.25 sin(2x) exp(-x^2/4).
  static GFunction sin_bump();

  Kind kind() const { return kind_; }
  const std::string& name() const { return name_; }
  double operator()(double x) const;
  double derivative(double x) const;
  const Interval& domain() const { return domain_; }
  double quadratic_coefficient() const { return q_; }
  double linear_coefficient() const { return a_; }
  double constant_coefficient() const { return b_; }
  /// Sampled range of g over the domain (exact for the closed-form kinds on bounded sets).
  double upper() const { return upper_; }
  double lower() const { return lower_; }

 private:
  GFunction() = default;

  Kind kind_ = Kind::constant;
  std::string name_;
  double q_ = 0.0, a_ = 0.0, b_ = 0.0;
  Fn value_, derivative_;
  Interval domain_{-10.0, 10.0};
  double upper_ = 0.0;  // max of g over a fine grid of the domain
  double lower_ = 0.0;  // min of g over the same grid
};

/// h(z) = sup_x [g(x) - c (x - z)^2] with c = (1 - lambda) / (2 lambda).
double sup_convolution(const GFunction& g, double lambda, double z);

/// h on every node of `z`, which must be increasing. General g uses a uniform
/// x grid of `x_nodes` points with monotone-argmax search, then Brent refinement.
std::vector<double> sup_convolution_grid(const GFunction& g, double lambda, std::span<const double> z,
                                         int x_nodes = 4097);

struct PLTriple {
  GFunction g = GFunction::constant(0.0);
  double lambda = 0.5;
  int grid_nodes = 4097;
};

/// lambda^(1+lambda) (1-lambda)^(2-lambda) / 2.
double pl_constant(double lambda);

/// int w_lambda - 1 against pl_constant(lambda) d(u_lambda, phi)^2. Throws
/// AccuracyError when the grid integral of e^h misses the adaptive one by more than 1e-6.
DeficitReport pl_deficit_check(const PLTriple& t, const VerifyOptions& opts = {});

struct LimitRow {
  double lambda = 0.0;
  double entropy_ratio = 0.0;   // [(int e^{g/(1-l)})^(1-l) - int e^g] / l
  double entropy_target = 0.0;  // Ent_gamma(e^g)
  double fisher_ratio = 0.0;    // [int e^{h_l} - int e^g] / l
  double fisher_target = 0.0;   // int g'^2 e^g / (2 (1 - l))

  double entropy_residual() const { return entropy_ratio - entropy_target; }
  double fisher_residual() const { return fisher_ratio - fisher_target; }
};

inline const std::vector<double> kDefaultLambdaSweep{0.4, 0.2, 0.1, 0.05, 0.025, 0.0125};

std::vector<LimitRow> lambda_limit_diagnostics(const GFunction& g,
                                               const std::vector<double>& lambdas = kDefaultLambdaSweep,
                                               int grid_nodes = 4097);

/// True when each residual shrinks by at least `factor` from one row to the
/// next (residuals below 1e-14 count as converged).
bool residuals_contract(const std::vector<LimitRow>& rows, double factor = 1.5);

}  // namespace bfstab
