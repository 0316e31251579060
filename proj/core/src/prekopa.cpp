#include "bfstab/prekopa.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <boost/math/tools/minima.hpp>

#include "bfstab/errors.hpp"
#include "bfstab/transport1d.hpp"

namespace bfstab {
namespace {

void check_lambda(double lambda) {
  if (!(lambda > 0.0 && lambda < 1.0)) throw DomainError("lambda must lie in (0, 1)");
}

double penalty(double lambda) { return (1.0 - lambda) / (2.0 * lambda); }

// log of int exp(k z^2 + b z + d) dgamma(z), requires k < 1/2.
double log_gaussian_exp_integral(double k, double b, double d) {
  const double s = 1.0 - 2.0 * k;
  if (!(s > 0.0)) throw DomainError("exponential moment diverges");
  return d + b * b / (2.0 * s) - 0.5 * std::log(s);
}

struct Quadratic {
  double k, b, d;
};

// Exact coefficients of a quadratic function from three samples.
Quadratic fit_quadratic(const std::function<double(double)>& f) {
  const double f0 = f(0.0), fp = f(1.0), fm = f(-1.0);
  return {0.5 * (fp + fm - 2.0 * f0), 0.5 * (fp - fm), f0};
}

// Largest accepted gap between the grid and adaptive values of int e^h dgamma.
constexpr double kPlGridTolerance = 1e-6;

bool is_closed_form(const GFunction& g) { return g.kind() != GFunction::Kind::general; }

double log_z_closed(const GFunction& g, double lambda) {
  const double s = 1.0 - lambda;
  return log_gaussian_exp_integral(g.quadratic_coefficient() / s, g.linear_coefficient() / s,
                                   g.constant_coefficient() / s);
}

double log_eh_closed(const GFunction& g, double lambda) {
  const Quadratic h = fit_quadratic([&](double z) { return sup_convolution(g, lambda, z); });
  return log_gaussian_exp_integral(h.k, h.b, h.d);
}

double log_eg_closed(const GFunction& g) {
  return log_gaussian_exp_integral(g.quadratic_coefficient(), g.linear_coefficient(), g.constant_coefficient());
}

double integral_against_gamma(const std::function<double(double)>& f, const Interval& dom) {
  return integrate_or_throw([&](double x) { return f(x) * normal_pdf(x); }, dom.lo, dom.hi, {1e-12, 1e-13, 4000});
}

// Composite Simpson on a uniform grid; `stride` 2 uses every other node.
double simpson(std::span<const double> y, double h, int stride) {
  const std::size_t intervals = (y.size() - 1) / stride;
  double s = y.front() + y.back();
  for (std::size_t k = 1; k < intervals; ++k) s += (k % 2 ? 4.0 : 2.0) * y[k * stride];
  return s * h * stride / 3.0;
}

std::vector<double> uniform_grid(const Interval& dom, int nodes) {
  std::vector<double> z(nodes);
  const double h = dom.width() / (nodes - 1);
  for (int i = 0; i < nodes; ++i) z[i] = dom.lo + h * i;
  z.back() = dom.hi;
  return z;
}

// Refines a grid argmax by Brent's method on the bracketing cells.
double refine_max(const GFunction& g, double c, double z, double x_left, double x_right, double grid_value) {
  auto neg = [&](double x) { return -(g(x) - c * (x - z) * (x - z)); };
  const auto [x, fx] = boost::math::tools::brent_find_minima(neg, x_left, x_right, 40);
  (void)x;
  return std::max(grid_value, -fx);
}

}  // namespace

GFunction GFunction::constant(double b) {
  GFunction g;
  g.kind_ = Kind::constant;
  g.name_ = "constant";
  g.b_ = b;
  g.upper_ = g.lower_ = b;
  return g;
}

GFunction GFunction::linear(double a, double b) {
  GFunction g;
  g.kind_ = a == 0.0 ? Kind::constant : Kind::linear;
  g.name_ = a == 0.0 ? "constant" : "linear";
  g.a_ = a;
  g.b_ = b;
  g.upper_ = b + std::abs(a) * 10.0;
  g.lower_ = b - std::abs(a) * 10.0;
  return g;
}

GFunction GFunction::quadratic(double q, double a, double b) {
  if (q > 0.0) throw DomainError("GFunction::quadratic: g must be bounded above (q <= 0)");
  if (q == 0.0) return linear(a, b);
  GFunction g;
  g.kind_ = Kind::quadratic;
  g.name_ = "quadratic";
  g.q_ = q;
  g.a_ = a;
  g.b_ = b;
  g.upper_ = b - a * a / (4.0 * q);
  g.lower_ = std::min(g(-10.0), g(10.0));
  return g;
}

GFunction GFunction::general(Fn value, Fn derivative, Interval domain, std::string name) {
  if (!value || !derivative) throw ValidationError("GFunction::general: value and derivative are required");
  if (!(domain.width() > 0.0)) throw ValidationError("GFunction::general: empty domain");
  GFunction g;
  g.kind_ = Kind::general;
  g.name_ = std::move(name);
  g.value_ = std::move(value);
  g.derivative_ = std::move(derivative);
  g.domain_ = domain;
  g.upper_ = -std::numeric_limits<double>::infinity();
  g.lower_ = std::numeric_limits<double>::infinity();
  for (double x : uniform_grid(domain, 8193)) {
    const double v = g.value_(x);
    if (!std::isfinite(v)) throw DomainError("GFunction::general: g is not finite on its domain");
    g.upper_ = std::max(g.upper_, v);
    g.lower_ = std::min(g.lower_, v);
  }
  return g;
}

GFunction GFunction::sin_bump() {
  return general([](double x) { return 0.25 * std::sin(2.0 * x) * std::exp(-0.25 * x * x); },
                 [](double x) {
                   const double e = std::exp(-0.25 * x * x);
                   return 0.25 * e * (2.0 * std::cos(2.0 * x) - 0.5 * x * std::sin(2.0 * x));
                 },
                 {-10.0, 10.0}, "sin-bump");
}

double GFunction::operator()(double x) const {
  return kind_ == Kind::general ? value_(x) : (q_ * x + a_) * x + b_;
}

double GFunction::derivative(double x) const {
  return kind_ == Kind::general ? derivative_(x) : 2.0 * q_ * x + a_;
}

double sup_convolution(const GFunction& g, double lambda, double z) {
  check_lambda(lambda);
  if (!std::isfinite(z)) throw DomainError("sup_convolution: z must be finite");
  const double c = penalty(lambda);
  switch (g.kind()) {
    case GFunction::Kind::constant:
      return g.constant_coefficient();
    case GFunction::Kind::linear: {
      const double a = g.linear_coefficient();
      return a * z + g.constant_coefficient() + a * a * lambda / (2.0 * (1.0 - lambda));
    }
    case GFunction::Kind::quadratic: {
      const double x = (g.linear_coefficient() + 2.0 * c * z) / (2.0 * (c - g.quadratic_coefficient()));
      return g(x) - c * (x - z) * (x - z);
    }
    case GFunction::Kind::general:
      break;
  }
  const double reach = std::sqrt(std::max(0.0, g.upper() - g(z)) / c) + 1e-9;
  const int nodes = 1025;
  const auto xs = uniform_grid({z - reach, z + reach}, nodes);
  int best = 0;
  double best_value = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < nodes; ++i) {
    const double v = g(xs[i]) - c * (xs[i] - z) * (xs[i] - z);
    if (v > best_value) {
      best_value = v;
      best = i;
    }
  }
  return refine_max(g, c, z, xs[std::max(0, best - 1)], xs[std::min(nodes - 1, best + 1)], best_value);
}

std::vector<double> sup_convolution_grid(const GFunction& g, double lambda, std::span<const double> z,
                                         int x_nodes) {
  check_lambda(lambda);
  std::vector<double> h(z.size());
  if (z.empty()) return h;
  for (std::size_t i = 1; i < z.size(); ++i)
    if (!(z[i] > z[i - 1])) throw ValidationError("sup_convolution_grid: z must be increasing");
  if (is_closed_form(g)) {
    for (std::size_t i = 0; i < z.size(); ++i) h[i] = sup_convolution(g, lambda, z[i]);
    return h;
  }
  if (x_nodes < 3) throw ValidationError("sup_convolution_grid: need at least 3 x nodes");
  const double c = penalty(lambda);
  const double reach = std::sqrt(std::max(0.0, g.upper() - g.lower()) / c) + 1e-9;
  const auto xs = uniform_grid({z.front() - reach, z.back() + reach}, x_nodes);
  std::vector<double> gx(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) gx[i] = g(xs[i]);

  // The maximizer is nondecreasing in z, so each half only searches its side of the parent's argmax.
  std::vector<int> arg(z.size());
  auto solve = [&](auto&& self, int zlo, int zhi, int xlo, int xhi) -> void {
    if (zlo > zhi) return;
    const int mid = (zlo + zhi) / 2;
    int best = xlo;
    double best_value = -std::numeric_limits<double>::infinity();
    for (int i = xlo; i <= xhi; ++i) {
      const double dx = xs[i] - z[mid];
      const double v = gx[i] - c * dx * dx;
      if (v > best_value) {
        best_value = v;
        best = i;
      }
    }
    arg[mid] = best;
    h[mid] = best_value;
    self(self, zlo, mid - 1, xlo, best);
    self(self, mid + 1, zhi, best, xhi);
  };
  solve(solve, 0, static_cast<int>(z.size()) - 1, 0, static_cast<int>(xs.size()) - 1);

  const int last = static_cast<int>(xs.size()) - 1;
  for (std::size_t k = 0; k < z.size(); ++k)
    h[k] = refine_max(g, c, z[k], xs[std::max(0, arg[k] - 1)], xs[std::min(last, arg[k] + 1)], h[k]);
  return h;
}

double pl_constant(double lambda) {
  return 0.5 * std::pow(lambda, 1.0 + lambda) * std::pow(1.0 - lambda, 2.0 - lambda);
}

DeficitReport pl_deficit_check(const PLTriple& t, const VerifyOptions& opts) {
  check_lambda(t.lambda);
  const double lambda = t.lambda;
  const GFunction& g = t.g;
  DeficitReport r;
  r.theorem = "pl";
  r.tolerance = opts.tolerance.value_or(1e-6);
  const Density1D gamma(StandardGaussian{});

  double log_z = 0.0, log_eh = 0.0, d = 0.0, d_error = 0.0, int_error = 0.0, grid_integral = 0.0;
  std::ostringstream method;
  if (is_closed_form(g)) {
    log_z = log_z_closed(g, lambda);
    log_eh = log_eh_closed(g, lambda);
    // u_lambda is Gaussian with precision 1 - 2 q / (1 - lambda).
    const double s = 1.0 - lambda;
    const double precision = 1.0 - 2.0 * g.quadratic_coefficient() / s;
    const double mean = g.linear_coefficient() / s / precision;
    const auto detail = bf_distance_detail(Density1D::gaussian(mean, 1.0 / precision), gamma, opts.quadrature);
    d = detail.value;
    d_error = detail.error;
    method << "closed-form sup-convolution and Gaussian integrals (" << g.name() << ")";
  } else {
    if (t.grid_nodes < 9 || (t.grid_nodes - 1) % 4 != 0)
      throw ValidationError("pl_deficit_check: grid_nodes must be 4k + 1 with k >= 2");
    const Interval dom = g.domain();
    const double s = 1.0 - lambda;
    log_z = std::log(integral_against_gamma([&](double x) { return std::exp(g(x) / s); }, dom));
    const auto z = uniform_grid(dom, t.grid_nodes);
    const auto h = sup_convolution_grid(g, lambda, z, t.grid_nodes);
    std::vector<double> y(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) y[i] = std::exp(h[i]) * normal_pdf(z[i]);
    const double grid_value = simpson(y, dom.width() / (t.grid_nodes - 1), 1);
    // h has kinks once the maximizer jumps (large lambda), so the reported
    // integral comes from adaptive quadrature over pointwise sup-convolutions
    // and the grid value serves as the resolution check.
    const auto adaptive = integrate_adaptive(
        [&](double zz) { return std::exp(sup_convolution(g, lambda, zz)) * normal_pdf(zz); }, dom.lo, dom.hi,
        {1e-11, 0.0, 4000});
    int_error = adaptive.error + (adaptive.converged ? 0.0 : std::abs(adaptive.value - grid_value));
    if (std::abs(grid_value - adaptive.value) > kPlGridTolerance)
      throw AccuracyError("pl_deficit_check: sup-convolution grid too coarse", grid_value,
                          std::abs(grid_value - adaptive.value));
    log_eh = std::log(adaptive.value);
    grid_integral = grid_value;

    const auto nodes = uniform_grid(dom, 4 * (t.grid_nodes - 1) + 1);
    std::vector<double> logu(nodes.size());
    for (std::size_t i = 0; i < nodes.size(); ++i) logu[i] = g(nodes[i]) / s + normal_log_pdf(nodes[i]);
    const auto u = GridDensity1D::from_log_values(nodes, std::move(logu));
    const auto detail = bf_distance_detail(Density1D(u), gamma, opts.quadrature);
    d = detail.value;
    d_error = detail.error;
    method << "grid sup-convolution (" << t.grid_nodes << " nodes, monotone argmax + Brent) checked against adaptive "
           << "quadrature of pointwise sup-convolutions, "
           << "log-linear grid u_lambda (" << nodes.size() << " nodes) for d; g = " << g.name();
  }
  const double ratio_log = log_eh - (1.0 - lambda) * log_z;
  r.deficit = std::expm1(ratio_log);
  r.lower_bound = pl_constant(lambda) * d * d;
  r.error_estimate = int_error * std::exp(-(1.0 - lambda) * log_z) + 2.0 * pl_constant(lambda) * d * d_error;
  r.method = method.str();
  r.diagnostics = {{"lambda", lambda}, {"d", d}, {"log_normalizer", log_z}, {"log_integral_e_h", log_eh}};
  if (!is_closed_form(g)) r.diagnostics.emplace_back("grid_integral_e_h", grid_integral);
  r.finalize();
  return r;
}

std::vector<LimitRow> lambda_limit_diagnostics(const GFunction& g, const std::vector<double>& lambdas,
                                               int grid_nodes) {
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    if (!(lambdas[i] > 0.0 && lambdas[i] <= 0.5)) throw DomainError("lambda_limit_diagnostics: lambda must lie in (0, 0.5]");
    if (i > 0 && !(lambdas[i] < lambdas[i - 1])) throw ValidationError("lambda_limit_diagnostics: lambdas must decrease");
  }
  const Interval dom = g.domain();
  const double int_eg = integral_against_gamma([&](double x) { return std::exp(g(x)); }, dom);
  const double int_g_eg = integral_against_gamma([&](double x) { return g(x) * std::exp(g(x)); }, dom);
  const double ent = int_g_eg - int_eg * std::log(int_eg);
  const double grad = integral_against_gamma(
      [&](double x) {
        const double dg = g.derivative(x);
        return dg * dg * std::exp(g(x));
      },
      dom);

  // For grid-based g both e^h and e^g go through the same Simpson rule so the
  // discretization error cancels in their difference.
  std::vector<double> z, eg_y;
  double simpson_eg = 0.0, step = 0.0;
  if (!is_closed_form(g)) {
    if (grid_nodes < 5 || (grid_nodes - 1) % 2 != 0) throw ValidationError("lambda_limit_diagnostics: grid_nodes must be odd");
    z = uniform_grid(dom, grid_nodes);
    step = dom.width() / (grid_nodes - 1);
    eg_y.resize(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) eg_y[i] = std::exp(g(z[i])) * normal_pdf(z[i]);
    simpson_eg = simpson(eg_y, step, 1);
  }

  std::vector<LimitRow> rows;
  for (double lambda : lambdas) {
    LimitRow row;
    row.lambda = lambda;
    row.entropy_target = ent;
    row.fisher_target = grad / (2.0 * (1.0 - lambda));
    if (is_closed_form(g)) {
      const double eg = std::exp(log_eg_closed(g));
      row.entropy_ratio = (std::exp((1.0 - lambda) * log_z_closed(g, lambda)) - eg) / lambda;
      row.fisher_ratio = (std::exp(log_eh_closed(g, lambda)) - eg) / lambda;
    } else {
      const double s = 1.0 - lambda;
      const double zint = integral_against_gamma([&](double x) { return std::exp(g(x) / s); }, dom);
      row.entropy_ratio = (std::pow(zint, s) - int_eg) / lambda;
      const auto h = sup_convolution_grid(g, lambda, z, grid_nodes);
      std::vector<double> y(z.size());
      for (std::size_t i = 0; i < z.size(); ++i) y[i] = std::exp(h[i]) * normal_pdf(z[i]);
      row.fisher_ratio = (simpson(y, step, 1) - simpson_eg) / lambda;
    }
    rows.push_back(row);
  }
  return rows;
}

bool residuals_contract(const std::vector<LimitRow>& rows, double factor) {
  constexpr double floor = 1e-14;
  auto ok = [&](double prev, double next) {
    if (std::abs(next) <= floor) return true;
    return std::abs(next) * factor <= std::abs(prev);
  };
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (!ok(rows[i - 1].entropy_residual(), rows[i].entropy_residual())) return false;
    if (!ok(rows[i - 1].fisher_residual(), rows[i].fisher_residual())) return false;
  }
  return true;
}

}  // namespace bfstab
