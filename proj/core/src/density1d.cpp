#include "bfstab/density1d.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>
#include <string>
#include <utility>

#include "bfstab/errors.hpp"

namespace bfstab {
namespace {

constexpr double kTailSigmas = 10.0;
const double kLogSqrt2Pi = 0.5 * std::log(2.0 * std::numbers::pi);

void require_finite(double x, const char* where) {
  if (!std::isfinite(x)) throw DomainError(std::string(where) + ": argument must be finite");
}

void require_probability(double p, const char* where) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError(std::string(where) + ": probability must lie in (0, 1)");
}

// (e^t - 1) / t, continuous at 0.
double expm1_ratio(double t) { return std::abs(t) < 1e-300 ? 1.0 : std::expm1(t) / t; }

double log_sum_exp(std::span<const double> v) {
  const double m = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

}  // namespace

// ---------------------------------------------------------------- mixture

GaussianMixture1D::GaussianMixture1D(std::vector<MixtureComponent1D> components)
    : components_(std::move(components)) {
  if (components_.empty()) throw ValidationError("GaussianMixture1D: no components");
  double total = 0.0;
  for (const auto& c : components_) {
    if (!(c.weight > 0.0 && c.weight <= 1.0))
      throw ValidationError("GaussianMixture1D: weights must lie in (0, 1]");
    if (!(c.stddev > 0.0) || !std::isfinite(c.stddev))
      throw ValidationError("GaussianMixture1D: standard deviations must be positive");
    if (!std::isfinite(c.mean)) throw ValidationError("GaussianMixture1D: non-finite mean");
    total += c.weight;
  }
  if (std::abs(total - 1.0) > 1e-12)
    throw ValidationError("GaussianMixture1D: weights sum to " + std::to_string(total));
}

GaussianMixture1D GaussianMixture1D::normalized(std::vector<MixtureComponent1D> components) {
  double total = 0.0;
  for (const auto& c : components) total += c.weight;
  if (!(total > 0.0)) throw ValidationError("GaussianMixture1D: total weight must be positive");
  std::vector<MixtureComponent1D> kept;
  for (auto c : components) {
    c.weight /= total;
    // Components whose weight underflows carry no mass; dropping them keeps the
    // (0, 1] weight invariant.
    if (c.weight > 0.0) kept.push_back(c);
  }
  double s = 0.0;
  for (const auto& c : kept) s += c.weight;
  for (auto& c : kept) c.weight /= s;
  return GaussianMixture1D(std::move(kept));
}

GaussianMixture1D GaussianMixture1D::gaussian(double mean, double stddev) {
  return GaussianMixture1D({{1.0, mean, stddev}});
}

double GaussianMixture1D::pdf(double x) const {
  double s = 0.0;
  for (const auto& c : components_) s += c.weight * normal_pdf((x - c.mean) / c.stddev) / c.stddev;
  return s;
}

double GaussianMixture1D::log_pdf(double x) const {
  std::vector<double> terms(components_.size());
  for (std::size_t k = 0; k < components_.size(); ++k) {
    const auto& c = components_[k];
    terms[k] = std::log(c.weight) + normal_log_pdf((x - c.mean) / c.stddev) - std::log(c.stddev);
  }
  return log_sum_exp(terms);
}

double GaussianMixture1D::dlog_pdf(double x) const {
  std::vector<double> terms(components_.size());
  for (std::size_t k = 0; k < components_.size(); ++k) {
    const auto& c = components_[k];
    terms[k] = std::log(c.weight) + normal_log_pdf((x - c.mean) / c.stddev) - std::log(c.stddev);
  }
  const double lse = log_sum_exp(terms);
  double g = 0.0;
  for (std::size_t k = 0; k < components_.size(); ++k) {
    const auto& c = components_[k];
    g += std::exp(terms[k] - lse) * (-(x - c.mean) / (c.stddev * c.stddev));
  }
  return g;
}

double GaussianMixture1D::cdf(double x) const {
  double s = 0.0;
  for (const auto& c : components_) s += c.weight * normal_cdf((x - c.mean) / c.stddev);
  return std::min(s, 1.0);
}

double GaussianMixture1D::sf(double x) const {
  double s = 0.0;
  for (const auto& c : components_) s += c.weight * normal_sf((x - c.mean) / c.stddev);
  return std::min(s, 1.0);
}

double GaussianMixture1D::quantile(double p) const {
  require_probability(p, "quantile");
  if (components_.size() == 1) return components_[0].mean + components_[0].stddev * normal_quantile(p);
  return p <= 0.5 ? solve_lower(p) : solve_upper(1.0 - p);
}

double GaussianMixture1D::upper_quantile(double q) const {
  require_probability(q, "upper_quantile");
  if (components_.size() == 1)
    return components_[0].mean + components_[0].stddev * normal_upper_quantile(q);
  return q <= 0.5 ? solve_upper(q) : solve_lower(1.0 - q);
}

// The mixture cdf is a convex combination of the component cdfs, so the
// root is bracketed by the smallest and largest component quantiles. Newton
// runs on log F (resp. log S), which is close to linear far in the tails;
// steps that leave the bracket fall back to bisection.
namespace {

template <class TailMass, class Quantile>
double solve_tail(std::span<const MixtureComponent1D> comps, double target, bool lower, const TailMass& tail,
                  const Quantile& comp_quantile, const char* what) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& c : comps) {
    const double x = c.mean + c.stddev * comp_quantile(target);
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  if (!(hi > lo)) return lo;
  const double log_target = std::log(target);
  double x = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    const auto [mass, dens] = tail(x);
    const double resid = std::log(mass) - log_target;  // increasing in x for the lower tail
    // Mass is only known to a few ulps, so a residual at that level is a root.
    if (std::abs(resid) <= 4e-16) return x;
    if ((resid > 0.0) == lower) hi = x; else lo = x;
    double next = dens > 0.0 ? x - (lower ? 1.0 : -1.0) * resid * mass / dens : lo - 1.0;
    // Newton can stall on rounding noise; after 40 steps fall back to pure bisection.
    if (it >= 40 || !(next > lo && next < hi)) next = 0.5 * (lo + hi);
    const double scale = std::max(1.0, std::abs(x));
    if (std::abs(next - x) <= 4e-16 * scale || hi - lo <= 4e-16 * scale) return next;
    x = next;
  }
  throw NumericalError(std::string(what) + ": no convergence for p=" + std::to_string(target));
}

}  // namespace

double GaussianMixture1D::solve_lower(double p) const {
  auto tail = [this](double x) {
    double mass = 0.0, dens = 0.0;
    for (const auto& c : components_) {
      const double z = (x - c.mean) / c.stddev;
      mass += c.weight * normal_cdf(z);
      dens += c.weight * normal_pdf(z) / c.stddev;
    }
    return std::pair{mass, dens};
  };
  return solve_tail(components_, p, true, tail, normal_quantile, "GaussianMixture1D::quantile");
}

double GaussianMixture1D::solve_upper(double q) const {
  auto tail = [this](double x) {
    double mass = 0.0, dens = 0.0;
    for (const auto& c : components_) {
      const double z = (x - c.mean) / c.stddev;
      mass += c.weight * normal_sf(z);
      dens += c.weight * normal_pdf(z) / c.stddev;
    }
    return std::pair{mass, dens};
  };
  return solve_tail(components_, q, false, tail, normal_upper_quantile, "GaussianMixture1D::upper_quantile");
}

double GaussianMixture1D::mean() const {
  double m = 0.0;
  for (const auto& c : components_) m += c.weight * c.mean;
  return m;
}

double GaussianMixture1D::variance() const {
  const double m = mean();
  double v = 0.0;
  for (const auto& c : components_) v += c.weight * (c.stddev * c.stddev + (c.mean - m) * (c.mean - m));
  return v;
}

Interval GaussianMixture1D::working_domain() const {
  Interval out{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (const auto& c : components_) {
    out.lo = std::min(out.lo, c.mean - kTailSigmas * c.stddev);
    out.hi = std::max(out.hi, c.mean + kTailSigmas * c.stddev);
  }
  return out;
}

std::vector<double> GaussianMixture1D::breakpoints() const {
  std::vector<double> b;
  for (const auto& c : components_) {
    for (double k : {-3.0, 0.0, 3.0}) b.push_back(c.mean + k * c.stddev);
  }
  std::sort(b.begin(), b.end());
  return b;
}

GaussianMixture1D GaussianMixture1D::shifted(double a) const {
  auto comps = components_;
  for (auto& c : comps) c.mean += a;
  return GaussianMixture1D(std::move(comps));
}

// ---------------------------------------------------------------- grid

namespace {

// Mass-scale of a Gaussian tail: A with cdf_tail(x) = A * Phi((x - mu) / s).
double tail_log_scale(const GaussianTail& t) {
  return t.log_value + 0.5 * t.log_slope * t.log_slope * t.stddev * t.stddev + std::log(t.stddev) +
         kLogSqrt2Pi;
}

double tail_center(const GaussianTail& t) { return t.anchor + t.log_slope * t.stddev * t.stddev; }

double tail_log_pdf(const GaussianTail& t, double x) {
  const double u = x - t.anchor;
  return t.log_value + t.log_slope * u - u * u / (2.0 * t.stddev * t.stddev);
}

GaussianTail make_tail(double anchor, double log_value, double slope, double stddev) {
  GaussianTail t{anchor, log_value, slope, stddev, 0.0};
  if (slope != 0.0) t.stddev = std::min(stddev, 20.0 / std::abs(slope));
  const double ks = std::abs(slope) * t.stddev;
  t.mass = std::exp(tail_log_scale(t)) * normal_sf(ks);
  return t;
}

}  // namespace

GridDensity1D GridDensity1D::from_values(std::vector<double> nodes, std::span<const double> values) {
  if (nodes.size() != values.size()) throw ValidationError("GridDensity1D: nodes/values size mismatch");
  std::vector<double> logs(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!(values[i] > 0.0) || !std::isfinite(values[i]))
      throw ValidationError("GridDensity1D: density values must be positive and finite (row " +
                            std::to_string(i + 1) + ")");
    logs[i] = std::log(values[i]);
  }
  return from_log_values(std::move(nodes), std::move(logs));
}

GridDensity1D GridDensity1D::from_log_values(std::vector<double> nodes, std::vector<double> log_values) {
  const std::size_t n = nodes.size();
  if (n < 2 || log_values.size() != n) throw ValidationError("GridDensity1D: need at least two nodes");
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(nodes[i]) || !std::isfinite(log_values[i]))
      throw ValidationError("GridDensity1D: non-finite node or value at index " + std::to_string(i));
    if (i > 0 && !(nodes[i] > nodes[i - 1]))
      throw ValidationError("GridDensity1D: nodes must be strictly increasing (index " +
                            std::to_string(i) + ")");
  }

  auto data = std::make_shared<Data>();
  const double shift = *std::max_element(log_values.begin(), log_values.end());
  for (double& l : log_values) l -= shift;

  std::vector<double> slopes(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i)
    slopes[i] = (log_values[i + 1] - log_values[i]) / (nodes[i + 1] - nodes[i]);

  // Tail width from the interior second moment (trapezoid is enough for a scale).
  double m0 = 0.0, m1 = 0.0, m2 = 0.0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double h = nodes[i + 1] - nodes[i];
    const double xm = 0.5 * (nodes[i] + nodes[i + 1]);
    const double w = 0.5 * h * (std::exp(log_values[i]) + std::exp(log_values[i + 1]));
    m0 += w;
    m1 += w * xm;
    m2 += w * xm * xm;
  }
  const double var = std::max(m2 / m0 - (m1 / m0) * (m1 / m0), 1e-12);
  const double scale = std::sqrt(var);

  GaussianTail left = make_tail(nodes.front(), log_values.front(), std::max(slopes.front(), 0.0), scale);
  GaussianTail right = make_tail(nodes.back(), log_values.back(), std::min(slopes.back(), 0.0), scale);

  std::vector<double> seg(n - 1);
  double total = left.mass + right.mass;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double h = nodes[i + 1] - nodes[i];
    seg[i] = std::exp(log_values[i]) * h * expm1_ratio(slopes[i] * h);
    total += seg[i];
  }
  if (!(total > 0.0) || !std::isfinite(total)) throw ValidationError("GridDensity1D: total mass not finite");

  const double log_total = std::log(total);
  for (double& l : log_values) l -= log_total;
  left.log_value -= log_total;
  right.log_value -= log_total;
  left.mass /= total;
  right.mass /= total;
  for (double& s : seg) s /= total;

  data->prefix.assign(n, 0.0);
  data->suffix.assign(n, 0.0);
  data->prefix[0] = left.mass;
  for (std::size_t i = 0; i + 1 < n; ++i) data->prefix[i + 1] = data->prefix[i] + seg[i];
  data->suffix[n - 1] = right.mass;
  for (std::size_t i = n - 1; i-- > 0;) data->suffix[i] = data->suffix[i + 1] + seg[i];

  data->nodal_dlog.resize(n);
  data->nodal_dlog[0] = slopes.front();
  data->nodal_dlog[n - 1] = slopes.back();
  for (std::size_t i = 1; i + 1 < n; ++i)
    data->nodal_dlog[i] = (log_values[i + 1] - log_values[i - 1]) / (nodes[i + 1] - nodes[i - 1]);

  data->nodes = std::move(nodes);
  data->log_values = std::move(log_values);
  data->slopes = std::move(slopes);
  data->segment_mass = std::move(seg);
  data->left = left;
  data->right = right;
  data->normalization = std::exp(shift + log_total);

  GridDensity1D out(data);
  const Interval dom = out.working_domain();
  const auto bps = out.breakpoints();
  QuadratureOptions opts{1e-12, 0.0, 4000};
  const double mean = integrate_adaptive([&](double x) { return x * out.pdf(x); }, dom.lo, dom.hi, opts, bps).value;
  const double second = integrate_adaptive([&](double x) { return (x - mean) * (x - mean) * out.pdf(x); },
                                           dom.lo, dom.hi, opts, bps).value;
  data->mean = mean;
  data->variance = second;
  return out;
}

GridDensity1D GridDensity1D::load_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open density file " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw ValidationError(path.string() + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "x,density") throw ValidationError(path.string() + ":1: expected header `x,density`");
  std::vector<double> xs, ys;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw ValidationError(path.string() + ":" + std::to_string(lineno) + ": missing comma");
    try {
      std::size_t used = 0;
      const std::string xs_str = line.substr(0, comma);
      const std::string ys_str = line.substr(comma + 1);
      const double x = std::stod(xs_str, &used);
      if (used != xs_str.size()) throw std::invalid_argument("x");
      const double y = std::stod(ys_str, &used);
      if (used != ys_str.size()) throw std::invalid_argument("density");
      if (!xs.empty() && !(x > xs.back()))
        throw ValidationError(path.string() + ":" + std::to_string(lineno) + ": x must be strictly increasing");
      if (!(y > 0.0)) throw ValidationError(path.string() + ":" + std::to_string(lineno) + ": density must be positive");
      xs.push_back(x);
      ys.push_back(y);
    } catch (const ValidationError&) {
      throw;
    } catch (const std::exception&) {
      throw ValidationError(path.string() + ":" + std::to_string(lineno) + ": malformed number");
    }
  }
  return from_values(std::move(xs), ys);
}

std::size_t GridDensity1D::segment_of(double x) const {
  const auto& nodes = data_->nodes;
  auto it = std::upper_bound(nodes.begin(), nodes.end(), x);
  std::size_t i = it == nodes.begin() ? 0 : static_cast<std::size_t>(it - nodes.begin()) - 1;
  return std::min(i, nodes.size() - 2);
}

double GridDensity1D::log_pdf(double x) const {
  const auto& d = *data_;
  if (x < d.nodes.front()) return tail_log_pdf(d.left, x);
  if (x > d.nodes.back()) return tail_log_pdf(d.right, x);
  const std::size_t i = segment_of(x);
  return d.log_values[i] + d.slopes[i] * (x - d.nodes[i]);
}

double GridDensity1D::pdf(double x) const { return std::exp(log_pdf(x)); }

double GridDensity1D::dlog_pdf(double x) const {
  const auto& d = *data_;
  if (x < d.nodes.front()) return d.left.log_slope - (x - d.left.anchor) / (d.left.stddev * d.left.stddev);
  if (x > d.nodes.back()) return d.right.log_slope - (x - d.right.anchor) / (d.right.stddev * d.right.stddev);
  const std::size_t i = segment_of(x);
  const double t = (x - d.nodes[i]) / (d.nodes[i + 1] - d.nodes[i]);
  return (1.0 - t) * d.nodal_dlog[i] + t * d.nodal_dlog[i + 1];
}

double GridDensity1D::cdf(double x) const {
  const auto& d = *data_;
  if (x < d.nodes.front()) {
    return std::exp(tail_log_scale(d.left)) * normal_cdf((x - tail_center(d.left)) / d.left.stddev);
  }
  if (x >= d.nodes.back()) return 1.0 - sf(x);
  const std::size_t i = segment_of(x);
  const double tau = x - d.nodes[i];
  return std::min(1.0, d.prefix[i] + std::exp(d.log_values[i]) * tau * expm1_ratio(d.slopes[i] * tau));
}

double GridDensity1D::sf(double x) const {
  const auto& d = *data_;
  if (x > d.nodes.back()) {
    return std::exp(tail_log_scale(d.right)) * normal_sf((x - tail_center(d.right)) / d.right.stddev);
  }
  if (x < d.nodes.front()) return 1.0 - cdf(x);
  const std::size_t i = segment_of(x);
  const double sigma = d.nodes[i + 1] - x;
  return std::min(1.0, d.suffix[i + 1] +
                           std::exp(d.log_values[i + 1]) * sigma * expm1_ratio(-d.slopes[i] * sigma));
}

double GridDensity1D::quantile(double p) const {
  require_probability(p, "quantile");
  const auto& d = *data_;
  if (p > 0.5) return upper_quantile(1.0 - p);
  if (p < d.left.mass) {
    const double scaled = std::exp(std::log(p) - tail_log_scale(d.left));
    return tail_center(d.left) + d.left.stddev * normal_quantile(std::min(scaled, 0.5));
  }
  const std::size_t n = d.nodes.size();
  if (p >= d.prefix[n - 1]) {
    const double q = 1.0 - p;
    const double scaled = std::exp(std::log(q) - tail_log_scale(d.right));
    return tail_center(d.right) + d.right.stddev * normal_upper_quantile(std::min(scaled, 0.5));
  }
  auto it = std::upper_bound(d.prefix.begin(), d.prefix.end(), p);
  std::size_t i = static_cast<std::size_t>(it - d.prefix.begin()) - 1;
  i = std::min(i, n - 2);
  const double r = p - d.prefix[i];
  const double v = std::exp(d.log_values[i]);
  const double beta = d.slopes[i];
  const double h = d.nodes[i + 1] - d.nodes[i];
  double tau = std::abs(beta * h) < 1e-12 ? r / v : std::log1p(beta * r / v) / beta;
  return d.nodes[i] + std::clamp(tau, 0.0, h);
}

double GridDensity1D::upper_quantile(double q) const {
  require_probability(q, "upper_quantile");
  const auto& d = *data_;
  if (q > 0.5) return quantile(1.0 - q);
  if (q < d.right.mass) {
    const double scaled = std::exp(std::log(q) - tail_log_scale(d.right));
    return tail_center(d.right) + d.right.stddev * normal_upper_quantile(std::min(scaled, 0.5));
  }
  if (q >= d.suffix[0]) {
    const double p = 1.0 - q;
    const double scaled = std::exp(std::log(p) - tail_log_scale(d.left));
    return tail_center(d.left) + d.left.stddev * normal_quantile(std::min(scaled, 0.5));
  }
  // suffix is decreasing: find i with suffix[i + 1] <= q < suffix[i].
  auto it = std::upper_bound(d.suffix.begin(), d.suffix.end(), q, std::greater<>());
  std::size_t i1 = static_cast<std::size_t>(it - d.suffix.begin());
  i1 = std::clamp<std::size_t>(i1, 1, d.nodes.size() - 1);
  const std::size_t i = i1 - 1;
  const double r = q - d.suffix[i1];
  const double v = std::exp(d.log_values[i1]);
  const double beta = d.slopes[i];
  const double h = d.nodes[i1] - d.nodes[i];
  double sigma = std::abs(beta * h) < 1e-12 ? r / v : -std::log1p(-beta * r / v) / beta;
  return d.nodes[i1] - std::clamp(sigma, 0.0, h);
}

Interval GridDensity1D::working_domain() const {
  const auto& d = *data_;
  const double lo = std::min(d.nodes.front(), tail_center(d.left) - kTailSigmas * d.left.stddev);
  const double hi = std::max(d.nodes.back(), tail_center(d.right) + kTailSigmas * d.right.stddev);
  return {lo, hi};
}

std::vector<double> GridDensity1D::breakpoints() const {
  return data_->nodes;
}

GridDensity1D GridDensity1D::shifted(double a) const {
  auto data = std::make_shared<Data>(*data_);
  for (double& x : data->nodes) x += a;
  data->left.anchor += a;
  data->right.anchor += a;
  data->mean += a;
  return GridDensity1D(std::move(data));
}

// ---------------------------------------------------------------- Density1D

Density1D Density1D::gaussian(double mean, double variance) {
  if (!(variance > 0.0)) throw ValidationError("gaussian: variance must be positive");
  return Density1D(GaussianMixture1D::gaussian(mean, std::sqrt(variance)));
}

bool Density1D::is_standard_gaussian() const {
  if (std::holds_alternative<StandardGaussian>(repr_)) return true;
  if (const auto* m = as_mixture()) {
    auto c = m->components();
    return c.size() == 1 && c[0].mean == 0.0 && c[0].stddev == 1.0;
  }
  return false;
}

namespace {
template <class... Fs>
struct overloaded : Fs... {
  using Fs::operator()...;
};
template <class... Fs>
overloaded(Fs...) -> overloaded<Fs...>;
}  // namespace

double Density1D::pdf(double x) const {
  require_finite(x, "pdf");
  return std::visit(overloaded{[&](const StandardGaussian&) { return normal_pdf(x); },
                               [&](const auto& d) { return d.pdf(x); }},
                    repr_);
}

double Density1D::log_pdf(double x) const {
  require_finite(x, "log_pdf");
  return std::visit(overloaded{[&](const StandardGaussian&) { return normal_log_pdf(x); },
                               [&](const auto& d) { return d.log_pdf(x); }},
                    repr_);
}

double Density1D::dlog_pdf(double x) const {
  require_finite(x, "dlog_pdf");
  return std::visit(overloaded{[&](const StandardGaussian&) { return -x; },
                               [&](const auto& d) { return d.dlog_pdf(x); }},
                    repr_);
}

double Density1D::cdf(double x) const {
  require_finite(x, "cdf");
  return std::visit(overloaded{[&](const StandardGaussian&) { return normal_cdf(x); },
                               [&](const auto& d) { return d.cdf(x); }},
                    repr_);
}

double Density1D::sf(double x) const {
  require_finite(x, "sf");
  return std::visit(overloaded{[&](const StandardGaussian&) { return normal_sf(x); },
                               [&](const auto& d) { return d.sf(x); }},
                    repr_);
}

double Density1D::quantile(double p) const {
  require_probability(p, "quantile");
  return std::visit(overloaded{[&](const StandardGaussian&) { return normal_quantile(p); },
                               [&](const auto& d) { return d.quantile(p); }},
                    repr_);
}

double Density1D::upper_quantile(double q) const {
  require_probability(q, "upper_quantile");
  return std::visit(overloaded{[&](const StandardGaussian&) { return normal_upper_quantile(q); },
                               [&](const auto& d) { return d.upper_quantile(q); }},
                    repr_);
}

double Density1D::sample(std::mt19937_64& rng) const {
  if (const auto* m = as_mixture()) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double r = u(rng);
    const auto comps = m->components();
    std::size_t k = 0;
    while (k + 1 < comps.size() && r >= comps[k].weight) {
      r -= comps[k].weight;
      ++k;
    }
    std::normal_distribution<double> z(comps[k].mean, comps[k].stddev);
    return z(rng);
  }
  if (std::holds_alternative<StandardGaussian>(repr_)) return std::normal_distribution<double>(0.0, 1.0)(rng);
  std::uniform_real_distribution<double> u(std::numeric_limits<double>::min(), 1.0);
  double p = u(rng);
  while (p >= 1.0) p = u(rng);
  return quantile(p);
}

double Density1D::mean() const {
  return std::visit(overloaded{[](const StandardGaussian&) { return 0.0; },
                               [](const auto& d) { return d.mean(); }},
                    repr_);
}

double Density1D::variance() const {
  return std::visit(overloaded{[](const StandardGaussian&) { return 1.0; },
                               [](const auto& d) { return d.variance(); }},
                    repr_);
}

Interval Density1D::working_domain() const {
  return std::visit(overloaded{[](const StandardGaussian&) { return Interval{-kTailSigmas, kTailSigmas}; },
                               [](const auto& d) { return d.working_domain(); }},
                    repr_);
}

std::vector<double> Density1D::breakpoints() const {
  return std::visit(overloaded{[](const StandardGaussian&) { return std::vector<double>{-3.0, 0.0, 3.0}; },
                               [](const auto& d) { return d.breakpoints(); }},
                    repr_);
}

Density1D Density1D::shifted(double a) const {
  return std::visit(overloaded{[&](const StandardGaussian&) { return Density1D(GaussianMixture1D::gaussian(a, 1.0)); },
                               [&](const auto& d) { return Density1D(d.shifted(a)); }},
                    repr_);
}

double cdf(const Density1D& d, double x) { return d.cdf(x); }
double quantile(const Density1D& d, double p) { return d.quantile(p); }

// ---------------------------------------------------------------- RelFunction1D

RelFunction1D::RelFunction1D(Fn value, Fn derivative, Interval domain, std::vector<double> breakpoints)
    : value_(std::move(value)), derivative_(std::move(derivative)), domain_(domain),
      breakpoints_(std::move(breakpoints)) {
  if (!value_) throw ValidationError("RelFunction1D: empty value function");
  if (!(domain_.hi > domain_.lo)) throw ValidationError("RelFunction1D: empty domain");
  mass_ = integrate_or_throw([this](double x) { return value_(x) * normal_pdf(x); }, domain_.lo, domain_.hi,
                             {1e-12, 1e-14, 4000}, breakpoints_);
  if (!(mass_ > 0.0) || !std::isfinite(mass_)) throw NumericalError("RelFunction1D: non-positive or infinite mass");
}

RelFunction1D RelFunction1D::constant(double c) {
  if (!(c > 0.0)) throw ValidationError("RelFunction1D::constant: value must be positive");
  return RelFunction1D([c](double) { return c; }, [](double) { return 0.0; });
}

RelFunction1D RelFunction1D::exp_linear(double a, double b) {
  Interval dom{std::min(-10.0, a - 10.0), std::max(10.0, a + 10.0)};
  return RelFunction1D([a, b](double x) { return std::exp(a * x + b); },
                       [a, b](double x) { return a * std::exp(a * x + b); }, dom, {a - 3.0, a, a + 3.0});
}

RelFunction1D RelFunction1D::from_density(const Density1D& d) {
  auto value = [d](double x) { return std::exp(d.log_pdf(x) - normal_log_pdf(x)); };
  auto deriv = [d](double x) { return std::exp(d.log_pdf(x) - normal_log_pdf(x)) * (d.dlog_pdf(x) + x); };
  Interval dom = d.working_domain().hull({-kTailSigmas, kTailSigmas});
  return RelFunction1D(value, deriv, dom, d.breakpoints());
}

RelFunction1D RelFunction1D::from_grid(std::vector<double> nodes, std::span<const double> values) {
  const std::size_t n = nodes.size();
  if (n < 3 || values.size() != n) throw ValidationError("RelFunction1D::from_grid: need at least three nodes");
  std::vector<double> logs(n), deriv(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(values[i] > 0.0)) throw ValidationError("RelFunction1D::from_grid: values must be positive");
    if (i > 0 && !(nodes[i] > nodes[i - 1])) throw ValidationError("RelFunction1D::from_grid: nodes must increase");
    logs[i] = std::log(values[i]);
  }
  deriv[0] = (values[1] - values[0]) / (nodes[1] - nodes[0]);
  deriv[n - 1] = (values[n - 1] - values[n - 2]) / (nodes[n - 1] - nodes[n - 2]);
  for (std::size_t i = 1; i + 1 < n; ++i) deriv[i] = (values[i + 1] - values[i - 1]) / (nodes[i + 1] - nodes[i - 1]);

  auto shared = std::make_shared<const std::array<std::vector<double>, 3>>(
      std::array<std::vector<double>, 3>{nodes, logs, deriv});
  auto locate = [shared](double x) {
    const auto& xs = (*shared)[0];
    x = std::clamp(x, xs.front(), xs.back());
    auto it = std::upper_bound(xs.begin(), xs.end(), x);
    std::size_t i = it == xs.begin() ? 0 : static_cast<std::size_t>(it - xs.begin()) - 1;
    i = std::min(i, xs.size() - 2);
    return std::pair{i, (x - xs[i]) / (xs[i + 1] - xs[i])};
  };
  auto value = [shared, locate](double x) {
    auto [i, t] = locate(x);
    const auto& ls = (*shared)[1];
    return std::exp((1.0 - t) * ls[i] + t * ls[i + 1]);
  };
  auto derivative = [shared, locate](double x) {
    auto [i, t] = locate(x);
    const auto& ds = (*shared)[2];
    return (1.0 - t) * ds[i] + t * ds[i + 1];
  };
  std::vector<double> bps;
  const std::size_t stride = std::max<std::size_t>(1, n / 64);
  for (std::size_t i = 0; i < n; i += stride) bps.push_back(nodes[i]);
  return RelFunction1D(value, derivative, {nodes.front(), nodes.back()}, bps);
}

double RelFunction1D::derivative(double x) const {
  if (!derivative_) throw CapabilityError("RelFunction1D: derivative not available");
  return derivative_(x);
}

RelFunction1D RelFunction1D::scaled(double c) const {
  if (!(c > 0.0) || !std::isfinite(c)) throw DomainError("RelFunction1D::scaled: factor must be positive");
  RelFunction1D out = *this;
  out.value_ = [v = value_, c](double x) { return c * v(x); };
  if (derivative_) out.derivative_ = [d = derivative_, c](double x) { return c * d(x); };
  out.mass_ = c * mass_;
  return out;
}

// ---------------------------------------------------------------- functionals

double entropy_rel_gauss(const Density1D& nu, const QuadratureOptions& opts) {
  const Interval dom = nu.working_domain();
  const auto bps = nu.breakpoints();
  auto integrand = [&nu](double x) {
    const double lp = nu.log_pdf(x);
    if (!std::isfinite(lp)) throw NumericalError("entropy_rel_gauss: density vanishes at x=" + std::to_string(x));
    return std::exp(lp) * (lp - normal_log_pdf(x));
  };
  return integrate_or_throw(integrand, dom.lo, dom.hi, opts, bps);
}

double ent_gamma(const RelFunction1D& f, const QuadratureOptions& opts) {
  auto integrand = [&f](double x) {
    const double v = f(x);
    if (!(v > 0.0)) throw NumericalError("ent_gamma: f vanishes at x=" + std::to_string(x));
    return v * std::log(v) * normal_pdf(x);
  };
  const double m = f.mass();
  const double s = integrate_or_throw(integrand, f.domain().lo, f.domain().hi, opts, f.breakpoints());
  return s - m * std::log(m);
}

double fisher_integral(const RelFunction1D& f, const QuadratureOptions& opts) {
  if (!f.has_derivative()) throw CapabilityError("fisher_integral: derivative not available");
  auto integrand = [&f](double x) {
    const double v = f(x);
    if (!(v > 0.0)) throw NumericalError("fisher_integral: f vanishes at x=" + std::to_string(x));
    const double d = f.derivative(x);
    return d * d / v * normal_pdf(x);
  };
  return integrate_or_throw(integrand, f.domain().lo, f.domain().hi, opts, f.breakpoints());
}

Normalized1D normalize(const RelFunction1D& f) {
  const double m = f.mass();
  if (m < 1e-300) throw UnderflowError("normalize: mass below 1e-300");
  return {m, f.scaled(1.0 / m)};
}

}  // namespace bfstab
