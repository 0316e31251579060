#include "bfstab/quadrature.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <queue>
#include <random>

#include <boost/math/special_functions/erf.hpp>
#include <boost/random/sobol.hpp>

#include "bfstab/errors.hpp"

namespace bfstab {
namespace {

// Kronrod 15-point abscissae (symmetric half, x=0 last) and weights; the
// even-indexed points are the 7-point Gauss nodes.
constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Panel {
  double a, b, value, error;
  bool operator<(const Panel& o) const { return error < o.error; }
};

Panel gk15(const Integrand1D& f, double a, double b) {
  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const double fc = f(center);
  double resk = fc * kWgk[7];
  double resg = fc * kWg[3];
  for (int j = 0; j < 7; ++j) {
    const double dx = half * kXgk[j];
    const double f1 = f(center - dx);
    const double f2 = f(center + dx);
    resk += kWgk[j] * (f1 + f2);
    if (j % 2 == 1) resg += kWg[j / 2] * (f1 + f2);
  }
  const double value = resk * half;
  const double error = std::abs((resk - resg) * half);
  if (!std::isfinite(value)) {
    throw NumericalError("integrate_adaptive: non-finite integrand on [" + std::to_string(a) +
                         ", " + std::to_string(b) + "]");
  }
  return {a, b, value, error};
}

}  // namespace

QuadratureResult integrate_adaptive(const Integrand1D& f, double a, double b,
                                    const QuadratureOptions& opts,
                                    std::span<const double> breakpoints) {
  if (!(std::isfinite(a) && std::isfinite(b))) throw DomainError("integrate_adaptive: infinite limits");
  if (a == b) return {0.0, 0.0, 0, 0, true};
  double sign = 1.0;
  if (b < a) {
    std::swap(a, b);
    sign = -1.0;
  }

  std::vector<double> cuts{a};
  for (double x : breakpoints)
    if (x > a && x < b) cuts.push_back(x);
  cuts.push_back(b);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  std::priority_queue<Panel> heap;
  QuadratureResult out;
  double total = 0.0;
  double err = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    Panel p = gk15(f, cuts[i], cuts[i + 1]);
    out.evaluations += 15;
    total += p.value;
    err += p.error;
    heap.push(p);
  }

  auto target = [&] { return std::max(opts.abs_tol, opts.rel_tol * std::abs(total)); };
  const std::size_t budget = heap.size() + static_cast<std::size_t>(std::max(opts.max_panels, 0));
  while (err > target() && heap.size() < budget) {
    Panel worst = heap.top();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b)) break;  // panel at machine resolution
    heap.pop();
    Panel left = gk15(f, worst.a, mid);
    Panel right = gk15(f, mid, worst.b);
    out.evaluations += 30;
    total += left.value + right.value - worst.value;
    err += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
  }

  // Re-sum to shed the drift of the running updates.
  total = 0.0;
  err = 0.0;
  out.panels = static_cast<int>(heap.size());
  while (!heap.empty()) {
    total += heap.top().value;
    err += heap.top().error;
    heap.pop();
  }
  out.value = sign * total;
  out.error = err;
  out.converged = err <= target();
  return out;
}

double integrate_or_throw(const Integrand1D& f, double a, double b, const QuadratureOptions& opts,
                          std::span<const double> breakpoints) {
  auto r = integrate_adaptive(f, a, b, opts, breakpoints);
  if (!r.converged) {
    throw AccuracyError("adaptive quadrature did not reach tolerance after " +
                            std::to_string(r.panels) + " panels",
                        r.value, r.error);
  }
  return r.value;
}

namespace {

HermiteRule build_hermite(int order) {
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(order, order);
  for (int k = 1; k < order; ++k) {
    jacobi(k, k - 1) = std::sqrt(static_cast<double>(k));
    jacobi(k - 1, k) = jacobi(k, k - 1);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jacobi, Eigen::EigenvaluesOnly);
  HermiteRule rule;
  rule.nodes.resize(order);
  rule.weights.resize(order);

  // p_k orthonormal w.r.t. N(0,1); returns (p_{n-1}(x), p_n(x), sum_{k<n} p_k^2).
  auto recurrence = [order](double x) {
    double prev = 0.0, cur = 1.0, sumsq = 0.0;
    for (int k = 0; k < order; ++k) {
      sumsq += cur * cur;
      const double next = (x * cur - std::sqrt(static_cast<double>(k)) * prev) /
                          std::sqrt(static_cast<double>(k + 1));
      prev = cur;
      cur = next;
    }
    return std::array<double, 3>{prev, cur, sumsq};
  };

  double total = 0.0;
  for (int i = 0; i < order; ++i) {
    double x = eig.eigenvalues()(i);
    for (int it = 0; it < 3; ++it) {
      auto [pm1, p, s] = recurrence(x);
      (void)s;
      const double dp = std::sqrt(static_cast<double>(order)) * pm1;
      if (dp == 0.0) break;
      x -= p / dp;
    }
    rule.nodes[i] = x;
    rule.weights[i] = 1.0 / recurrence(x)[2];
    total += rule.weights[i];
  }
  for (double& w : rule.weights) w /= total;
  return rule;
}

}  // namespace

const HermiteRule& gauss_hermite(int order) {
  if (order < 1 || order > 200) throw DomainError("gauss_hermite: order must be in [1, 200]");
  static std::mutex mutex;
  static std::map<int, HermiteRule> cache;
  std::lock_guard lock(mutex);
  auto it = cache.find(order);
  if (it == cache.end()) it = cache.emplace(order, build_hermite(order)).first;
  return it->second;
}

double tensor_rule_expectation(int dim, const HermiteRule& rule,
                               const std::function<double(const Eigen::VectorXd&)>& h, double weight_floor) {
  if (dim < 0) throw DomainError("tensor_rule_expectation: negative dimension");
  if (dim == 0) return h(Eigen::VectorXd(0));
  const int order = static_cast<int>(rule.nodes.size());
  std::vector<int> idx(dim, 0);
  Eigen::VectorXd z(dim);
  double sum = 0.0;
  while (true) {
    double w = 1.0;
    for (int d = 0; d < dim; ++d) {
      z(d) = rule.nodes[idx[d]];
      w *= rule.weights[idx[d]];
    }
    if (w > weight_floor) sum += w * h(z);
    int d = 0;
    while (d < dim && ++idx[d] == order) idx[d++] = 0;
    if (d == dim) break;
  }
  return sum;
}

double tensor_hermite_expectation(int dim, int order,
                                  const std::function<double(const Eigen::VectorXd&)>& h) {
  return tensor_rule_expectation(dim, gauss_hermite(order), h);
}

HermiteRule uniform_gaussian_rule(int intervals, double span, bool half_shift) {
  if (intervals < 2) throw DomainError("uniform_gaussian_rule: need at least two intervals");
  if (!(span > 0.0)) throw DomainError("uniform_gaussian_rule: span must be positive");
  const double step = 2.0 * span / intervals;
  const int count = half_shift ? intervals : intervals + 1;
  HermiteRule rule;
  double total = 0.0;
  for (int j = 0; j < count; ++j) {
    const double t = -span + (j + (half_shift ? 0.5 : 0.0)) * step;
    rule.nodes.push_back(t);
    rule.weights.push_back(step * normal_pdf(t));
    total += rule.weights.back();
  }
  for (double& w : rule.weights) w /= total;
  return rule;
}

Estimate qmc_gaussian_expectation(int dim, std::uint64_t budget, std::uint64_t seed,
                                  const std::function<double(const Eigen::VectorXd&)>& h,
                                  int shifts) {
  if (dim < 1) throw DomainError("qmc_gaussian_expectation: dim must be >= 1");
  if (shifts < 2) throw DomainError("qmc_gaussian_expectation: need at least two shifts");
  const std::uint64_t per_shift = std::max<std::uint64_t>(budget / shifts, 1);

  std::mt19937_64 rng(split_seed(seed, 0x51));
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<double> means(shifts, 0.0);
  Eigen::VectorXd z(dim);
  for (int s = 0; s < shifts; ++s) {
    std::vector<double> shift(dim);
    for (double& v : shift) v = unif(rng);
    boost::random::sobol sobol(dim);
    const double scale = 1.0 / (static_cast<double>(sobol.max()) + 1.0);
    double acc = 0.0;
    for (std::uint64_t i = 0; i < per_shift; ++i) {
      for (int d = 0; d < dim; ++d) {
        double u = (static_cast<double>(sobol()) + 0.5) * scale + shift[d];
        u -= std::floor(u);
        u = std::clamp(u, 1e-300, 1.0 - 1e-16);
        z(d) = normal_quantile(u);
      }
      acc += h(z);
    }
    means[s] = acc / static_cast<double>(per_shift);
  }
  double mean = 0.0;
  for (double m : means) mean += m;
  mean /= shifts;
  double var = 0.0;
  for (double m : means) var += (m - mean) * (m - mean);
  var /= (shifts - 1);
  return {mean, std::sqrt(var / shifts)};
}

double normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }

double normal_log_pdf(double x) { return -0.5 * x * x - 0.5 * std::log(2.0 * std::numbers::pi); }

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double normal_sf(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("normal_quantile: p must lie in (0, 1)");
  if (p > 0.5) return normal_upper_quantile(1.0 - p);
  return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

double normal_upper_quantile(double q) {
  if (!(q > 0.0 && q < 1.0)) throw DomainError("normal_upper_quantile: q must lie in (0, 1)");
  return std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * q);
}

std::uint64_t split_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace bfstab
