#include "bfstab/deficits.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "bfstab/errors.hpp"
#include "bfstab/transport1d.hpp"

namespace bfstab {
namespace {

// Nominal error attached to adaptive 1-D quadrature results (tolerance 1e-11 per integral).
constexpr double kQuadratureError = 1e-10;

Density1D gamma1() { return Density1D(StandardGaussian{}); }

std::string format_direction(const Direction& xi) {
  std::ostringstream s;
  s.precision(6);
  s << "(";
  for (Eigen::Index i = 0; i < xi.vector().size(); ++i) s << (i ? "," : "") << xi.vector()(i);
  s << ")";
  return s.str();
}

std::string describe_search(const DnResult& dn, const SphereSearchConfig& cfg, int dim) {
  std::ostringstream s;
  if (dim == 1) {
    s << "d: adaptive Gauss-Kronrod";
  } else {
    s << "d_n: " << dn.directions_evaluated << " directions (" << cfg.resolved_coarse_count(dim) << " coarse";
    if (cfg.refine) s << ", simplex refinement";
    s << "), argmax " << format_direction(dn.argmax);
    if (dn.skipped > 0) s << ", " << dn.skipped << " skipped";
    if (dn.asymmetry_warning) s << ", asymmetry warning";
  }
  return s.str();
}

// delta_LS for the relative density of nu, using 1-D adaptive quadrature when n = 1.
Estimate lsi_for_mixture(const GaussianMixtureND& nu, const VerifyOptions& opts, std::string& method) {
  if (nu.dim() == 1) {
    const auto f = RelFunction1D::from_density(Density1D(directional_marginal(nu, Direction::axis(1, 0))));
    method = "lsi: adaptive Gauss-Kronrod";
    return {lsi_deficit(f, opts.quadrature), kQuadratureError};
  }
  std::ostringstream s;
  if (!nu.factors().empty())
    s << "lsi: sum over product factors";
  else if (nu.dim() <= 3)
    s << "lsi: paired trapezoid grids, " << opts.integration.hermite_order << " intervals per axis against nu";
  else
    s << "lsi: QMC " << opts.integration.mc_budget << " points";
  method = s.str();
  return lsi_deficit(relative_density(nu), opts.integration);
}

void add_search_diagnostics(DeficitReport& r, const DnResult& dn) {
  r.diagnostics.emplace_back("d_n", dn.value);
  r.diagnostics.emplace_back("coarse_max", dn.coarse_max);
  r.diagnostics.emplace_back("refined_gain", dn.refined_gain);
  r.diagnostics.emplace_back("directions", dn.directions_evaluated);
}

// E[h] over the slice anchors: quadrature at two orders for n <= 3, Monte Carlo above.
template <class Sampler, class Quad>
Estimate anchor_expectation(int anchor_dim, const VerifyOptions& opts, std::uint64_t stream, const Quad& quad,
                            const Sampler& sample, const std::function<double(const Eigen::VectorXd&)>& h) {
  if (anchor_dim <= 2) {
    const double hi = quad(h, opts.slice_order);
    const double lo = quad(h, std::max(4, (2 * opts.slice_order) / 3));
    return {hi, std::abs(hi - lo)};
  }
  std::mt19937_64 rng(split_seed(opts.seed, stream));
  double s = 0.0, s2 = 0.0;
  for (std::uint64_t k = 0; k < opts.mc_budget; ++k) {
    const double v = h(sample(rng));
    s += v;
    s2 += v * v;
  }
  const double m = static_cast<double>(opts.mc_budget);
  const double mean = s / m;
  return {mean, std::sqrt(std::max(0.0, s2 / m - mean * mean) / m)};
}

}  // namespace

std::string_view to_string(Status s) {
  switch (s) {
    case Status::pass: return "pass";
    case Status::fail: return "fail";
    case Status::inconclusive: return "inconclusive";
  }
  return "unknown";
}

void DeficitReport::finalize() {
  margin = deficit - lower_bound;
  status = margin >= -(tolerance + error_estimate) ? Status::pass : Status::fail;
}

double DeficitReport::diagnostic(std::string_view name) const {
  for (const auto& [k, v] : diagnostics)
    if (k == name) return v;
  throw ValidationError("no diagnostic named " + std::string(name));
}

double lsi_deficit(const RelFunction1D& f, const QuadratureOptions& opts) {
  if (!f.is_normalized(1e-8)) throw ValidationError("lsi_deficit: f must be normalized against gamma");
  return 0.5 * fisher_integral(f, opts) - ent_gamma(f, opts);
}

Estimate lsi_deficit(const RelativeDensityND& f, const NdIntegrationOptions& opts) {
  const Estimate ent = entropy_nd(f, opts);
  const Estimate fisher = fisher_nd(f, opts);
  return {0.5 * fisher.value - ent.value, 0.5 * fisher.error + ent.error};
}

DeficitReport verify_thm_main(const GaussianMixtureND& nu, const VerifyOptions& opts) {
  if (nu.dim() == 1) return verify_thm_main(Density1D(directional_marginal(nu, Direction::axis(1, 0))), opts);
  DeficitReport r;
  r.theorem = "main";
  r.tolerance = opts.tolerance.value_or(kMainTolerance);
  std::string lsi_method;
  const Estimate delta = lsi_for_mixture(nu, opts, lsi_method);
  const DnResult dn = dn_distance(nu, GaussianMixtureND::standard(nu.dim()), opts.sphere, opts.quadrature);
  r.deficit = delta.value;
  r.lower_bound = 0.5 * dn.value * dn.value;
  r.error_estimate = delta.error + dn.value * dn.error;
  r.method = lsi_method + "; " + describe_search(dn, opts.sphere, nu.dim());
  add_search_diagnostics(r, dn);
  r.finalize();
  return r;
}

DeficitReport verify_thm_main(const Density1D& nu, const VerifyOptions& opts) {
  DeficitReport r;
  r.theorem = "main";
  r.tolerance = opts.tolerance.value_or(kMainTolerance);
  const auto f = RelFunction1D::from_density(nu);
  const DistanceDetail d = bf_distance_detail(nu, gamma1(), opts.quadrature);
  r.deficit = lsi_deficit(f, opts.quadrature);
  r.lower_bound = 0.5 * d.value * d.value;
  r.error_estimate = kQuadratureError + d.value * d.error;
  r.method = nu.as_grid() ? "lsi: adaptive Gauss-Kronrod, grid derivative by central differences; d: adaptive Gauss-Kronrod"
                          : "lsi: adaptive Gauss-Kronrod; d: adaptive Gauss-Kronrod";
  r.diagnostics = {{"d_n", d.value}};
  r.finalize();
  return r;
}

DeficitReport verify_corollary(const GaussianMixtureND& nu, const VerifyOptions& opts) {
  DeficitReport r;
  r.theorem = "corollary";
  r.tolerance = opts.tolerance.value_or(kCorollaryTolerance);
  std::string lsi_method;
  const Estimate delta = lsi_for_mixture(nu, opts, lsi_method);
  const int n = nu.dim();

  Estimate weighted, literal;
  if (n == 1) {
    const double d = bf_distance(Density1D(directional_marginal(nu, Direction::axis(1, 0))), gamma1(), opts.quadrature);
    weighted = literal = {0.5 * d * d, d * kQuadratureError};
  } else if (!nu.factors().empty()) {
    // Every slice of a product is its factor, whatever the anchor.
    for (int i = 0; i < n; ++i) {
      const double d = bf_distance(Density1D(nu.factors()[i]), gamma1(), opts.quadrature);
      weighted.value += 0.5 * d * d;
      weighted.error += d * kQuadratureError;
      r.diagnostics.emplace_back("weighted_term_" + std::to_string(i + 1), 0.5 * d * d);
    }
    literal = weighted;
  } else {
    for (int i = 0; i < n; ++i) {
      const CoordinateSlicer slicer(nu, i);
      const GaussianMixtureND& others = *slicer.others();
      const std::function<double(const Eigen::VectorXd&)> d2 = [&](const Eigen::VectorXd& anchor) {
        const double d = bf_distance(Density1D(slicer.conditional(anchor)), gamma1(), opts.slice_quadrature);
        return d * d;
      };
      const Estimate w = anchor_expectation(
          n - 1, opts, 2 * i,
          [&](const auto& h, int order) { return others.expectation(h, order); },
          [&](std::mt19937_64& rng) { return others.sample(rng); }, d2);
      const Estimate l = anchor_expectation(
          n - 1, opts, 2 * i + 1,
          [&](const auto& h, int order) { return tensor_hermite_expectation(n - 1, order, h); },
          [&](std::mt19937_64& rng) {
            std::normal_distribution<double> z;
            Eigen::VectorXd x(n - 1);
            for (int k = 0; k < n - 1; ++k) x(k) = z(rng);
            return x;
          },
          d2);
      weighted.value += 0.5 * w.value;
      weighted.error += 0.5 * w.error;
      literal.value += 0.5 * l.value;
      literal.error += 0.5 * l.error;
      r.diagnostics.emplace_back("weighted_term_" + std::to_string(i + 1), 0.5 * w.value);
    }
  }
  r.deficit = delta.value;
  r.lower_bound = weighted.value;
  r.error_estimate = delta.error + weighted.error;
  r.diagnostics.emplace_back("literal_bound", literal.value);
  r.diagnostics.emplace_back("literal_error", literal.error);
  r.diagnostics.emplace_back("literal_margin", delta.value - literal.value);

  std::ostringstream m;
  m << lsi_method << "; slices: ";
  if (n == 1)
    m << "single slice";
  else if (!nu.factors().empty())
    m << "product factors";
  else if (n <= 3)
    m << "Gauss-Hermite order " << opts.slice_order << " per anchor axis";
  else
    m << "Monte Carlo " << opts.mc_budget << " anchors per coordinate";
  m << "; pass uses mass-weighted sum, literal sum " << literal.value;
  r.method = m.str();
  r.finalize();
  return r;
}

std::optional<ProductMeasure> as_product(const GaussianMixtureND& nu) {
  if (nu.size() != 1) return std::nullopt;
  const auto& c = nu.components()[0];
  const Eigen::MatrixXd off = c.cov - Eigen::MatrixXd(c.cov.diagonal().asDiagonal());
  if (off.cwiseAbs().maxCoeff() > 0.0) return std::nullopt;
  ProductMeasure p;
  for (int i = 0; i < nu.dim(); ++i) p.factors.push_back(Density1D::gaussian(c.mean(i), c.cov(i, i)));
  return p;
}

DeficitReport verify_talagrand(const MeasureSpec& spec, TalagrandMode mode, const VerifyOptions& opts) {
  DeficitReport r;
  r.theorem = "talagrand";
  r.tolerance = opts.tolerance.value_or(kTalagrandTolerance);
  const auto& quad = opts.quadrature;

  auto product_view = [&]() -> ProductMeasure {
    if (const auto* p = std::get_if<ProductMeasure>(&spec)) return *p;
    if (const auto* d = std::get_if<Density1D>(&spec)) return ProductMeasure{{*d}};
    if (auto p = as_product(std::get<GaussianMixtureND>(spec))) return *p;
    throw ValidationError("verify_talagrand: product mode needs a product measure");
  };

  switch (mode) {
    case TalagrandMode::one_d: {
      const ProductMeasure p = product_view();
      if (p.factors.size() != 1) throw ValidationError("verify_talagrand: 1d mode needs a one-dimensional measure");
      const Density1D& nu = p.factors[0];
      const double h = entropy_rel_gauss(nu, quad);
      const double w2 = w2_squared_1d(nu, gamma1(), quad);
      const double breg = bregman_integral(build_map(gamma1(), nu), quad);
      const double d = bf_distance(nu, gamma1(), quad);
      r.deficit = 2.0 * h - w2;
      r.lower_bound = 0.5 * d * d;
      r.error_estimate = 3.0 * kQuadratureError;
      r.diagnostics = {{"relative_entropy", h}, {"w2_squared", w2}, {"bregman", breg}, {"d", d}};
      r.method = "1d: monotone coupling, adaptive Gauss-Kronrod";
      break;
    }
    case TalagrandMode::product: {
      const ProductMeasure p = product_view();
      double h = 0.0, w2 = 0.0;
      for (const auto& f : p.factors) {
        h += entropy_rel_gauss(f, quad);
        w2 += w2_squared_1d(f, gamma1(), quad);
      }
      const int n = static_cast<int>(p.factors.size());
      std::vector<GaussianMixture1D> mixtures;
      for (const auto& f : p.factors)
        if (const auto* m = f.as_mixture()) mixtures.push_back(*m);
        else if (f.is_standard_gaussian()) mixtures.push_back(GaussianMixture1D::gaussian(0.0, 1.0));
      double d = 0.0;
      std::string search;
      if (static_cast<int>(mixtures.size()) == n) {
        const DnResult dn = dn_distance(GaussianMixtureND::product(mixtures), GaussianMixtureND::standard(n),
                                        opts.sphere, quad);
        d = dn.value;
        search = describe_search(dn, opts.sphere, n);
        add_search_diagnostics(r, dn);
      } else {
        for (const auto& f : p.factors) d = std::max(d, bf_distance(f, gamma1(), quad));
        search = "d_n: coordinate axes only";
      }
      r.deficit = 2.0 * h - w2;
      r.lower_bound = 0.5 * d * d;
      r.error_estimate = 3.0 * n * kQuadratureError;
      r.diagnostics.emplace_back("relative_entropy", h);
      r.diagnostics.emplace_back("w2_squared", w2);
      r.method = "product: tensorized 1d entropy and W_2; " + search;
      break;
    }
    case TalagrandMode::sampled_nd: {
      const auto* nu = std::get_if<GaussianMixtureND>(&spec);
      if (!nu) throw ValidationError("verify_talagrand: sampled-nd mode needs a Gaussian mixture");
      if (nu->dim() > 3) throw ValidationError("verify_talagrand: sampled-nd mode supports n <= 3");
      const Estimate h = entropy_nd(relative_density(*nu), opts.integration);
      const EmpiricalW2 w2 = empirical_w2_squared(*nu, opts.sample_size, opts.repetitions, opts.seed);
      const DnResult dn = dn_distance(*nu, GaussianMixtureND::standard(nu->dim()), opts.sphere, quad);
      const double stderr_w2 = w2.spread / std::sqrt(static_cast<double>(opts.repetitions));
      r.deficit = 2.0 * h.value - w2.mean;
      r.lower_bound = 0.5 * dn.value * dn.value;
      r.error_estimate = 2.0 * h.error + stderr_w2 + w2.bias + dn.value * dn.error;
      r.diagnostics.emplace_back("relative_entropy", h.value);
      r.diagnostics.emplace_back("w2_squared_estimate", w2.mean);
      r.diagnostics.emplace_back("w2_spread", w2.spread);
      r.diagnostics.emplace_back("w2_sampling_bias", w2.bias);
      add_search_diagnostics(r, dn);
      std::ostringstream m;
      m << "sampled-nd: W_2 estimate from optimal assignment, m=" << opts.sample_size << ", "
        << opts.repetitions << " repetitions (estimate, biased by sampling); "
        << describe_search(dn, opts.sphere, nu->dim());
      r.method = m.str();
      r.finalize();
      if (stderr_w2 > opts.sampled_error_limit) r.status = Status::inconclusive;
      return r;
    }
  }
  r.finalize();
  return r;
}

std::vector<int> solve_assignment(const Eigen::MatrixXd& cost) {
  // Shortest augmenting paths with dual potentials (Kuhn-Munkres), 1-based internally.
  const int n = static_cast<int>(cost.rows());
  if (cost.cols() != n) throw ValidationError("solve_assignment: cost matrix must be square");
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> assignment(n);
  for (int j = 1; j <= n; ++j) assignment[p[j] - 1] = j - 1;
  return assignment;
}

EmpiricalW2 empirical_w2_squared(const GaussianMixtureND& nu, int sample_size, int repetitions, std::uint64_t seed) {
  if (sample_size < 2 || repetitions < 2)
    throw ValidationError("empirical_w2_squared: need sample_size >= 2 and repetitions >= 2");
  const int n = nu.dim();
  const auto m = static_cast<Eigen::Index>(sample_size);
  auto gaussian_sample = [&](std::mt19937_64& rng) {
    std::normal_distribution<double> z;
    Eigen::MatrixXd y(m, n);
    for (Eigen::Index k = 0; k < m; ++k)
      for (int d = 0; d < n; ++d) y(k, d) = z(rng);
    return y;
  };
  auto matched_cost = [&](const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
    Eigen::MatrixXd cost(m, m);
    for (Eigen::Index a = 0; a < m; ++a)
      for (Eigen::Index b = 0; b < m; ++b) cost(a, b) = (x.row(a) - y.row(b)).squaredNorm();
    const auto match = solve_assignment(cost);
    double total = 0.0;
    for (Eigen::Index a = 0; a < m; ++a) total += cost(a, match[a]);
    return total / static_cast<double>(m);
  };

  std::vector<double> values(repetitions);
  for (int r = 0; r < repetitions; ++r) {
    std::mt19937_64 rng(split_seed(seed, 0xa551 + r));
    Eigen::MatrixXd x(m, n);
    for (Eigen::Index k = 0; k < m; ++k) x.row(k) = nu.sample(rng).transpose();
    values[r] = matched_cost(x, gaussian_sample(rng));
  }
  EmpiricalW2 out;
  for (double v : values) out.mean += v;
  out.mean /= repetitions;
  for (double v : values) out.spread += (v - out.mean) * (v - out.mean);
  out.spread = std::sqrt(out.spread / (repetitions - 1));

  std::mt19937_64 rng(split_seed(seed, 0xb1a5));
  const Eigen::MatrixXd y1 = gaussian_sample(rng);
  out.bias = matched_cost(y1, gaussian_sample(rng));
  return out;
}

}  // namespace bfstab
