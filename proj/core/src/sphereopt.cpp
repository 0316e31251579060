#include "bfstab/sphereopt.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <boost/random/sobol.hpp>

#include "bfstab/errors.hpp"

namespace bfstab {
namespace {

bool lex_less(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (a(i) < b(i)) return true;
    if (a(i) > b(i)) return false;
  }
  return false;
}

struct Candidate {
  double value;
  Eigen::VectorXd xi;  // canonical
  DistanceDetail detail;
};

// Strictly better value, or equal value with lexicographically smaller direction.
bool better(const Candidate& a, const Candidate& b) {
  if (a.value != b.value) return a.value > b.value;
  return lex_less(a.xi, b.xi);
}

double angle_between(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return std::acos(std::clamp(std::abs(a.dot(b)), 0.0, 1.0));
}

void push_if_nonzero(std::vector<Direction>& out, const Eigen::VectorXd& v) {
  if (v.norm() > 1e-9) out.push_back(Direction::normalized(v).canonical());
}

std::vector<Eigen::VectorXd> fibonacci_hemisphere(int count) {
  std::vector<Eigen::VectorXd> pts;
  const double golden = (1.0 + std::sqrt(5.0)) / 2.0;
  for (int i = 0; i < count; ++i) {
    const double z = (i + 0.5) / count;
    const double r = std::sqrt(1.0 - z * z);
    const double phi = 2.0 * std::numbers::pi * i / golden;
    Eigen::VectorXd v(3);
    v << r * std::cos(phi), r * std::sin(phi), z;
    pts.push_back(v);
  }
  return pts;
}

// Orthonormal basis of the tangent space at xi.
Eigen::MatrixXd tangent_basis(const Eigen::VectorXd& xi) {
  const int n = static_cast<int>(xi.size());
  Eigen::MatrixXd a(n, n);
  a.col(0) = xi;
  Eigen::Index pivot;
  xi.cwiseAbs().maxCoeff(&pivot);
  // Drop the identity column most aligned with xi to keep the QR well conditioned.
  int col = 1;
  for (int j = 0; j < n; ++j) {
    if (j == pivot) continue;
    if (col < n) a.col(col++) = Eigen::VectorXd::Unit(n, j);
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
  return q.rightCols(n - 1);
}

class Evaluator {
 public:
  Evaluator(const GaussianMixtureND& u, const GaussianMixtureND& v, const QuadratureOptions& quad)
      : u_(u), v_(v), quad_(quad) {}

  std::optional<Candidate> operator()(const Eigen::VectorXd& raw) {
    const Direction xi = Direction::normalized(raw).canonical();
    ++evaluated;
    try {
      DistanceDetail d = directional_distance(u_, v_, xi, quad_);
      if (d.asymmetric) asymmetric = true;
      return Candidate{d.value, xi.vector(), d};
    } catch (const NumericalError&) {
      ++skipped;
      return std::nullopt;
    }
  }

  int evaluated = 0;
  int skipped = 0;
  bool asymmetric = false;

 private:
  const GaussianMixtureND& u_;
  const GaussianMixtureND& v_;
  QuadratureOptions quad_;
};

// Nelder-Mead ascent in tangent coordinates around `start`.
Candidate refine(Evaluator& eval, const Candidate& start, double step, const SphereSearchConfig& cfg) {
  const int n = static_cast<int>(start.xi.size());
  const int m = n - 1;
  const Eigen::MatrixXd basis = tangent_basis(start.xi);
  Candidate best = start;
  auto score = [&](const Eigen::VectorXd& t) {
    const auto c = eval(start.xi + basis * t);
    if (!c) return -1.0;
    if (better(*c, best)) best = *c;
    return c->value;
  };

  std::vector<Eigen::VectorXd> simplex(m + 1, Eigen::VectorXd::Zero(m));
  std::vector<double> f(m + 1);
  f[0] = start.value;
  for (int j = 0; j < m; ++j) {
    simplex[j + 1](j) = step;
    f[j + 1] = score(simplex[j + 1]);
  }
  int budget = cfg.refinement_iterations - m;
  while (budget > 0) {
    std::vector<int> order(m + 1);
    for (int i = 0; i <= m; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](int a, int b) { return f[a] > f[b]; });
    double diameter = 0.0;
    for (int i = 1; i <= m; ++i) diameter = std::max(diameter, (simplex[order[i]] - simplex[order[0]]).norm());
    if (diameter < cfg.tolerance) break;

    const int worst = order[m];
    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(m);
    for (int i = 0; i < m; ++i) centroid += simplex[order[i]];
    centroid /= m;

    const Eigen::VectorXd xr = centroid + (centroid - simplex[worst]);
    const double fr = score(xr);
    --budget;
    if (fr > f[order[0]]) {
      const Eigen::VectorXd xe = centroid + 2.0 * (centroid - simplex[worst]);
      const double fe = score(xe);
      --budget;
      if (fe > fr) {
        simplex[worst] = xe;
        f[worst] = fe;
      } else {
        simplex[worst] = xr;
        f[worst] = fr;
      }
      continue;
    }
    if (fr > f[order[m - 1]]) {
      simplex[worst] = xr;
      f[worst] = fr;
      continue;
    }
    const Eigen::VectorXd xc = centroid + 0.5 * (simplex[worst] - centroid);
    const double fc = score(xc);
    --budget;
    if (fc > f[worst]) {
      simplex[worst] = xc;
      f[worst] = fc;
      continue;
    }
    for (int i = 1; i <= m; ++i) {
      const int k = order[i];
      simplex[k] = simplex[order[0]] + 0.5 * (simplex[k] - simplex[order[0]]);
      f[k] = score(simplex[k]);
      --budget;
    }
  }
  return best;
}

}  // namespace

int SphereSearchConfig::resolved_coarse_count(int dim) const {
  if (coarse_count > 0) return coarse_count;
  return dim <= 3 ? 512 : 4096;
}

void SphereSearchConfig::validate() const {
  if (coarse_count < 0) throw ValidationError("coarse_count must be positive (0 selects the default)");
  if (refinement_iterations <= 0) throw ValidationError("refinement_iterations must be positive");
  if (restarts <= 0) throw ValidationError("restarts must be positive");
  if (!(tolerance > 0.0 && tolerance < std::numbers::pi)) throw ValidationError("tolerance must lie in (0, pi)");
}

DistanceDetail directional_distance(const GaussianMixtureND& u, const GaussianMixtureND& v, const Direction& xi,
                                    const QuadratureOptions& quad) {
  return bf_distance_detail(Density1D(directional_marginal(u, xi)), Density1D(directional_marginal(v, xi)), quad);
}

std::vector<Direction> coarse_directions(const GaussianMixtureND& u, const GaussianMixtureND& v, int count) {
  const int n = u.dim();
  std::vector<Direction> out;
  if (n == 1) return {Direction::axis(1, 0)};
  if (count < 1) throw ValidationError("coarse_directions: count must be positive");

  if (n == 2) {
    for (int k = 0; k < count; ++k) {
      const double t = std::numbers::pi * k / count;
      Eigen::VectorXd e(2);
      e << std::cos(t), std::sin(t);
      push_if_nonzero(out, e);
    }
  } else if (n == 3) {
    for (int size = count; size >= 16; size /= 2) {
      for (const auto& p : fibonacci_hemisphere(size)) push_if_nonzero(out, p);
      if (size % 2 != 0) break;
    }
    if (out.empty())
      for (const auto& p : fibonacci_hemisphere(count)) push_if_nonzero(out, p);
  } else {
    boost::random::sobol sobol(n);
    const double scale = 1.0 / (static_cast<double>(sobol.max()) + 1.0);
    Eigen::VectorXd z(n);
    for (int k = 0; k < count; ++k) {
      for (int d = 0; d < n; ++d) z(d) = normal_quantile((static_cast<double>(sobol()) + 0.5) * scale);
      push_if_nonzero(out, z);
    }
  }

  for (int i = 0; i < n; ++i) out.push_back(Direction::axis(n, i));
  for (const auto& a : u.components())
    for (const auto& b : v.components()) push_if_nonzero(out, a.mean - b.mean);
  for (const auto* mix : {&u, &v}) {
    for (const auto& c : mix->components()) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(c.cov);
      for (int j = 0; j < n; ++j) push_if_nonzero(out, eig.eigenvectors().col(j));
    }
  }
  return out;
}

DnResult dn_distance(const GaussianMixtureND& u, const GaussianMixtureND& v, const SphereSearchConfig& cfg,
                     const QuadratureOptions& quad) {
  cfg.validate();
  if (u.dim() != v.dim()) throw ValidationError("dn_distance: dimension mismatch");
  const int n = u.dim();
  const int count = cfg.resolved_coarse_count(n);
  Evaluator eval(u, v, quad);

  std::vector<Candidate> coarse;
  for (const auto& xi : coarse_directions(u, v, count)) {
    if (auto c = eval(xi.vector())) coarse.push_back(std::move(*c));
  }
  if (coarse.empty()) throw NumericalError("dn_distance: every direction failed to evaluate");
  std::sort(coarse.begin(), coarse.end(), better);

  DnResult out;
  out.coarse_max = coarse.front().value;
  Candidate best = coarse.front();

  if (cfg.refine && n > 1 && out.coarse_max > 1e-9) {
    const double spacing =
        n == 2 ? std::numbers::pi / count : std::sqrt(2.0 * std::numbers::pi / count);
    std::vector<const Candidate*> starts;
    for (const auto& c : coarse) {
      if (static_cast<int>(starts.size()) >= cfg.restarts) break;
      const bool separated = std::all_of(starts.begin(), starts.end(), [&](const Candidate* s) {
        return angle_between(s->xi, c.xi) > 4.0 * spacing;
      });
      if (separated) starts.push_back(&c);
    }
    for (const Candidate* s : starts) {
      Candidate r = refine(eval, *s, spacing, cfg);
      if (better(r, best)) best = std::move(r);
    }
  }

  out.value = best.value;
  out.argmax = Direction(best.xi);
  out.refined_gain = std::max(0.0, out.value - out.coarse_max);
  out.error = best.detail.error;
  out.directions_evaluated = eval.evaluated;
  out.skipped = eval.skipped;
  out.asymmetry_warning = eval.asymmetric;
  return out;
}

LowerBoundCertificate lower_bound_certificate(const DnResult& result, const SphereSearchConfig& cfg) {
  LowerBoundCertificate cert;
  cert.value = result.value;
  cert.direction_count = result.directions_evaluated;
  cert.argmax = result.argmax;
  const auto& xi = result.argmax.vector();
  cert.axis_hit = (xi.cwiseAbs().maxCoeff() >= 1.0 - 1e-15);
  std::ostringstream s;
  s.precision(17);
  s << "d_n >= " << result.value << ": maximum of d over " << result.directions_evaluated
    << " evaluated directions (coarse lattice " << cfg.resolved_coarse_count(xi.size());
  if (cfg.refine) s << ", " << cfg.restarts << " simplex restarts";
  s << "), attained at (";
  for (Eigen::Index i = 0; i < xi.size(); ++i) s << (i ? ", " : "") << xi(i);
  s << ")";
  if (cert.axis_hit) s << ", a coordinate axis";
  s << ". The supremum over the sphere is at least this value.";
  cert.statement = s.str();
  return cert;
}

}  // namespace bfstab
