#include "bfstab/densitynd.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "bfstab/errors.hpp"

namespace bfstab {
namespace {

const double kLog2Pi = std::log(2.0 * std::numbers::pi);

double gaussian_log_norm(const Eigen::MatrixXd& chol) {
  double logdet = 0.0;
  for (Eigen::Index i = 0; i < chol.rows(); ++i) logdet += std::log(chol(i, i));
  return -logdet - 0.5 * static_cast<double>(chol.rows()) * kLog2Pi;
}

using SmallVector = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxDimension, 1>;

double std_normal_log_pdf_nd(const Eigen::VectorXd& x) {
  return -0.5 * x.squaredNorm() - 0.5 * static_cast<double>(x.size()) * kLog2Pi;
}

double log_sum_exp(const std::vector<double>& v) {
  const double m = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

}  // namespace

// ---------------------------------------------------------------- mixture

GaussianMixtureND::GaussianMixtureND(std::vector<MixtureComponentND> components)
    : components_(std::move(components)) {
  if (components_.empty()) throw ValidationError("GaussianMixtureND: no components");
  dim_ = static_cast<int>(components_[0].mean.size());
  if (dim_ < 1 || dim_ > kMaxDimension)
    throw ValidationError("GaussianMixtureND: dimension must lie in [1, " + std::to_string(kMaxDimension) + "]");
  double total = 0.0;
  for (std::size_t k = 0; k < components_.size(); ++k) {
    auto& c = components_[k];
    const std::string where = "components[" + std::to_string(k) + "]";
    if (c.mean.size() != dim_) throw ValidationError(where + ".mean: expected length " + std::to_string(dim_));
    if (c.cov.rows() != dim_ || c.cov.cols() != dim_)
      throw ValidationError(where + ".cov: expected " + std::to_string(dim_) + "x" + std::to_string(dim_));
    if (!(c.weight > 0.0 && c.weight <= 1.0)) throw ValidationError(where + ".weight: must lie in (0, 1]");
    if (!c.mean.allFinite() || !c.cov.allFinite()) throw ValidationError(where + ": non-finite entries");
    const double scale = 1.0 + c.cov.cwiseAbs().maxCoeff();
    if ((c.cov - c.cov.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
      throw ValidationError(where + ".cov: not symmetric");
    c.cov = 0.5 * (c.cov + c.cov.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(c.cov, Eigen::EigenvaluesOnly);
    if (!(eig.eigenvalues().minCoeff() > 1e-10))
      throw ValidationError(where + ".cov: not positive definite (smallest eigenvalue " +
                            std::to_string(eig.eigenvalues().minCoeff()) + ")");
    total += c.weight;
    Eigen::LLT<Eigen::MatrixXd> llt(c.cov);
    chol_.push_back(llt.matrixL());
    precision_.push_back(llt.solve(Eigen::MatrixXd::Identity(dim_, dim_)));
    log_norm_.push_back(std::log(c.weight) + gaussian_log_norm(chol_.back()));
  }
  if (std::abs(total - 1.0) > 1e-12)
    throw ValidationError("GaussianMixtureND: weights sum to " + std::to_string(total));
}

GaussianMixtureND GaussianMixtureND::standard(int dim) {
  return gaussian(Eigen::VectorXd::Zero(dim), Eigen::MatrixXd::Identity(dim, dim));
}

GaussianMixtureND GaussianMixtureND::gaussian(Eigen::VectorXd mean, Eigen::MatrixXd cov) {
  return GaussianMixtureND({{1.0, std::move(mean), std::move(cov)}});
}

GaussianMixtureND GaussianMixtureND::product(std::span<const GaussianMixture1D> factors) {
  const int n = static_cast<int>(factors.size());
  if (n < 1) throw ValidationError("GaussianMixtureND::product: no factors");
  std::vector<MixtureComponentND> comps;
  std::vector<std::size_t> idx(n, 0);
  while (true) {
    MixtureComponentND c{1.0, Eigen::VectorXd(n), Eigen::MatrixXd::Zero(n, n)};
    for (int d = 0; d < n; ++d) {
      const auto& fc = factors[d].components()[idx[d]];
      c.weight *= fc.weight;
      c.mean(d) = fc.mean;
      c.cov(d, d) = fc.stddev * fc.stddev;
    }
    comps.push_back(std::move(c));
    int d = 0;
    while (d < n && ++idx[d] == factors[d].components().size()) idx[d++] = 0;
    if (d == n) break;
  }
  double total = 0.0;
  for (const auto& c : comps) total += c.weight;
  for (auto& c : comps) c.weight /= total;
  GaussianMixtureND out(std::move(comps));
  out.factors_.assign(factors.begin(), factors.end());
  return out;
}

GaussianMixtureND GaussianMixtureND::from_json(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(std::string("mixture JSON: ") + e.what());
  }
  auto number = [](const nlohmann::json& j, const std::string& where) {
    if (!j.is_number()) throw ValidationError(where + ": expected a number");
    return j.get<double>();
  };
  if (!doc.is_object()) throw ValidationError("mixture JSON: top level must be an object");
  if (!doc.contains("dim") || !doc["dim"].is_number_integer()) throw ValidationError("dim: expected an integer");
  const int n = doc["dim"].get<int>();
  if (n < 1 || n > kMaxDimension) throw ValidationError("dim: must lie in [1, 8]");
  if (!doc.contains("components") || !doc["components"].is_array() || doc["components"].empty())
    throw ValidationError("components: expected a non-empty array");
  std::vector<MixtureComponentND> comps;
  for (std::size_t k = 0; k < doc["components"].size(); ++k) {
    const auto& jc = doc["components"][k];
    const std::string where = "components[" + std::to_string(k) + "]";
    if (!jc.is_object()) throw ValidationError(where + ": expected an object");
    MixtureComponentND c;
    c.weight = number(jc.value("weight", nlohmann::json()), where + ".weight");
    const auto& jm = jc.value("mean", nlohmann::json());
    if (!jm.is_array() || static_cast<int>(jm.size()) != n)
      throw ValidationError(where + ".mean: expected an array of length " + std::to_string(n));
    c.mean.resize(n);
    for (int i = 0; i < n; ++i) c.mean(i) = number(jm[i], where + ".mean[" + std::to_string(i) + "]");
    const auto& jv = jc.value("cov", nlohmann::json());
    c.cov.resize(n, n);
    if (jv.is_array() && static_cast<int>(jv.size()) == n * n && (n == 1 || jv[0].is_number())) {
      for (int i = 0; i < n * n; ++i) c.cov(i / n, i % n) = number(jv[i], where + ".cov[" + std::to_string(i) + "]");
    } else if (jv.is_array() && static_cast<int>(jv.size()) == n) {
      for (int i = 0; i < n; ++i) {
        if (!jv[i].is_array() || static_cast<int>(jv[i].size()) != n)
          throw ValidationError(where + ".cov[" + std::to_string(i) + "]: expected a row of length " + std::to_string(n));
        for (int j = 0; j < n; ++j)
          c.cov(i, j) = number(jv[i][j], where + ".cov[" + std::to_string(i) + "][" + std::to_string(j) + "]");
      }
    } else {
      throw ValidationError(where + ".cov: expected an n x n array (row-major)");
    }
    comps.push_back(std::move(c));
  }
  return GaussianMixtureND(std::move(comps));
}

GaussianMixtureND GaussianMixtureND::load_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open mixture file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return from_json(ss.str());
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

std::string GaussianMixtureND::to_json() const {
  nlohmann::ordered_json doc;
  doc["dim"] = dim_;
  doc["components"] = nlohmann::ordered_json::array();
  for (const auto& c : components_) {
    nlohmann::ordered_json jc;
    jc["weight"] = c.weight;
    jc["mean"] = std::vector<double>(c.mean.data(), c.mean.data() + dim_);
    auto rows = nlohmann::ordered_json::array();
    for (int i = 0; i < dim_; ++i) {
      std::vector<double> row(dim_);
      for (int j = 0; j < dim_; ++j) row[j] = c.cov(i, j);
      rows.push_back(row);
    }
    jc["cov"] = rows;
    doc["components"].push_back(jc);
  }
  return doc.dump();
}

double GaussianMixtureND::log_pdf(const Eigen::VectorXd& x) const {
  // Streaming log-sum-exp over components; fixed-capacity vectors keep this allocation-free.
  double top = -std::numeric_limits<double>::infinity();
  double sum = 0.0;
  SmallVector y(dim_);
  for (std::size_t k = 0; k < components_.size(); ++k) {
    y = x - components_[k].mean;
    chol_[k].triangularView<Eigen::Lower>().solveInPlace(y);
    const double t = log_norm_[k] - 0.5 * y.squaredNorm();
    if (t > top) {
      sum = sum * std::exp(top - t) + 1.0;
      top = t;
    } else {
      sum += std::exp(t - top);
    }
  }
  return top + std::log(sum);
}

Eigen::VectorXd GaussianMixtureND::grad_log_pdf(const Eigen::VectorXd& x) const {
  double top = -std::numeric_limits<double>::infinity();
  double sum = 0.0;
  SmallVector acc = SmallVector::Zero(dim_);
  SmallVector diff(dim_);
  SmallVector g(dim_);
  for (std::size_t k = 0; k < components_.size(); ++k) {
    diff = x - components_[k].mean;
    g.noalias() = -(precision_[k] * diff);
    const double t = log_norm_[k] + 0.5 * diff.dot(g);
    if (t > top) {
      const double r = std::exp(top - t);
      sum = sum * r + 1.0;
      acc = acc * r + g;
      top = t;
    } else {
      const double e = std::exp(t - top);
      sum += e;
      acc += e * g;
    }
  }
  return acc / sum;
}

Eigen::VectorXd GaussianMixtureND::sample(std::mt19937_64& rng) const {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double r = u(rng);
  std::size_t k = 0;
  while (k + 1 < components_.size() && r >= components_[k].weight) {
    r -= components_[k].weight;
    ++k;
  }
  std::normal_distribution<double> z(0.0, 1.0);
  Eigen::VectorXd e(dim_);
  for (int i = 0; i < dim_; ++i) e(i) = z(rng);
  return components_[k].mean + chol_[k] * e;
}

GaussianMixtureND GaussianMixtureND::pushforward(const Eigen::MatrixXd& q) const {
  if (q.rows() != dim_ || q.cols() != dim_) throw ValidationError("pushforward: matrix dimension mismatch");
  auto comps = components_;
  for (auto& c : comps) {
    c.mean = q * c.mean;
    Eigen::MatrixXd s = q * c.cov * q.transpose();
    c.cov = 0.5 * (s + s.transpose());
  }
  return GaussianMixtureND(std::move(comps));
}

GaussianMixtureND GaussianMixtureND::shifted(const Eigen::VectorXd& a) const {
  auto comps = components_;
  for (auto& c : comps) c.mean += a;
  return GaussianMixtureND(std::move(comps));
}

double GaussianMixtureND::expectation(const std::function<double(const Eigen::VectorXd&)>& h, int order) const {
  double total = 0.0;
  for (std::size_t k = 0; k < components_.size(); ++k) {
    const auto& c = components_[k];
    const auto& l = chol_[k];
    total += c.weight * tensor_hermite_expectation(dim_, order, [&](const Eigen::VectorXd& z) {
               return h(c.mean + l * z);
             });
  }
  return total;
}

double GaussianMixtureND::expectation(const std::function<double(const Eigen::VectorXd&)>& h,
                                      const HermiteRule& rule) const {
  double total = 0.0;
  for (std::size_t k = 0; k < components_.size(); ++k) {
    const auto& c = components_[k];
    const auto& l = chol_[k];
    total += c.weight * tensor_rule_expectation(dim_, rule, [&](const Eigen::VectorXd& z) { return h(c.mean + l * z); },
                                                1e-20);
  }
  return total;
}

Estimate GaussianMixtureND::expectation_qmc(const std::function<double(const Eigen::VectorXd&)>& h,
                                            std::uint64_t budget, std::uint64_t seed) const {
  Estimate out;
  double var = 0.0;
  for (std::size_t k = 0; k < components_.size(); ++k) {
    const auto& c = components_[k];
    const auto& l = chol_[k];
    const auto share = std::max<std::uint64_t>(static_cast<std::uint64_t>(budget * c.weight), 64);
    const Estimate e = qmc_gaussian_expectation(dim_, share, split_seed(seed, k), [&](const Eigen::VectorXd& z) {
      return h(c.mean + l * z);
    });
    out.value += c.weight * e.value;
    var += c.weight * c.weight * e.error * e.error;
  }
  out.error = std::sqrt(var);
  return out;
}

double GaussianMixtureND::max_condition_number() const {
  double worst = 1.0;
  for (const auto& c : components_) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(c.cov, Eigen::EigenvaluesOnly);
    worst = std::max(worst, eig.eigenvalues().maxCoeff() / eig.eigenvalues().minCoeff());
  }
  return worst;
}

// ---------------------------------------------------------------- Direction

Direction::Direction(Eigen::VectorXd xi) : xi_(std::move(xi)) {
  if (xi_.size() < 1) throw ValidationError("Direction: empty vector");
  if (std::abs(xi_.norm() - 1.0) > 1e-12) throw ValidationError("Direction: vector must have unit norm");
}

Direction Direction::normalized(const Eigen::VectorXd& v) {
  const double n = v.norm();
  if (!(n > 0.0) || !std::isfinite(n)) throw ValidationError("Direction: cannot normalize a zero vector");
  return Direction(v / n);
}

Direction Direction::axis(int dim, int index) {
  Eigen::VectorXd e = Eigen::VectorXd::Zero(dim);
  e(index) = 1.0;
  return Direction(e);
}

Direction Direction::canonical() const {
  for (Eigen::Index i = 0; i < xi_.size(); ++i) {
    if (std::abs(xi_(i)) > 1e-15) return xi_(i) > 0.0 ? *this : Direction(-xi_);
  }
  return *this;
}

// ---------------------------------------------------------------- products / relative densities

ProductFunction::ProductFunction(std::vector<RelFunction1D> fs) : factors(std::move(fs)) {
  if (factors.empty() || factors.size() > static_cast<std::size_t>(kMaxDimension))
    throw ValidationError("ProductFunction: need between 1 and 8 factors");
  for (const auto& h : factors) {
    if (!h.is_normalized(1e-8)) throw ValidationError("ProductFunction: each factor must be normalized against gamma");
  }
}

RelativeDensityND::RelativeDensityND(int dim, ScalarFn log_value, VectorFn grad_log)
    : dim_(dim), log_value_(std::move(log_value)), grad_log_(std::move(grad_log)) {
  if (dim_ < 1 || dim_ > kMaxDimension) throw ValidationError("RelativeDensityND: dimension out of range");
}

RelativeDensityND::RelativeDensityND(GaussianMixtureND source) : dim_(source.dim()), mixture_(std::move(source)) {
  // Captured by value so copies of this object stay self-contained.
  log_value_ = [mix = *mixture_](const Eigen::VectorXd& x) { return mix.log_pdf(x) - std_normal_log_pdf_nd(x); };
  grad_log_ = [mix = *mixture_](const Eigen::VectorXd& x) -> Eigen::VectorXd { return mix.grad_log_pdf(x) + x; };
}

RelativeDensityND::RelativeDensityND(ProductFunction source) : dim_(source.dim()), product_(std::move(source)) {
  log_value_ = [p = *product_](const Eigen::VectorXd& x) {
    double s = 0.0;
    for (int i = 0; i < p.dim(); ++i) s += std::log(p.factors[i](x(i)));
    return s;
  };
  grad_log_ = [p = *product_](const Eigen::VectorXd& x) -> Eigen::VectorXd {
    Eigen::VectorXd g(p.dim());
    for (int i = 0; i < p.dim(); ++i) g(i) = p.factors[i].derivative(x(i)) / p.factors[i](x(i));
    return g;
  };
}

GaussianMixture1D directional_marginal(const GaussianMixtureND& nu, const Direction& xi) {
  if (xi.dim() != nu.dim()) throw ValidationError("directional_marginal: dimension mismatch");
  std::vector<MixtureComponent1D> comps;
  comps.reserve(nu.size());
  const auto& v = xi.vector();
  for (const auto& c : nu.components()) {
    const double var = v.dot(c.cov * v);
    comps.push_back({c.weight, c.mean.dot(v), std::sqrt(var)});
  }
  return GaussianMixture1D(std::move(comps));
}

RelativeDensityND relative_density(const GaussianMixtureND& nu) {
  if (nu.max_condition_number() > 1e12)
    throw NumericalError("relative_density: covariance condition number above 1e12");
  return RelativeDensityND(nu);
}

// ---------------------------------------------------------------- slices

CoordinateSlicer::CoordinateSlicer(const GaussianMixtureND& nu, int index) : index_(index) {
  const int n = nu.dim();
  if (index < 0 || index >= n) throw ValidationError("CoordinateSlicer: index out of range");
  std::vector<int> others;
  for (int j = 0; j < n; ++j)
    if (j != index) others.push_back(j);
  std::vector<MixtureComponentND> marg;
  for (const auto& c : nu.components()) {
    Piece p;
    p.log_weight = std::log(c.weight);
    p.mean_i = c.mean(index);
    if (n == 1) {
      p.gain = Eigen::RowVectorXd(0);
      p.cond_std = std::sqrt(c.cov(0, 0));
    } else {
      const int m = n - 1;
      Eigen::MatrixXd soo(m, m);
      Eigen::RowVectorXd sio(m);
      Eigen::VectorXd mo(m);
      for (int a = 0; a < m; ++a) {
        mo(a) = c.mean(others[a]);
        sio(a) = c.cov(index, others[a]);
        for (int b = 0; b < m; ++b) soo(a, b) = c.cov(others[a], others[b]);
      }
      Eigen::LLT<Eigen::MatrixXd> llt(soo);
      p.gain = llt.solve(sio.transpose()).transpose();
      const double var = c.cov(index, index) - p.gain.dot(sio);
      if (!(var > 0.0)) throw NumericalError("CoordinateSlicer: non-positive conditional variance");
      p.cond_std = std::sqrt(var);
      marg.push_back({c.weight, mo, soo});
    }
    pieces_.push_back(std::move(p));
  }
  if (n > 1) {
    double total = 0.0;
    for (const auto& c : marg) total += c.weight;
    for (auto& c : marg) c.weight /= total;
    others_.emplace(std::move(marg));
  }
}

GaussianMixture1D CoordinateSlicer::conditional(const Eigen::VectorXd& anchor) const {
  std::vector<double> logw(pieces_.size());
  std::vector<MixtureComponent1D> comps(pieces_.size());
  for (std::size_t k = 0; k < pieces_.size(); ++k) {
    const auto& p = pieces_[k];
    double shift = 0.0;
    logw[k] = p.log_weight;
    if (others_) {
      const auto& oc = others_->components()[k];
      const Eigen::VectorXd diff = anchor - oc.mean;
      const Eigen::VectorXd y = others_->cholesky(k).triangularView<Eigen::Lower>().solve(diff);
      double logdet = 0.0;
      for (Eigen::Index i = 0; i < y.size(); ++i) logdet += std::log(others_->cholesky(k)(i, i));
      logw[k] += -0.5 * y.squaredNorm() - logdet;
      shift = p.gain.dot(diff);
    }
    comps[k] = {0.0, p.mean_i + shift, p.cond_std};
  }
  const double lse = log_sum_exp(logw);
  for (std::size_t k = 0; k < comps.size(); ++k) comps[k].weight = std::exp(logw[k] - lse);
  return GaussianMixture1D::normalized(std::move(comps));
}

double CoordinateSlicer::log_slice_mass(const Eigen::VectorXd& anchor) const {
  if (!others_) return 0.0;
  return others_->log_pdf(anchor) - std_normal_log_pdf_nd(anchor);
}

Normalized1D conditional_slice(const RelativeDensityND& f, const SliceSpec& s) {
  const int n = f.dim();
  if (s.index < 0 || s.index >= n) throw ValidationError("conditional_slice: index out of range");
  if (s.anchor.size() != n - 1) throw ValidationError("conditional_slice: anchor must have length n-1");
  if (!s.anchor.allFinite()) throw DomainError("conditional_slice: anchor must be finite");

  if (const auto* mix = f.mixture()) {
    CoordinateSlicer slicer(*mix, s.index);
    const double log_mass = slicer.log_slice_mass(s.anchor);
    const double mass = std::exp(log_mass);
    if (!(mass >= 1e-300)) throw UnderflowError("conditional_slice: slice mass below 1e-300");
    return {mass, RelFunction1D::from_density(Density1D(slicer.conditional(s.anchor)))};
  }
  if (const auto* prod = f.product()) {
    double mass = 1.0;
    for (int j = 0, a = 0; j < n; ++j) {
      if (j == s.index) continue;
      mass *= prod->factors[j](s.anchor(a++));
    }
    if (!(mass >= 1e-300)) throw UnderflowError("conditional_slice: slice mass below 1e-300");
    return {mass, prod->factors[s.index]};
  }
  auto embed = [s, n](double y) {
    Eigen::VectorXd x(n);
    for (int j = 0, a = 0; j < n; ++j) x(j) = j == s.index ? y : s.anchor(a++);
    return x;
  };
  RelFunction1D slice([f, embed](double y) { return f.value(embed(y)); },
                      [f, embed, i = s.index](double y) { return f.gradient(embed(y))(i); });
  return normalize(slice);
}

// ---------------------------------------------------------------- functionals

namespace {

int secondary_order(int order) { return std::max(8, (3 * order) / 4); }

template <class Fn>
Estimate mixture_expectation(const GaussianMixtureND& mix, const Fn& h, const NdIntegrationOptions& opts) {
  if (mix.dim() <= 3) {
    const double a = mix.expectation(h, uniform_gaussian_rule(opts.hermite_order));
    const double b = mix.expectation(h, uniform_gaussian_rule(opts.hermite_order, 8.0, true));
    return {0.5 * (a + b), 0.5 * std::abs(a - b)};
  }
  return mix.expectation_qmc(h, opts.mc_budget, opts.seed);
}

template <class Fn>
Estimate gamma_expectation(int dim, const Fn& h, const NdIntegrationOptions& opts) {
  if (dim <= 3) {
    const double a = tensor_hermite_expectation(dim, opts.hermite_order, h);
    const double b = tensor_hermite_expectation(dim, secondary_order(opts.hermite_order), h);
    return {a, std::abs(a - b)};
  }
  return qmc_gaussian_expectation(dim, opts.mc_budget, opts.seed, h);
}

}  // namespace

Estimate entropy_nd(const RelativeDensityND& f, const NdIntegrationOptions& opts) {
  if (const auto* mix = f.mixture(); mix && !mix->factors().empty()) {
    Estimate out;
    for (const auto& h : mix->factors()) {
      out.value += entropy_rel_gauss(Density1D(h));
      out.error += 1e-10;
    }
    return out;
  }
  if (const auto* mix = f.mixture()) {
    // Ent(f) = E_nu[log f] for a probability measure nu = f gamma_n.
    return mixture_expectation(*mix, [&f](const Eigen::VectorXd& x) { return f.log_value(x); }, opts);
  }
  if (const auto* prod = f.product()) {
    Estimate out;
    for (const auto& h : prod->factors) {
      out.value += ent_gamma(h);
      out.error += 1e-10;
    }
    return out;
  }
  const Estimate m = gamma_expectation(f.dim(), [&f](const Eigen::VectorXd& x) { return f.value(x); }, opts);
  const Estimate s = gamma_expectation(
      f.dim(), [&f](const Eigen::VectorXd& x) { return f.value(x) * f.log_value(x); }, opts);
  const double ml = m.value > 0.0 ? m.value * std::log(m.value) : 0.0;
  return {s.value - ml, s.error + m.error * (1.0 + std::abs(std::log(m.value)))};
}

Estimate fisher_nd(const RelativeDensityND& f, const NdIntegrationOptions& opts) {
  if (const auto* mix = f.mixture(); mix && !mix->factors().empty()) {
    Estimate out;
    for (const auto& h : mix->factors()) {
      out.value += fisher_integral(RelFunction1D::from_density(Density1D(h)));
      out.error += 1e-10;
    }
    return out;
  }
  if (const auto* mix = f.mixture()) {
    return mixture_expectation(*mix, [&f](const Eigen::VectorXd& x) { return f.grad_log(x).squaredNorm(); }, opts);
  }
  if (const auto* prod = f.product()) {
    Estimate out;
    for (const auto& h : prod->factors) {
      out.value += fisher_integral(h);
      out.error += 1e-10;
    }
    return out;
  }
  return gamma_expectation(
      f.dim(), [&f](const Eigen::VectorXd& x) { return f.value(x) * f.grad_log(x).squaredNorm(); }, opts);
}

Estimate tensorize_entropy_bound(const RelativeDensityND& f, std::uint64_t mc_budget,
                                 const NdIntegrationOptions& opts) {
  const int n = f.dim();
  const QuadratureOptions inner{1e-10, 0.0, 2000};
  if (const auto* prod = f.product()) {
    Estimate out;
    for (const auto& h : prod->factors) {
      out.value += ent_gamma(h);
      out.error += 1e-10;
    }
    return out;
  }
  if (const auto* mix = f.mixture()) {
    if (n == 1) return {entropy_rel_gauss(Density1D(directional_marginal(*mix, Direction::axis(1, 0)))), 1e-10};
    Estimate out;
    for (int i = 0; i < n; ++i) {
      CoordinateSlicer slicer(*mix, i);
      // E_{gamma_{n-1}}[mass * Ent(g)] = E_{nu_{-i}}[H(cond | gamma)].
      auto h = [&](const Eigen::VectorXd& anchor) {
        return entropy_rel_gauss(Density1D(slicer.conditional(anchor)), inner);
      };
      if (n <= 3) {
        const double a = slicer.others()->expectation(h, 24);
        const double b = slicer.others()->expectation(h, 16);
        out.value += a;
        out.error += std::abs(a - b);
      } else {
        std::mt19937_64 rng(split_seed(opts.seed, 0x7e50 + i));
        double s = 0.0, s2 = 0.0;
        for (std::uint64_t k = 0; k < mc_budget; ++k) {
          const double v = h(slicer.others()->sample(rng));
          s += v;
          s2 += v * v;
        }
        const double mean = s / static_cast<double>(mc_budget);
        const double var = std::max(0.0, s2 / static_cast<double>(mc_budget) - mean * mean);
        out.value += mean;
        out.error += std::sqrt(var / static_cast<double>(mc_budget));
      }
    }
    return out;
  }
  Estimate out;
  for (int i = 0; i < n; ++i) {
    auto h = [&](const Eigen::VectorXd& anchor) {
      Eigen::VectorXd a = anchor;
      auto embed = [a, i, n](double y) {
        Eigen::VectorXd x(n);
        for (int j = 0, k = 0; j < n; ++j) x(j) = j == i ? y : a(k++);
        return x;
      };
      RelFunction1D slice([&f, embed](double y) { return f.value(embed(y)); });
      return ent_gamma(slice, inner);
    };
    if (n - 1 <= 2) {
      const double a = tensor_hermite_expectation(n - 1, 20, h);
      const double b = tensor_hermite_expectation(n - 1, 14, h);
      out.value += a;
      out.error += std::abs(a - b);
    } else {
      const Estimate e = qmc_gaussian_expectation(n - 1, mc_budget, split_seed(opts.seed, i), h);
      out.value += e.value;
      out.error += e.error;
    }
  }
  return out;
}

}  // namespace bfstab
