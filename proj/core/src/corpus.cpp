#include "bfstab/corpus.hpp"

#include <cstdio>
#include <random>

#include "bfstab/errors.hpp"

namespace bfstab {
namespace {

std::string case_id(const char* kind, int dim, int index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "n%d-%s%02d", dim, kind, index);
  return buf;
}

std::vector<double> dirichlet_weights(int k, std::mt19937_64& rng) {
  std::exponential_distribution<double> e(1.0);
  std::vector<double> w(k);
  double total = 0.0;
  for (double& x : w) total += (x = e(rng));
  for (double& x : w) x /= total;
  return w;
}

}  // namespace

GaussianMixtureND random_mixture(int dim, std::uint64_t seed) {
  if (dim < 1 || dim > kMaxDimension) throw ValidationError("random_mixture: dimension out of range");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> count(1, 4);
  std::uniform_real_distribution<double> mean(-2.0, 2.0), eig(0.25, 4.0);
  std::normal_distribution<double> z;
  const int k = count(rng);
  const auto w = dirichlet_weights(k, rng);
  std::vector<MixtureComponentND> comps;
  for (int c = 0; c < k; ++c) {
    MixtureComponentND m{w[c], Eigen::VectorXd(dim), Eigen::MatrixXd(dim, dim)};
    for (int i = 0; i < dim; ++i) m.mean(i) = mean(rng);
    Eigen::MatrixXd g(dim, dim);
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j) g(i, j) = z(rng);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    const Eigen::MatrixXd q = qr.householderQ();
    Eigen::VectorXd e(dim);
    for (int i = 0; i < dim; ++i) e(i) = eig(rng);
    const Eigen::MatrixXd cov = q * e.asDiagonal() * q.transpose();
    m.cov = 0.5 * (cov + cov.transpose());
    comps.push_back(std::move(m));
  }
  return GaussianMixtureND(std::move(comps));
}

std::vector<GaussianMixture1D> random_mixtures_1d(int count, std::uint64_t seed) {
  std::vector<GaussianMixture1D> out;
  for (int i = 0; i < count; ++i) {
    std::mt19937_64 rng(split_seed(seed, 0x1d00 + i));
    std::uniform_int_distribution<int> size(1, 4);
    std::uniform_real_distribution<double> mean(-2.0, 2.0), sd(0.5, 2.0);
    const int k = size(rng);
    const auto w = dirichlet_weights(k, rng);
    std::vector<MixtureComponent1D> comps;
    for (int c = 0; c < k; ++c) comps.push_back({w[c], mean(rng), sd(rng)});
    out.push_back(GaussianMixture1D::normalized(std::move(comps)));
  }
  return out;
}

GaussianMixtureND product_power(const GaussianMixture1D& h, int n) {
  const std::vector<GaussianMixture1D> factors(n, h);
  return GaussianMixtureND::product(factors);
}

std::vector<CorpusCase> theorem_corpus(std::uint64_t seed, int per_dimension) {
  std::vector<CorpusCase> out;
  for (int n = 1; n <= 3; ++n)
    for (int i = 0; i < per_dimension; ++i)
      out.push_back({case_id("mix", n, i), random_mixture(n, split_seed(seed, 1000 * n + i)), false});
  const auto hs = random_mixtures_1d(2, split_seed(seed, 0x9d));
  for (int n = 2; n <= 3; ++n)
    for (std::size_t j = 0; j < hs.size(); ++j)
      out.push_back({case_id("prod", n, static_cast<int>(j)), product_power(hs[j], n), true});
  return out;
}

std::vector<ExtremalCase> equality_cases() {
  std::vector<ExtremalCase> out;
  const double shifts[] = {0.0, 0.5, -0.5, 2.0, -2.0};
  for (int n = 1; n <= 2; ++n) {
    int index = 0;
    for (double s : shifts) {
      Eigen::VectorXd a = Eigen::VectorXd::Zero(n);
      a(0) = s;
      out.push_back({case_id("extremal", n, index++), a,
                     GaussianMixtureND::gaussian(a, Eigen::MatrixXd::Identity(n, n))});
    }
    if (n == 2) {
      const Eigen::VectorXd a = Eigen::VectorXd::Ones(2);
      out.push_back({case_id("extremal", n, index), a, GaussianMixtureND::gaussian(a, Eigen::MatrixXd::Identity(2, 2))});
    }
  }
  return out;
}

}  // namespace bfstab
