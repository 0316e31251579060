#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bfstab/densitynd.hpp"

namespace bfstab {

struct CorpusCase {
  std::string id;
  GaussianMixtureND mixture;
  bool product = false;
};

/// Random mixture: 1-4 components, Dirichlet(1) weights, means uniform in
/// [-2, 2]^n, covariances Q diag(e) Q^T with e uniform in [0.25, 4] and Q a
/// random rotation.
GaussianMixtureND random_mixture(int dim, std::uint64_t seed);

/// `per_dimension` random mixtures for each n in {1, 2, 3}, followed by
/// products h (x) h and h (x) h (x) h of random 1-D mixtures.
std::vector<CorpusCase> theorem_corpus(std::uint64_t seed = 0, int per_dimension = 18);

/// Random 1-D mixtures with component standard deviations in [0.5, 2].
std::vector<GaussianMixture1D> random_mixtures_1d(int count, std::uint64_t seed = 0);

/// N(a, I_n), whose relative density exp(a.x - |a|^2/2) is an extremal.
struct ExtremalCase {
  std::string id;
  Eigen::VectorXd shift;
  GaussianMixtureND mixture;
};

/// a in {0, +-0.5 e1, +-2 e1} for n = 1, 2 and a = (1, 1) for n = 2.
std::vector<ExtremalCase> equality_cases();

/// Law of n independent copies of a 1-D mixture.
GaussianMixtureND product_power(const GaussianMixture1D& h, int n);

}  // namespace bfstab
