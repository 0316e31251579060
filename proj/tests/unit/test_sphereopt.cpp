#include <cmath>
#include <random>

#include <doctest.h>

#include <bfstab/corpus.hpp>
#include <bfstab/errors.hpp>
#include <bfstab/sphereopt.hpp>
#include <bfstab/transport1d.hpp>

#include "oracles.hpp"

using namespace bfstab;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

GaussianMixtureND diag(std::initializer_list<double> vars) {
  VectorXd v(static_cast<int>(vars.size()));
  int i = 0;
  for (double x : vars) v(i++) = x;
  return GaussianMixtureND::gaussian(VectorXd::Zero(v.size()), v.asDiagonal());
}

MatrixXd random_rotation(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> z;
  MatrixXd a(n, n);
  for (int i = 0; i < a.size(); ++i) a.data()[i] = z(rng);
  Eigen::HouseholderQR<MatrixXd> qr(a);
  return qr.householderQ();
}

}  // namespace

TEST_SUITE("sphereopt") {
  TEST_CASE("config validation and defaults") {
    SphereSearchConfig cfg;
    CHECK(cfg.resolved_coarse_count(2) == 512);
    CHECK(cfg.resolved_coarse_count(3) == 512);
    CHECK(cfg.resolved_coarse_count(5) == 4096);
    cfg.tolerance = 4.0;
    CHECK_THROWS_AS(cfg.validate(), ValidationError);
    cfg = {};
    cfg.restarts = 0;
    CHECK_THROWS_AS(cfg.validate(), ValidationError);
  }

  TEST_CASE("identical and translated measures") {
    for (int n = 2; n <= 4; ++n) {
      const auto g = GaussianMixtureND::standard(n);
      CHECK(dn_distance(g, g).value <= 1e-12);
      VectorXd a = VectorXd::LinSpaced(n, -1.0, 2.0);
      CHECK(dn_distance(GaussianMixtureND::gaussian(a, MatrixXd::Identity(n, n)), g).value <= 1e-9);
    }
  }

  TEST_CASE("anisotropic Gaussian attains its maximum on an axis") {
    const auto r = dn_distance(diag({4, 1}), GaussianMixtureND::standard(2));
    // d between N(0, s^2) and N(0, 1) is |1 - 1/s| / max(1, 1/s) for s >= 1.
    auto closed = [](double s) { return std::abs(1.0 - 1.0 / s) / std::max(1.0, 1.0 / s); };
    CHECK(r.value == doctest::Approx(closed(2.0)).epsilon(1e-9));
    CHECK(std::abs(std::abs(r.argmax.vector()(0)) - 1.0) <= 1e-6);
    CHECK(r.value >= r.coarse_max);
    CHECK(r.refined_gain == doctest::Approx(r.value - r.coarse_max));

    const auto cert = lower_bound_certificate(r, {});
    CHECK(cert.value == r.value);
    CHECK(cert.axis_hit);
    CHECK(cert.direction_count == r.directions_evaluated);
    CHECK(cert.statement.find("at least") != std::string::npos);

    const auto same = lower_bound_certificate(dn_distance(diag({1, 1}), diag({1, 1})), {});
    CHECK(same.value == 0.0);
  }

  TEST_CASE("brute-force sweep over the circle") {
    const auto u = random_mixture(2, 21), v = random_mixture(2, 22);
    const auto r = dn_distance(u, v);
    double best = 0.0;
    for (int k = 0; k < 720; ++k) {
      const double t = std::numbers::pi * k / 720.0;
      const Direction xi(Eigen::Vector2d(std::cos(t), std::sin(t)));
      best = std::max(best, directional_distance(u, v, xi).value);
    }
    CHECK(r.value >= best - 1e-9);
    CHECK(r.value <= best + 5e-4);
  }

  TEST_CASE("antipodal symmetry") {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> z;
    const auto u = random_mixture(3, 8), v = random_mixture(3, 9);
    for (int i = 0; i < 10; ++i) {
      const auto xi = Direction::normalized(Eigen::Vector3d(z(rng), z(rng), z(rng)));
      const auto minus = Direction(-xi.vector());
      CHECK(std::abs(directional_distance(u, v, xi).value - directional_distance(u, v, minus).value) <= 1e-9);
    }
  }

  TEST_CASE("coarse lattice is monotone in its size") {
    const auto u = random_mixture(3, 31), v = GaussianMixtureND::standard(3);
    SphereSearchConfig cfg;
    cfg.refine = false;
    for (int count : {64, 128, 256}) {
      cfg.coarse_count = count;
      const double small = dn_distance(u, v, cfg).value;
      cfg.coarse_count = 2 * count;
      CHECK(dn_distance(u, v, cfg).value >= small - 1e-12);
    }
    const auto dirs = coarse_directions(u, v, 64);
    CHECK(dirs.size() >= 64);
  }

  TEST_CASE("rotation equivariance") {
    std::mt19937_64 rng(6);
    for (int n = 2; n <= 3; ++n) {
      const auto u = random_mixture(n, 50 + n), v = GaussianMixtureND::standard(n);
      const MatrixXd q = random_rotation(n, rng);
      CHECK(std::abs(dn_distance(u.pushforward(q), v.pushforward(q)).value - dn_distance(u, v).value) <= 2e-3);
    }
  }

  TEST_CASE("products of one density are flat in the dimension") {
    const auto h = GaussianMixture1D({{0.5, -1.0, 0.6}, {0.5, 1.0, 0.9}});
    const double d1 = bf_distance(h, StandardGaussian{});
    for (int n = 2; n <= 3; ++n)
      CHECK(std::abs(dn_distance(product_power(h, n), GaussianMixtureND::standard(n)).value - d1) <= 2e-3);
  }

  TEST_CASE("results are deterministic") {
    const auto u = random_mixture(3, 77), v = random_mixture(3, 78);
    const auto a = dn_distance(u, v), b = dn_distance(u, v);
    CHECK(a.value == b.value);
    CHECK(a.argmax.vector() == b.argmax.vector());
    CHECK_THROWS_AS(dn_distance(u, GaussianMixtureND::standard(2)), ValidationError);
  }
}
