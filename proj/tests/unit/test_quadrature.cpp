#include <cmath>
#include <numbers>

#include <doctest.h>

#include <bfstab/errors.hpp>
#include <bfstab/quadrature.hpp>

#include "oracles.hpp"

using namespace bfstab;

TEST_SUITE("quadrature") {
  TEST_CASE("adaptive rule integrates smooth and kinked functions") {
    const auto r = integrate_adaptive([](double x) { return std::exp(-x * x); }, -10.0, 10.0);
    CHECK(r.converged);
    CHECK(r.value == doctest::Approx(std::sqrt(std::numbers::pi)).epsilon(1e-13));

    const double kinks[] = {0.3};
    const auto k = integrate_adaptive([](double x) { return std::abs(x - 0.3); }, -1.0, 1.0, {}, kinks);
    CHECK(k.value == doctest::Approx(0.5 * (1.3 * 1.3 + 0.7 * 0.7)).epsilon(1e-13));
  }

  TEST_CASE("integrate_or_throw reports exhausted budgets") {
    QuadratureOptions tight{1e-16, 0.0, 2};
    CHECK_THROWS_AS(integrate_or_throw([](double x) { return std::sin(50 * x) / (x + 1.01); }, -1.0, 1.0, tight),
                    AccuracyError);
  }

  TEST_CASE("Hermite rules reproduce Gaussian moments") {
    for (int order : {8, 16, 64}) {
      const auto& rule = gauss_hermite(order);
      double m0 = 0, m2 = 0, m4 = 0;
      for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
        const double x = rule.nodes[i];
        m0 += rule.weights[i];
        m2 += rule.weights[i] * x * x;
        m4 += rule.weights[i] * x * x * x * x;
      }
      CHECK(m0 == doctest::Approx(1.0).epsilon(1e-13));
      CHECK(m2 == doctest::Approx(1.0).epsilon(1e-13));
      CHECK(m4 == doctest::Approx(3.0).epsilon(1e-12));
    }
    const double e = tensor_hermite_expectation(2, 24, [](const Eigen::VectorXd& x) { return std::exp(x(0) + 0.5 * x(1)); });
    CHECK(e == doctest::Approx(std::exp(0.5 * 1.25)).epsilon(1e-12));
  }

  TEST_CASE("QMC expectation is seeded and within its error bar") {
    auto h = [](const Eigen::VectorXd& x) { return x.squaredNorm(); };
    const auto a = qmc_gaussian_expectation(5, 1 << 14, 7, h);
    const auto b = qmc_gaussian_expectation(5, 1 << 14, 7, h);
    CHECK(a.value == b.value);
    CHECK(std::abs(a.value - 5.0) <= 4.0 * a.error + 1e-12);
  }

  TEST_CASE("normal helpers agree with erfc") {
    for (double x : {-30.0, -8.0, -1.0, 0.0, 0.7, 5.0, 37.0}) {
      CHECK(normal_cdf(x) == doctest::Approx(oracle::Phi(x)).epsilon(1e-14));
      CHECK(normal_sf(x) == doctest::Approx(oracle::Phi(-x)).epsilon(1e-14));
    }
    for (double p : {1e-300, 1e-20, 1e-3, 0.5, 0.9}) CHECK(normal_cdf(normal_quantile(p)) == doctest::Approx(p).epsilon(1e-13));
    for (double q : {1e-250, 1e-12, 0.3}) CHECK(normal_sf(normal_upper_quantile(q)) == doctest::Approx(q).epsilon(1e-13));
    CHECK_THROWS_AS(normal_quantile(0.0), DomainError);
  }

  TEST_CASE("split_seed gives distinct deterministic streams") {
    CHECK(split_seed(0, 1) == split_seed(0, 1));
    CHECK(split_seed(0, 1) != split_seed(0, 2));
    CHECK(split_seed(1, 1) != split_seed(0, 1));
  }
}
