#include <cmath>

#include <doctest.h>

#include <bfstab/errors.hpp>
#include <bfstab/prekopa.hpp>

#include "oracles.hpp"

using namespace bfstab;

namespace {

double sin_bump(double x) { return 0.25 * std::sin(2 * x) * std::exp(-x * x / 4); }

}  // namespace

TEST_SUITE("prekopa") {
  TEST_CASE("sup-convolution closed forms") {
    const auto c = GFunction::constant(0.7);
    CHECK(sup_convolution(c, 0.3, 1.2) == doctest::Approx(0.7).epsilon(1e-15));
    const auto lin = GFunction::linear(1.3);
    for (double lambda : {0.2, 0.5, 0.8})
      for (double z : {-1.0, 0.0, 2.0})
        CHECK(sup_convolution(lin, lambda, z) ==
              doctest::Approx(1.3 * z + 1.69 * lambda / (2 * (1 - lambda))).epsilon(1e-13));
    const auto quad = GFunction::quadratic(-1.0, 0.0);
    for (double z : {-2.0, 0.5, 3.0}) CHECK(sup_convolution(quad, 0.5, z) == doctest::Approx(-z * z / 3).epsilon(1e-13));
    CHECK_THROWS_AS(GFunction::quadratic(0.5, 0.0), DomainError);
    CHECK_THROWS_AS(sup_convolution(lin, 1.0, 0.0), DomainError);
  }

  TEST_CASE("sup-convolution of a general function against a dense scan") {
    const auto g = GFunction::sin_bump();
    for (double lambda : {0.1, 0.5, 0.9}) {
      const double c = (1 - lambda) / (2 * lambda);
      for (double z : {-3.0, -0.4, 0.0, 1.1, 6.0}) {
        const double h = sup_convolution(g, lambda, z);
        CHECK(h == doctest::Approx(oracle::sup_convolution(sin_bump, c, z)).epsilon(1e-10));
        CHECK(h >= g(z) - 1e-15);
      }
      std::vector<double> zs;
      for (int i = 0; i <= 200; ++i) zs.push_back(-8.0 + 16.0 * i / 200);
      const auto grid = sup_convolution_grid(g, lambda, zs);
      for (std::size_t i = 0; i < zs.size(); ++i)
        CHECK(grid[i] == doctest::Approx(sup_convolution(g, lambda, zs[i])).epsilon(1e-11));
    }
  }

  TEST_CASE("sup-convolution decreases in the penalty") {
    const auto g = GFunction::sin_bump();
    for (double z : {-1.0, 0.3, 2.0}) {
      // Larger lambda means a smaller penalty coefficient (1 - lambda) / (2 lambda).
      CHECK(sup_convolution(g, 0.3, z) <= sup_convolution(g, 0.6, z) + 1e-14);
    }
  }

  TEST_CASE("PL constant") {
    CHECK(pl_constant(0.5) == doctest::Approx(0.5 * std::pow(0.5, 1.5) * std::pow(0.5, 1.5)).epsilon(1e-15));
    // lambda^lambda (1 - lambda)^(2 - lambda) tends to 1 as lambda -> 0.
    CHECK(std::abs(2.0 * pl_constant(1e-3) / 1e-3 - 1.0) <= 1e-2);
  }

  TEST_CASE("PL check on the trivial and linear exponents") {
    const auto zero = pl_deficit_check({GFunction::constant(0.0), 0.4});
    CHECK(std::abs(zero.deficit) <= 1e-12);
    CHECK(zero.lower_bound <= 1e-20);
    CHECK(zero.status == Status::pass);

    const double a = 1.0, lambda = 0.5;
    const auto lin = pl_deficit_check({GFunction::linear(a), lambda});
    // h(z) = a z + a^2 lambda / (2 (1 - lambda)); int e^h dgamma = e^{a^2/2} e^{a^2 lambda/(2(1-lambda))};
    // Z = int e^{a x/(1-lambda)} dgamma = e^{a^2 / (2 (1-lambda)^2)}.
    const double log_int_h = a * a / 2 + a * a * lambda / (2 * (1 - lambda));
    const double log_z = a * a / (2 * (1 - lambda) * (1 - lambda));
    CHECK(lin.deficit == doctest::Approx(std::expm1(log_int_h - (1 - lambda) * log_z)).epsilon(1e-10));
    CHECK(lin.lower_bound <= 1e-15);
    CHECK(lin.deficit >= -1e-12);
  }

  TEST_CASE("PL check on the concave quadratic against quadrature") {
    const auto g = GFunction::quadratic(-0.25, 0.0);
    for (double lambda : {0.1, 0.3, 0.5, 0.7, 0.9}) {
      const auto r = pl_deficit_check({g, lambda});
      const double c = (1 - lambda) / (2 * lambda);
      auto gq = [](double x) { return -x * x / 4; };
      const double int_h = oracle::simpson(
          [&](double z) { return std::exp(oracle::sup_convolution(gq, c, z, -30, 30, 6001)) * oracle::phi(z); }, -12, 12,
          2000);
      const double z = oracle::simpson([&](double x) { return std::exp(gq(x) / (1 - lambda)) * oracle::phi(x); }, -12, 12);
      CHECK(r.deficit == doctest::Approx(int_h / std::pow(z, 1 - lambda) - 1).epsilon(1e-8));
      CHECK(r.margin >= 0.0);
    }
  }

  TEST_CASE("PL check on the sin bump") {
    for (double lambda : {0.2, 0.5, 0.8}) {
      const auto r = pl_deficit_check({GFunction::sin_bump(), lambda});
      const double c = (1 - lambda) / (2 * lambda);
      const double int_h = oracle::simpson(
          [&](double z) { return std::exp(oracle::sup_convolution(sin_bump, c, z, -20, 20, 8001)) * oracle::phi(z); },
          -10, 10, 4000);
      const double z = oracle::simpson([&](double x) { return std::exp(sin_bump(x) / (1 - lambda)) * oracle::phi(x); }, -10, 10);
      CHECK(r.deficit == doctest::Approx(int_h / std::pow(z, 1 - lambda) - 1).epsilon(1e-6));
      CHECK(r.margin >= -1e-6);
    }
  }

  TEST_CASE("lambda-limit diagnostics") {
    const auto zero = lambda_limit_diagnostics(GFunction::constant(0.0));
    for (const auto& row : zero) {
      CHECK(std::abs(row.entropy_ratio) <= 1e-12);
      CHECK(std::abs(row.entropy_target) <= 1e-12);
      CHECK(std::abs(row.fisher_ratio) <= 1e-12);
    }

    const auto lin = lambda_limit_diagnostics(GFunction::linear(1.0));
    for (const auto& row : lin) {
      // Ent(e^x) = int x e^x dgamma - e^{1/2} log e^{1/2} = e^{1/2} / 2.
      CHECK(row.entropy_target == doctest::Approx(0.5 * std::exp(0.5)).epsilon(1e-10));
      CHECK(row.fisher_target == doctest::Approx(std::exp(0.5) / (2 * (1 - row.lambda))).epsilon(1e-10));
    }
    CHECK(residuals_contract(lin));
    CHECK(residuals_contract(lambda_limit_diagnostics(GFunction::quadratic(-0.25, 0.0))));
    CHECK(residuals_contract(lambda_limit_diagnostics(GFunction::sin_bump())));

    CHECK_THROWS_AS(lambda_limit_diagnostics(GFunction::linear(1.0), {0.8, 0.4}), DomainError);
    CHECK_THROWS_AS(lambda_limit_diagnostics(GFunction::linear(1.0), {0.1, 0.2}), ValidationError);
  }
}
