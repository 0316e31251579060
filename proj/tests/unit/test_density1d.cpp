#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include <doctest.h>

#include <bfstab/density1d.hpp>
#include <bfstab/errors.hpp>

#include "oracles.hpp"

using namespace bfstab;

namespace {

GaussianMixture1D bimodal(double sd) { return GaussianMixture1D({{0.5, -1.0, sd}, {0.5, 1.0, sd}}); }

oracle::Mix to_oracle(const GaussianMixture1D& m) {
  oracle::Mix o;
  for (const auto& c : m.components()) o.comps.push_back({c.weight, c.mean, c.stddev});
  return o;
}

std::vector<GaussianMixture1D> test_mixtures() {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> mean(-2, 2), sd(0.3, 2.5), w(0.1, 1.0);
  std::vector<GaussianMixture1D> out{GaussianMixture1D::gaussian(0, 1), bimodal(0.5),
                                     GaussianMixture1D({{0.9, 0, 1}, {0.1, 3, 0.3}})};
  for (int i = 0; i < 8; ++i) {
    std::vector<MixtureComponent1D> comps;
    for (int k = 0; k <= i % 4; ++k) comps.push_back({w(rng), mean(rng), sd(rng)});
    out.push_back(GaussianMixture1D::normalized(comps));
  }
  return out;
}

}  // namespace

TEST_SUITE("density1d") {
  TEST_CASE("cdf and quantile at symmetric points") {
    const Density1D std_normal = StandardGaussian{};
    CHECK(cdf(std_normal, 0.0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(cdf(Density1D(GaussianMixture1D::gaussian(2, 1)), 2.0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(cdf(Density1D(bimodal(1.0)), 0.0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(std::abs(quantile(std_normal, 0.5)) < 1e-14);
    CHECK(std::abs(quantile(Density1D(GaussianMixture1D::gaussian(0, 2)), 0.5)) < 1e-14);
    CHECK(std::abs(quantile(Density1D(bimodal(0.5)), 0.5)) < 1e-12);
  }

  TEST_CASE("domain errors") {
    const Density1D d = StandardGaussian{};
    CHECK_THROWS_AS(quantile(d, 0.0), DomainError);
    CHECK_THROWS_AS(quantile(d, 1.0), DomainError);
    CHECK_THROWS_AS(cdf(d, std::nan("")), DomainError);
    CHECK_THROWS_AS(GaussianMixture1D({{0.5, 0, 1}, {0.4, 1, 1}}), ValidationError);
    CHECK_THROWS_AS(GaussianMixture1D({{1.0, 0, 0}}), ValidationError);
  }

  TEST_CASE("cdf and quantile are mutual inverses") {
    for (const auto& m : test_mixtures()) {
      const auto o = to_oracle(m);
      for (int i = 1; i < 200; ++i) {
        const double p = i / 200.0;
        CHECK(std::abs(m.cdf(m.quantile(p)) - p) <= 1e-12);
        CHECK(std::abs(m.quantile(p) - o.quantile(p)) <= 1e-9);
      }
      const auto dom = m.working_domain();
      for (int i = 0; i <= 100; ++i) {
        const double x = dom.lo + dom.width() * i / 100.0;
        // Each tail is inverted from the side where its probability is representable.
        const double back = x < m.mean() ? m.quantile(m.cdf(x)) : m.upper_quantile(m.sf(x));
        CHECK(std::abs(back - x) <= 1e-9);
      }
      for (double q : {1e-200, 1e-40, 1e-10}) {
        CHECK(m.sf(m.upper_quantile(q)) == doctest::Approx(q).epsilon(1e-10));
        CHECK(m.cdf(m.quantile(q)) == doctest::Approx(q).epsilon(1e-10));
      }
    }
  }

  TEST_CASE("tail quantiles converge on many random mixtures") {
    std::mt19937_64 rng(29);
    std::uniform_real_distribution<double> mean(-2, 2), sd(0.25, 2.0), w(0.05, 1.0), logq(-300.0, -0.31);
    for (int i = 0; i < 300; ++i) {
      std::vector<MixtureComponent1D> comps;
      for (int k = 0; k <= i % 4; ++k) comps.push_back({w(rng), mean(rng), sd(rng)});
      const auto m = GaussianMixture1D::normalized(comps);
      for (int j = 0; j < 20; ++j) {
        const double q = std::pow(10.0, logq(rng));
        REQUIRE_NOTHROW(m.upper_quantile(q));
        CHECK(m.sf(m.upper_quantile(q)) == doctest::Approx(q).epsilon(1e-9));
        CHECK(m.cdf(m.quantile(q)) == doctest::Approx(q).epsilon(1e-9));
      }
    }
  }

  TEST_CASE("mass over the working domain is one") {
    for (const auto& m : test_mixtures()) {
      const auto dom = m.working_domain();
      const auto o = to_oracle(m);
      const double inside = oracle::simpson([&](double x) { return m.pdf(x); }, dom.lo, dom.hi, 200000);
      CHECK(std::abs(inside + m.cdf(dom.lo) + m.sf(dom.hi) - 1.0) <= 1e-10);
      CHECK(m.mean() == doctest::Approx(o.moment(1)).epsilon(1e-12));
      CHECK(m.variance() == doctest::Approx(o.moment(2) - o.moment(1) * o.moment(1)).epsilon(1e-12));
    }
  }

  TEST_CASE("entropy relative to the standard Gaussian") {
    CHECK(std::abs(entropy_rel_gauss(StandardGaussian{})) < 1e-12);
    CHECK(entropy_rel_gauss(Density1D::gaussian(1.0, 1.0)) == doctest::Approx(0.5).epsilon(1e-10));
    const double closed = 0.5 * (4.0 - 1.0 - std::log(4.0));
    CHECK(entropy_rel_gauss(Density1D::gaussian(0.0, 4.0)) == doctest::Approx(closed).epsilon(1e-10));
    for (const auto& m : test_mixtures())
      CHECK(entropy_rel_gauss(m) == doctest::Approx(oracle::relative_entropy(to_oracle(m))).epsilon(1e-8));
  }

  TEST_CASE("Ent and Fisher on relative functions") {
    const auto one = RelFunction1D::constant(1.0);
    CHECK(std::abs(ent_gamma(one)) < 1e-12);
    CHECK(std::abs(fisher_integral(one)) < 1e-12);

    const auto tilt = RelFunction1D::exp_linear(1.0, -0.5);
    CHECK(ent_gamma(tilt) == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(fisher_integral(tilt) == doctest::Approx(1.0).epsilon(1e-9));

    const auto wide = RelFunction1D::from_density(Density1D::gaussian(0.0, 4.0));
    CHECK(ent_gamma(wide) == doctest::Approx(0.5 * (3.0 - std::log(4.0))).epsilon(1e-9));
    CHECK(fisher_integral(wide) == doctest::Approx(4.0 * 0.75 * 0.75).epsilon(1e-9));

    CHECK_THROWS_AS(fisher_integral(RelFunction1D([](double) { return 1.0; })), CapabilityError);
  }

  TEST_CASE("log-Sobolev and homogeneity on test functions") {
    for (const auto& m : test_mixtures()) {
      const auto f = RelFunction1D::from_density(m);
      const double ent = ent_gamma(f), fisher = fisher_integral(f);
      CHECK(ent >= -1e-12);
      CHECK(0.5 * fisher - ent >= -1e-8);
      CHECK(fisher == doctest::Approx(oracle::relative_fisher(to_oracle(m))).epsilon(1e-8));
      for (double c : {0.1, 1.0, 10.0}) {
        const auto g = f.scaled(c);
        CHECK(ent_gamma(g) == doctest::Approx(c * ent).epsilon(1e-9));
        CHECK(fisher_integral(g) == doctest::Approx(c * fisher).epsilon(1e-9));
      }
    }
  }

  TEST_CASE("normalize") {
    auto two = normalize(RelFunction1D::constant(2.0));
    CHECK(two.mass == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(two.g(0.7) == doctest::Approx(1.0).epsilon(1e-12));

    auto e = normalize(RelFunction1D::exp_linear(1.0, 0.0));
    CHECK(e.mass == doctest::Approx(std::exp(0.5)).epsilon(1e-10));
    CHECK(e.g(0.3) == doctest::Approx(std::exp(0.3 - 0.5)).epsilon(1e-10));

    auto one = normalize(RelFunction1D::constant(1.0));
    CHECK(one.mass == doctest::Approx(1.0).epsilon(1e-12));

    CHECK_THROWS_AS(normalize(RelFunction1D::constant(1e-320)), UnderflowError);
  }

  TEST_CASE("grid densities interpolate log-linearly with Gaussian tails") {
    std::vector<double> nodes, values;
    for (int i = 0; i <= 400; ++i) {
      const double x = -6.0 + 12.0 * i / 400.0;
      nodes.push_back(x);
      values.push_back(3.0 * oracle::phi(x));
    }
    const auto g = GridDensity1D::from_values(nodes, values);
    CHECK(g.normalization() == doctest::Approx(3.0).epsilon(1e-3));
    for (double x : {-8.0, -1.234, 0.0, 2.5, 7.0}) CHECK(g.pdf(x) == doctest::Approx(oracle::phi(x)).epsilon(1e-3));
    CHECK(g.cdf(g.quantile(0.3)) == doctest::Approx(0.3).epsilon(1e-12));
    CHECK(g.cdf(0.0) == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(g.sf(g.upper_quantile(1e-30)) == doctest::Approx(1e-30).epsilon(1e-9));
    const double inside = oracle::simpson([&](double x) { return g.pdf(x); }, -6.0, 6.0, 200000);
    CHECK(std::abs(inside + g.cdf(-6.0) + g.sf(6.0) - 1.0) <= 1e-9);

    const auto path = std::filesystem::temp_directory_path() / "bfstab_grid_test.csv";
    {
      std::ofstream f(path);
      f << "x,density\n";
      for (std::size_t i = 0; i < nodes.size(); ++i) f << nodes[i] << "," << values[i] << "\n";
    }
    const auto loaded = GridDensity1D::load_csv(path);
    CHECK(loaded.pdf(0.4) == doctest::Approx(g.pdf(0.4)).epsilon(1e-5));
    std::filesystem::remove(path);

    CHECK_THROWS_AS(GridDensity1D::from_values({0.0, 0.0, 1.0}, std::vector<double>{1, 1, 1}), ValidationError);
    CHECK_THROWS_AS(GridDensity1D::from_values({0.0, 1.0}, std::vector<double>{1, -1}), ValidationError);
  }
}
