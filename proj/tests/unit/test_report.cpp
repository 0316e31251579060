#include <algorithm>
#include <cmath>
#include <set>

#include <doctest.h>

#include <bfstab/corpus.hpp>
#include <bfstab/report.hpp>

using namespace bfstab;

TEST_SUITE("report") {
  TEST_CASE("numbers round-trip") {
    for (double x : {0.1, 1.0 / 3.0, 1e-300, -2.5e17, 0.0}) CHECK(std::stod(format_number(x)) == x);
    CHECK(format_number(std::nan("")) == "nan");
  }

  TEST_CASE("JSON and CSV layouts") {
    DeficitReport r;
    r.case_id = "case,1";
    r.theorem = "main";
    r.deficit = 0.5;
    r.lower_bound = 0.25;
    r.method = "quad \"x\"";
    r.finalize();
    r.diagnostics.push_back({"d", 0.7});

    const auto j = to_json(r);
    std::vector<std::string> keys;
    for (const auto& [k, v] : j.items()) keys.push_back(k);
    CHECK(keys == std::vector<std::string>{"case_id", "theorem", "deficit", "lower_bound", "margin", "error_estimate",
                                           "status", "method", "diagnostics"});
    CHECK(j["status"] == "pass");
    CHECK(j["margin"] == 0.25);

    CHECK(csv_header() == "case_id,theorem,deficit,lower_bound,margin,error_estimate,status,method");
    CHECK(to_csv_row(r) == "\"case,1\",main,0.5,0.25,0.25,0,pass,\"quad \"\"x\"\"\"");
    const DeficitReport two[] = {r, r};
    const auto csv = to_csv(two);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
    CHECK(csv.find('\r') == std::string::npos);
  }

  TEST_CASE("combined status") {
    DeficitReport pass, fail, unsure;
    fail.status = Status::fail;
    unsure.status = Status::inconclusive;
    CHECK(combine(std::vector{pass, pass}) == Status::pass);
    CHECK(combine(std::vector{pass, unsure}) == Status::inconclusive);
    CHECK(combine(std::vector{unsure, fail}) == Status::fail);
  }
}

TEST_SUITE("corpus") {
  TEST_CASE("corpus shape") {
    const auto cases = theorem_corpus();
    CHECK(cases.size() >= 50);
    std::set<std::string> ids;
    int per_dim[4] = {};
    for (const auto& c : cases) {
      ids.insert(c.id);
      per_dim[c.mixture.dim()]++;
      CHECK(c.mixture.size() >= 1);
      if (!c.product) {
        CHECK(c.mixture.size() <= 4);
        for (const auto& comp : c.mixture.components()) {
          CHECK(comp.mean.cwiseAbs().maxCoeff() <= 2.0);
          const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(comp.cov);
          CHECK(es.eigenvalues().minCoeff() >= 0.25 - 1e-12);
          CHECK(es.eigenvalues().maxCoeff() <= 4.0 + 1e-12);
        }
      }
    }
    CHECK(ids.size() == cases.size());
    CHECK(per_dim[1] > 0);
    CHECK(per_dim[2] > 0);
    CHECK(per_dim[3] > 0);
  }

  TEST_CASE("seeded generation") {
    const auto a = random_mixture(3, 5), b = random_mixture(3, 5), c = random_mixture(3, 6);
    CHECK(a.to_json() == b.to_json());
    CHECK(a.to_json() != c.to_json());
    CHECK(random_mixtures_1d(30).size() == 30);
  }

  TEST_CASE("equality cases") {
    const auto cases = equality_cases();
    CHECK(cases.size() == 11);
    for (const auto& c : cases) CHECK(c.mixture.components()[0].mean == c.shift);
    CHECK(product_power(GaussianMixture1D::gaussian(0, 2), 3).dim() == 3);
  }
}
