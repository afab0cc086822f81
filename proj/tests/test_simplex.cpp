#include <doctest.h>

#include <set>
#include <vector>

#include "oracles.hpp"
#include "pml/errors.hpp"
#include "pml/random.hpp"
#include "pml/simplex.hpp"

using namespace pml;

TEST_CASE("weighting invariants") {
  CHECK(is_on_simplex(Eigen::Vector2d(0.3, 0.7)));
  CHECK(is_on_simplex(Eigen::Vector3d(1.0, 0.0, 0.0)));
  CHECK_FALSE(is_on_simplex(Eigen::Vector2d(-0.1, 1.1)));
  CHECK_FALSE(is_on_simplex(Eigen::Vector2d(0.5, 0.6)));
  CHECK_FALSE(is_on_simplex(Eigen::VectorXd()));
  CHECK_FALSE(is_on_simplex(Eigen::Vector2d(std::nan(""), 1.0)));
  CHECK(is_on_simplex(Eigen::Vector2d(0.5, 0.5 + 5e-10)));
  CHECK_THROWS_AS(check_weighting(Eigen::Vector2d(0.2, 0.2)), InvalidParameter);
}

TEST_CASE("Dirichlet parameters are validated") {
  CHECK_THROWS_AS(DirichletParams(Eigen::Vector2d(1.0, 0.0)), InvalidParameter);
  CHECK_THROWS_AS(DirichletParams(Eigen::Vector2d(1.0, -2.0)), InvalidParameter);
  CHECK_THROWS_AS(DirichletParams(Eigen::VectorXd()), InvalidParameter);
  CHECK(DirichletParams::symmetric(3, 5.0).concentration() == Eigen::Vector3d::Constant(5.0));
}

namespace {

Eigen::Vector2d moments_of_first(const DirichletParams& p, int n, std::uint64_t seed) {
  Rng rng(seed);
  double sum = 0.0;
  double sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const Weighting a = sample_dirichlet(p, rng);
    REQUIRE(is_on_simplex(a));
    sum += a(0);
    sq += a(0) * a(0);
  }
  const double mean = sum / n;
  return {mean, sq / n - mean * mean};
}

}  // namespace

TEST_CASE("Dirichlet(1,1) is uniform on the segment") {
  const Eigen::Vector2d m = moments_of_first(DirichletParams::symmetric(2, 1.0), 100000, 1);
  CHECK(std::abs(m(0) - 0.5) <= 0.01);
  CHECK(std::abs(m(1) - 1.0 / 12.0) <= 0.005);
}

TEST_CASE("Dirichlet variance follows the closed form") {
  // Var(a_i) = p_i (p0 - p_i) / (p0^2 (p0 + 1))
  const auto variance = [](double pi, double p0) { return pi * (p0 - pi) / (p0 * p0 * (p0 + 1.0)); };
  const Eigen::Vector2d m55 = moments_of_first(DirichletParams::symmetric(2, 5.0), 100000, 2);
  CHECK(std::abs(m55(1) - variance(5.0, 10.0)) <= 0.003);
  CHECK(std::abs(variance(5.0, 10.0) - 25.0 / 1100.0) < 1e-15);

  // shape < 1 exercises the boost branch of the gamma sampler
  const Eigen::Vector2d small = moments_of_first(DirichletParams(Eigen::Vector2d(0.3, 0.6)), 100000, 3);
  CHECK(std::abs(small(0) - 1.0 / 3.0) <= 0.01);
  CHECK(std::abs(small(1) - variance(0.3, 0.9)) <= 0.005);
}

TEST_CASE("Dirichlet sampling is bit-reproducible") {
  Rng a(42);
  Rng b(42);
  const Eigen::MatrixXd x = sample_dirichlet(DirichletParams::symmetric(3, 0.7), 50, a);
  const Eigen::MatrixXd y = sample_dirichlet(DirichletParams::symmetric(3, 0.7), 50, b);
  CHECK(x == y);
  for (Eigen::Index i = 0; i < x.rows(); ++i) CHECK(is_on_simplex(x.row(i).transpose()));
}

TEST_CASE("gamma sampler mean and variance") {
  for (const double shape : {0.25, 1.0, 3.5}) {
    Rng rng(7);
    double sum = 0.0;
    double sq = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
      const double g = rng.gamma(shape);
      REQUIRE(g >= 0.0);
      sum += g;
      sq += g * g;
    }
    const double mean = sum / n;
    CHECK(std::abs(mean - shape) <= 0.02 * std::max(1.0, shape));
    CHECK(std::abs(sq / n - mean * mean - shape) <= 0.05 * std::max(1.0, shape));
  }
  Rng rng(1);
  CHECK_THROWS_AS(rng.gamma(0.0), InvalidParameter);
}

TEST_CASE("uniform integers stay in range") {
  Rng rng(3);
  std::vector<int> counts(7, 0);
  for (int i = 0; i < 70000; ++i) {
    const auto v = rng.below(7);
    REQUIRE(v < 7);
    ++counts[v];
  }
  for (const int c : counts) CHECK(std::abs(c - 10000) < 500);
}

TEST_CASE("simplex grid examples") {
  SUBCASE("T=3, n=11 gives 66 points") { CHECK(make_grid(3, 11).size() == 66); }
  SUBCASE("T=2, n=11 gives 11 points including both vertices") {
    const SimplexGrid g = make_grid(2, 11);
    REQUIRE(g.size() == 11);
    CHECK(g.points.row(0) == Eigen::RowVector2d(1.0, 0.0));
    CHECK(g.points.row(10) == Eigen::RowVector2d(0.0, 1.0));
  }
  SUBCASE("T=2, n=2 gives the endpoints") {
    const SimplexGrid g = make_grid(2, 2);
    REQUIRE(g.size() == 2);
    CHECK(g.points.row(0) == Eigen::RowVector2d(1.0, 0.0));
    CHECK(g.points.row(1) == Eigen::RowVector2d(0.0, 1.0));
  }
  CHECK_THROWS_AS(make_grid(1, 5), InvalidParameter);
  CHECK_THROWS_AS(make_grid(2, 1), InvalidParameter);
}

TEST_CASE("grid count and content match explicit enumeration") {
  for (int tasks = 2; tasks <= 4; ++tasks) {
    for (int n = 2; n <= 13; ++n) {
      const SimplexGrid g = make_grid(tasks, n);
      const auto expected = test::compositions(n - 1, tasks);
      REQUIRE(g.size() == static_cast<Eigen::Index>(expected.size()));
      CHECK(static_cast<std::uint64_t>(g.size()) == binomial(n + tasks - 2, tasks - 1));

      for (Eigen::Index k = 0; k < g.size(); ++k) {
        CHECK(is_on_simplex(g.points.row(k).transpose()));
        // Descending lexicographic order equals the enumeration order.
        for (int t = 0; t < tasks; ++t) {
          CHECK(g.points(k, t) == doctest::Approx(static_cast<double>(expected[k][t]) / (n - 1)).epsilon(1e-15));
        }
      }
      for (int t = 0; t < tasks; ++t) {
        bool vertex = false;
        for (Eigen::Index k = 0; k < g.size(); ++k) {
          vertex = vertex || (g.points(k, t) == 1.0);
        }
        CHECK(vertex);
      }
    }
  }
}

TEST_CASE("grid points are distinct") {
  const SimplexGrid g = make_grid(3, 9);
  std::set<std::vector<double>> seen;
  for (Eigen::Index k = 0; k < g.size(); ++k) {
    seen.insert({g.points(k, 0), g.points(k, 1), g.points(k, 2)});
  }
  CHECK(seen.size() == static_cast<std::size_t>(g.size()));
}

TEST_CASE("binomial coefficients") {
  CHECK(binomial(5, 2) == 10);
  CHECK(binomial(12, 2) == 66);
  CHECK(binomial(3, 5) == 0);
  CHECK(binomial(40, 20) == 137846528820ULL);
}

TEST_CASE("counter-based uniforms depend only on seed and counter") {
  CHECK(counter_uniform(5, 17) == counter_uniform(5, 17));
  CHECK(counter_uniform(5, 17) != counter_uniform(6, 17));
  double sum = 0.0;
  for (std::uint64_t i = 0; i < 100000; ++i) {
    const double u = counter_uniform(9, i);
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    sum += u;
  }
  CHECK(std::abs(sum / 100000 - 0.5) < 0.005);
  CHECK(derive_seed(1, 2) != derive_seed(2, 1));
}
