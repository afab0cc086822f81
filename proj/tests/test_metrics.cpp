#include <doctest.h>

#include <algorithm>
#include <filesystem>

#include "oracles.hpp"
#include "pml/errors.hpp"
#include "pml/io.hpp"
#include "pml/metrics.hpp"
#include "pml/random.hpp"
#include "pml/toy.hpp"

using namespace pml;
namespace fs = std::filesystem;

namespace {

const HypervolumeSpec kUnit2{Eigen::Vector2d(1, 1), Direction::minimize};

Eigen::MatrixXd random_points(Eigen::Index n, Eigen::Index dims, Rng& rng) {
  Eigen::MatrixXd p(n, dims);
  for (Eigen::Index i = 0; i < p.size(); ++i) p.data()[i] = rng.uniform();
  return p;
}

// Points on the curve sum x_t^2 = 1, a front with no dominated members.
Eigen::MatrixXd random_front(Eigen::Index n, Eigen::Index dims, Rng& rng) {
  Eigen::MatrixXd p(n, dims);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index d = 0; d < dims; ++d) p(i, d) = std::abs(rng.normal());
    p.row(i) /= p.row(i).norm();
  }
  return p;
}

}  // namespace

TEST_CASE("dominance examples") {
  CHECK(dominates(Eigen::Vector2d(1, 2), Eigen::Vector2d(2, 2), Direction::minimize));
  CHECK_FALSE(dominates(Eigen::Vector2d(1, 2), Eigen::Vector2d(1, 2), Direction::minimize));
  CHECK_FALSE(dominates(Eigen::Vector2d(1, 3), Eigen::Vector2d(3, 1), Direction::minimize));
  CHECK_FALSE(dominates(Eigen::Vector2d(3, 1), Eigen::Vector2d(1, 3), Direction::minimize));
  CHECK(dominates(Eigen::Vector2d(2, 2), Eigen::Vector2d(1, 2), Direction::maximize));
  CHECK_THROWS_AS(dominates(Eigen::Vector2d(1, 2), Eigen::Vector3d(1, 2, 3), Direction::minimize),
                  DimensionMismatch);
}

TEST_CASE("pareto filter examples") {
  const Front f = {{Weighting(), Eigen::Vector2d(1, 2)},
                   {Weighting(), Eigen::Vector2d(2, 1)},
                   {Weighting(), Eigen::Vector2d(2, 2)}};
  const Front kept = pareto_filter(f, Direction::minimize);
  REQUIRE(kept.size() == 2);
  CHECK(kept[0].losses == Eigen::VectorXd(Eigen::Vector2d(1, 2)));
  CHECK(kept[1].losses == Eigen::VectorXd(Eigen::Vector2d(2, 1)));
  CHECK(pareto_filter(Front{}, Direction::minimize).empty());

  // Duplicates do not dominate each other.
  Eigen::MatrixXd dup(3, 2);
  dup << 1, 1, 1, 1, 2, 2;
  CHECK(pareto_indices(dup, Direction::minimize) == std::vector<Eigen::Index>{0, 1});
}

TEST_CASE("pareto indices agree with brute force") {
  Rng rng(31);
  for (const Eigen::Index dims : {2, 3}) {
    for (int trial = 0; trial < 20; ++trial) {
      Eigen::MatrixXd p = random_points(200, dims, rng);
      // Coarse values force ties.
      if (trial % 2 == 1) p = (p * 8).array().round().matrix();
      CHECK(pareto_indices(p, Direction::minimize) == test::brute_force_front(p));
      CHECK(pareto_indices(-p, Direction::maximize) == test::brute_force_front(p));
    }
  }
}

TEST_CASE("pareto filter is idempotent") {
  Rng rng(2);
  Front f;
  for (int i = 0; i < 300; ++i) f.push_back({Weighting(), Eigen::Vector3d(rng.uniform(), rng.uniform(), rng.uniform())});
  const Front once = pareto_filter(f, Direction::minimize);
  const Front twice = pareto_filter(once, Direction::minimize);
  REQUIRE(once.size() == twice.size());
  for (std::size_t i = 0; i < once.size(); ++i) CHECK(once[i].losses == twice[i].losses);
}

TEST_CASE("hypervolume examples") {
  Eigen::MatrixXd origin(1, 2);
  origin << 0, 0;
  CHECK(hypervolume(origin, kUnit2) == 1.0);

  Eigen::MatrixXd demo(2, 2);
  demo << 0.2, 0.5, 0.5, 0.2;
  CHECK(std::abs(hypervolume(demo, kUnit2) - 0.55) <= 1e-12);
  CHECK(std::abs(hypervolume_inclusion_exclusion(demo, kUnit2) - 0.55) <= 1e-12);

  Eigen::MatrixXd at_ref(1, 2);
  at_ref << 1, 1;
  CHECK(hypervolume(at_ref, kUnit2) == 0.0);
  Eigen::MatrixXd beyond(1, 2);
  beyond << 0.5, 3;
  CHECK(hypervolume(beyond, kUnit2) == 0.0);

  // Accuracy orientation: box from the origin up to the point.
  Eigen::MatrixXd acc(1, 2);
  acc << 0.95, 0.955;
  CHECK(hypervolume(acc, HypervolumeSpec{Eigen::Vector2d(0, 0), Direction::maximize}) ==
        doctest::Approx(0.95 * 0.955).epsilon(1e-15));

  Eigen::MatrixXd cube(1, 3);
  cube << 0.5, 0.5, 0.5;
  CHECK(hypervolume(cube, HypervolumeSpec{Eigen::Vector3d(1, 1, 1), Direction::minimize}) == 0.125);

  Eigen::MatrixXd four(1, 4);
  four << 0, 0, 0, 0;
  CHECK_THROWS_AS(hypervolume(four, HypervolumeSpec{Eigen::Vector4d::Ones(), Direction::minimize}),
                  UnsupportedConfiguration);
}

TEST_CASE("hypervolume is monotone and ignores dominated points") {
  Rng rng(5);
  for (const Eigen::Index dims : {2, 3}) {
    const HypervolumeSpec spec{Eigen::VectorXd::Ones(dims), Direction::minimize};
    for (int trial = 0; trial < 20; ++trial) {
      Eigen::MatrixXd p = random_points(15, dims, rng);
      const double base = hypervolume(p, spec);
      Eigen::MatrixXd more(p.rows() + 1, dims);
      more << p, random_points(1, dims, rng);
      CHECK(hypervolume(more, spec) >= base - 1e-12);

      more.row(p.rows()) = (p.row(0).array() + 0.01).matrix();
      CHECK(std::abs(hypervolume(more, spec) - base) <= 1e-12);

      Front f;
      for (Eigen::Index i = 0; i < p.rows(); ++i) f.push_back({Weighting(), p.row(i).transpose()});
      CHECK(hypervolume(pareto_filter(f, Direction::minimize), spec) == hypervolume(f, spec));
    }
  }
}

TEST_CASE("hypervolume is translation covariant") {
  Rng rng(6);
  for (const Eigen::Index dims : {2, 3}) {
    for (int trial = 0; trial < 20; ++trial) {
      const Eigen::MatrixXd p = random_points(12, dims, rng);
      const Eigen::VectorXd shift = Eigen::VectorXd::Random(dims) * 50.0;
      const HypervolumeSpec a{Eigen::VectorXd::Ones(dims), Direction::minimize};
      const HypervolumeSpec b{a.reference + shift, Direction::minimize};
      CHECK(std::abs(hypervolume(p, a) - hypervolume(p.rowwise() + shift.transpose(), b)) <= 1e-9);
    }
  }
}

TEST_CASE("exact hypervolume agrees with inclusion-exclusion") {
  Rng rng(7);
  for (const Eigen::Index dims : {2, 3}) {
    const HypervolumeSpec spec{Eigen::VectorXd::Ones(dims), Direction::minimize};
    for (int trial = 0; trial < 30; ++trial) {
      const Eigen::MatrixXd p = random_front(10, dims, rng) * 0.9;
      CHECK(std::abs(hypervolume(p, spec) - hypervolume_inclusion_exclusion(p, spec)) <= 1e-12);
    }
  }
}

TEST_CASE("exact hypervolume lies within three standard errors of Monte Carlo") {
  Rng rng(8);
  for (const Eigen::Index dims : {2, 3}) {
    const HypervolumeSpec spec{Eigen::VectorXd::Constant(dims, 1.1), Direction::minimize};
    int outside = 0;
    for (int trial = 0; trial < 50; ++trial) {
      const Eigen::MatrixXd p = random_front(8, dims, rng);
      const double exact = dims == 3 ? hypervolume_inclusion_exclusion(p, spec) : hypervolume(p, spec);
      const MonteCarloEstimate mc = hypervolume_monte_carlo(p, spec, 200000, static_cast<std::uint64_t>(trial));
      REQUIRE(mc.standard_error > 0.0);
      if (std::abs(mc.value - exact) > 3.0 * mc.standard_error) ++outside;
    }
    CHECK(outside == 0);
  }
}

TEST_CASE("Monte Carlo estimate depends only on the seed") {
  Eigen::MatrixXd demo(2, 2);
  demo << 0.2, 0.5, 0.5, 0.2;
  const MonteCarloEstimate a = hypervolume_monte_carlo(demo, kUnit2, 100000, 3);
  const MonteCarloEstimate b = hypervolume_monte_carlo(demo, kUnit2, 100000, 3);
  CHECK(a.value == b.value);
  CHECK(std::abs(a.value - 0.55) <= 3.0 * a.standard_error);
}

TEST_CASE("toy oracle front") {
  const ToyConfig unit{1.0};
  const Front f = oracle_front_toy(unit, 300);
  const Eigen::MatrixXd l = loss_matrix(f);
  CHECK(pareto_indices(l, Direction::minimize).size() == static_cast<std::size_t>(l.rows()));

  const HypervolumeSpec spec{toy_reference_point(unit), Direction::minimize};
  const double coarse = hypervolume(oracle_front_toy(unit, 1000), spec);
  const double fine = hypervolume(oracle_front_toy(unit, 2000), spec);
  CHECK(std::abs(coarse - fine) <= 0.01 * fine);

  const Front scaled = oracle_front_toy(ToyConfig{0.1}, 300);
  REQUIRE(scaled.size() == f.size());
  for (std::size_t i = 0; i < f.size(); ++i) {
    CHECK(scaled[i].losses(0) == doctest::Approx(0.1 * f[i].losses(0)).epsilon(1e-14));
    CHECK(scaled[i].losses(1) == f[i].losses(1));
  }
  CHECK_THROWS_AS(oracle_front_toy(unit, 99), InvalidParameter);
}

TEST_CASE("toy reference point is the worst initial loss") {
  const Eigen::VectorXd ref = toy_reference_point(ToyConfig{1.0});
  for (const auto& init : toy_initializations()) {
    CHECK((toy_loss(init, ToyConfig{1.0}).array() <= ref.array()).all());
  }
}

TEST_CASE("subspace evaluation") {
  const ToyObjective obj(ToyConfig{1.0});
  const ParameterMatrix theta = stack_members({Eigen::Vector2d(-3, 2), Eigen::Vector2d(4, -1)});

  const Front ends = evaluate_subspace(theta, make_grid(2, 2), obj);
  REQUIRE(ends.size() == 2);
  CHECK(ends[0].losses == obj.losses(theta.row(0).transpose()));
  CHECK(ends[1].losses == obj.losses(theta.row(1).transpose()));

  const Front eleven = evaluate_subspace(theta, make_grid(2, 11), obj);
  REQUIRE(eleven.size() == 11);
  CHECK((eleven.front().losses - obj.losses(theta.row(0).transpose())).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK((eleven.back().losses - obj.losses(theta.row(1).transpose())).cwiseAbs().maxCoeff() <= 1e-12);

  Eigen::MatrixXd three(3, 2);
  three << -3, 2, 4, -1, 0, -5;
  CHECK(evaluate_subspace(three, make_grid(3, 11), obj).size() == 66);
  CHECK_THROWS_AS(evaluate_subspace(three, make_grid(2, 11), obj), DimensionMismatch);
}

TEST_CASE("front CSV round trip is byte identical") {
  const ToyObjective obj(ToyConfig{1.0});
  const ParameterMatrix theta = stack_members({Eigen::Vector2d(-3, 2), Eigen::Vector2d(4, -1)});
  Front f = evaluate_subspace(theta, make_grid(2, 21), obj);
  f.push_back({Weighting(), Eigen::Vector2d(-1.0 / 3.0, 1e-300)});
  const std::string text = front_csv(f, 2, 2);
  CHECK(text.rfind("alpha_1,alpha_2,loss_1,loss_2\n", 0) == 0);

  const fs::path dir = fs::temp_directory_path() / "pml_test_front";
  fs::create_directories(dir);
  io::write_text_atomic(dir / "front.csv", text);
  const Front back = read_front_csv(dir / "front.csv");
  REQUIRE(back.size() == f.size());
  CHECK(back.back().weighting.size() == 0);
  CHECK(front_csv(back, 2, 2) == text);

  io::write_text_atomic(dir / "bad.csv", "alpha_1,alpha_2,loss_1\n0.5,,1\n");
  CHECK_THROWS_AS(read_front_csv(dir / "bad.csv"), FormatError);
  io::write_text_atomic(dir / "bad2.csv", "alpha_1,loss_1\n0.5,x\n");
  CHECK_THROWS_AS(read_front_csv(dir / "bad2.csv"), FormatError);
  fs::remove_all(dir);
}

TEST_CASE("Spearman rank correlation") {
  const Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(11, 0, 1);
  CHECK(spearman_correlation(x, x.array().exp().matrix()) == doctest::Approx(1.0));
  CHECK(spearman_correlation(x, (-x.array().cube()).matrix()) == doctest::Approx(-1.0));
  Eigen::VectorXd a(4), b(4);
  a << 1, 2, 3, 4;
  b << 1, 3, 2, 4;
  // 1 - 6 * sum d^2 / (n (n^2 - 1)) with d = (0, 1, 1, 0)
  CHECK(spearman_correlation(a, b) == doctest::Approx(0.8));
  Eigen::VectorXd ties(4);
  ties << 1, 1, 2, 2;
  CHECK(spearman_correlation(a, ties) == doctest::Approx(2.0 / std::sqrt(5.0)));
  CHECK(spearman_correlation(a, Eigen::VectorXd::Constant(4, 3.0)) == 0.0);
}
