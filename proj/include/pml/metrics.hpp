#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pml/ensemble.hpp"
#include "pml/errors.hpp"
#include "pml/objective.hpp"
#include "pml/simplex.hpp"
#include "pml/toy.hpp"

namespace pml {

enum class Direction { minimize, maximize };

/// A point of a discovered or reference front. `weighting` is empty for
/// points that do not come from a subspace (oracle points).
struct FrontSample {
  Weighting weighting;
  VectorLoss losses;
};

using Front = std::vector<FrontSample>;

struct HypervolumeSpec {
  Eigen::VectorXd reference;
  Direction direction = Direction::minimize;
};

/// Minimize: a <= b componentwise and a != b. Maximize mirrors it.
bool dominates(const Eigen::Ref<const Eigen::VectorXd>& a, const Eigen::Ref<const Eigen::VectorXd>& b,
               Direction direction);

/// Row indices of the non-dominated rows, in input order.
std::vector<Eigen::Index> pareto_indices(const Eigen::Ref<const Eigen::MatrixXd>& points, Direction direction);

Front pareto_filter(const Front& samples, Direction direction);

/// One row per sample.
Eigen::MatrixXd loss_matrix(const Front& samples);

/// Exact area dominated by `points` (rows) inside the box bounded by
/// `reference`, all coordinates minimized. Rows with any coordinate at or
/// beyond the reference contribute nothing.
template <typename Derived>
typename Derived::Scalar hypervolume_2d(const Eigen::MatrixBase<Derived>& points,
                                        const Eigen::Matrix<typename Derived::Scalar, 2, 1>& reference) {
  using Scalar = typename Derived::Scalar;
  std::vector<Eigen::Index> rows;
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    if (points(i, 0) < reference(0) && points(i, 1) < reference(1)) rows.push_back(i);
  }
  std::sort(rows.begin(), rows.end(), [&](Eigen::Index a, Eigen::Index b) {
    if (points(a, 0) != points(b, 0)) return points(a, 0) < points(b, 0);
    return points(a, 1) < points(b, 1);
  });
  Scalar area(0);
  Scalar best = reference(1);
  for (const Eigen::Index i : rows) {
    if (points(i, 1) < best) {
      area += (reference(0) - points(i, 0)) * (best - points(i, 1));
      best = points(i, 1);
    }
  }
  return area;
}

/// Exact hypervolume: sweep for T = 2, slicing along the last axis for
/// T = 3. Throws UnsupportedConfiguration for T >= 4 (use Monte Carlo).
double hypervolume(const Eigen::Ref<const Eigen::MatrixXd>& points, const HypervolumeSpec& spec);
double hypervolume(const Front& samples, const HypervolumeSpec& spec);

/// Inclusion-exclusion over every subset of the non-dominated points; any
/// dimension, at most 20 non-dominated points.
double hypervolume_inclusion_exclusion(const Eigen::Ref<const Eigen::MatrixXd>& points,
                                       const HypervolumeSpec& spec);

struct MonteCarloEstimate {
  double value = 0.0;
  double standard_error = 0.0;
};

/// Hit fraction of uniform samples in the box spanned by the best
/// coordinates and the reference, scaled by the box volume. Draws come from a
/// counter-based stream keyed by `seed`.
MonteCarloEstimate hypervolume_monte_carlo(const Eigen::Ref<const Eigen::MatrixXd>& points,
                                           const HypervolumeSpec& spec,
                                           std::uint64_t samples = 1'000'000, std::uint64_t seed = 0);

/// Non-dominated toy losses over a resolution x resolution grid on [-12, 12]^2.
Front oracle_front_toy(const ToyConfig& cfg, int resolution);

/// Componentwise max of the toy losses at the five standard initializations.
Eigen::VectorXd toy_reference_point(const ToyConfig& cfg);

/// Objective values at interpolate(theta, a) for every grid weighting a, in
/// grid order.
Front evaluate_subspace(const ParameterMatrix& theta, const SimplexGrid& grid, const VectorObjective& objective);

/// CSV `alpha_1..alpha_M,loss_1..loss_T`; alpha fields blank when absent.
std::string front_csv(const Front& samples, Eigen::Index members, Eigen::Index tasks);
Front read_front_csv(const std::filesystem::path& path);

/// Spearman rank correlation, average ranks for ties.
double spearman_correlation(const Eigen::Ref<const Eigen::VectorXd>& x, const Eigen::Ref<const Eigen::VectorXd>& y);

}  // namespace pml
