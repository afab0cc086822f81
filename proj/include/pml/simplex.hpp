#pragma once

#include <cmath>
#include <cstdint>

#include <Eigen/Dense>

#include "pml/random.hpp"

namespace pml {

/// A point on the probability simplex. Used both as the interpolation
/// coefficients over ensemble members and as task-loss weights.
using Weighting = Eigen::VectorXd;

inline constexpr double kSimplexTolerance = 1e-9;

template <typename Derived>
bool is_on_simplex(const Eigen::MatrixBase<Derived>& alpha, double tol = kSimplexTolerance) {
  using std::abs;
  if (alpha.size() == 0) return false;
  for (Eigen::Index i = 0; i < alpha.size(); ++i) {
    if (!(alpha(i) >= 0) || !std::isfinite(static_cast<double>(alpha(i)))) return false;
  }
  return abs(static_cast<double>(alpha.sum()) - 1.0) <= tol;
}

/// Throws InvalidParameter when alpha is not a valid weighting.
void check_weighting(const Eigen::Ref<const Eigen::VectorXd>& alpha);

/// Concentration parameters of a Dirichlet distribution; all strictly positive.
class DirichletParams {
 public:
  explicit DirichletParams(Eigen::VectorXd concentration);

  static DirichletParams symmetric(Eigen::Index dims, double p);

  const Eigen::VectorXd& concentration() const { return concentration_; }
  Eigen::Index size() const { return concentration_.size(); }

 private:
  Eigen::VectorXd concentration_;
};

/// Draws one weighting from Dir(p): independent Gamma(p_t, 1) variates
/// normalized by their sum.
Weighting sample_dirichlet(const DirichletParams& params, Rng& rng);

/// W draws as rows of a W x T matrix.
Eigen::MatrixXd sample_dirichlet(const DirichletParams& params, Eigen::Index count, Rng& rng);

/// Equidistant barycentric grid over the (T-1)-simplex.
struct SimplexGrid {
  int resolution = 0;
  Eigen::MatrixXd points;  ///< one weighting per row

  Eigen::Index size() const { return points.rows(); }
  Eigen::Index dims() const { return points.cols(); }
};

/// Grid with step 1/(n-1) per coordinate: C(n+T-2, T-1) points, sorted
/// lexicographically descending on alpha_1, then alpha_2, and so on.
SimplexGrid make_grid(int tasks, int resolution);

/// Binomial coefficient, exact for the small arguments used by grids.
std::uint64_t binomial(std::uint64_t n, std::uint64_t k);

}  // namespace pml
