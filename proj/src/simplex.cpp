#include "pml/simplex.hpp"

#include <algorithm>
#include <functional>
#include <utility>
#include <vector>

#include <fmt/format.h>

#include "pml/errors.hpp"

namespace pml {

void check_weighting(const Eigen::Ref<const Eigen::VectorXd>& alpha) {
  if (!is_on_simplex(alpha)) {
    throw InvalidParameter("weighting must be non-negative and sum to one");
  }
}

DirichletParams::DirichletParams(Eigen::VectorXd concentration)
    : concentration_(std::move(concentration)) {
  if (concentration_.size() < 1) throw InvalidParameter("Dirichlet needs at least one parameter");
  for (Eigen::Index i = 0; i < concentration_.size(); ++i) {
    if (!(concentration_(i) > 0.0) || !std::isfinite(concentration_(i))) {
      throw InvalidParameter(
          fmt::format("Dirichlet concentration p[{}] = {} must be positive", i, concentration_(i)));
    }
  }
}

DirichletParams DirichletParams::symmetric(Eigen::Index dims, double p) {
  return DirichletParams(Eigen::VectorXd::Constant(dims, p));
}

Weighting sample_dirichlet(const DirichletParams& params, Rng& rng) {
  const Eigen::VectorXd& p = params.concentration();
  Weighting alpha(p.size());
  for (;;) {
    for (Eigen::Index t = 0; t < p.size(); ++t) alpha(t) = rng.gamma(p(t));
    const double total = alpha.sum();
    // All-zero draws only happen for tiny shapes through underflow; redraw.
    if (total > 0.0 && std::isfinite(total)) {
      alpha /= total;
      return alpha;
    }
  }
}

Eigen::MatrixXd sample_dirichlet(const DirichletParams& params, Eigen::Index count, Rng& rng) {
  Eigen::MatrixXd out(count, params.size());
  for (Eigen::Index i = 0; i < count; ++i) out.row(i) = sample_dirichlet(params, rng).transpose();
  return out;
}

std::uint64_t binomial(std::uint64_t n, std::uint64_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  std::uint64_t r = 1;
  for (std::uint64_t i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

SimplexGrid make_grid(int tasks, int resolution) {
  if (tasks < 2) throw InvalidParameter("simplex grid needs at least two coordinates");
  if (resolution < 2) throw InvalidParameter("simplex grid resolution must be at least 2");

  const int steps = resolution - 1;
  const auto count = binomial(static_cast<std::uint64_t>(steps + tasks - 1),
                              static_cast<std::uint64_t>(tasks - 1));
  SimplexGrid grid;
  grid.resolution = resolution;
  grid.points.resize(static_cast<Eigen::Index>(count), tasks);

  std::vector<int> counts(static_cast<std::size_t>(tasks), 0);
  Eigen::Index row = 0;
  std::function<void(int, int)> fill = [&](int coord, int remaining) {
    if (coord == tasks - 1) {
      counts[static_cast<std::size_t>(coord)] = remaining;
      for (int t = 0; t < tasks; ++t) {
        grid.points(row, t) = static_cast<double>(counts[static_cast<std::size_t>(t)]) / steps;
      }
      ++row;
      return;
    }
    for (int k = remaining; k >= 0; --k) {
      counts[static_cast<std::size_t>(coord)] = k;
      fill(coord + 1, remaining - k);
    }
  };
  fill(0, steps);
  return grid;
}

}  // namespace pml
