#pragma once

#include <algorithm>
#include <array>
#include <cmath>

#include <Eigen/Dense>

#include "pml/objective.hpp"
#include "pml/tape.hpp"

namespace pml {

/// Two-parameter, two-task illustrative problem. Task 1's loss is scaled by
/// `scale_c` so the two losses can live on different scales.
struct ToyConfig {
  double scale_c = 1.0;
};

void check_toy_config(const ToyConfig& cfg);

inline constexpr double kToyClamp = 5e-6;

/// Task losses (c * l1, l2) for any scalar type providing tanh, log, abs and
/// max (double or ad::Var<double>).
template <typename S>
std::array<S, 2> toy_loss_terms(const S& t1, const S& t2, double scale_c) {
  using std::abs;
  using std::log;
  using std::max;
  using std::tanh;
  const S th = tanh(-1.0 * t2);
  const S f1 = log(max(abs(0.5 * (-1.0 * t1 - 7.0) - th), S(kToyClamp))) + 6.0;
  const S f2 = log(max(abs(0.5 * (-1.0 * t1 + 3.0) - th + 2.0), S(kToyClamp))) + 6.0;
  const S dx1 = -1.0 * t1 + 7.0;
  const S dx2 = -1.0 * t1 - 7.0;
  const S dy = -1.0 * t2 - 8.0;
  const S g1 = (dx1 * dx1 + 0.1 * (dy * dy)) / 10.0 - 20.0;
  const S g2 = (dx2 * dx2 + 0.1 * (dy * dy)) / 10.0 - 20.0;
  // Gates are written max(0, tanh) so a tie at 0 routes the gradient to the
  // constant: the gate's derivative is 0 at theta_2 = 0.
  const S c1 = max(S(0.0), tanh(0.5 * t2));
  const S c2 = max(S(0.0), tanh(-0.5 * t2));
  return {scale_c * (c1 * f1 + c2 * g1), c1 * f2 + c2 * g2};
}

VectorLoss toy_loss(const Eigen::Ref<const Eigen::VectorXd>& theta, const ToyConfig& cfg);

/// Reverse-mode gradients of both task losses, 2 x 2.
VectorGradient toy_grad(const Eigen::Ref<const Eigen::VectorXd>& theta, const ToyConfig& cfg);

/// Starting points used for the ensemble members and baselines.
inline const std::array<Eigen::Vector2d, 5>& toy_initializations() {
  static const std::array<Eigen::Vector2d, 5> inits = {
      Eigen::Vector2d(-8.5, 7.5), Eigen::Vector2d(0.0, 0.0), Eigen::Vector2d(9.0, 9.0),
      Eigen::Vector2d(-7.5, -0.5), Eigen::Vector2d(9.0, -1.0)};
  return inits;
}

class ToyObjective final : public VectorObjective {
 public:
  explicit ToyObjective(ToyConfig cfg);

  Eigen::Index task_count() const override { return 2; }
  Eigen::Index parameter_count() const override { return 2; }
  VectorLoss losses(const Eigen::VectorXd& theta) const override;
  Evaluation evaluate(const Eigen::VectorXd& theta) const override;

  const ToyConfig& config() const { return cfg_; }

 private:
  ToyConfig cfg_;
};

}  // namespace pml
