#pragma once

#include <cstdint>

#include <Eigen/Dense>

namespace pml {

enum class OptimizerKind { adam, sgd };

struct AdamParams {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  explicit AdamState(Eigen::Index n)
      : m(Eigen::VectorXd::Zero(n)), v(Eigen::VectorXd::Zero(n)) {}

  Eigen::VectorXd m;
  Eigen::VectorXd v;
  std::int64_t step = 0;
};

/// Bias-corrected Adam update, in place.
void adam_step(AdamState& state, Eigen::Ref<Eigen::VectorXd> params,
               const Eigen::Ref<const Eigen::VectorXd>& grad, double lr, const AdamParams& hp);

inline void sgd_step(Eigen::Ref<Eigen::VectorXd> params, const Eigen::Ref<const Eigen::VectorXd>& grad,
                     double lr) {
  params.noalias() -= lr * grad;
}

}  // namespace pml
