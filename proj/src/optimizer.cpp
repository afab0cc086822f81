#include "pml/optimizer.hpp"

#include <cmath>

#include "pml/errors.hpp"

namespace pml {

void adam_step(AdamState& state, Eigen::Ref<Eigen::VectorXd> params,
               const Eigen::Ref<const Eigen::VectorXd>& grad, double lr, const AdamParams& hp) {
  if (state.m.size() != params.size() || grad.size() != params.size()) {
    throw DimensionMismatch("adam_step: state, parameters and gradient must have equal length");
  }
  ++state.step;
  state.m = hp.beta1 * state.m + (1.0 - hp.beta1) * grad;
  state.v = hp.beta2 * state.v + (1.0 - hp.beta2) * grad.cwiseAbs2();
  const double c1 = 1.0 - std::pow(hp.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(hp.beta2, static_cast<double>(state.step));
  params.array() -= lr * (state.m.array() / c1) / ((state.v.array() / c2).sqrt() + hp.eps);
}

}  // namespace pml
