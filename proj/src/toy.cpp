#include "pml/toy.hpp"

#include "pml/errors.hpp"

namespace pml {
namespace {

void check_theta(const Eigen::Ref<const Eigen::VectorXd>& theta) {
  if (theta.size() != 2) throw DimensionMismatch("toy objective takes exactly two parameters");
}

}  // namespace

void check_toy_config(const ToyConfig& cfg) {
  if (!(cfg.scale_c > 0.0) || !std::isfinite(cfg.scale_c)) {
    throw InvalidParameter("toy scale c must be positive");
  }
}

VectorLoss toy_loss(const Eigen::Ref<const Eigen::VectorXd>& theta, const ToyConfig& cfg) {
  check_theta(theta);
  const auto l = toy_loss_terms(theta(0), theta(1), cfg.scale_c);
  return Eigen::Vector2d(l[0], l[1]);
}

VectorGradient toy_grad(const Eigen::Ref<const Eigen::VectorXd>& theta, const ToyConfig& cfg) {
  return ToyObjective(cfg).evaluate(theta).gradients;
}

ToyObjective::ToyObjective(ToyConfig cfg) : cfg_(cfg) { check_toy_config(cfg_); }

VectorLoss ToyObjective::losses(const Eigen::VectorXd& theta) const { return toy_loss(theta, cfg_); }

Evaluation ToyObjective::evaluate(const Eigen::VectorXd& theta) const {
  check_theta(theta);
  ad::Tape<double> tape;
  const auto t1 = tape.variable(theta(0));
  const auto t2 = tape.variable(theta(1));
  const auto l = toy_loss_terms(t1, t2, cfg_.scale_c);
  Evaluation e{Eigen::Vector2d(l[0].value(), l[1].value()), VectorGradient(2, 2)};
  for (int task = 0; task < 2; ++task) {
    const auto adjoint = tape.backward(l[static_cast<std::size_t>(task)]);
    e.gradients(task, 0) = adjoint[t1.index()];
    e.gradients(task, 1) = adjoint[t2.index()];
  }
  return e;
}

}  // namespace pml
