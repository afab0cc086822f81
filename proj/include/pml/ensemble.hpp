#pragma once

#include <filesystem>
#include <initializer_list>
#include <string>
#include <string_view>

#include <Eigen/Dense>

#include "pml/errors.hpp"
#include "pml/random.hpp"
#include "pml/simplex.hpp"

namespace pml {

using ParameterVector = Eigen::VectorXd;

/// M x N: one ensemble member's parameters per row.
using ParameterMatrix = Eigen::MatrixXd;

/// M x T: row m is the task weighting member m is anchored to. Identity for
/// single-task members.
using TaskWeightMatrix = Eigen::MatrixXd;

/// Throws when theta has fewer than two members, no parameters, or
/// non-finite entries.
void check_parameter_matrix(const Eigen::Ref<const ParameterMatrix>& theta);

/// Convex combination a^T Theta of the member rows.
template <typename DerivedTheta, typename DerivedA>
Eigen::Matrix<typename DerivedTheta::Scalar, Eigen::Dynamic, 1> interpolate(
    const Eigen::MatrixBase<DerivedTheta>& theta, const Eigen::MatrixBase<DerivedA>& a) {
  if (a.size() != theta.rows()) {
    throw DimensionMismatch("interpolate: weighting length must equal the member count");
  }
  return theta.transpose() * a;
}

/// Loss weighting a^T W seen by the task losses.
template <typename DerivedA, typename DerivedW>
Eigen::Matrix<typename DerivedA::Scalar, Eigen::Dynamic, 1> effective_loss_weighting(
    const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedW>& task_weights) {
  if (a.size() != task_weights.rows()) {
    throw DimensionMismatch("effective_loss_weighting: weighting length must equal member count");
  }
  return task_weights.transpose() * a;
}

void check_task_weight_matrix(const Eigen::Ref<const TaskWeightMatrix>& w);

/// Builds an M x N matrix from caller-supplied member rows (toy starting points).
ParameterMatrix stack_members(std::initializer_list<ParameterVector> members);

// Binary checkpoint: magic "PML\xCE\x98" "1" (UTF-8 "PMLΘ1"), then M and N as
// u64 little-endian, then M*N f64 little-endian, row-major.
std::string encode_parameter_matrix(const ParameterMatrix& theta);
ParameterMatrix decode_parameter_matrix(std::string_view bytes);

void write_parameter_matrix(const std::filesystem::path& path, const ParameterMatrix& theta);
ParameterMatrix read_parameter_matrix(const std::filesystem::path& path);

}  // namespace pml
