#pragma once

#include <cstdint>
#include <filesystem>

#include <Eigen/Dense>

namespace pml {

/// Two binary tasks on 2-D inputs. Task t labels x as 1 iff x . d_t + noise > 0
/// with d_1 = (1, 0) and d_2 = (cos phi, sin phi); phi is the conflict angle.
struct SyntheticDataset {
  Eigen::MatrixXd inputs;  ///< n x 2, uniform on [-1, 1]^2
  Eigen::MatrixXi labels;  ///< n x 2, entries in {0, 1}
  double conflict_angle = 0.0;
  double noise_std = 0.0;
  std::uint64_t seed = 0;

  Eigen::Index sample_count() const { return inputs.rows(); }
  Eigen::Index task_count() const { return labels.cols(); }
};

SyntheticDataset make_synthetic_dataset(double conflict_angle, Eigen::Index sample_count,
                                        double noise_std, std::uint64_t seed);

/// CSV with header `x1,x2,y1,y2`.
void write_dataset_csv(const std::filesystem::path& path, const SyntheticDataset& data);
SyntheticDataset read_dataset_csv(const std::filesystem::path& path);

}  // namespace pml
