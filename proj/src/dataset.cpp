#include "pml/dataset.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include <fmt/format.h>

#include "pml/errors.hpp"
#include "pml/io.hpp"
#include "pml/random.hpp"

namespace pml {

SyntheticDataset make_synthetic_dataset(double conflict_angle, Eigen::Index sample_count,
                                        double noise_std, std::uint64_t seed) {
  if (sample_count < 1) throw InvalidParameter("dataset needs at least one sample");
  if (!(noise_std >= 0.0) || !std::isfinite(noise_std)) {
    throw InvalidParameter("noise standard deviation must be non-negative");
  }
  if (!(conflict_angle >= 0.0) || conflict_angle > 0.5 * std::numbers::pi + 1e-12) {
    throw InvalidParameter("conflict angle must lie in [0, pi/2]");
  }

  SyntheticDataset data;
  data.conflict_angle = conflict_angle;
  data.noise_std = noise_std;
  data.seed = seed;
  data.inputs.resize(sample_count, 2);
  data.labels.resize(sample_count, 2);

  const Eigen::Vector2d d1(1.0, 0.0);
  const Eigen::Vector2d d2(std::cos(conflict_angle), std::sin(conflict_angle));
  Rng rng(seed);
  for (Eigen::Index i = 0; i < sample_count; ++i) {
    const Eigen::Vector2d x(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0));
    const double n1 = noise_std * rng.normal();
    const double n2 = noise_std * rng.normal();
    data.inputs.row(i) = x.transpose();
    data.labels(i, 0) = x.dot(d1) + n1 > 0.0 ? 1 : 0;
    data.labels(i, 1) = x.dot(d2) + n2 > 0.0 ? 1 : 0;
  }
  return data;
}

void write_dataset_csv(const std::filesystem::path& path, const SyntheticDataset& data) {
  std::string out = "x1,x2,y1,y2\n";
  for (Eigen::Index i = 0; i < data.sample_count(); ++i) {
    out += fmt::format("{},{},{},{}\n", io::format_real(data.inputs(i, 0)),
                       io::format_real(data.inputs(i, 1)), data.labels(i, 0), data.labels(i, 1));
  }
  io::write_text_atomic(path, out);
}

SyntheticDataset read_dataset_csv(const std::filesystem::path& path) {
  const auto rows = io::read_csv(path);
  if (rows.front() != std::vector<std::string>{"x1", "x2", "y1", "y2"}) {
    throw FormatError(fmt::format("{}: expected header x1,x2,y1,y2", path.string()));
  }
  SyntheticDataset data;
  const auto n = static_cast<Eigen::Index>(rows.size() - 1);
  data.inputs.resize(n, 2);
  data.labels.resize(n, 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& r = rows[static_cast<std::size_t>(i + 1)];
    if (r.size() != 4) throw FormatError(fmt::format("{}: row {} has {} fields", path.string(), i + 1, r.size()));
    data.inputs(i, 0) = io::parse_real(r[0]);
    data.inputs(i, 1) = io::parse_real(r[1]);
    for (int t = 0; t < 2; ++t) {
      const auto& y = r[static_cast<std::size_t>(2 + t)];
      if (y != "0" && y != "1") throw FormatError(fmt::format("{}: bad label '{}'", path.string(), y));
      data.labels(i, t) = y == "1" ? 1 : 0;
    }
  }
  return data;
}

}  // namespace pml
