#include "pml/metrics.hpp"

#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "pml/io.hpp"
#include "pml/random.hpp"

namespace pml {
namespace {

// Maps a maximize problem onto minimize by negation.
void to_minimize(Eigen::MatrixXd& points, Eigen::VectorXd& reference, Direction direction) {
  if (direction == Direction::maximize) {
    points = -points;
    reference = -reference;
  }
}

void check_spec(const Eigen::Ref<const Eigen::MatrixXd>& points, const HypervolumeSpec& spec) {
  if (!spec.reference.allFinite()) throw InvalidParameter("hypervolume reference must be finite");
  if (points.rows() > 0 && points.cols() != spec.reference.size()) {
    throw DimensionMismatch("hypervolume: point and reference dimensions differ");
  }
}

// Rows strictly inside the reference box.
Eigen::MatrixXd inside_box(const Eigen::MatrixXd& points, const Eigen::VectorXd& reference) {
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    if ((points.row(i).transpose().array() < reference.array()).all()) keep.push_back(i);
  }
  Eigen::MatrixXd out(static_cast<Eigen::Index>(keep.size()), points.cols());
  for (std::size_t k = 0; k < keep.size(); ++k) out.row(static_cast<Eigen::Index>(k)) = points.row(keep[k]);
  return out;
}

Eigen::MatrixXd select_rows(const Eigen::MatrixXd& points, const std::vector<Eigen::Index>& rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), points.cols());
  for (std::size_t k = 0; k < rows.size(); ++k) out.row(static_cast<Eigen::Index>(k)) = points.row(rows[k]);
  return out;
}

double hypervolume_3d(const Eigen::MatrixXd& points, const Eigen::VectorXd& reference) {
  std::vector<Eigen::Index> order(static_cast<std::size_t>(points.rows()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return points(a, 2) < points(b, 2); });
  const Eigen::Vector2d ref2 = reference.head<2>();
  double volume = 0.0;
  Eigen::MatrixXd slice(0, 2);
  for (std::size_t k = 0; k < order.size(); ++k) {
    slice.conservativeResize(slice.rows() + 1, Eigen::NoChange);
    slice.row(slice.rows() - 1) = points.row(order[k]).head<2>();
    const double z = points(order[k], 2);
    const double next = k + 1 < order.size() ? points(order[k + 1], 2) : reference(2);
    if (next > z) volume += hypervolume_2d(slice, ref2) * (next - z);
  }
  return volume;
}

}  // namespace

bool dominates(const Eigen::Ref<const Eigen::VectorXd>& a, const Eigen::Ref<const Eigen::VectorXd>& b,
               Direction direction) {
  if (a.size() != b.size()) throw DimensionMismatch("dominates: vectors differ in length");
  bool strictly = false;
  for (Eigen::Index t = 0; t < a.size(); ++t) {
    const double x = direction == Direction::minimize ? a(t) : -a(t);
    const double y = direction == Direction::minimize ? b(t) : -b(t);
    if (x > y) return false;
    if (x < y) strictly = true;
  }
  return strictly;
}

std::vector<Eigen::Index> pareto_indices(const Eigen::Ref<const Eigen::MatrixXd>& input, Direction direction) {
  Eigen::MatrixXd points = input;
  if (direction == Direction::maximize) points = -points;
  const Eigen::Index n = points.rows();
  std::vector<Eigen::Index> keep;

  if (points.cols() == 2) {
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
      if (points(a, 0) != points(b, 0)) return points(a, 0) < points(b, 0);
      if (points(a, 1) != points(b, 1)) return points(a, 1) < points(b, 1);
      return a < b;
    });
    // Identical points never dominate each other, so compare each group of
    // equal points against the best y of all earlier groups.
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < order.size();) {
      std::size_t end = k + 1;
      while (end < order.size() && points.row(order[end]) == points.row(order[k])) ++end;
      const double y = points(order[k], 1);
      if (y < best) {
        for (std::size_t q = k; q < end; ++q) keep.push_back(order[q]);
        best = y;
      }
      k = end;
    }
    std::sort(keep.begin(), keep.end());
    return keep;
  }

  for (Eigen::Index i = 0; i < n; ++i) {
    bool dominated = false;
    for (Eigen::Index j = 0; j < n && !dominated; ++j) {
      dominated = j != i && dominates(points.row(j).transpose(), points.row(i).transpose(), Direction::minimize);
    }
    if (!dominated) keep.push_back(i);
  }
  return keep;
}

Eigen::MatrixXd loss_matrix(const Front& samples) {
  if (samples.empty()) return {};
  Eigen::MatrixXd m(static_cast<Eigen::Index>(samples.size()), samples.front().losses.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (samples[i].losses.size() != m.cols()) throw DimensionMismatch("front samples differ in length");
    m.row(static_cast<Eigen::Index>(i)) = samples[i].losses.transpose();
  }
  return m;
}

Front pareto_filter(const Front& samples, Direction direction) {
  if (samples.empty()) return {};
  Front out;
  for (const Eigen::Index i : pareto_indices(loss_matrix(samples), direction)) {
    out.push_back(samples[static_cast<std::size_t>(i)]);
  }
  return out;
}

double hypervolume(const Eigen::Ref<const Eigen::MatrixXd>& input, const HypervolumeSpec& spec) {
  check_spec(input, spec);
  Eigen::MatrixXd points = input;
  Eigen::VectorXd reference = spec.reference;
  to_minimize(points, reference, spec.direction);
  points = inside_box(points, reference);
  if (points.rows() == 0) return 0.0;
  switch (reference.size()) {
    case 1:
      return reference(0) - points.col(0).minCoeff();
    case 2:
      return hypervolume_2d(points, Eigen::Vector2d(reference));
    case 3:
      return hypervolume_3d(select_rows(points, pareto_indices(points, Direction::minimize)), reference);
    default:
      throw UnsupportedConfiguration("exact hypervolume supports two or three objectives");
  }
}

double hypervolume(const Front& samples, const HypervolumeSpec& spec) {
  if (samples.empty()) return 0.0;
  return hypervolume(loss_matrix(samples), spec);
}

double hypervolume_inclusion_exclusion(const Eigen::Ref<const Eigen::MatrixXd>& input,
                                       const HypervolumeSpec& spec) {
  check_spec(input, spec);
  Eigen::MatrixXd points = input;
  Eigen::VectorXd reference = spec.reference;
  to_minimize(points, reference, spec.direction);
  points = inside_box(points, reference);
  points = select_rows(points, pareto_indices(points, Direction::minimize));
  const Eigen::Index n = points.rows();
  if (n == 0) return 0.0;
  if (n > 20) throw UnsupportedConfiguration("inclusion-exclusion limited to 20 non-dominated points");

  double volume = 0.0;
  const std::uint64_t subsets = std::uint64_t{1} << n;
  for (std::uint64_t mask = 1; mask < subsets; ++mask) {
    Eigen::VectorXd corner = Eigen::VectorXd::Constant(reference.size(), -std::numeric_limits<double>::infinity());
    int bits = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (mask & (std::uint64_t{1} << i)) {
        corner = corner.cwiseMax(points.row(i).transpose());
        ++bits;
      }
    }
    const double box = (reference - corner).prod();
    volume += (bits % 2 == 1) ? box : -box;
  }
  return volume;
}

MonteCarloEstimate hypervolume_monte_carlo(const Eigen::Ref<const Eigen::MatrixXd>& input,
                                           const HypervolumeSpec& spec, std::uint64_t samples,
                                           std::uint64_t seed) {
  check_spec(input, spec);
  if (samples == 0) throw InvalidParameter("Monte Carlo hypervolume needs samples");
  Eigen::MatrixXd points = input;
  Eigen::VectorXd reference = spec.reference;
  to_minimize(points, reference, spec.direction);
  points = inside_box(points, reference);
  if (points.rows() == 0) return {};
  points = select_rows(points, pareto_indices(points, Direction::minimize));

  const Eigen::Index dims = reference.size();
  const Eigen::VectorXd lower = points.colwise().minCoeff().transpose();
  const Eigen::VectorXd extent = reference - lower;
  const double box = extent.prod();
  std::uint64_t hits = 0;
  Eigen::VectorXd u(dims);
  for (std::uint64_t s = 0; s < samples; ++s) {
    for (Eigen::Index d = 0; d < dims; ++d) {
      u(d) = lower(d) + extent(d) * counter_uniform(seed, s * static_cast<std::uint64_t>(dims) + static_cast<std::uint64_t>(d));
    }
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
      if ((points.row(i).transpose().array() <= u.array()).all()) {
        ++hits;
        break;
      }
    }
  }
  const double p = static_cast<double>(hits) / static_cast<double>(samples);
  return {box * p, box * std::sqrt(p * (1.0 - p) / static_cast<double>(samples))};
}

Front oracle_front_toy(const ToyConfig& cfg, int resolution) {
  check_toy_config(cfg);
  if (resolution < 100) throw InvalidParameter("oracle grid resolution must be at least 100");
  constexpr double lo = -12.0;
  constexpr double hi = 12.0;
  const Eigen::Index n = static_cast<Eigen::Index>(resolution);
  Eigen::MatrixXd losses(n * n, 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double t1 = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    for (Eigen::Index j = 0; j < n; ++j) {
      const double t2 = lo + (hi - lo) * static_cast<double>(j) / static_cast<double>(n - 1);
      const auto l = toy_loss_terms(t1, t2, cfg.scale_c);
      losses(i * n + j, 0) = l[0];
      losses(i * n + j, 1) = l[1];
    }
  }
  Front front;
  for (const Eigen::Index k : pareto_indices(losses, Direction::minimize)) {
    front.push_back({Weighting(), losses.row(k).transpose()});
  }
  return front;
}

Eigen::VectorXd toy_reference_point(const ToyConfig& cfg) {
  Eigen::VectorXd ref = Eigen::VectorXd::Constant(2, -std::numeric_limits<double>::infinity());
  for (const auto& init : toy_initializations()) ref = ref.cwiseMax(toy_loss(init, cfg));
  return ref;
}

Front evaluate_subspace(const ParameterMatrix& theta, const SimplexGrid& grid, const VectorObjective& objective) {
  if (grid.dims() != theta.rows()) throw DimensionMismatch("grid dimension must equal the member count");
  Front front;
  front.reserve(static_cast<std::size_t>(grid.size()));
  for (Eigen::Index k = 0; k < grid.size(); ++k) {
    const Weighting a = grid.points.row(k).transpose();
    front.push_back({a, objective.losses(interpolate(theta, a))});
  }
  return front;
}

std::string front_csv(const Front& samples, Eigen::Index members, Eigen::Index tasks) {
  std::string out;
  for (Eigen::Index m = 0; m < members; ++m) out += fmt::format("alpha_{},", m + 1);
  for (Eigen::Index t = 0; t < tasks; ++t) out += fmt::format("loss_{}{}", t + 1, t + 1 < tasks ? "," : "\n");
  for (const auto& s : samples) {
    if (s.losses.size() != tasks) throw DimensionMismatch("front sample has the wrong task count");
    if (s.weighting.size() != 0 && s.weighting.size() != members) {
      throw DimensionMismatch("front sample has the wrong weighting length");
    }
    for (Eigen::Index m = 0; m < members; ++m) {
      if (s.weighting.size() != 0) out += io::format_real(s.weighting(m));
      out += ",";
    }
    for (Eigen::Index t = 0; t < tasks; ++t) {
      out += io::format_real(s.losses(t));
      out += t + 1 < tasks ? "," : "\n";
    }
  }
  return out;
}

Front read_front_csv(const std::filesystem::path& path) {
  const auto rows = io::read_csv(path);
  const auto& header = rows.front();
  Eigen::Index members = 0;
  Eigen::Index tasks = 0;
  for (std::size_t k = 0; k < header.size(); ++k) {
    const std::string alpha = fmt::format("alpha_{}", members + 1);
    const std::string loss = fmt::format("loss_{}", tasks + 1);
    if (tasks == 0 && header[k] == alpha) {
      ++members;
    } else if (header[k] == loss) {
      ++tasks;
    } else {
      throw FormatError(fmt::format("{}: unexpected column '{}'", path.string(), header[k]));
    }
  }
  if (tasks == 0) throw FormatError(fmt::format("{}: no loss columns", path.string()));

  Front front;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& fields = rows[r];
    if (fields.size() != header.size()) {
      throw FormatError(fmt::format("{}: row {} has {} fields, expected {}", path.string(), r, fields.size(), header.size()));
    }
    FrontSample s;
    std::size_t blanks = 0;
    for (Eigen::Index m = 0; m < members; ++m) blanks += fields[static_cast<std::size_t>(m)].empty() ? 1 : 0;
    if (blanks != 0 && blanks != static_cast<std::size_t>(members)) {
      throw FormatError(fmt::format("{}: row {} has a partial weighting", path.string(), r));
    }
    if (blanks == 0 && members > 0) {
      s.weighting.resize(members);
      for (Eigen::Index m = 0; m < members; ++m) s.weighting(m) = io::parse_real(fields[static_cast<std::size_t>(m)]);
    }
    s.losses.resize(tasks);
    for (Eigen::Index t = 0; t < tasks; ++t) {
      s.losses(t) = io::parse_real(fields[static_cast<std::size_t>(members + t)]);
    }
    if (!s.losses.allFinite()) throw FormatError(fmt::format("{}: row {} has non-finite losses", path.string(), r));
    front.push_back(std::move(s));
  }
  return front;
}

double spearman_correlation(const Eigen::Ref<const Eigen::VectorXd>& x, const Eigen::Ref<const Eigen::VectorXd>& y) {
  if (x.size() != y.size() || x.size() < 2) throw DimensionMismatch("spearman: need two equal-length samples");
  auto ranks = [](const Eigen::Ref<const Eigen::VectorXd>& v) {
    std::vector<Eigen::Index> order(static_cast<std::size_t>(v.size()));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return v(a) < v(b); });
    Eigen::VectorXd r(v.size());
    for (std::size_t k = 0; k < order.size();) {
      std::size_t end = k + 1;
      while (end < order.size() && v(order[end]) == v(order[k])) ++end;
      const double avg = 0.5 * static_cast<double>(k + end - 1);
      for (std::size_t q = k; q < end; ++q) r(order[q]) = avg;
      k = end;
    }
    return r;
  };
  const Eigen::VectorXd rx = ranks(x);
  const Eigen::VectorXd ry = ranks(y);
  const Eigen::ArrayXd dx = rx.array() - rx.mean();
  const Eigen::ArrayXd dy = ry.array() - ry.mean();
  const double denom = std::sqrt((dx * dx).sum() * (dy * dy).sum());
  if (denom == 0.0) return 0.0;
  return (dx * dy).sum() / denom;
}

}  // namespace pml
