#include "pml/ensemble.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include <fmt/format.h>

namespace pml {
namespace {

constexpr std::array<unsigned char, 6> kMagic = {'P', 'M', 'L', 0xCE, 0x98, '1'};

void put_u64(std::vector<unsigned char>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<unsigned char>(v >> (8 * i)));
}

std::uint64_t get_u64(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return v;
}

}  // namespace

void check_parameter_matrix(const Eigen::Ref<const ParameterMatrix>& theta) {
  if (theta.rows() < 2) throw InvalidParameter("parameter matrix needs at least two members");
  if (theta.cols() < 1) throw InvalidParameter("parameter matrix needs at least one parameter");
  if (!theta.allFinite()) throw InvalidParameter("parameter matrix has non-finite entries");
}

void check_task_weight_matrix(const Eigen::Ref<const TaskWeightMatrix>& w) {
  for (Eigen::Index m = 0; m < w.rows(); ++m) {
    if (!is_on_simplex(w.row(m).transpose())) {
      throw InvalidParameter(fmt::format("task weight row {} is not on the simplex", m));
    }
  }
}

ParameterMatrix stack_members(std::initializer_list<ParameterVector> members) {
  if (members.size() == 0) return {};
  const Eigen::Index n = members.begin()->size();
  ParameterMatrix theta(static_cast<Eigen::Index>(members.size()), n);
  Eigen::Index row = 0;
  for (const auto& m : members) {
    if (m.size() != n) throw DimensionMismatch("ensemble members must have equal length");
    theta.row(row++) = m.transpose();
  }
  return theta;
}

std::string encode_parameter_matrix(const ParameterMatrix& theta) {
  std::vector<unsigned char> bytes(kMagic.begin(), kMagic.end());
  put_u64(bytes, static_cast<std::uint64_t>(theta.rows()));
  put_u64(bytes, static_cast<std::uint64_t>(theta.cols()));
  for (Eigen::Index r = 0; r < theta.rows(); ++r) {
    for (Eigen::Index c = 0; c < theta.cols(); ++c) {
      put_u64(bytes, std::bit_cast<std::uint64_t>(theta(r, c)));
    }
  }
  return {bytes.begin(), bytes.end()};
}

ParameterMatrix decode_parameter_matrix(std::string_view data) {
  const auto* bytes = reinterpret_cast<const unsigned char*>(data.data());
  constexpr std::size_t header = kMagic.size() + 16;
  if (data.size() < header || !std::equal(kMagic.begin(), kMagic.end(), bytes)) {
    throw FormatError("not a parameter matrix file");
  }
  const std::uint64_t rows = get_u64(bytes + kMagic.size());
  const std::uint64_t cols = get_u64(bytes + kMagic.size() + 8);
  if (rows == 0 || cols == 0 || rows > (1u << 20) || cols > (1ull << 32) ||
      data.size() != header + rows * cols * 8) {
    throw FormatError("truncated or inconsistent parameter matrix");
  }
  ParameterMatrix theta(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  const unsigned char* p = bytes + header;
  for (Eigen::Index r = 0; r < theta.rows(); ++r) {
    for (Eigen::Index c = 0; c < theta.cols(); ++c, p += 8) {
      theta(r, c) = std::bit_cast<double>(get_u64(p));
    }
  }
  if (!theta.allFinite()) throw FormatError("non-finite parameters");
  return theta;
}

void write_parameter_matrix(const std::filesystem::path& path, const ParameterMatrix& theta) {
  const std::string bytes = encode_parameter_matrix(theta);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError(fmt::format("cannot open {} for writing", path.string()));
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError(fmt::format("failed writing {}", path.string()));
}

ParameterMatrix read_parameter_matrix(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(fmt::format("cannot open {}", path.string()));
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return decode_parameter_matrix(bytes);
  } catch (const FormatError& e) {
    throw FormatError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

}  // namespace pml
