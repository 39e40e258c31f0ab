#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace bmgcn {

// Dense row-major 64-bit matrix used for every tensor in the library.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

// Per-node boolean mask. std::vector<bool> is avoided so masks can be viewed as spans.
using Mask = std::vector<std::uint8_t>;

inline bool all_finite(const Matrix& m) { return m.allFinite(); }

inline std::size_t count(const Mask& mask) {
  std::size_t k = 0;
  for (auto v : mask) k += v != 0;
  return k;
}

}  // namespace bmgcn
