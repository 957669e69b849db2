#pragma once

#include <Eigen/Dense>

#include <random>
#include <vector>

#include "vpal/operators.hpp"

namespace testing {

inline vpal::GridSignal random_signal(const vpal::Shape& shape, std::mt19937_64& rng,
                                      double stddev = 1.0) {
  std::normal_distribution<double> normal(0.0, stddev);
  vpal::GridSignal s(shape);
  for (double& v : s.data) v = normal(rng);
  return s;
}

inline Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = normal(rng);
  return m;
}

// max over trials of |<Au, v> - <u, A^T v>| / (||u|| ||v||)
inline double adjoint_mismatch(const vpal::LinearOperator& A, std::mt19937_64& rng,
                               int trials = 100) {
  double worst = 0.0;
  for (int t = 0; t < trials; ++t) {
    const auto u = random_signal(A.in_shape(), rng);
    const auto v = random_signal(A.out_shape(), rng);
    const double lhs = vpal::dot(A.apply(u), v), rhs = vpal::dot(u, A.adjoint(v));
    worst = std::max(worst, std::abs(lhs - rhs) / (vpal::norm2(u) * vpal::norm2(v)));
  }
  return worst;
}

inline vpal::GridSignal vec(std::vector<double> v) { return vpal::GridSignal::vector(std::move(v)); }

}  // namespace testing
