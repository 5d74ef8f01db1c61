#pragma once

#include <Eigen/Dense>
#include <string>

#include "rfmkrr/rng.hpp"

namespace test_support {

inline Eigen::MatrixXd random_matrix(int rows, int cols, rfmkrr::Rng& rng) {
  Eigen::MatrixXd M(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) M(i, j) = rng.gaussian();
  return M;
}

inline Eigen::VectorXd random_vector(int n, rfmkrr::Rng& rng) {
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v(i) = rng.gaussian();
  return v;
}

// G G^T / n: PSD with spectrum on the order of 1.
inline Eigen::MatrixXd random_psd(int n, rfmkrr::Rng& rng) {
  const Eigen::MatrixXd G = random_matrix(n, n, rng);
  return G * G.transpose() / static_cast<double>(n);
}

template <typename F>
std::string thrown_message(F&& f) {
  try {
    f();
  } catch (const std::exception& e) {
    return e.what();
  }
  return {};
}

}  // namespace test_support
