#pragma once

#include <random>

#include "mmwce/numerics.hpp"

namespace testing {

using mmwce::CMatrix;
using mmwce::Complex;
using mmwce::CVector;

inline CMatrix random_matrix(std::mt19937_64& rng, int rows, int cols) {
  std::normal_distribution<double> g(0.0, 1.0);
  CMatrix m(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) m(i, j) = Complex(g(rng), g(rng));
  return m;
}

inline CVector random_vector(std::mt19937_64& rng, int n) { return random_matrix(rng, n, 1).col(0); }

inline CMatrix random_hermitian(std::mt19937_64& rng, int n) {
  const CMatrix a = random_matrix(rng, n, n);
  return (a + a.adjoint()) * 0.5;
}

inline double rel_diff(const CMatrix& a, const CMatrix& b) { return (a - b).norm() / std::max(b.norm(), 1e-300); }

}  // namespace testing
