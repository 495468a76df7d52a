#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace mmwce {

using Complex = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;
using RVector = Eigen::VectorXd;
using RMatrix = Eigen::MatrixXd;

inline constexpr double kPi = 3.14159265358979323846;

/// Raised when an input breaks a documented precondition (shape, symmetry).
class ContractViolation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a scalar argument is outside its mathematical domain.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Raised by least squares when the system matrix is (numerically) rank deficient.
class SingularMatrixError : public std::runtime_error {
 public:
  SingularMatrixError(const std::string& what, double condition_estimate)
      : std::runtime_error(what), condition_estimate_(condition_estimate) {}
  double condition_estimate() const noexcept { return condition_estimate_; }

 private:
  double condition_estimate_;
};

void require_finite(const CMatrix& m, const char* what);
void require_finite(const CVector& v, const char* what);

struct HermitianEig {
  RVector values;   // descending
  CMatrix vectors;  // columns match values
};

/// Full eigendecomposition of a Hermitian matrix.
HermitianEig hermitian_eig(const CMatrix& m);

/// Projection onto the PSD cone (negative eigenvalues clipped). Only the
/// nonnegative part of the spectrum is computed. `rank` receives the number of
/// retained eigenpairs when non-null.
CMatrix project_psd(const CMatrix& m, int* rank = nullptr);

/// argmin_x ||b - A x||_2 via column-pivoted QR.
CVector solve_least_squares(const CMatrix& a, const CVector& b);

/// Hermitian Toeplitz matrix described by its first row u (u[0] real).
class HermitianToeplitz {
 public:
  HermitianToeplitz() = default;
  explicit HermitianToeplitz(CVector first_row);

  const CVector& first_row() const noexcept { return u_; }
  Eigen::Index size() const noexcept { return u_.size(); }
  CMatrix materialize() const;

 private:
  CVector u_;
};

CMatrix toeplitz_materialize(const HermitianToeplitz& t);

/// Averages each diagonal of (M + M^H)/2; the orthogonal projection onto the
/// Hermitian Toeplitz subspace.
HermitianToeplitz toeplitz_adjoint_project(const CMatrix& m);

}  // namespace mmwce
