#include "mmwce/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include <lapacke.h>

namespace mmwce {

namespace {

void require_hermitian(const CMatrix& m) {
  if (m.rows() != m.cols()) {
    std::ostringstream os;
    os << "expected a square matrix, got " << m.rows() << "x" << m.cols();
    throw ContractViolation(os.str());
  }
  const double scale = m.norm();
  const double asym = (m - m.adjoint()).norm();
  if (asym > 1e-10 * std::max(scale, 1e-300) && asym > 0.0) {
    std::ostringstream os;
    os << "matrix is not Hermitian (||M - M^H|| = " << asym << ", ||M|| = " << scale << ")";
    throw ContractViolation(os.str());
  }
}

lapack_complex_double* as_lapack(Complex* p) {
  return reinterpret_cast<lapack_complex_double*>(p);
}

}  // namespace

void require_finite(const CMatrix& m, const char* what) {
  if (!m.allFinite()) throw ContractViolation(std::string(what) + " has non-finite entries");
}

void require_finite(const CVector& v, const char* what) {
  if (!v.allFinite()) throw ContractViolation(std::string(what) + " has non-finite entries");
}

HermitianEig hermitian_eig(const CMatrix& m) {
  require_hermitian(m);
  require_finite(m, "hermitian_eig input");
  const int n = static_cast<int>(m.rows());
  HermitianEig out;
  if (n == 0) return out;

  // Symmetrize so LAPACK sees an exactly Hermitian lower triangle.
  CMatrix work = (m + m.adjoint()) * 0.5;
  RVector w(n);
  const int info = LAPACKE_zheevd(LAPACK_COL_MAJOR, 'V', 'L', n, as_lapack(work.data()), n, w.data());
  if (info != 0) throw std::runtime_error("zheevd failed with info " + std::to_string(info));

  out.values = w.reverse();
  out.vectors = work.rowwise().reverse();
  return out;
}

CMatrix project_psd(const CMatrix& m, int* rank) {
  const int n = static_cast<int>(m.rows());
  if (m.rows() != m.cols()) throw ContractViolation("project_psd expects a square matrix");
  CMatrix work = m;
  RVector w(n);
  CMatrix z(n, n);
  std::vector<lapack_int> support(2 * static_cast<std::size_t>(std::max(n, 1)));
  lapack_int found = 0;
  const int info = LAPACKE_zheevr(LAPACK_COL_MAJOR, 'V', 'V', 'L', n, as_lapack(work.data()), n, 0.0,
                                  std::numeric_limits<double>::max(), 0, 0, 0.0, &found, w.data(),
                                  as_lapack(z.data()), n, support.data());
  if (info != 0) throw std::runtime_error("zheevr failed with info " + std::to_string(info));
  if (rank) *rank = found;
  if (found == 0) return CMatrix::Zero(n, n);
  const auto vecs = z.leftCols(found);
  return vecs * w.head(found).asDiagonal() * vecs.adjoint();
}

CVector solve_least_squares(const CMatrix& a, const CVector& b) {
  if (a.rows() != b.size()) throw ContractViolation("least squares: row count does not match rhs length");
  if (a.cols() > a.rows()) throw SingularMatrixError("least squares: more unknowns than equations", INFINITY);
  if (a.cols() == 0) return CVector();
  require_finite(a, "least squares matrix");
  require_finite(b, "least squares rhs");

  Eigen::ColPivHouseholderQR<CMatrix> qr(a);
  const auto diag = qr.matrixR().diagonal().cwiseAbs();
  const double rmax = diag.maxCoeff();
  const double rmin = diag.minCoeff();
  const double cond = rmin > 0.0 ? rmax / rmin : INFINITY;
  if (!(rmax > 0.0) || cond > 1e12) {
    std::ostringstream os;
    os << "least squares: rank deficient system (condition estimate " << cond << ")";
    throw SingularMatrixError(os.str(), cond);
  }
  return qr.solve(b);
}

HermitianToeplitz::HermitianToeplitz(CVector first_row) : u_(std::move(first_row)) {
  if (u_.size() > 0) {
    const double scale = std::max(1.0, std::abs(u_[0]));
    if (std::abs(u_[0].imag()) > 1e-12 * scale)
      throw ContractViolation("Toeplitz first row must start with a real entry");
    u_[0] = Complex(u_[0].real(), 0.0);
  }
}

CMatrix HermitianToeplitz::materialize() const {
  const Eigen::Index n = u_.size();
  CMatrix t(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i <= j; ++i) t(i, j) = u_[j - i];
    for (Eigen::Index i = j + 1; i < n; ++i) t(i, j) = std::conj(u_[i - j]);
  }
  return t;
}

CMatrix toeplitz_materialize(const HermitianToeplitz& t) { return t.materialize(); }

HermitianToeplitz toeplitz_adjoint_project(const CMatrix& m) {
  if (m.rows() != m.cols()) throw ContractViolation("toeplitz_adjoint_project expects a square matrix");
  const Eigen::Index n = m.rows();
  CVector u(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    // k-th superdiagonal of (M + M^H)/2 is (M(i,i+k) + conj(M(i+k,i)))/2.
    Complex acc = 0.0;
    for (Eigen::Index i = 0; i + k < n; ++i) acc += m(i, i + k) + std::conj(m(i + k, i));
    u[k] = acc / (2.0 * static_cast<double>(n - k));
  }
  if (n > 0) u[0] = Complex(u[0].real(), 0.0);
  return HermitianToeplitz(std::move(u));
}

}  // namespace mmwce
