#pragma once

// Reference computations used only by the tests. Nothing here calls into the
// estimators under test; dictionaries are rebuilt from the closed-form atom.

#include <vector>

#include "mmwce/numerics.hpp"

namespace oracle {

using mmwce::CMatrix;
using mmwce::Complex;
using mmwce::CVector;

/// Half-wavelength ULA atom exp(j pi n s), built independently of the library.
CVector atom(int n, double sine);

/// a_g^H c on the grid s_g = -1 + 2 (g + 1) / G, via one length-G FFT.
std::vector<Complex> grid_correlation(const CVector& c, int grid);

/// Psi x for a dense grid vector x (length G), via one inverse FFT.
CVector grid_synthesis(const std::vector<Complex>& x, int n);

struct PlantedAtom {
  Complex gain;
  double sine = 0.0;
};

/// Bounds on min ||x||_1 s.t. Psi x = h over the G-point grid.
///  upper: l1 norm of an exactly feasible grid vector (neighbour interpolation
///         of the planted atoms plus the minimum-norm correction).
///  lower: Re(nu^H h) / max_g |a_g^H nu| for an interpolating polynomial nu
///         (value sign(c_l), stationary modulus at every atom).
struct Bracket {
  double upper = 0.0;
  double lower = 0.0;
  double rel_gap() const { return (upper - lower) / upper; }
};
Bracket grid_l1_bracket(const CVector& h, const std::vector<PlantedAtom>& atoms, int grid);

/// Douglas-Rachford on min ||x||_1 s.t. Psi x = h over the full grid. Every
/// iterate is projected onto the constraint exactly (Psi Psi^H = G I), so the
/// returned value is always an upper bound.
double grid_l1_douglas_rachford(const CVector& h, int grid, int iterations);

/// All supports of size k whose least-squares fit leaves a residual below
/// tol * ||z||; brute force over every subset.
std::vector<std::vector<int>> exact_supports(const CMatrix& a, const CVector& z, int k, double tol);

/// |sum_n exp(j pi n delta)| / n: normalized inner product of two atoms
/// whose sines differ by delta.
double dirichlet_ratio(int n, double delta);

}  // namespace oracle
