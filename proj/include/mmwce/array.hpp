#pragma once

#include <vector>

#include "mmwce/numerics.hpp"

namespace mmwce {

struct ArrayGeometry {
  int n_antennas = 1;
  double spacing_over_lambda = 0.5;
};

/// Quantized phase shifter with `bits` of resolution: coefficients omega^c,
/// omega = exp(j 2 pi / 2^bits), c = 0..2^bits - 1.
struct PhaseShifterSpec {
  int bits = 4;

  int levels() const;
  Complex omega() const;
};

/// Partition of the BS antennas into Q sub-arrays, each wired to one RF chain.
/// Antenna and sub-array indices are 0-based.
class SubArrayLayout {
 public:
  SubArrayLayout(int n_total, std::vector<std::vector<int>> index_sets);

  /// Contiguous equal-size blocks: sub-array q holds antennas q*N/Q .. (q+1)*N/Q - 1.
  static SubArrayLayout contiguous(int n_total, int q_chains);

  int n_total() const noexcept { return n_total_; }
  int chains() const noexcept { return static_cast<int>(sets_.size()); }
  const std::vector<int>& indices(int q) const;
  /// Sub-array owning antenna i.
  int owner(int antenna) const;

 private:
  int n_total_;
  std::vector<std::vector<int>> sets_;
  std::vector<int> owner_;
};

/// ULA response: entry i = exp(j 2 pi (d/lambda) i sin(angle)), angle in (-pi/2, pi/2].
CVector steering_vector(const ArrayGeometry& geom, double angle);

/// Same response parameterized by s = sin(angle); s may be any real (aliases wrap).
CVector steering_vector_sine(int n, double sine, double spacing_over_lambda = 0.5);

/// Phase-shifter ramp f(c, length): entry i = omega^(c i).
CVector ps_ramp(int c, int length, const PhaseShifterSpec& ps);

/// Sub-array codeword 1_{Omega_q} .* f(c, N), using global antenna indices.
CVector subarray_codeword(const SubArrayLayout& layout, int q, int c, const PhaseShifterSpec& ps);

/// Standard basis vector e_index of length n (switch-mode selection).
CVector antenna_selector(int index, int n);

/// Sine in (-1, 1] at which a ramp with PS index c points (d = lambda/2).
double ramp_pointing_sine(int c, const PhaseShifterSpec& ps);

}  // namespace mmwce
