#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "mmwce/numerics.hpp"

namespace mmwce {

/// Omnidirectional path gain at the one meter reference distance (-61.4 dB).
inline constexpr double kReferencePathGainDb = -61.4;

struct PathParams {
  Complex gain;                           // alpha_l
  double dod = 0.0;                       // BS side angle, radians
  double doa = 0.0;                       // UE side angle, radians
  int reflection_order = 0;
  std::vector<double> reflection_coeffs;  // |r_i| per bounce, size == reflection_order
  double distance = 1.0;                  // meters
  double phase = 0.0;                     // psi
};

struct ChannelRealization {
  int n_bs = 0;
  int n_ue = 0;
  double spacing_over_lambda = 0.5;
  std::vector<PathParams> paths;
  CMatrix h;  // M x N downlink matrix

  /// Sum over paths of alpha_l a_UE(theta_l) a_BS(phi_l)^H, recomputed from the path list.
  CMatrix path_sum() const;
};

struct ChannelGenConfig {
  int n_bs = 64;
  int n_ue = 8;
  double spacing_over_lambda = 0.5;
  int min_paths = 1;
  int max_paths = 4;
  double min_distance = 10.0;
  double max_distance = 150.0;
  double min_reflection = 0.3;  // |r| per bounce
  double max_reflection = 0.9;
  int max_reflection_order = 2;
  /// Minimum pairwise |sin(phi_i) - sin(phi_j)| at the BS; empty means 2 / n_bs.
  std::optional<double> min_angle_separation;
  double g0_db = kReferencePathGainDb;
  double bs_pattern_floor_db = -10.0;
  /// When > 0, BS sines are snapped to the G-point grid {-1 + 2(g+1)/G}.
  int bs_grid_points = 0;
  int ue_grid_points = 0;
  int max_retries = 1000;
  // Bookkeeping only.
  double carrier_hz = 28e9;
  double bandwidth_hz = 256e6;

  double effective_min_separation() const;
  void validate() const;
};

class ChannelGenerationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// sqrt(G0 x^-2 g1 g2 prod |r_i|^2), with x >= 1 m.
double path_gain_magnitude(double distance, int reflection_order, const std::vector<double>& reflection_coeffs,
                           double g1, double g2, double g0_db = kReferencePathGainDb);

/// Cosine-shaped BS element power pattern max(cos(phi), floor).
double bs_element_gain(double angle, double floor_db);

ChannelRealization generate_channel(const ChannelGenConfig& cfg, std::uint64_t seed);

/// h = H^H w.
CVector effective_channel(const ChannelRealization& ch, const CVector& w);

/// beta_l = conj(alpha_l w^H a_UE(theta_l)).
CVector effective_path_coefficients(const ChannelRealization& ch, const CVector& w);

double nmse(const CVector& h_true, const CVector& h_est);

/// rho_ue ||H||_F^2 / (M N sigma_b^2), linear.
double channel_snr(const CMatrix& h, double rho_ue, double sigma2_b);

}  // namespace mmwce
