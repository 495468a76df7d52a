#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "mmwce/array.hpp"
#include "mmwce/numerics.hpp"

namespace mmwce {

/// Zadoff-Chu sequence exp(-j pi root n (n + 1) / length) for odd length.
CVector zadoff_chu(int root, int length);

/// K orthogonal uplink pilots: cyclic shifts of one ZC root scaled so that
/// s_k s_k'^H = length * rho_ue * delta(k, k').
struct PilotSet {
  std::vector<CVector> sequences;  // row vectors stored as columns
  int length = 0;
  double rho_ue = 0.0;
  std::vector<int> shifts;

  double gram_scale() const { return length * rho_ue; }
  CMatrix gram() const;
};

PilotSet build_pilots(int users, int length, double rho_ue, int root = 1);

class PlanError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Switch-mode sampling schedule: antenna_indices[t][q] is the antenna routed
/// to chain q during snapshot t (0-based).
struct SensingPlan {
  int n_antennas = 0;
  std::vector<std::vector<int>> antenna_indices;
  double scale = 1.0;  // T_s * rho_ue

  int snapshots() const { return static_cast<int>(antenna_indices.size()); }
  int chains() const { return antenna_indices.empty() ? 0 : static_cast<int>(antenna_indices.front().size()); }
  int measurements() const { return snapshots() * chains(); }
  /// Flattened index list in row order (t major, q minor).
  std::vector<int> omega() const;
  void validate(const SubArrayLayout* layout = nullptr) const;
};

SensingPlan build_sensing_plan(const SubArrayLayout& layout, int snapshots, double scale, std::uint64_t seed,
                               bool allow_repeats = false);

/// Phi = scale * [e_{i_11}, ..., e_{i_TQ}]^H.
CMatrix sensing_matrix(const SensingPlan& plan);

struct Measurement {
  CVector z;
  double noise_power = 0.0;  // per-entry variance after pilot correlation
  SensingPlan plan;
  /// Contribution of other users leaking through imperfect pilot orthogonality.
  CVector interference;
};

/// Single-user ADSS measurement z = Phi h + n with n = (selected BS noise) s^H.
Measurement simulate_measurement(const SensingPlan& plan, const CVector& h, double sigma2_b, std::uint64_t seed,
                                 const CVector& pilot);

/// All users transmit simultaneously through one shared switch schedule; the
/// per-user measurements follow from correlating with each pilot.
std::vector<Measurement> multiuser_training_round(const SensingPlan& plan, const std::vector<CVector>& channels,
                                                  const std::vector<CVector>& pilots, double sigma2_b,
                                                  std::uint64_t seed);

}  // namespace mmwce
