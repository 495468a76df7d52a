#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "mmwce/array.hpp"
#include "mmwce/numerics.hpp"

namespace mmwce {

/// UE beams f(c, M) / sqrt(M), c = 0..2^bits - 1, one per column.
struct UeCodebook {
  int n_antennas = 0;
  PhaseShifterSpec ps;
  CMatrix beams;  // M x P

  int size() const { return static_cast<int>(beams.cols()); }
};

UeCodebook build_ue_codebook(int n_antennas, const PhaseShifterSpec& ps);

/// All 2^bits codewords of sub-array q, one per column (N x P).
CMatrix subarray_codebook(const SubArrayLayout& layout, int q, const PhaseShifterSpec& ps);

/// One downlink training beam per sub-array, pointing at sines -1 + 2q/Q.
struct BsTrainingBeams {
  std::vector<int> codeword_index;   // c_q
  std::vector<double> target_sines;  // evenly spaced over [-1, 1)
  CMatrix beams;                     // N x Q, column q = 1_{Omega_q} .* f(c_q, N)
};

BsTrainingBeams build_bs_training_beams(const SubArrayLayout& layout, const PhaseShifterSpec& ps);

struct TrainingNoise {
  bool enabled = false;
  std::uint64_t seed = 0;
};

/// P x Q matrix of received powers |w_p^H H f_q|^2 rho_bs / K plus the noise
/// floor sigma2_u ||w_p||^2. With noise enabled the power is measured from one
/// noisy sample per (p, q) instead.
RMatrix received_power_matrix(const CMatrix& h, const BsTrainingBeams& training, const UeCodebook& codebook,
                              double rho_bs_per_user, double sigma2_u, const TrainingNoise& noise = {});

struct UeBeamChoice {
  int index = 0;
  RVector votes;  // accumulated power per UE beam
};

/// Every BS beam votes for its strongest UE beam with that beam's power; the
/// beam with the largest total wins. Ties go to the lowest index.
UeBeamChoice select_ue_beam(const RMatrix& powers);

struct RfPrecoder {
  CMatrix f_rf;                   // N x Q
  std::vector<int> codeword_index;
  std::vector<double> gain;       // |h_k^H f_q|^2 of the chosen codeword
};

/// User k is served by sub-array q = k; exhaustive search over its codebook.
RfPrecoder select_rf_precoder(const std::vector<CVector>& h_hat, const SubArrayLayout& layout,
                              const PhaseShifterSpec& ps);

class ConditioningError : public std::runtime_error {
 public:
  ConditioningError(const std::string& what, double condition) : std::runtime_error(what), condition_(condition) {}
  double condition() const noexcept { return condition_; }

 private:
  double condition_;
};

inline constexpr double kMaxZfCondition = 1e8;

/// Stacks estimates as rows h_k^H (K x N).
CMatrix stack_channels(const std::vector<CVector>& h);

/// P_BB = (H F)^-1 / ||F (H F)^-1||_F.
CMatrix zf_baseband(const CMatrix& h_stacked, const CMatrix& f_rf, double max_condition = kMaxZfCondition);

struct PrecodingSolution {
  CMatrix w;                       // M x K combiners
  std::vector<int> ue_beam_index;
  CMatrix f_rf;                    // N x Q
  std::vector<int> rf_codeword_index;
  CMatrix p_bb;                    // Q x K
  std::vector<double> sinr;
  std::vector<double> se;
};

/// RF search plus ZF baseband on the estimated effective channels.
PrecodingSolution design_precoder(const std::vector<CVector>& h_hat, const SubArrayLayout& layout,
                                  const PhaseShifterSpec& ps, double max_condition = kMaxZfCondition);

struct LinkQuality {
  std::vector<double> sinr;
  std::vector<double> se;
};

/// SINR and log2(1 + SINR) on the true channels, each user k combining with
/// column k of `w`. A zero denominator with nonzero signal gives +inf.
LinkQuality evaluate_downlink(const std::vector<CMatrix>& h_true, const CMatrix& w, const CMatrix& f_rf,
                              const CMatrix& p_bb, double rho_bs_per_user, double sigma2_u);

/// Fills solution.sinr and solution.se.
void evaluate_downlink(const std::vector<CMatrix>& h_true, PrecodingSolution& solution, double rho_bs_per_user,
                       double sigma2_u);

/// max_{j != k} |h_j^H F p_k| / min_k |h_k^H F p_k|.
double zf_leakage(const CMatrix& h_stacked, const CMatrix& f_rf, const CMatrix& p_bb);

/// | ||F P||_F - 1 |.
double power_constraint_error(const CMatrix& f_rf, const CMatrix& p_bb);

}  // namespace mmwce
