#include "mmwce/precoding.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "mmwce/rng.hpp"

namespace mmwce {

UeCodebook build_ue_codebook(int n_antennas, const PhaseShifterSpec& ps) {
  if (n_antennas < 1) throw DomainError("UE codebook needs at least one antenna");
  UeCodebook cb;
  cb.n_antennas = n_antennas;
  cb.ps = ps;
  const int levels = ps.levels();
  cb.beams.resize(n_antennas, levels);
  const double norm = 1.0 / std::sqrt(static_cast<double>(n_antennas));
  for (int c = 0; c < levels; ++c) cb.beams.col(c) = norm * ps_ramp(c, n_antennas, ps);
  return cb;
}

CMatrix subarray_codebook(const SubArrayLayout& layout, int q, const PhaseShifterSpec& ps) {
  const int levels = ps.levels();
  CMatrix book(layout.n_total(), levels);
  for (int c = 0; c < levels; ++c) book.col(c) = subarray_codeword(layout, q, c, ps);
  return book;
}

BsTrainingBeams build_bs_training_beams(const SubArrayLayout& layout, const PhaseShifterSpec& ps) {
  const int q_count = layout.chains();
  const int levels = ps.levels();
  BsTrainingBeams tb;
  tb.beams.resize(layout.n_total(), q_count);
  for (int q = 0; q < q_count; ++q) {
    const double s = -1.0 + 2.0 * q / q_count;
    // A ramp with index c points at sine 2c / P (d = lambda / 2).
    int c = static_cast<int>(std::lround(s * levels / 2.0)) % levels;
    if (c < 0) c += levels;
    tb.target_sines.push_back(s);
    tb.codeword_index.push_back(c);
    tb.beams.col(q) = subarray_codeword(layout, q, c, ps);
  }
  return tb;
}

RMatrix received_power_matrix(const CMatrix& h, const BsTrainingBeams& training, const UeCodebook& codebook,
                              double rho_bs_per_user, double sigma2_u, const TrainingNoise& noise) {
  if (h.rows() != codebook.beams.rows() || h.cols() != training.beams.rows())
    throw ContractViolation("channel shape does not match the codebooks");
  if (rho_bs_per_user < 0.0 || sigma2_u < 0.0) throw DomainError("powers must be nonnegative");
  const CMatrix gains = codebook.beams.adjoint() * h * training.beams;  // P x Q
  RMatrix p(gains.rows(), gains.cols());
  if (!noise.enabled) {
    for (Eigen::Index i = 0; i < gains.rows(); ++i) {
      const double floor = sigma2_u * codebook.beams.col(i).squaredNorm();
      for (Eigen::Index q = 0; q < gains.cols(); ++q) p(i, q) = rho_bs_per_user * std::norm(gains(i, q)) + floor;
    }
    return p;
  }
  Rng rng(noise.seed);
  const double amp = std::sqrt(rho_bs_per_user);
  for (Eigen::Index q = 0; q < gains.cols(); ++q) {
    for (Eigen::Index i = 0; i < gains.rows(); ++i) {
      CVector n(h.rows());
      for (Eigen::Index m = 0; m < n.size(); ++m) n[m] = complex_normal(rng, sigma2_u);
      const Complex y = amp * gains(i, q) + codebook.beams.col(i).dot(n);
      p(i, q) = std::norm(y);
    }
  }
  return p;
}

UeBeamChoice select_ue_beam(const RMatrix& powers) {
  if (powers.rows() < 1 || powers.cols() < 1) throw ContractViolation("empty received power matrix");
  UeBeamChoice choice;
  choice.votes = RVector::Zero(powers.rows());
  for (Eigen::Index q = 0; q < powers.cols(); ++q) {
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < powers.rows(); ++i)
      if (powers(i, q) > powers(best, q)) best = i;
    choice.votes[best] += powers(best, q);
  }
  Eigen::Index winner = 0;
  for (Eigen::Index i = 1; i < choice.votes.size(); ++i)
    if (choice.votes[i] > choice.votes[winner]) winner = i;
  choice.index = static_cast<int>(winner);
  return choice;
}

RfPrecoder select_rf_precoder(const std::vector<CVector>& h_hat, const SubArrayLayout& layout,
                              const PhaseShifterSpec& ps) {
  const int q_count = layout.chains();
  if (static_cast<int>(h_hat.size()) != q_count)
    throw ContractViolation("one estimated channel per sub-array is required (K = Q)");
  RfPrecoder rf;
  rf.f_rf = CMatrix::Zero(layout.n_total(), q_count);
  for (int q = 0; q < q_count; ++q) {
    const CVector& h = h_hat[static_cast<std::size_t>(q)];
    if (h.size() != layout.n_total()) throw ContractViolation("estimated channel length does not match the array");
    const CMatrix book = subarray_codebook(layout, q, ps);
    const CVector corr = book.adjoint() * h;
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < corr.size(); ++c)
      if (std::norm(corr[c]) > std::norm(corr[best])) best = c;
    rf.f_rf.col(q) = book.col(best);
    rf.codeword_index.push_back(static_cast<int>(best));
    rf.gain.push_back(std::norm(corr[best]));
  }
  return rf;
}

CMatrix stack_channels(const std::vector<CVector>& h) {
  if (h.empty()) throw ContractViolation("no channels to stack");
  CMatrix out(static_cast<Eigen::Index>(h.size()), h.front().size());
  for (std::size_t k = 0; k < h.size(); ++k) {
    if (h[k].size() != out.cols()) throw ContractViolation("channels differ in length");
    out.row(static_cast<Eigen::Index>(k)) = h[k].adjoint();
  }
  return out;
}

CMatrix zf_baseband(const CMatrix& h_stacked, const CMatrix& f_rf, double max_condition) {
  if (h_stacked.cols() != f_rf.rows()) throw ContractViolation("channel and RF precoder dimensions differ");
  const CMatrix eff = h_stacked * f_rf;
  if (eff.rows() != eff.cols()) throw ContractViolation("ZF needs as many users as RF chains");
  Eigen::JacobiSVD<CMatrix> svd(eff);
  const RVector sv = svd.singularValues();
  const double cond = sv[sv.size() - 1] > 0.0 ? sv[0] / sv[sv.size() - 1] : std::numeric_limits<double>::infinity();
  if (!(cond <= max_condition)) {
    std::ostringstream os;
    os << "effective channel H F_RF is ill-conditioned (condition " << cond << " > " << max_condition << ")";
    throw ConditioningError(os.str(), cond);
  }
  const CMatrix inv = eff.partialPivLu().inverse();
  return inv / (f_rf * inv).norm();
}

PrecodingSolution design_precoder(const std::vector<CVector>& h_hat, const SubArrayLayout& layout,
                                  const PhaseShifterSpec& ps, double max_condition) {
  RfPrecoder rf = select_rf_precoder(h_hat, layout, ps);
  PrecodingSolution sol;
  sol.p_bb = zf_baseband(stack_channels(h_hat), rf.f_rf, max_condition);
  sol.f_rf = std::move(rf.f_rf);
  sol.rf_codeword_index = std::move(rf.codeword_index);
  return sol;
}

LinkQuality evaluate_downlink(const std::vector<CMatrix>& h_true, const CMatrix& w, const CMatrix& f_rf,
                              const CMatrix& p_bb, double rho_bs_per_user, double sigma2_u) {
  const Eigen::Index k_count = static_cast<Eigen::Index>(h_true.size());
  if (w.cols() != k_count || p_bb.cols() != k_count) throw ContractViolation("user count mismatch");
  if (f_rf.cols() != p_bb.rows()) throw ContractViolation("F_RF and P_BB dimensions differ");
  if (rho_bs_per_user < 0.0 || sigma2_u < 0.0) throw DomainError("powers must be nonnegative");
  const CMatrix precoder = f_rf * p_bb;
  LinkQuality lq;
  for (Eigen::Index k = 0; k < k_count; ++k) {
    const CMatrix& h = h_true[static_cast<std::size_t>(k)];
    if (h.rows() != w.rows() || h.cols() != f_rf.rows()) throw ContractViolation("channel shape mismatch");
    const CVector g = (w.col(k).adjoint() * h * precoder).transpose();
    const double signal = rho_bs_per_user * std::norm(g[k]);
    double interference = 0.0;
    for (Eigen::Index j = 0; j < k_count; ++j)
      if (j != k) interference += std::norm(g[j]);
    const double denom = rho_bs_per_user * interference + sigma2_u * w.col(k).squaredNorm();
    double gamma = 0.0;
    if (signal > 0.0) gamma = denom > 0.0 ? signal / denom : std::numeric_limits<double>::infinity();
    lq.sinr.push_back(gamma);
    lq.se.push_back(std::log2(1.0 + gamma));
  }
  return lq;
}

void evaluate_downlink(const std::vector<CMatrix>& h_true, PrecodingSolution& solution, double rho_bs_per_user,
                       double sigma2_u) {
  LinkQuality lq = evaluate_downlink(h_true, solution.w, solution.f_rf, solution.p_bb, rho_bs_per_user, sigma2_u);
  solution.sinr = std::move(lq.sinr);
  solution.se = std::move(lq.se);
}

double zf_leakage(const CMatrix& h_stacked, const CMatrix& f_rf, const CMatrix& p_bb) {
  const CMatrix g = h_stacked * f_rf * p_bb;
  double diag = std::numeric_limits<double>::infinity();
  double off = 0.0;
  for (Eigen::Index j = 0; j < g.rows(); ++j)
    for (Eigen::Index k = 0; k < g.cols(); ++k) {
      if (j == k) diag = std::min(diag, std::abs(g(j, k)));
      else off = std::max(off, std::abs(g(j, k)));
    }
  return diag > 0.0 ? off / diag : std::numeric_limits<double>::infinity();
}

double power_constraint_error(const CMatrix& f_rf, const CMatrix& p_bb) {
  return std::abs((f_rf * p_bb).norm() - 1.0);
}

}  // namespace mmwce
