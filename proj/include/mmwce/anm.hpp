#pragma once

#include <optional>
#include <stdexcept>
#include <vector>

#include "mmwce/numerics.hpp"
#include "mmwce/sensing.hpp"

namespace mmwce {

/// Regularized atomic-norm denoising from antenna-selection measurements:
///
///   minimize  xi/2 (t + u_0) + 1/2 || y - P h ||^2
///   s.t.      [T(u) h; h^H t] >= 0
///
/// where P selects the observed antennas and y = z / scale are the measurements
/// with the sensing gain divided out (rows of Phi normalized to unit gain).
/// With `exact_fit` the data term becomes the constraint P h = y.
struct AnmProblem {
  int n = 0;
  std::vector<int> observed;  // antenna index per sample, repeats allowed
  CVector samples;            // y
  double xi = 1.0;
  bool exact_fit = false;
  double scale = 1.0;         // sensing gain removed from z (bookkeeping)

  static AnmProblem from_measurement(const Measurement& m, double xi);
  /// Accepts any row-selection matrix with a common positive gain per row.
  static AnmProblem from_sensing_matrix(const CMatrix& phi, const CVector& z, double xi);
  static AnmProblem full_observation(const CVector& y, double xi);

  void validate() const;
};

struct AdmmOptions {
  double rho = 0.0;  // 0: xi / n on unit-rms samples
  double abs_tol = 1e-7;
  double rel_tol = 1e-6;
  int max_iterations = 20000;
  bool adapt_rho = true;
  double balance_ratio = 10.0;
  double rho_factor = 2.0;
  int adapt_interval = 10;
  int adapt_until = 1000;  // rho is frozen after this iteration
  double relaxation = 1.0;  // over-relaxation alpha in [1, 2)
  int divergence_window = 100;
  bool record_trace = false;
};

struct AdmmIterate {
  int iteration = 0;
  double objective = 0.0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double rho = 0.0;
};

struct SdpState {
  CVector h;
  CVector u;  // Toeplitz first row, u[0] real
  double t = 0.0;

  /// D = [T(u) h; h^H t].
  CMatrix block() const;
};

struct AdmmOutcome {
  SdpState state;
  int iterations = 0;
  bool converged = false;
  double objective = 0.0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  std::vector<AdmmIterate> trace;
};

class AnmError : public std::runtime_error {
 public:
  AnmError(const std::string& what, std::vector<AdmmIterate> trace, SdpState last)
      : std::runtime_error(what), trace_(std::move(trace)), last_(std::move(last)) {}
  const std::vector<AdmmIterate>& trace() const noexcept { return trace_; }
  const SdpState& last_state() const noexcept { return last_; }

 private:
  std::vector<AdmmIterate> trace_;
  SdpState last_;
};

/// ADMM on the SDP. Throws AnmError on divergence or when max_iterations is
/// reached without meeting the residual tolerances.
AdmmOutcome admm_solve(const AnmProblem& problem, const AdmmOptions& options = {});

struct ExtractedPath {
  double angle = 0.0;  // radians
  double sine = 0.0;
  Complex gain;
};

struct PathExtraction {
  std::vector<ExtractedPath> paths;  // sorted by angle
  int rank = 0;
  /// lambda_{rank+1} / lambda_rank of T(u); values near 1 mean the rank was ambiguous.
  double rank_gap = 0.0;
  bool ambiguous = false;
  double residual = 0.0;  // ||h_hat - sum gain a(angle)||
};

/// Vandermonde decomposition of T(u) via its signal subspace (shift invariance),
/// followed by least-squares gains against h_hat.
PathExtraction extract_paths(const CVector& u, const CVector& h_hat, int max_paths, double rank_tol = 1e-3,
                             double spacing_over_lambda = 0.5);

struct AnmOptions {
  AdmmOptions admm;
  bool extract_paths = false;
  int max_paths = 8;
};

struct AnmResult {
  CVector h_hat;
  double objective = 0.0;
  double atomic_norm_value = 0.0;  // (t + u_0) / 2
  int iterations = 0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double xi = 0.0;
  CVector u;
  double t = 0.0;
  /// sup_phi |a(phi)^H P^H (y - P h_hat)|; should not exceed xi at optimality.
  double dual_sup_norm = 0.0;
  std::vector<AdmmIterate> trace;
  std::optional<PathExtraction> extracted_paths;
};

AnmResult anm_denoise(const AnmProblem& problem, const AnmOptions& options = {});

/// Constrained form: minimize ||h||_A s.t. ||z - Phi h||^2 <= eta (raw measurement
/// units). eta = 0 solves the exact-fit problem directly; eta > 0 bisects xi
/// on the regularized solver until the achieved fit matches eta.
AnmResult anm_constrained(const AnmProblem& problem, double eta, const AnmOptions& options = {},
                          double fit_tolerance = 1e-2, int max_bisections = 40);

struct AtomicNormResult {
  double value = 0.0;
  int iterations = 0;
  SdpState state;
};

/// ||h||_A through the SDP characterization.
AtomicNormResult atomic_norm(const CVector& h, const AdmmOptions& options = {});

/// xi = c * sigma_n * sqrt(N log N), sigma_n the post-combining noise std in
/// normalized-row units (sqrt(noise_power) / scale).
double default_regularization(const Measurement& m, double c = 1.0);

/// sup over sines of |a(s)^H r| (dense grid plus local refinement).
double dual_polynomial_sup(const CVector& r, double spacing_over_lambda = 0.5);

struct SparkReport {
  int omega_size = 0;
  int paths = 0;
  int spark_upper_bound = 0;        // |Omega| + 1
  double path_limit = 0.0;          // (|Omega| + 1) / 2
  bool possibly_satisfiable = false;  // L < (|Omega| + 1) / 2
  std::string recommendation;
};

SparkReport spark_feasibility(int paths, const std::vector<int>& omega);

}  // namespace mmwce
