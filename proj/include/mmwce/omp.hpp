#pragma once

#include <stdexcept>
#include <vector>

#include "mmwce/numerics.hpp"
#include "mmwce/sensing.hpp"

namespace mmwce {

/// Steering-vector dictionary on G sines evenly spaced in (-1, 1]:
/// sine_g = -1 + 2 (g + 1) / G.
struct GridDictionary {
  int n = 0;
  int size = 0;
  double spacing_over_lambda = 0.5;
  RVector sines;
  CMatrix atoms;  // n x size
};

GridDictionary build_grid_dictionary(int n, int grid_size, double spacing_over_lambda = 0.5);

struct OmpOptions {
  double residual_threshold = 0.0;  // delta
  int max_iterations = 8;
  /// Select with normalized columns |a_g^H r| / ||a_g||; LS always uses raw columns.
  bool normalize_selection = true;
};

struct OmpResult {
  CVector coefficients;  // sparse, length G
  std::vector<int> support;
  int iterations = 0;
  double final_residual = 0.0;
  std::vector<double> residual_history;  // ||r_t|| for t = 0..iterations
  CVector h_hat;                         // Psi * coefficients; empty when no dictionary was given
};

class OmpError : public std::runtime_error {
 public:
  OmpError(const std::string& what, OmpResult partial, double condition_estimate)
      : std::runtime_error(what), partial_(std::move(partial)), condition_(condition_estimate) {}
  const OmpResult& partial() const noexcept { return partial_; }
  double condition_estimate() const noexcept { return condition_; }

 private:
  OmpResult partial_;
  double condition_;
};

/// Greedy sparse recovery of z ~ A x.
OmpResult omp_estimate(const CMatrix& a, const CVector& z, const OmpOptions& options);

/// A = Phi Psi for an ADSS plan: selected dictionary rows times the plan scale.
CMatrix adss_dictionary_product(const SensingPlan& plan, const GridDictionary& dict);

/// Default threshold: sqrt(W) times the post-combining noise std.
double default_omp_threshold(const Measurement& m);

/// Runs OMP on an ADSS measurement and fills h_hat.
OmpResult omp_estimate_channel(const Measurement& m, const GridDictionary& dict, const OmpOptions& options);

double mutual_coherence(const CMatrix& a);

struct CoherenceReport {
  double mu = 0.0;
  double bound = 1.0;  // 1 / (2L - 1)
  bool satisfied = false;
};

CoherenceReport coherence_recovery_margin(const CMatrix& a, int paths);

/// sqrt((G - W) / (W (G - 1))), the smallest coherence any W x G matrix can reach.
double welch_bound(int rows, int cols);

}  // namespace mmwce
