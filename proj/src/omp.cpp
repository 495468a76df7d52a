#include "mmwce/omp.hpp"

#include <cmath>
#include <sstream>

#include "mmwce/array.hpp"

namespace mmwce {

GridDictionary build_grid_dictionary(int n, int grid_size, double spacing_over_lambda) {
  if (n < 1 || grid_size < 1) throw DomainError("dictionary dimensions must be positive");
  GridDictionary d;
  d.n = n;
  d.size = grid_size;
  d.spacing_over_lambda = spacing_over_lambda;
  d.sines.resize(grid_size);
  d.atoms.resize(n, grid_size);
  for (int g = 0; g < grid_size; ++g) {
    d.sines[g] = -1.0 + 2.0 * (g + 1) / grid_size;
    d.atoms.col(g) = steering_vector_sine(n, d.sines[g], spacing_over_lambda);
  }
  return d;
}

OmpResult omp_estimate(const CMatrix& a, const CVector& z, const OmpOptions& options) {
  if (a.rows() != z.size()) throw ContractViolation("omp: measurement length does not match A");
  if (!(options.residual_threshold >= 0.0)) throw DomainError("omp: residual threshold must be >= 0");
  require_finite(a, "omp dictionary");
  require_finite(z, "omp measurement");
  const Eigen::Index g_count = a.cols();
  const RVector col_norms = a.colwise().norm().transpose();
  for (Eigen::Index g = 0; g < g_count; ++g)
    if (!(col_norms[g] > 0.0)) throw DomainError("omp: dictionary has a zero column");

  OmpResult res;
  res.coefficients = CVector::Zero(g_count);
  CVector r = z;
  res.final_residual = r.norm();
  res.residual_history.push_back(res.final_residual);
  const int limit = static_cast<int>(std::min<Eigen::Index>(options.max_iterations, g_count));

  std::vector<bool> chosen(static_cast<std::size_t>(g_count), false);
  while (res.final_residual > options.residual_threshold && res.iterations < limit) {
    const CVector corr = a.adjoint() * r;
    Eigen::Index best = -1;
    double best_score = -1.0;
    for (Eigen::Index g = 0; g < g_count; ++g) {
      if (chosen[static_cast<std::size_t>(g)]) continue;
      double score = std::abs(corr[g]);
      if (options.normalize_selection) score /= col_norms[g];
      if (score > best_score) {  // strict: ties keep the lowest index
        best_score = score;
        best = g;
      }
    }
    if (best < 0) break;
    chosen[static_cast<std::size_t>(best)] = true;
    res.support.push_back(static_cast<int>(best));
    ++res.iterations;

    CMatrix sub(a.rows(), static_cast<Eigen::Index>(res.support.size()));
    for (std::size_t j = 0; j < res.support.size(); ++j) sub.col(static_cast<Eigen::Index>(j)) = a.col(res.support[j]);
    CVector x;
    try {
      x = solve_least_squares(sub, z);
    } catch (const SingularMatrixError& e) {
      res.support.pop_back();
      --res.iterations;
      std::ostringstream os;
      os << "omp: least squares on the selected columns is singular at iteration " << res.iterations + 1 << " ("
         << e.what() << ")";
      throw OmpError(os.str(), res, e.condition_estimate());
    }
    r = z - sub * x;
    res.coefficients.setZero();
    for (std::size_t j = 0; j < res.support.size(); ++j) res.coefficients[res.support[j]] = x[static_cast<Eigen::Index>(j)];
    res.final_residual = r.norm();
    res.residual_history.push_back(res.final_residual);
  }
  return res;
}

CMatrix adss_dictionary_product(const SensingPlan& plan, const GridDictionary& dict) {
  if (plan.n_antennas != dict.n) throw ContractViolation("dictionary size does not match the sensing plan");
  const std::vector<int> omega = plan.omega();
  CMatrix a(static_cast<Eigen::Index>(omega.size()), dict.size);
  for (std::size_t w = 0; w < omega.size(); ++w) a.row(static_cast<Eigen::Index>(w)) = plan.scale * dict.atoms.row(omega[w]);
  return a;
}

double default_omp_threshold(const Measurement& m) {
  return std::sqrt(static_cast<double>(m.z.size()) * m.noise_power);
}

OmpResult omp_estimate_channel(const Measurement& m, const GridDictionary& dict, const OmpOptions& options) {
  const CMatrix a = adss_dictionary_product(m.plan, dict);
  OmpResult res = omp_estimate(a, m.z, options);
  res.h_hat = dict.atoms * res.coefficients;
  return res;
}

double mutual_coherence(const CMatrix& a) {
  const Eigen::Index g_count = a.cols();
  if (g_count < 2) return 0.0;
  const RVector norms = a.colwise().norm().transpose();
  for (Eigen::Index g = 0; g < g_count; ++g)
    if (!(norms[g] > 0.0)) throw DomainError("mutual coherence: zero column");
  const CMatrix gram = a.adjoint() * a;
  double mu = 0.0;
  for (Eigen::Index j = 0; j < g_count; ++j)
    for (Eigen::Index i = 0; i < j; ++i) mu = std::max(mu, std::abs(gram(i, j)) / (norms[i] * norms[j]));
  return std::min(mu, 1.0);
}

CoherenceReport coherence_recovery_margin(const CMatrix& a, int paths) {
  if (paths < 1) throw DomainError("path count must be positive");
  CoherenceReport rep;
  rep.mu = mutual_coherence(a);
  rep.bound = 1.0 / (2.0 * paths - 1.0);
  rep.satisfied = rep.mu < rep.bound;
  return rep;
}

double welch_bound(int rows, int cols) {
  if (rows < 1 || cols < 2) throw DomainError("welch bound needs rows >= 1 and cols >= 2");
  if (cols <= rows) return 0.0;
  return std::sqrt(static_cast<double>(cols - rows) / (static_cast<double>(rows) * (cols - 1)));
}

}  // namespace mmwce
