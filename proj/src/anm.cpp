#include "mmwce/anm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "mmwce/array.hpp"

namespace mmwce {

// ---------------------------------------------------------------- problems

AnmProblem AnmProblem::from_measurement(const Measurement& m, double xi) {
  m.plan.validate();
  AnmProblem p;
  p.n = m.plan.n_antennas;
  p.observed = m.plan.omega();
  if (m.z.size() != static_cast<Eigen::Index>(p.observed.size()))
    throw ContractViolation("measurement length does not match its sensing plan");
  p.samples = m.z / m.plan.scale;
  p.scale = m.plan.scale;
  p.xi = xi;
  p.validate();
  return p;
}

AnmProblem AnmProblem::from_sensing_matrix(const CMatrix& phi, const CVector& z, double xi) {
  if (phi.rows() != z.size()) throw ContractViolation("sensing matrix rows do not match measurement length");
  AnmProblem p;
  p.n = static_cast<int>(phi.cols());
  p.xi = xi;
  p.samples.resize(z.size());
  double gain = 0.0;
  for (Eigen::Index w = 0; w < phi.rows(); ++w) {
    Eigen::Index col = -1;
    for (Eigen::Index i = 0; i < phi.cols(); ++i) {
      if (phi(w, i) == Complex(0.0)) continue;
      if (col != -1) throw ContractViolation("sensing matrix row selects more than one antenna");
      col = i;
    }
    if (col == -1) throw ContractViolation("sensing matrix has an empty row");
    const Complex g = phi(w, col);
    if (std::abs(g.imag()) > 0.0 || !(g.real() > 0.0)) throw ContractViolation("selection gain must be real positive");
    if (w == 0) gain = g.real();
    if (std::abs(g.real() - gain) > 1e-12 * gain) throw ContractViolation("selection rows must share one gain");
    p.observed.push_back(static_cast<int>(col));
    p.samples[w] = z[w] / gain;
  }
  p.scale = gain;
  p.validate();
  return p;
}

AnmProblem AnmProblem::full_observation(const CVector& y, double xi) {
  AnmProblem p;
  p.n = static_cast<int>(y.size());
  p.observed.resize(static_cast<std::size_t>(p.n));
  std::iota(p.observed.begin(), p.observed.end(), 0);
  p.samples = y;
  p.xi = xi;
  p.validate();
  return p;
}

void AnmProblem::validate() const {
  if (n < 1) throw ContractViolation("ANM problem dimension must be positive");
  if (samples.size() != static_cast<Eigen::Index>(observed.size()))
    throw ContractViolation("ANM sample count does not match the observed index list");
  if (observed.empty()) throw ContractViolation("ANM problem without observations");
  for (int i : observed)
    if (i < 0 || i >= n) throw ContractViolation("ANM observed index out of range");
  std::set<int> distinct(observed.begin(), observed.end());
  if (static_cast<int>(distinct.size()) > n) throw ContractViolation("more distinct observations than unknowns");
  if (!exact_fit && !(xi > 0.0)) throw DomainError("regularization weight xi must be positive");
  require_finite(samples, "ANM samples");
}

CMatrix SdpState::block() const {
  const Eigen::Index n = h.size();
  CMatrix d(n + 1, n + 1);
  d.topLeftCorner(n, n) = HermitianToeplitz(u).materialize();
  d.topRightCorner(n, 1) = h;
  d.bottomLeftCorner(1, n) = h.adjoint();
  d(n, n) = t;
  return d;
}

// ---------------------------------------------------------------- ADMM

namespace {

constexpr double kDivergenceFactor = 1e3;

struct Observations {
  RVector count;  // d_i: times antenna i was observed
  CVector sum;    // b_i: sum of samples at antenna i
};

Observations accumulate(const AnmProblem& p, double inv_scale) {
  Observations o{RVector::Zero(p.n), CVector::Zero(p.n)};
  for (std::size_t w = 0; w < p.observed.size(); ++w) {
    o.count[p.observed[w]] += 1.0;
    o.sum[p.observed[w]] += p.samples[static_cast<Eigen::Index>(w)] * inv_scale;
  }
  return o;
}

double data_misfit(const AnmProblem& p, const CVector& h) {
  double acc = 0.0;
  for (std::size_t w = 0; w < p.observed.size(); ++w)
    acc += std::norm(p.samples[static_cast<Eigen::Index>(w)] - h[p.observed[w]]);
  return acc;
}

double objective_of(const AnmProblem& p, const SdpState& s) {
  const double norm_term = 0.5 * (s.t + s.u[0].real());
  if (p.exact_fit) return norm_term;
  return p.xi * norm_term + 0.5 * data_misfit(p, s.h);
}

}  // namespace

AdmmOutcome admm_solve(const AnmProblem& problem, const AdmmOptions& opt) {
  problem.validate();
  if (!(opt.rho >= 0.0)) throw DomainError("ADMM penalty rho must be nonnegative (0 selects xi / n)");
  const int n = problem.n;
  const Eigen::Index dim = n + 1;

  AdmmOutcome out;
  // Work on samples scaled to unit rms; the problem is homogeneous under
  // (y, xi) -> (c y, c xi) with solution (c h, c u, c t).
  const double rms = problem.samples.norm() / std::sqrt(static_cast<double>(problem.samples.size()));
  if (!(rms > 0.0)) {
    out.state = SdpState{CVector::Zero(n), CVector::Zero(n), 0.0};
    out.converged = true;
    out.objective = 0.0;
    return out;
  }
  const double inv = 1.0 / rms;
  const double xi = problem.exact_fit ? 1.0 : problem.xi * inv;
  const Observations obs = accumulate(problem, inv);

  CMatrix z = CMatrix::Zero(dim, dim);
  CMatrix lambda = CMatrix::Zero(dim, dim);
  CMatrix theta(dim, dim);
  // Lambda scales with xi and Theta with n ||h||_A, so xi / n balances the two
  // when the samples have unit rms.
  double rho = opt.rho > 0.0 ? opt.rho : xi / n;
  SdpState s{CVector::Zero(n), CVector::Zero(n), 0.0};

  double min_primal = INFINITY;
  int growth_streak = 0;
  const double root_dim = static_cast<double>(dim);

  for (int it = 1; it <= opt.max_iterations; ++it) {
    // (h, u, t) minimize the augmented Lagrangian given Z and Lambda.
    const CMatrix m = z - lambda / rho;
    s.t = m(n, n).real() - xi / (2.0 * rho);
    s.u = toeplitz_adjoint_project(m.topLeftCorner(n, n)).first_row();
    s.u[0] -= xi / (2.0 * rho * n);
    for (int i = 0; i < n; ++i) {
      const Complex mh = m(i, n);
      if (obs.count[i] > 0.0) {
        s.h[i] = problem.exact_fit ? obs.sum[i] / obs.count[i] : (obs.sum[i] + 2.0 * rho * mh) / (obs.count[i] + 2.0 * rho);
      } else {
        s.h[i] = mh;
      }
    }
    theta = s.block();

    // Z = PSD projection of Theta + Lambda / rho.
    const CMatrix relaxed =
        opt.relaxation == 1.0 ? theta : CMatrix(opt.relaxation * theta + (1.0 - opt.relaxation) * z);
    const CMatrix z_prev = z;
    z = project_psd(relaxed + lambda / rho);
    lambda += rho * (relaxed - z);

    const double primal = (theta - z).norm();
    const double dual = rho * (z - z_prev).norm();
    const double eps_pri = root_dim * opt.abs_tol + opt.rel_tol * std::max(theta.norm(), z.norm());
    const double eps_dual = root_dim * opt.abs_tol + opt.rel_tol * lambda.norm();

    out.iterations = it;
    out.primal_residual = primal;
    out.dual_residual = dual;
    if (opt.record_trace) {
      SdpState scaled{s.h * rms, s.u * rms, s.t * rms};
      out.trace.push_back({it, objective_of(problem, scaled), primal * rms, dual * rms, rho});
    }

    if (primal <= eps_pri && dual <= eps_dual) {
      out.converged = true;
      break;
    }

    if (!std::isfinite(primal) || !std::isfinite(dual))
      throw AnmError("ADMM produced a non-finite iterate", out.trace, SdpState{s.h * rms, s.u * rms, s.t * rms});
    min_primal = std::min(min_primal, primal);
    growth_streak = primal > kDivergenceFactor * min_primal ? growth_streak + 1 : 0;
    if (growth_streak >= opt.divergence_window) {
      std::ostringstream os;
      os << "ADMM diverging: primal residual stayed above " << kDivergenceFactor << "x its minimum for " << growth_streak
         << " iterations (now " << primal * rms << ")";
      throw AnmError(os.str(), out.trace, SdpState{s.h * rms, s.u * rms, s.t * rms});
    }

    if (opt.adapt_rho && it % opt.adapt_interval == 0 && it <= opt.adapt_until) {
      const double rel_primal = primal / std::max(std::max(theta.norm(), z.norm()), 1e-300);
      const double rel_dual = dual / std::max(lambda.norm(), 1e-300);
      if (rel_primal > opt.balance_ratio * rel_dual) {
        rho *= opt.rho_factor;
      } else if (rel_dual > opt.balance_ratio * rel_primal) {
        rho /= opt.rho_factor;
      }
    }
  }

  out.state = SdpState{s.h * rms, s.u * rms, s.t * rms};
  out.primal_residual *= rms;
  out.dual_residual *= rms;
  out.objective = objective_of(problem, out.state);
  if (!out.converged) {
    std::ostringstream os;
    os << "ADMM did not converge in " << opt.max_iterations << " iterations (primal " << out.primal_residual
       << ", dual " << out.dual_residual << ")";
    throw AnmError(os.str(), out.trace, out.state);
  }
  return out;
}

// ---------------------------------------------------------------- diagnostics

double dual_polynomial_sup(const CVector& r, double spacing_over_lambda) {
  const Eigen::Index n = r.size();
  if (n == 0) return 0.0;
  // |a(s)^H r| is a trigonometric polynomial in s; sample finely then refine the best peaks.
  const double period = 1.0 / spacing_over_lambda;  // sine period of the steering phase
  const int grid = static_cast<int>(std::max<Eigen::Index>(1024, 32 * n));
  auto value = [&](double sine) {
    Complex acc = 0.0;
    const double step = 2.0 * kPi * spacing_over_lambda * sine;
    for (Eigen::Index i = 0; i < n; ++i) acc += std::polar(1.0, -step * static_cast<double>(i)) * r[i];
    return std::abs(acc);
  };
  const double lo = -1.0;
  const double span = std::min(2.0, period);
  const double h = span / grid;
  std::vector<double> vals(static_cast<std::size_t>(grid));
  for (int g = 0; g < grid; ++g) vals[static_cast<std::size_t>(g)] = value(lo + h * g);
  std::vector<int> order(static_cast<std::size_t>(grid));
  std::iota(order.begin(), order.end(), 0);
  std::partial_sort(order.begin(), order.begin() + std::min(4, grid), order.end(),
                    [&](int a, int b) { return vals[static_cast<std::size_t>(a)] > vals[static_cast<std::size_t>(b)]; });
  double best = vals[static_cast<std::size_t>(order[0])];
  for (int k = 0; k < std::min(4, grid); ++k) {
    // Golden-section search on the bracketing cell pair.
    double a = lo + h * (order[static_cast<std::size_t>(k)] - 1);
    double b = lo + h * (order[static_cast<std::size_t>(k)] + 1);
    const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
    double c = b - phi * (b - a), d = a + phi * (b - a);
    double fc = value(c), fd = value(d);
    for (int iter = 0; iter < 60; ++iter) {
      if (fc > fd) {
        b = d;
        d = c;
        fd = fc;
        c = b - phi * (b - a);
        fc = value(c);
      } else {
        a = c;
        c = d;
        fc = fd;
        d = a + phi * (b - a);
        fd = value(d);
      }
    }
    best = std::max({best, fc, fd});
  }
  return best;
}

PathExtraction extract_paths(const CVector& u, const CVector& h_hat, int max_paths, double rank_tol,
                             double spacing_over_lambda) {
  PathExtraction out;
  const Eigen::Index n = u.size();
  if (h_hat.size() != n) throw ContractViolation("extract_paths: u and h_hat lengths differ");
  if (max_paths < 1) throw DomainError("extract_paths: max_paths must be positive");
  out.residual = h_hat.norm();
  if (n == 0 || !(u.norm() > 0.0)) return out;

  const HermitianToeplitz toeplitz(u);
  const HermitianEig eig = hermitian_eig(toeplitz.materialize());
  const double top = eig.values[0];
  if (!(top > 0.0)) return out;
  int rank = 0;
  while (rank < n && eig.values[rank] > rank_tol * top) ++rank;
  const int cap = static_cast<int>(std::min<Eigen::Index>(max_paths, n - 1));
  if (rank > cap) {
    out.ambiguous = true;
    rank = cap;
  }
  if (rank == 0) return out;
  out.rank = rank;
  out.rank_gap = rank < n ? std::max(eig.values[rank], 0.0) / eig.values[rank - 1] : 0.0;
  if (out.rank_gap > 0.1) out.ambiguous = true;

  // Signal subspace is spanned by the steering vectors; shifting by one antenna
  // multiplies each by exp(j 2 pi d/lambda s).
  const CMatrix us = eig.vectors.leftCols(rank);
  const CMatrix upper = us.topRows(n - 1);
  const CMatrix lower = us.bottomRows(n - 1);
  const CMatrix rotation = upper.completeOrthogonalDecomposition().solve(lower);
  Eigen::ComplexEigenSolver<CMatrix> ces(rotation);
  std::vector<double> sines;
  for (Eigen::Index k = 0; k < rank; ++k) {
    double s = std::arg(ces.eigenvalues()[k]) / (2.0 * kPi * spacing_over_lambda);
    s = std::clamp(s, -1.0, 1.0);
    if (s <= -1.0) s = 1.0;
    sines.push_back(s);
  }
  std::sort(sines.begin(), sines.end());

  CMatrix atoms(n, rank);
  for (int k = 0; k < rank; ++k) atoms.col(k) = steering_vector_sine(static_cast<int>(n), sines[static_cast<std::size_t>(k)], spacing_over_lambda);
  CVector gains;
  try {
    gains = solve_least_squares(atoms, h_hat);
  } catch (const SingularMatrixError&) {
    out.ambiguous = true;
    gains = atoms.completeOrthogonalDecomposition().solve(h_hat);
  }
  out.residual = (h_hat - atoms * gains).norm();
  for (int k = 0; k < rank; ++k) {
    ExtractedPath p;
    p.sine = sines[static_cast<std::size_t>(k)];
    p.angle = std::asin(p.sine);
    p.gain = gains[k];
    out.paths.push_back(p);
  }
  return out;
}

// ---------------------------------------------------------------- estimators

namespace {

AnmResult finish(const AnmProblem& problem, AdmmOutcome&& o, const AnmOptions& options) {
  AnmResult r;
  r.h_hat = o.state.h;
  r.u = o.state.u;
  r.t = o.state.t;
  r.iterations = o.iterations;
  r.primal_residual = o.primal_residual;
  r.dual_residual = o.dual_residual;
  r.xi = problem.exact_fit ? 0.0 : problem.xi;
  r.atomic_norm_value = 0.5 * (o.state.t + o.state.u[0].real());
  r.objective = o.objective;
  r.trace = std::move(o.trace);
  CVector resid = CVector::Zero(problem.n);
  for (std::size_t w = 0; w < problem.observed.size(); ++w)
    resid[problem.observed[w]] += problem.samples[static_cast<Eigen::Index>(w)] - r.h_hat[problem.observed[w]];
  r.dual_sup_norm = dual_polynomial_sup(resid);
  if (options.extract_paths) r.extracted_paths = extract_paths(r.u, r.h_hat, options.max_paths);
  return r;
}

}  // namespace

AnmResult anm_denoise(const AnmProblem& problem, const AnmOptions& options) {
  return finish(problem, admm_solve(problem, options.admm), options);
}

AnmResult anm_constrained(const AnmProblem& problem, double eta, const AnmOptions& options, double fit_tolerance,
                          int max_bisections) {
  if (!(eta >= 0.0)) throw DomainError("eta must be nonnegative");
  AnmProblem p = problem;
  if (eta == 0.0) {
    p.exact_fit = true;
    return anm_denoise(p, options);
  }
  p.exact_fit = false;
  const double target = eta / (problem.scale * problem.scale);  // in normalized-row units
  const double total = problem.samples.squaredNorm();

  CVector back = CVector::Zero(problem.n);
  for (std::size_t w = 0; w < problem.observed.size(); ++w)
    back[problem.observed[w]] += problem.samples[static_cast<Eigen::Index>(w)];
  const double xi_zero = dual_polynomial_sup(back);  // smallest xi with h_hat = 0
  if (target >= total || !(xi_zero > 0.0)) {
    p.xi = std::max(xi_zero, 1e-300) * 1.01;
    return anm_denoise(p, options);
  }

  double lo = xi_zero * 1e-8, hi = xi_zero;
  AnmResult best;
  bool have = false;
  for (int k = 0; k < max_bisections; ++k) {
    p.xi = std::sqrt(lo * hi);
    AnmResult r = anm_denoise(p, options);
    const double fit = data_misfit(p, r.h_hat);
    if (fit <= target) {
      best = std::move(r);
      have = true;
      lo = p.xi;
      if (target - fit <= fit_tolerance * target) break;
    } else {
      hi = p.xi;
    }
  }
  if (!have) {
    p.xi = lo;
    best = anm_denoise(p, options);
  }
  return best;
}

AtomicNormResult atomic_norm(const CVector& h, const AdmmOptions& options) {
  require_finite(h, "atomic_norm input");
  AtomicNormResult r;
  if (!(h.norm() > 0.0)) {
    r.state = SdpState{CVector::Zero(h.size()), CVector::Zero(h.size()), 0.0};
    return r;
  }
  AnmProblem p = AnmProblem::full_observation(h, 1.0);
  p.exact_fit = true;
  AdmmOutcome o = admm_solve(p, options);
  r.value = 0.5 * (o.state.t + o.state.u[0].real());
  r.iterations = o.iterations;
  r.state = std::move(o.state);
  return r;
}

double default_regularization(const Measurement& m, double c) {
  const int n = m.plan.n_antennas;
  const double sigma = std::sqrt(m.noise_power) / m.plan.scale;
  return c * sigma * std::sqrt(n * std::log(static_cast<double>(n)));
}

SparkReport spark_feasibility(int paths, const std::vector<int>& omega) {
  if (paths < 1) throw DomainError("path count must be positive");
  std::set<int> distinct(omega.begin(), omega.end());
  SparkReport rep;
  rep.paths = paths;
  rep.omega_size = static_cast<int>(distinct.size());
  rep.spark_upper_bound = rep.omega_size + 1;
  rep.path_limit = 0.5 * rep.spark_upper_bound;
  rep.possibly_satisfiable = paths < rep.path_limit;
  const bool consecutive = !distinct.empty() && *distinct.rbegin() - *distinct.begin() + 1 == rep.omega_size;
  if (!rep.possibly_satisfiable) {
    std::ostringstream os;
    os << "infeasible: sample at least " << 2 * paths << " distinct antennas";
    rep.recommendation = os.str();
  } else if (consecutive) {
    rep.recommendation = "consecutive sampling reaches the maximal spark |Omega| + 1";
  } else {
    rep.recommendation = "random sampling: spark is generically |Omega| + 1";
  }
  return rep;
}

}  // namespace mmwce
