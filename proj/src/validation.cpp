#include "mmwce/validation.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

#include "mmwce/anm.hpp"
#include "mmwce/array.hpp"
#include "mmwce/config.hpp"
#include "mmwce/harness.hpp"
#include "mmwce/omp.hpp"
#include "mmwce/precoding.hpp"
#include "mmwce/rng.hpp"
#include "mmwce/sensing.hpp"

namespace mmwce {

namespace {

using Check = std::function<std::string(Rng&)>;  // empty string = pass

CVector random_atoms(Rng& rng, int n, int atoms) {
  CVector h = CVector::Zero(n);
  for (int k = 0; k < atoms; ++k) {
    const double s = -1.0 + 2.0 * (k + uniform(rng, 0.2, 0.8)) / atoms;  // one atom per band keeps them apart
    h += complex_normal(rng, 1.0) * steering_vector_sine(n, s);
  }
  return h;
}

AdmmOptions tight() {
  AdmmOptions o;
  o.abs_tol = 1e-9;
  o.rel_tol = 1e-8;
  o.max_iterations = 50000;
  return o;
}

std::string gauge_homogeneity(Rng& rng) {
  std::ostringstream fail;
  for (int trial = 0; trial < 3; ++trial) {
    const CVector h = random_atoms(rng, 32, 2);
    const Complex c = complex_normal(rng, 4.0);
    const double base = atomic_norm(h, tight()).value;
    const double scaled = atomic_norm(c * h, tight()).value;
    const double rel = std::abs(scaled - std::abs(c) * base) / (std::abs(c) * base);
    if (rel > 1e-4) fail << "trial " << trial << ": relative mismatch " << rel << "; ";
  }
  return fail.str();
}

std::string gauge_triangle(Rng& rng) {
  std::ostringstream fail;
  for (int trial = 0; trial < 3; ++trial) {
    const CVector a = random_atoms(rng, 32, 2);
    const CVector b = random_atoms(rng, 32, 1);
    const double na = atomic_norm(a, tight()).value;
    const double nb = atomic_norm(b, tight()).value;
    const double nab = atomic_norm(a + b, tight()).value;
    if (nab > (na + nb) * (1.0 + 1e-4)) fail << "trial " << trial << ": " << nab << " > " << na + nb << "; ";
  }
  return fail.str();
}

std::string omp_monotone(Rng& rng) {
  std::ostringstream fail;
  const SubArrayLayout layout = SubArrayLayout::contiguous(64, 8);
  const GridDictionary dict = build_grid_dictionary(64, 128);
  for (int trial = 0; trial < 20; ++trial) {
    const SensingPlan plan = build_sensing_plan(layout, 2, 1.0, rng());
    Measurement m;
    m.plan = plan;
    const std::vector<int> omega = plan.omega();
    const CVector h = random_atoms(rng, 64, 3);
    m.z.resize(static_cast<Eigen::Index>(omega.size()));
    for (std::size_t w = 0; w < omega.size(); ++w) m.z[static_cast<Eigen::Index>(w)] = h[omega[w]] + complex_normal(rng, 0.01);
    OmpOptions opt;
    opt.max_iterations = 8;
    const OmpResult r = omp_estimate_channel(m, dict, opt);
    for (std::size_t t = 1; t < r.residual_history.size(); ++t)
      if (r.residual_history[t] > r.residual_history[t - 1] * (1.0 + 1e-12)) {
        fail << "trial " << trial << " residual rose at iteration " << t << "; ";
        break;
      }
  }
  return fail.str();
}

std::string pilot_gram(Rng&) {
  const double rho = 4.7e-4;
  const PilotSet p = build_pilots(8, 63, rho);
  const CMatrix g = p.gram();
  const CMatrix expect = CMatrix::Identity(8, 8) * (63.0 * rho);
  const double err = (g - expect).norm() / expect.norm();
  if (err > 1e-9) {
    std::ostringstream os;
    os << "Gram deviates from T_s rho I by " << err;
    return os.str();
  }
  return {};
}

std::string measurement_variance(Rng& rng) {
  const SubArrayLayout layout = SubArrayLayout::contiguous(64, 8);
  const double rho = 0.5, sigma2 = 2.0;
  const PilotSet p = build_pilots(1, 63, rho);
  const SensingPlan plan = build_sensing_plan(layout, 2, p.gram_scale(), rng());
  const CVector zero = CVector::Zero(64);
  double acc = 0.0;
  int count = 0;
  double expected = 0.0;
  for (int trial = 0; trial < 2000; ++trial) {
    const Measurement m = simulate_measurement(plan, zero, sigma2, rng(), p.sequences.front());
    acc += m.z.squaredNorm();
    count += static_cast<int>(m.z.size());
    expected = m.noise_power;
  }
  const double measured = acc / count;
  const double rel = std::abs(measured / expected - 1.0);
  // 32000 samples: the estimator's relative std is about 0.56%.
  if (rel > 0.03) {
    std::ostringstream os;
    os << "empirical variance " << measured << " vs T_s rho sigma^2 = " << expected;
    return os.str();
  }
  return {};
}

std::string dbm_round_trip(Rng& rng) {
  for (int i = 0; i < 1000; ++i) {
    const double dbm = uniform(rng, -150.0, 60.0);
    if (std::abs(watt_to_dbm(dbm_to_watt(dbm)) - dbm) > 1e-12 * std::max(1.0, std::abs(dbm)))
      return "dBm round trip drifted at " + std::to_string(dbm);
  }
  return {};
}

std::string zf_construction(Rng& rng) {
  const SubArrayLayout layout = SubArrayLayout::contiguous(64, 8);
  const PhaseShifterSpec ps{4};
  std::ostringstream fail;
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<CVector> h;
    for (int k = 0; k < 8; ++k) h.push_back(random_atoms(rng, 64, 2));
    const PrecodingSolution sol = design_precoder(h, layout, ps);
    const double leak = zf_leakage(stack_channels(h), sol.f_rf, sol.p_bb);
    const double power = power_constraint_error(sol.f_rf, sol.p_bb);
    if (leak > 1e-10 || power > 1e-10) fail << "trial " << trial << ": leakage " << leak << ", power " << power << "; ";
  }
  return fail.str();
}

std::string reproducibility(Rng& rng) {
  ExperimentConfig cfg;
  cfg.system.n_bs = 16;
  cfg.system.n_ue = 4;
  cfg.system.chains = 4;
  cfg.system.users = 4;
  cfg.channel.n_bs = 16;
  cfg.channel.n_ue = 4;
  cfg.drops = 4;
  cfg.snr_sweep_db = {25.0};
  cfg.master_seed = rng();
  cfg.estimators = {EstimatorSpec::parse("omp:N"), EstimatorSpec::parse("omp:2N"), EstimatorSpec::parse("anm"),
                    EstimatorSpec::parse("perfect")};
  cfg.threads = 1;
  const std::string first = nmse_csv(run_nmse_sweep(cfg));
  cfg.threads = 3;
  const std::string second = nmse_csv(run_nmse_sweep(cfg));
  if (first != second) return "NMSE CSV differs between two runs with the same config and seed";
  const std::string se_first = se_csv(run_se_evaluation(cfg));
  const std::string se_second = se_csv(run_se_evaluation(cfg));
  if (se_first != se_second) return "SE CSV differs between two runs with the same config and seed";
  return {};
}

}  // namespace

std::vector<CheckResult> run_invariant_suite(std::uint64_t seed, const CheckObserver& observer) {
  const std::vector<std::pair<std::string, Check>> checks = {
      {"atomic-norm homogeneity", gauge_homogeneity},
      {"atomic-norm triangle inequality", gauge_triangle},
      {"omp residual monotonicity", omp_monotone},
      {"pilot gram identity", pilot_gram},
      {"measurement variance calibration", measurement_variance},
      {"dbm round trip", dbm_round_trip},
      {"zf construction", zf_construction},
      {"reproducibility byte equality", reproducibility},
  };
  std::vector<CheckResult> out;
  for (std::size_t i = 0; i < checks.size(); ++i) {
    Rng rng(derive_seed(seed, SeedStream::kValidation, i));
    CheckResult r;
    r.name = checks[i].first;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      r.detail = checks[i].second(rng);
      r.passed = r.detail.empty();
    } catch (const std::exception& e) {
      r.passed = false;
      r.detail = std::string("exception: ") + e.what();
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (observer) observer(r);
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace mmwce
