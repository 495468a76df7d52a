#include "doctest.h"
#include "helpers.hpp"
#include "oracle.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "mmwce/array.hpp"
#include "mmwce/channel.hpp"
#include "mmwce/omp.hpp"
#include "mmwce/rng.hpp"
#include "mmwce/sensing.hpp"

using namespace mmwce;

namespace {

Measurement noiseless(const SensingPlan& plan, const CVector& h) {
  Measurement m;
  m.plan = plan;
  m.z = sensing_matrix(plan) * h;
  return m;
}

// Best k-term approximation error of h over the dictionary columns (brute force).
double best_k_term_nmse(const CMatrix& atoms, const CVector& h, int k) {
  double best = 1.0;
  std::vector<int> pick(static_cast<std::size_t>(k));
  std::function<void(int, int)> walk = [&](int depth, int start) {
    if (depth == k) {
      CMatrix sub(atoms.rows(), k);
      for (int i = 0; i < k; ++i) sub.col(i) = atoms.col(pick[static_cast<std::size_t>(i)]);
      const CVector x = sub.colPivHouseholderQr().solve(h);
      best = std::min(best, (h - sub * x).squaredNorm() / h.squaredNorm());
      return;
    }
    for (int c = start; c < atoms.cols(); ++c) {
      pick[static_cast<std::size_t>(depth)] = c;
      walk(depth + 1, c + 1);
    }
  };
  walk(0, 0);
  return best;
}

}  // namespace

TEST_SUITE("omp") {

TEST_CASE("grid dictionary") {
  SUBCASE("columns are the closed-form atoms on (-1, 1]") {
    const GridDictionary d = build_grid_dictionary(16, 48);
    for (int g = 0; g < 48; ++g) {
      CHECK(d.sines[g] == doctest::Approx(-1.0 + 2.0 * (g + 1) / 48.0).epsilon(1e-15));
      CHECK((d.atoms.col(g) - oracle::atom(16, d.sines[g])).norm() < 1e-12);
      if (g > 0) CHECK(d.sines[g] - d.sines[g - 1] == doctest::Approx(2.0 / 48));
    }
    CHECK(d.sines[47] == 1.0);
  }
  SUBCASE("G = N is a DFT basis") {
    const GridDictionary d = build_grid_dictionary(32, 32);
    CHECK((d.atoms.adjoint() * d.atoms - 32.0 * CMatrix::Identity(32, 32)).norm() < 1e-10);
  }
  SUBCASE("G = 2N neighbours follow the Dirichlet kernel at half a bin") {
    const int n = 32;
    const GridDictionary d = build_grid_dictionary(n, 2 * n);
    const double expect = oracle::dirichlet_ratio(n, 2.0 / (2 * n));
    for (int g = 0; g + 1 < 2 * n; ++g)
      CHECK(std::abs(d.atoms.col(g).dot(d.atoms.col(g + 1))) / n == doctest::Approx(expect).epsilon(1e-12));
  }
  SUBCASE("G = 1 is the single endpoint atom") {
    const GridDictionary d = build_grid_dictionary(4, 1);
    CHECK(d.sines[0] == 1.0);
    CHECK((d.atoms.col(0) - oracle::atom(4, 1.0)).norm() < 1e-14);
  }
}

TEST_CASE("zero measurement stops immediately") {
  const CMatrix a = build_grid_dictionary(8, 16).atoms;
  const OmpResult r = omp_estimate(a, CVector::Zero(8), {});
  CHECK(r.iterations == 0);
  CHECK(r.support.empty());
  CHECK(r.coefficients.norm() == 0.0);
}

TEST_CASE("single on-grid path under full sampling") {
  const int n = 64;
  const GridDictionary dict = build_grid_dictionary(n, n);
  const SubArrayLayout layout = SubArrayLayout::contiguous(n, 8);
  const SensingPlan plan = build_sensing_plan(layout, 8, 2.0, 1);
  const Complex gain(0.3, -1.1);
  const int g0 = 41;
  const CVector h = gain * dict.atoms.col(g0);
  const Measurement m = noiseless(plan, h);
  OmpOptions opt;
  opt.residual_threshold = 1e-9 * m.z.norm();
  const OmpResult r = omp_estimate_channel(m, dict, opt);
  CHECK(r.support == std::vector<int>{g0});
  // Direct LS on the true support.
  const CMatrix a = adss_dictionary_product(plan, dict);
  const Complex ls = a.col(g0).dot(m.z) / a.col(g0).squaredNorm();
  CHECK(std::abs(r.coefficients[g0] - ls) < 1e-9);
  CHECK(std::abs(r.coefficients[g0] - gain) < 1e-9);
  CHECK((r.h_hat - h).norm() < 1e-9 * h.norm());
}

TEST_CASE("two on-grid paths from 16 antennas: unique sparsest support") {
  const int n = 64;
  const GridDictionary dict = build_grid_dictionary(n, n);
  const SubArrayLayout layout = SubArrayLayout::contiguous(n, 8);
  Rng rng(21);
  int recovered = 0, guaranteed = 0;
  const int trials = 10;
  for (int trial = 0; trial < trials; ++trial) {
    const SensingPlan plan = build_sensing_plan(layout, 2, 1.0, rng());
    const int g1 = static_cast<int>(rng() % 64);
    const int g2 = (g1 + 8 + static_cast<int>(rng() % 48)) % 64;  // at least 8 bins apart
    const CVector h = complex_normal(rng, 1.0) * dict.atoms.col(g1) + complex_normal(rng, 1.0) * dict.atoms.col(g2);
    const Measurement m = noiseless(plan, h);
    const CMatrix a = adss_dictionary_product(plan, dict);

    const auto one = oracle::exact_supports(a, m.z, 1, 1e-9);
    const auto two = oracle::exact_supports(a, m.z, 2, 1e-9);
    CHECK(one.empty());
    REQUIRE(two.size() == 1u);
    CHECK(two[0] == std::vector<int>{std::min(g1, g2), std::max(g1, g2)});

    OmpOptions opt;
    opt.residual_threshold = 1e-9 * m.z.norm();
    const OmpResult r = omp_estimate(a, m.z, opt);
    std::vector<int> s = r.support;
    std::sort(s.begin(), s.end());
    const bool exact = s == two[0];
    recovered += exact;
    if (coherence_recovery_margin(a, 2).satisfied) {
      ++guaranteed;
      CHECK(exact);
    }
  }
  CHECK(recovered >= trials - 2);
  MESSAGE("OMP recovered " << recovered << "/" << trials << " supports; coherence guarantee held in " << guaranteed);
}

TEST_CASE("residual decreases and stays orthogonal to the selected columns") {
  const SubArrayLayout layout = SubArrayLayout::contiguous(64, 8);
  const GridDictionary dict = build_grid_dictionary(64, 256);
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const SensingPlan plan = build_sensing_plan(layout, 2, 1.0, rng());
    CVector h = CVector::Zero(64);
    for (int l = 0; l < 3; ++l) h += complex_normal(rng, 1.0) * steering_vector_sine(64, uniform(rng, -1.0, 1.0));
    Measurement m = noiseless(plan, h);
    for (Eigen::Index i = 0; i < m.z.size(); ++i) m.z[i] += complex_normal(rng, 0.01);
    const CMatrix a = adss_dictionary_product(plan, dict);
    const OmpResult r = omp_estimate(a, m.z, {});
    CHECK(r.iterations == 8);
    CHECK(static_cast<int>(r.support.size()) == r.iterations);
    CHECK(r.residual_history.size() == static_cast<std::size_t>(r.iterations + 1));
    for (std::size_t t = 1; t < r.residual_history.size(); ++t) CHECK(r.residual_history[t] < r.residual_history[t - 1]);
    const CVector resid = m.z - a * r.coefficients;
    CHECK(resid.norm() == doctest::Approx(r.final_residual).epsilon(1e-9));
    for (int g : r.support) CHECK(std::abs(a.col(g).dot(resid)) <= 1e-9 * m.z.norm() * a.col(g).norm());
    int nonzero = 0;
    for (Eigen::Index g = 0; g < r.coefficients.size(); ++g) nonzero += r.coefficients[g] != Complex(0.0);
    CHECK(nonzero <= r.iterations);
  }
}

TEST_CASE("on-grid exactness below the coherence limit (enumerated supports)") {
  // Full sampling, N = 8: G = N is orthogonal (every support size qualifies), G = 2N allows single atoms.
  const int n = 8;
  for (int grid : {8, 16}) {
    const CMatrix a = build_grid_dictionary(n, grid).atoms;
    const double mu = mutual_coherence(a);
    const int kmax = std::min(3, static_cast<int>(std::ceil((1.0 + 1.0 / std::max(mu, 1e-12)) / 2.0)) - 1);
    REQUIRE(kmax >= 1);
    Rng rng(static_cast<std::uint64_t>(grid));
    for (int k = 1; k <= kmax; ++k) {
      std::vector<int> pick(static_cast<std::size_t>(k));
      std::function<void(int, int)> walk = [&](int depth, int start) {
        if (depth == k) {
          CVector z = CVector::Zero(n);
          for (int g : pick) z += std::polar(uniform(rng, 0.5, 2.0), uniform(rng, 0.0, 6.28)) * a.col(g);
          OmpOptions opt;
          opt.residual_threshold = 1e-10 * z.norm();
          std::vector<int> s = omp_estimate(a, z, opt).support;
          std::sort(s.begin(), s.end());
          CHECK(s == pick);
          return;
        }
        for (int c = start; c < grid; ++c) {
          pick[static_cast<std::size_t>(depth)] = c;
          walk(depth + 1, c + 1);
        }
      };
      walk(0, 0);
    }
  }
}

TEST_CASE("basis mismatch floor for off-grid paths") {
  const int n = 16;
  const GridDictionary dict = build_grid_dictionary(n, n);
  const SubArrayLayout layout = SubArrayLayout::contiguous(n, 4);
  Rng rng(17);
  for (int trial = 0; trial < 10; ++trial) {
    const SensingPlan plan = build_sensing_plan(layout, 2, 1.0, rng());
    CVector h = CVector::Zero(n);
    for (int l = 0; l < 2; ++l) h += complex_normal(rng, 1.0) * steering_vector_sine(n, uniform(rng, -0.95, 0.95));
    OmpOptions opt;
    opt.max_iterations = 4;
    const OmpResult r = omp_estimate_channel(noiseless(plan, h), dict, opt);
    const double floor = best_k_term_nmse(dict.atoms, h, r.iterations);
    CHECK(nmse(h, r.h_hat) >= floor - 1e-9);
  }
}

TEST_CASE("ties go to the lowest index") {
  CMatrix a(2, 3);
  a << 1.0, 0.0, 1.0, 0.0, 1.0, 0.0;  // columns 0 and 2 are identical
  CVector z(2);
  z << 2.0, 0.0;
  const OmpResult r = omp_estimate(a, z, {});
  REQUIRE(!r.support.empty());
  CHECK(r.support.front() == 0);
}

TEST_CASE("singular least squares surfaces the partial result") {
  const double eps = 1e-14;
  CMatrix a(2, 2);
  a << 1.0, 1.0, 0.0, eps;
  CVector z(2);
  z << 0.0, 1.0;
  try {
    omp_estimate(a, z, {});
    FAIL("expected OmpError");
  } catch (const OmpError& e) {
    CHECK(e.partial().support == std::vector<int>{1});
    CHECK(e.condition_estimate() > 1e12);
  }
}

TEST_CASE("omp input checks") {
  CHECK_THROWS_AS(omp_estimate(CMatrix::Ones(3, 2), CVector::Ones(2), {}), ContractViolation);
  CMatrix a = CMatrix::Ones(3, 2);
  a.col(1).setZero();
  CHECK_THROWS_AS(omp_estimate(a, CVector::Ones(3), {}), DomainError);
  OmpOptions bad;
  bad.residual_threshold = -1.0;
  CHECK_THROWS_AS(omp_estimate(CMatrix::Ones(3, 2), CVector::Ones(3), bad), DomainError);
}

TEST_CASE("mutual coherence examples") {
  CHECK(mutual_coherence(CMatrix::Identity(4, 4)) == 0.0);
  CMatrix dup(3, 2);
  dup << 1.0, 2.0, Complex(0.0, 1.0), Complex(0.0, 2.0), 3.0, 6.0;
  CHECK(mutual_coherence(dup) == doctest::Approx(1.0).epsilon(1e-14));
  CMatrix zero = CMatrix::Identity(3, 3);
  zero.col(2).setZero();
  CHECK_THROWS_AS(mutual_coherence(zero), DomainError);

  // Brute-force coherence of the default ADSS setup from independently built atoms.
  const SubArrayLayout layout = SubArrayLayout::contiguous(64, 8);
  const SensingPlan plan = build_sensing_plan(layout, 2, 3.0, 99);
  const CMatrix a = adss_dictionary_product(plan, build_grid_dictionary(64, 64));
  const std::vector<int> omega = plan.omega();
  double mu = 0.0;
  for (int i = 0; i < 64; ++i)
    for (int j = i + 1; j < 64; ++j) {
      const CVector ai = oracle::atom(64, -1.0 + 2.0 * (i + 1) / 64);
      const CVector aj = oracle::atom(64, -1.0 + 2.0 * (j + 1) / 64);
      Complex ip = 0.0;
      for (int w : omega) ip += std::conj(ai[w]) * aj[w];
      mu = std::max(mu, std::abs(ip) / static_cast<double>(omega.size()));
    }
  CHECK(mutual_coherence(a) == doctest::Approx(mu).epsilon(1e-12));
  CHECK(mutual_coherence(a) >= welch_bound(16, 64) - 1e-12);
  const CoherenceReport rep = coherence_recovery_margin(a, 3);
  CHECK(rep.mu == doctest::Approx(mu).epsilon(1e-12));
  CHECK(rep.bound == doctest::Approx(0.2));
  CHECK(rep.satisfied == (mu < 0.2));
}

TEST_CASE("coherence recovery margin") {
  const CMatrix a = build_grid_dictionary(8, 16).atoms;
  const CoherenceReport one = coherence_recovery_margin(a, 1);
  CHECK(one.bound == 1.0);
  CHECK(one.satisfied);
  CHECK(coherence_recovery_margin(a, 2).bound == doctest::Approx(1.0 / 3.0));
  CHECK_THROWS_AS(coherence_recovery_margin(a, 0), DomainError);
}

TEST_CASE("Welch bound") {
  CHECK(welch_bound(16, 64) == doctest::Approx(std::sqrt(48.0 / (16.0 * 63.0))));
  CHECK(welch_bound(16, 16) == 0.0);
  CHECK_THROWS_AS(welch_bound(0, 4), DomainError);
}

TEST_CASE("default threshold is sqrt(W) times the noise std") {
  Measurement m;
  m.z = CVector::Zero(16);
  m.noise_power = 0.25;
  CHECK(default_omp_threshold(m) == doctest::Approx(4.0 * 0.5));
}

}  // TEST_SUITE
