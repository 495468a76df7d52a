#include "doctest.h"

#include <cmath>

#include "mmwce/array.hpp"

using namespace mmwce;

namespace {

bool close(const CVector& a, const CVector& b, double tol = 1e-14) {
  return a.size() == b.size() && (a - b).norm() <= tol;
}

CVector vec(std::initializer_list<Complex> xs) {
  CVector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (const Complex& x : xs) v[i++] = x;
  return v;
}

const Complex kJ(0.0, 1.0);

}  // namespace

TEST_SUITE("array") {

TEST_CASE("steering vector examples") {
  CHECK(close(steering_vector({4, 0.5}, 0.0), vec({1, 1, 1, 1})));
  CHECK(close(steering_vector({3, 0.5}, kPi / 2), vec({1, -1, 1})));
  CHECK(close(steering_vector({2, 0.5}, kPi / 6), vec({1, kJ})));
}

TEST_CASE("steering vector domain") {
  CHECK_THROWS_AS(steering_vector({4, 0.5}, -kPi / 2), DomainError);
  CHECK_THROWS_AS(steering_vector({4, 0.5}, 2.0), DomainError);
  CHECK_NOTHROW(steering_vector({4, 0.5}, kPi / 2));
  CHECK_THROWS_AS(steering_vector({0, 0.5}, 0.1), DomainError);
  CHECK_THROWS_AS(steering_vector({4, 0.0}, 0.1), DomainError);
}

TEST_CASE("phase-shifter ramp examples") {
  const PhaseShifterSpec two{2};
  CHECK(close(ps_ramp(0, 5, PhaseShifterSpec{4}), CVector::Ones(5)));
  CHECK(close(ps_ramp(1, 4, two), vec({1, kJ, -1, -kJ})));
  CHECK(close(ps_ramp(8, 2, PhaseShifterSpec{4}), vec({1, -1})));
  CHECK_THROWS_AS(ps_ramp(4, 3, two), DomainError);
  CHECK_THROWS_AS(ps_ramp(-1, 3, two), DomainError);
  CHECK(PhaseShifterSpec{3}.levels() == 8);
  CHECK(std::abs(std::abs(PhaseShifterSpec{5}.omega()) - 1.0) < 1e-15);
}

TEST_CASE("sub-array codewords") {
  const SubArrayLayout layout = SubArrayLayout::contiguous(4, 2);
  const PhaseShifterSpec two{2};
  CHECK(close(subarray_codeword(layout, 0, 0, two), vec({1, 1, 0, 0})));
  CHECK(close(subarray_codeword(layout, 1, 0, two), vec({0, 0, 1, 1})));
  // Mask of the global ramp: entries 2, 3 of (1, j, -1, -j).
  const CVector ramp = ps_ramp(1, 4, two);
  CHECK(close(subarray_codeword(layout, 1, 1, two), vec({0, 0, ramp[2], ramp[3]})));
  CHECK(close(subarray_codeword(layout, 1, 1, two), vec({0, 0, -1, -kJ})));
  CHECK_THROWS_AS(subarray_codeword(layout, 2, 0, two), DomainError);
  CHECK_THROWS_AS(subarray_codeword(layout, -1, 0, two), DomainError);
}

TEST_CASE("sub-array layout contract") {
  const SubArrayLayout layout = SubArrayLayout::contiguous(64, 8);
  CHECK(layout.chains() == 8);
  std::vector<int> seen(64, 0);
  for (int q = 0; q < 8; ++q) {
    CHECK(layout.indices(q).size() == 8u);
    for (int i : layout.indices(q)) {
      ++seen[static_cast<std::size_t>(i)];
      CHECK(layout.owner(i) == q);
      CHECK(i / 8 == q);
    }
  }
  for (int s : seen) CHECK(s == 1);
  CHECK_THROWS_AS(SubArrayLayout(4, {{0, 1}, {1, 2, 3}}), DomainError);
  CHECK_THROWS_AS(SubArrayLayout(4, {{0, 1}, {2}}), DomainError);
  CHECK_THROWS_AS(SubArrayLayout::contiguous(10, 3), DomainError);
}

TEST_CASE("antenna selector") {
  CHECK(close(antenna_selector(0, 3), vec({1, 0, 0})));
  CHECK(close(antenna_selector(2, 3), vec({0, 0, 1})));
  CVector h(3);
  h << Complex(1, 2), Complex(3, 4), Complex(5, 6);
  CHECK(antenna_selector(1, 3).dot(h) == h[1]);
  CHECK_THROWS_AS(antenna_selector(3, 3), DomainError);
}

TEST_CASE("constant modulus of steering vectors and codewords") {
  const PhaseShifterSpec ps{4};
  for (int c = 0; c < ps.levels(); ++c) {
    const CVector r = ps_ramp(c, 64, ps);
    CHECK((r.cwiseAbs().array() - 1.0).abs().maxCoeff() < 1e-14);
  }
  for (double angle = -1.5; angle <= kPi / 2; angle += 0.173) {
    const CVector a = steering_vector({64, 0.5}, angle);
    CHECK((a.cwiseAbs().array() - 1.0).abs().maxCoeff() < 1e-14);
  }
  const SubArrayLayout layout = SubArrayLayout::contiguous(64, 8);
  for (int q = 0; q < 8; ++q)
    for (int c = 0; c < ps.levels(); ++c) {
      const CVector f = subarray_codeword(layout, q, c, ps);
      int nonzero = 0;
      for (int i = 0; i < 64; ++i)
        if (f[i] != Complex(0.0, 0.0)) {
          ++nonzero;
          CHECK(std::abs(std::abs(f[i]) - 1.0) < 1e-14);
        }
      CHECK(nonzero == 8);
    }
}

TEST_CASE("beam grid consistency between steering vectors and PS ramps") {
  // sin(phi) = 2c / 2^bits (wrapped into (-1, 1]) reproduces ramp c at d = lambda/2.
  for (int bits : {1, 2, 3, 4}) {
    const PhaseShifterSpec ps{bits};
    for (int c = 0; c < ps.levels(); ++c) {
      double s = 2.0 * c / ps.levels();
      if (s > 1.0) s -= 2.0;
      CHECK(close(steering_vector({16, 0.5}, std::asin(s)), ps_ramp(c, 16, ps), 1e-12));
      CHECK(std::abs(ramp_pointing_sine(c, ps) - s) < 1e-15);
    }
  }
}

TEST_CASE("codewords of distinct sub-arrays are orthogonal") {
  const SubArrayLayout layout = SubArrayLayout::contiguous(64, 8);
  const PhaseShifterSpec ps{4};
  for (int q = 0; q < 8; ++q)
    for (int r = q + 1; r < 8; ++r)
      for (int c = 0; c < 16; c += 5)
        CHECK(std::abs(subarray_codeword(layout, q, c, ps).dot(subarray_codeword(layout, r, 15 - c, ps))) == 0.0);
}

}  // TEST_SUITE
