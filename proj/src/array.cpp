#include "mmwce/array.hpp"

#include <cmath>
#include <sstream>

namespace mmwce {

int PhaseShifterSpec::levels() const {
  if (bits < 1 || bits > 16) throw DomainError("phase shifter resolution must be 1..16 bits");
  return 1 << bits;
}

Complex PhaseShifterSpec::omega() const { return std::polar(1.0, 2.0 * kPi / levels()); }

SubArrayLayout::SubArrayLayout(int n_total, std::vector<std::vector<int>> index_sets)
    : n_total_(n_total), sets_(std::move(index_sets)), owner_(static_cast<std::size_t>(std::max(n_total, 0)), -1) {
  if (n_total_ < 1) throw DomainError("sub-array layout needs at least one antenna");
  if (sets_.empty()) throw DomainError("sub-array layout needs at least one chain");
  for (std::size_t q = 0; q < sets_.size(); ++q) {
    if (sets_[q].empty()) throw DomainError("empty sub-array");
    for (int i : sets_[q]) {
      if (i < 0 || i >= n_total_) throw DomainError("sub-array index out of range");
      if (owner_[i] != -1) throw DomainError("sub-array index sets overlap");
      owner_[i] = static_cast<int>(q);
    }
  }
  for (int o : owner_)
    if (o == -1) throw DomainError("sub-array index sets do not cover every antenna");
}

SubArrayLayout SubArrayLayout::contiguous(int n_total, int q_chains) {
  if (q_chains < 1 || n_total < q_chains || n_total % q_chains != 0) {
    std::ostringstream os;
    os << "cannot split " << n_total << " antennas into " << q_chains << " equal sub-arrays";
    throw DomainError(os.str());
  }
  const int size = n_total / q_chains;
  std::vector<std::vector<int>> sets(q_chains);
  for (int q = 0; q < q_chains; ++q)
    for (int i = 0; i < size; ++i) sets[q].push_back(q * size + i);
  return SubArrayLayout(n_total, std::move(sets));
}

const std::vector<int>& SubArrayLayout::indices(int q) const {
  if (q < 0 || q >= chains()) throw DomainError("sub-array index out of range");
  return sets_[q];
}

int SubArrayLayout::owner(int antenna) const {
  if (antenna < 0 || antenna >= n_total_) throw DomainError("antenna index out of range");
  return owner_[antenna];
}

CVector steering_vector(const ArrayGeometry& geom, double angle) {
  if (!(angle > -kPi / 2 && angle <= kPi / 2)) throw DomainError("steering angle must lie in (-pi/2, pi/2]");
  if (geom.n_antennas < 1 || !(geom.spacing_over_lambda > 0))
    throw DomainError("invalid array geometry");
  return steering_vector_sine(geom.n_antennas, std::sin(angle), geom.spacing_over_lambda);
}

CVector steering_vector_sine(int n, double sine, double spacing_over_lambda) {
  CVector a(n);
  const double step = 2.0 * kPi * spacing_over_lambda * sine;
  for (int i = 0; i < n; ++i) a[i] = std::polar(1.0, step * i);
  return a;
}

CVector ps_ramp(int c, int length, const PhaseShifterSpec& ps) {
  const int levels = ps.levels();
  if (c < 0 || c >= levels) throw DomainError("phase shifter index out of range");
  CVector f(length);
  // Reduce the exponent modulo the level count so every entry is an exact PS coefficient.
  for (int i = 0; i < length; ++i) {
    const long long k = (static_cast<long long>(c) * i) % levels;
    f[i] = std::polar(1.0, 2.0 * kPi * static_cast<double>(k) / levels);
  }
  return f;
}

CVector subarray_codeword(const SubArrayLayout& layout, int q, int c, const PhaseShifterSpec& ps) {
  const CVector ramp = ps_ramp(c, layout.n_total(), ps);
  CVector f = CVector::Zero(layout.n_total());
  for (int i : layout.indices(q)) f[i] = ramp[i];
  return f;
}

CVector antenna_selector(int index, int n) {
  if (index < 0 || index >= n) throw DomainError("antenna selector index out of range");
  CVector e = CVector::Zero(n);
  e[index] = 1.0;
  return e;
}

double ramp_pointing_sine(int c, const PhaseShifterSpec& ps) {
  const int levels = ps.levels();
  if (c < 0 || c >= levels) throw DomainError("phase shifter index out of range");
  double s = 2.0 * c / levels;
  if (s > 1.0) s -= 2.0;
  return s;
}

}  // namespace mmwce
