#include "mmwce/sensing.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "mmwce/rng.hpp"

namespace mmwce {

CVector zadoff_chu(int root, int length) {
  if (length < 1 || length % 2 == 0) throw DomainError("Zadoff-Chu length must be odd and positive");
  if (root < 1 || std::gcd(root, length) != 1) throw DomainError("Zadoff-Chu root must be coprime with the length");
  CVector s(length);
  for (int n = 0; n < length; ++n) {
    // Reduce root*n*(n+1) modulo 2*length before scaling to keep the phase exact.
    const long long k = (static_cast<long long>(root) * n * (n + 1)) % (2LL * length);
    s[n] = std::polar(1.0, -kPi * static_cast<double>(k) / length);
  }
  return s;
}

CMatrix PilotSet::gram() const {
  const auto k = static_cast<Eigen::Index>(sequences.size());
  CMatrix g(k, k);
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = 0; j < k; ++j) g(i, j) = sequences[j].dot(sequences[i]);  // s_i s_j^H
  return g;
}

PilotSet build_pilots(int users, int length, double rho_ue, int root) {
  if (users < 1 || users > length) throw DomainError("pilot count must be in 1..length");
  if (!(rho_ue > 0.0)) throw DomainError("pilot power must be positive");
  const CVector base = zadoff_chu(root, length) * std::sqrt(rho_ue);
  PilotSet set;
  set.length = length;
  set.rho_ue = rho_ue;
  const int spacing = length / users;
  for (int k = 0; k < users; ++k) {
    const int shift = k * spacing;
    CVector s(length);
    for (int n = 0; n < length; ++n) s[n] = base[(n + shift) % length];
    set.sequences.push_back(std::move(s));
    set.shifts.push_back(shift);
  }
  return set;
}

std::vector<int> SensingPlan::omega() const {
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(measurements()));
  for (const auto& row : antenna_indices) out.insert(out.end(), row.begin(), row.end());
  return out;
}

void SensingPlan::validate(const SubArrayLayout* layout) const {
  if (n_antennas < 1) throw PlanError("sensing plan without antennas");
  if (antenna_indices.empty()) throw PlanError("sensing plan without snapshots");
  if (!(scale > 0.0)) throw PlanError("sensing plan scale must be positive");
  const std::size_t q = antenna_indices.front().size();
  for (const auto& row : antenna_indices) {
    if (row.size() != q || q == 0) throw PlanError("sensing plan rows must have one index per chain");
    std::set<int> seen;
    for (std::size_t c = 0; c < row.size(); ++c) {
      const int i = row[c];
      if (i < 0 || i >= n_antennas) throw PlanError("sensing plan antenna index out of range");
      if (!seen.insert(i).second) throw PlanError("antenna sampled twice within one snapshot");
      if (layout && layout->owner(i) != static_cast<int>(c))
        throw PlanError("chain can only reach antennas of its own sub-array");
    }
  }
}

SensingPlan build_sensing_plan(const SubArrayLayout& layout, int snapshots, double scale, std::uint64_t seed,
                               bool allow_repeats) {
  if (snapshots < 1) throw PlanError("at least one snapshot is required");
  if (!(scale > 0.0)) throw PlanError("sensing scale must be positive");
  Rng rng(seed);
  const int chains = layout.chains();
  std::vector<std::vector<int>> per_chain(chains);
  for (int q = 0; q < chains; ++q) {
    std::vector<int> pool = layout.indices(q);
    const int size = static_cast<int>(pool.size());
    if (!allow_repeats) {
      if (snapshots > size) {
        std::ostringstream os;
        os << "cannot take " << snapshots << " distinct samples from a sub-array of " << size << " antennas";
        throw PlanError(os.str());
      }
      // Partial Fisher-Yates: the first `snapshots` entries are a uniform draw without replacement.
      for (int t = 0; t < snapshots; ++t) {
        const int j = t + static_cast<int>(rng() % static_cast<std::uint64_t>(size - t));
        std::swap(pool[t], pool[j]);
        per_chain[q].push_back(pool[t]);
      }
    } else {
      for (int t = 0; t < snapshots; ++t)
        per_chain[q].push_back(pool[rng() % static_cast<std::uint64_t>(size)]);
    }
  }
  SensingPlan plan;
  plan.n_antennas = layout.n_total();
  plan.scale = scale;
  plan.antenna_indices.assign(snapshots, std::vector<int>(chains));
  for (int t = 0; t < snapshots; ++t)
    for (int q = 0; q < chains; ++q) plan.antenna_indices[t][q] = per_chain[q][t];
  return plan;
}

CMatrix sensing_matrix(const SensingPlan& plan) {
  plan.validate();
  const std::vector<int> omega = plan.omega();
  CMatrix phi = CMatrix::Zero(static_cast<Eigen::Index>(omega.size()), plan.n_antennas);
  for (std::size_t w = 0; w < omega.size(); ++w) phi(static_cast<Eigen::Index>(w), omega[w]) = plan.scale;
  return phi;
}

Measurement simulate_measurement(const SensingPlan& plan, const CVector& h, double sigma2_b, std::uint64_t seed,
                                 const CVector& pilot) {
  auto out = multiuser_training_round(plan, {h}, {pilot}, sigma2_b, seed);
  return std::move(out.front());
}

std::vector<Measurement> multiuser_training_round(const SensingPlan& plan, const std::vector<CVector>& channels,
                                                  const std::vector<CVector>& pilots, double sigma2_b,
                                                  std::uint64_t seed) {
  plan.validate();
  if (channels.size() != pilots.size() || channels.empty())
    throw ContractViolation("training round needs one pilot per user");
  if (sigma2_b < 0.0) throw DomainError("noise power must be nonnegative");
  const Eigen::Index ts = pilots.front().size();
  for (const auto& s : pilots) {
    if (s.size() != ts) throw ContractViolation("pilots must share one length");
    if (std::abs(s.squaredNorm() - plan.scale) > 1e-9 * plan.scale)
      throw ContractViolation("pilot energy must equal the sensing scale T_s * rho_ue");
  }
  for (const auto& h : channels) {
    if (h.size() != plan.n_antennas) throw ContractViolation("channel length does not match the sensing plan");
    require_finite(h, "effective channel");
  }

  const std::vector<int> omega = plan.omega();
  const auto w_count = static_cast<Eigen::Index>(omega.size());

  // Received samples per selected antenna and pilot symbol: rows of F^H (sum_k h_k s_k + N_b).
  Rng rng(seed);
  CMatrix y(w_count, ts);
  for (Eigen::Index w = 0; w < w_count; ++w)
    for (Eigen::Index n = 0; n < ts; ++n) y(w, n) = sigma2_b > 0.0 ? complex_normal(rng, sigma2_b) : Complex(0.0);
  for (std::size_t k = 0; k < channels.size(); ++k)
    for (Eigen::Index w = 0; w < w_count; ++w) y.row(w) += channels[k][omega[w]] * pilots[k].transpose();

  std::vector<Measurement> out;
  out.reserve(channels.size());
  for (std::size_t k = 0; k < channels.size(); ++k) {
    const CVector sk_conj = pilots[k].conjugate();
    Measurement m;
    m.plan = plan;
    m.noise_power = sigma2_b * plan.scale;
    m.z = y * sk_conj;
    m.interference = CVector::Zero(w_count);
    for (std::size_t j = 0; j < channels.size(); ++j) {
      if (j == k) continue;
      const Complex cross = pilots[k].dot(pilots[j]);  // s_j s_k^H
      for (Eigen::Index w = 0; w < w_count; ++w) m.interference[w] += channels[j][omega[w]] * cross;
    }
    out.push_back(std::move(m));
  }
  return out;
}

}  // namespace mmwce
