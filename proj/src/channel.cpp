#include "mmwce/channel.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mmwce/array.hpp"
#include "mmwce/rng.hpp"

namespace mmwce {

namespace {

double from_db(double db) { return std::pow(10.0, db / 10.0); }

// Uniform in (-1, 1], optionally snapped to a G-point grid.
double draw_sine(Rng& rng, int grid_points) {
  if (grid_points > 0) {
    const auto g = static_cast<int>(rng() % static_cast<std::uint64_t>(grid_points));
    return -1.0 + 2.0 * (g + 1) / grid_points;
  }
  // Angle uniform on (-pi/2, pi/2]; sin maps it into (-1, 1].
  double angle = uniform(rng, -kPi / 2, kPi / 2);
  if (angle <= -kPi / 2) angle = kPi / 2;
  return std::sin(angle);
}

double sine_to_angle(double s) {
  s = std::clamp(s, -1.0, 1.0);
  double a = std::asin(s);
  if (a <= -kPi / 2) a = kPi / 2;
  return a;
}

}  // namespace

CMatrix ChannelRealization::path_sum() const {
  CMatrix sum = CMatrix::Zero(n_ue, n_bs);
  for (const auto& p : paths) {
    const CVector a_ue = steering_vector_sine(n_ue, std::sin(p.doa), spacing_over_lambda);
    const CVector a_bs = steering_vector_sine(n_bs, std::sin(p.dod), spacing_over_lambda);
    sum += p.gain * a_ue * a_bs.adjoint();
  }
  return sum;
}

double ChannelGenConfig::effective_min_separation() const {
  return min_angle_separation.value_or(2.0 / n_bs);
}

void ChannelGenConfig::validate() const {
  auto fail = [](const std::string& msg) { throw DomainError("channel config: " + msg); };
  if (n_bs < 1 || n_ue < 1) fail("array sizes must be positive");
  if (!(spacing_over_lambda > 0)) fail("spacing_over_lambda must be positive");
  if (min_paths < 1 || max_paths < min_paths) fail("path count range must satisfy 1 <= min <= max");
  if (!(min_distance >= 1.0) || max_distance < min_distance) fail("distance range must satisfy 1 <= min <= max");
  if (!(min_reflection > 0) || max_reflection > 1.0 || max_reflection < min_reflection)
    fail("reflection magnitudes must satisfy 0 < min <= max <= 1");
  if (max_reflection_order < 0) fail("max_reflection_order must be >= 0");
  if (effective_min_separation() < 0) fail("min_angle_separation must be >= 0");
  if (bs_grid_points < 0 || ue_grid_points < 0) fail("grid sizes must be >= 0");
  if (max_retries < 1) fail("max_retries must be >= 1");
}

double path_gain_magnitude(double distance, int reflection_order, const std::vector<double>& reflection_coeffs,
                           double g1, double g2, double g0_db) {
  if (!(distance >= 1.0)) throw DomainError("propagation distance must be at least the 1 m reference distance");
  if (reflection_order < 0 || static_cast<std::size_t>(reflection_order) != reflection_coeffs.size())
    throw DomainError("reflection coefficient count must equal the reflection order");
  if (g1 < 0 || g2 < 0) throw DomainError("element gains must be nonnegative");
  double power = from_db(g0_db) / (distance * distance) * g1 * g2;
  for (double r : reflection_coeffs) {
    if (std::abs(r) > 1.0) throw DomainError("reflection coefficient magnitude exceeds 1");
    power *= r * r;
  }
  return std::sqrt(power);
}

double bs_element_gain(double angle, double floor_db) {
  return std::max(std::cos(angle), from_db(floor_db));
}

ChannelRealization generate_channel(const ChannelGenConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Rng rng(seed);
  const int n_paths = cfg.min_paths + static_cast<int>(rng() % static_cast<std::uint64_t>(cfg.max_paths - cfg.min_paths + 1));
  const double separation = cfg.effective_min_separation();

  std::vector<double> bs_sines;
  bs_sines.reserve(n_paths);
  int attempts = 0;
  while (static_cast<int>(bs_sines.size()) < n_paths) {
    if (++attempts > cfg.max_retries) {
      std::ostringstream os;
      os << "could not place " << n_paths << " paths with sine separation " << separation << " after "
         << cfg.max_retries << " draws";
      throw ChannelGenerationError(os.str());
    }
    const double s = draw_sine(rng, cfg.bs_grid_points);
    const bool ok = std::all_of(bs_sines.begin(), bs_sines.end(), [&](double o) {
      // Sines wrap with period 2 in the steering phase when d = lambda/2.
      double d = std::abs(s - o);
      if (cfg.spacing_over_lambda == 0.5) d = std::min(d, 2.0 - d);
      return d >= separation;
    });
    if (ok) bs_sines.push_back(s);
  }

  ChannelRealization ch;
  ch.n_bs = cfg.n_bs;
  ch.n_ue = cfg.n_ue;
  ch.spacing_over_lambda = cfg.spacing_over_lambda;
  for (int l = 0; l < n_paths; ++l) {
    PathParams p;
    p.dod = sine_to_angle(bs_sines[l]);
    p.doa = sine_to_angle(draw_sine(rng, cfg.ue_grid_points));
    p.reflection_order = static_cast<int>(rng() % static_cast<std::uint64_t>(cfg.max_reflection_order + 1));
    for (int r = 0; r < p.reflection_order; ++r) p.reflection_coeffs.push_back(uniform(rng, cfg.min_reflection, cfg.max_reflection));
    p.distance = uniform(rng, cfg.min_distance, cfg.max_distance);
    p.phase = uniform(rng, 0.0, 2.0 * kPi);
    const double mag = path_gain_magnitude(p.distance, p.reflection_order, p.reflection_coeffs, 1.0,
                                           bs_element_gain(p.dod, cfg.bs_pattern_floor_db), cfg.g0_db);
    p.gain = std::polar(mag, p.phase);
    ch.paths.push_back(std::move(p));
  }
  ch.h = ch.path_sum();
  return ch;
}

CVector effective_channel(const ChannelRealization& ch, const CVector& w) {
  if (w.size() != ch.h.rows()) throw ContractViolation("combiner length does not match UE array size");
  if (w.norm() > 1.0 + 1e-12) throw DomainError("UE combiner violates ||w|| <= 1");
  return ch.h.adjoint() * w;
}

CVector effective_path_coefficients(const ChannelRealization& ch, const CVector& w) {
  if (w.size() != ch.n_ue) throw ContractViolation("combiner length does not match UE array size");
  CVector beta(static_cast<Eigen::Index>(ch.paths.size()));
  for (std::size_t l = 0; l < ch.paths.size(); ++l) {
    const CVector a_ue = steering_vector_sine(ch.n_ue, std::sin(ch.paths[l].doa), ch.spacing_over_lambda);
    beta[static_cast<Eigen::Index>(l)] = std::conj(ch.paths[l].gain * w.dot(a_ue));
  }
  return beta;
}

double nmse(const CVector& h_true, const CVector& h_est) {
  if (h_true.size() != h_est.size()) throw ContractViolation("nmse: length mismatch");
  const double denom = h_true.squaredNorm();
  if (!(denom > 0.0)) throw DomainError("nmse: true channel is zero");
  return (h_true - h_est).squaredNorm() / denom;
}

double channel_snr(const CMatrix& h, double rho_ue, double sigma2_b) {
  if (!(sigma2_b > 0.0)) throw DomainError("channel_snr: noise power must be positive");
  const double num = rho_ue * h.squaredNorm();
  if (!(num > 0.0)) throw DomainError("channel_snr: zero received power");
  return num / (static_cast<double>(h.rows()) * static_cast<double>(h.cols()) * sigma2_b);
}

}  // namespace mmwce
