#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "mmwce/anm.hpp"
#include "mmwce/channel.hpp"

namespace mmwce {

struct SystemConfig {
  int n_bs = 64;           // N
  int n_ue = 8;            // M
  int chains = 8;          // Q
  int users = 8;           // K, must equal Q
  int ps_bits = 4;
  int snapshots = 2;       // T
  int pilot_length = 63;   // T_s
  double spacing_over_lambda = 0.5;
};

/// Totals over the band; per-subcarrier values are total / subcarriers.
struct PowerConfig {
  double rho_bs_total_dbm = 40.0;
  double rho_ue_total_dbm = 23.0;
  double sigma2_u_total_dbm = -89.0;
  double sigma2_b_total_dbm = -86.0;
  int subcarriers = 256;

  double rho_bs() const;    // per subcarrier, W
  double rho_ue() const;
  double sigma2_u() const;
  double sigma2_b() const;
};

enum class EstimatorKind { kOmp, kAnm, kPerfect };

struct EstimatorSpec {
  EstimatorKind kind = EstimatorKind::kPerfect;
  /// OMP dictionary size as a multiple of N (grid_size = 0) or absolute.
  int grid_factor = 1;
  int grid_size = 0;
  int omp_max_iterations = 8;
  double xi_scale = 1.0;  // ANM: xi = xi_scale * sigma_n sqrt(N log N)

  /// "omp:N", "omp:4N", "omp:128", "anm", "anm:0.5", "perfect".
  static EstimatorSpec parse(const std::string& text);
  std::string label() const;
  int dictionary_size(int n) const;
};

struct ExperimentConfig {
  SystemConfig system;
  PowerConfig powers;
  ChannelGenConfig channel;
  std::vector<EstimatorSpec> estimators;
  int drops = 200;
  /// Empty: native SNR with the configured noise power, bucketed in 2 dB bins.
  std::vector<double> snr_sweep_db;
  std::uint64_t master_seed = 1;
  AdmmOptions admm;
  bool training_noise = false;
  int threads = 0;  // 0: hardware concurrency or MMWCE_THREADS

  bool native_snr() const { return snr_sweep_db.empty(); }
  void validate() const;
  /// Default estimator list: OMP N, 2N, 4N, ANM, perfect CSI.
  static std::vector<EstimatorSpec> default_estimators();
};

/// Malformed or schema-violating config. `line` is 0 when the error is not
/// tied to a position in the text.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& what, std::string field, int line = 0)
      : std::runtime_error(what), field_(std::move(field)), line_(line) {}
  const std::string& field() const noexcept { return field_; }
  int line() const noexcept { return line_; }

 private:
  std::string field_;
  int line_;
};

ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);
nlohmann::json config_to_json(const ExperimentConfig& cfg);

/// FNV-1a over the canonical JSON dump (hex string).
std::string config_hash(const ExperimentConfig& cfg);

double dbm_to_watt(double dbm);
double watt_to_dbm(double watt);

}  // namespace mmwce
