#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "mmwce/config.hpp"
#include "mmwce/omp.hpp"
#include "mmwce/precoding.hpp"
#include "mmwce/sensing.hpp"

namespace mmwce {

struct EstimateOutcome {
  bool ok = false;
  CVector h_hat;
  int iterations = 0;
  std::string error;
  /// 3 for solver failures (ANM/OMP), 0 otherwise.
  int failure_code = 0;
  std::optional<AnmResult> anm;
  std::optional<OmpResult> omp;
};

/// Runs one estimator on an ADSS measurement. `h_true` feeds the perfect-CSI
/// baseline and may be null for the others. Dictionaries are cached by size in
/// `dictionaries` when it is non-null.
EstimateOutcome run_estimator(const EstimatorSpec& spec, const Measurement& m, const CVector* h_true,
                              const AdmmOptions& admm, std::map<int, GridDictionary>* dictionaries = nullptr);

/// Everything the UE side contributes before uplink training: its channel,
/// the trained beam and the resulting effective channel.
struct UserDraw {
  ChannelRealization channel;
  std::uint64_t channel_seed = 0;
  int ue_beam = 0;
  CVector w;
  CVector h;         // effective channel H^H w
  double snr_db = 0.0;  // rho_ue ||H||_F^2 / (M N sigma2_b)
};

/// Channel draw plus Algorithm-2 UE beam training for user `index`.
UserDraw draw_user(const ExperimentConfig& cfg, std::uint64_t index);

struct NmseRow {
  int drop = 0;
  std::uint64_t seed = 0;
  double snr_db = 0.0;   // target (sweep) or measured (native)
  double bucket_db = 0.0;
  std::string estimator;
  bool ok = false;
  double nmse = 0.0;
  int iterations = 0;
  std::string error;
};

struct NmseAggregate {
  double bucket_db = 0.0;
  std::string estimator;
  int count = 0;
  int failures = 0;
  double mean_nmse = 0.0;
  double mean_nmse_db = 0.0;
};

struct NmseRecord {
  std::string config_hash;
  std::uint64_t master_seed = 0;
  bool native_snr = true;
  std::vector<NmseRow> rows;
  std::vector<NmseAggregate> aggregates;  // sorted by (bucket, estimator order)

  const NmseAggregate* find(double bucket_db, const std::string& estimator) const;
  /// Mean over all successful rows of one estimator, regardless of bucket.
  double overall_mean(const std::string& estimator) const;
  int failures() const;
};

struct SeRow {
  int group = 0;
  int user = 0;
  std::string estimator;
  bool ok = false;
  double sinr = 0.0;
  double se = 0.0;
  double nmse = 0.0;
  std::string error;
};

struct SeAggregate {
  std::string estimator;
  int groups = 0;
  int failures = 0;
  double mean_se = 0.0;
  /// 1 - mean_se / mean_se(perfect) on the groups where both succeeded.
  double se_loss = 0.0;
  double mean_nmse = 0.0;
  std::map<std::string, double> quantiles;  // "p05", "p10", ..., "p95"
  double max_zf_leakage = 0.0;
  double max_power_error = 0.0;
};

struct SeRecord {
  std::string config_hash;
  std::uint64_t master_seed = 0;
  std::vector<SeRow> rows;
  std::vector<SeAggregate> aggregates;
  /// Per estimator, SE of every user in every successful group (CDF samples).
  std::map<std::string, std::vector<double>> cdf_samples;

  const SeAggregate* find(const std::string& estimator) const;
  int failures() const;
};

/// Hook for progress reporting: (completed, total).
using ProgressFn = std::function<void(int, int)>;

/// Worker count: MMWCE_THREADS, else cfg.threads, else hardware concurrency.
int resolve_threads(const ExperimentConfig& cfg);

NmseRecord run_nmse_sweep(const ExperimentConfig& cfg, const ProgressFn& progress = {});
SeRecord run_se_evaluation(const ExperimentConfig& cfg, const ProgressFn& progress = {});

enum class ExportFormat { kCsv, kJson };

std::string nmse_csv(const NmseRecord& r);
std::string se_csv(const SeRecord& r);
/// `timestamp` is the only field that varies between identical runs.
nlohmann::json nmse_json(const NmseRecord& r, const ExperimentConfig& cfg, const std::string& timestamp = "");
nlohmann::json se_json(const SeRecord& r, const ExperimentConfig& cfg, const std::string& timestamp = "");
std::vector<NmseAggregate> nmse_aggregates_from_json(const nlohmann::json& j);
std::vector<SeAggregate> se_aggregates_from_json(const nlohmann::json& j);

void export_results(const NmseRecord& r, const ExperimentConfig& cfg, const std::string& path, ExportFormat format);
void export_results(const SeRecord& r, const ExperimentConfig& cfg, const std::string& path, ExportFormat format);

/// Lower edge of the 2 dB bucket holding `snr_db`.
double snr_bucket(double snr_db, double width_db = 2.0);

}  // namespace mmwce
