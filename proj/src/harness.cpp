#include "mmwce/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include "mmwce/rng.hpp"

namespace mmwce {

using nlohmann::json;

// ---------------------------------------------------------------- estimators

EstimateOutcome run_estimator(const EstimatorSpec& spec, const Measurement& m, const CVector* h_true,
                              const AdmmOptions& admm, std::map<int, GridDictionary>* dictionaries) {
  EstimateOutcome out;
  const int n = m.plan.n_antennas;
  switch (spec.kind) {
    case EstimatorKind::kPerfect:
      if (h_true == nullptr) throw ContractViolation("perfect CSI needs the true channel");
      out.h_hat = *h_true;
      out.ok = true;
      return out;
    case EstimatorKind::kOmp: {
      const int g = spec.dictionary_size(n);
      GridDictionary local;
      const GridDictionary* dict = nullptr;
      if (dictionaries != nullptr) {
        auto it = dictionaries->find(g);
        if (it == dictionaries->end()) it = dictionaries->emplace(g, build_grid_dictionary(n, g)).first;
        dict = &it->second;
      } else {
        local = build_grid_dictionary(n, g);
        dict = &local;
      }
      OmpOptions opt;
      opt.residual_threshold = default_omp_threshold(m);
      opt.max_iterations = spec.omp_max_iterations;
      try {
        OmpResult r = omp_estimate_channel(m, *dict, opt);
        out.h_hat = r.h_hat;
        out.iterations = r.iterations;
        out.omp = std::move(r);
        out.ok = true;
      } catch (const OmpError& e) {
        out.error = e.what();
        out.failure_code = 3;
      }
      return out;
    }
    case EstimatorKind::kAnm: {
      AnmOptions opt;
      opt.admm = admm;
      try {
        AnmResult r;
        if (m.noise_power > 0.0) {
          r = anm_denoise(AnmProblem::from_measurement(m, default_regularization(m, spec.xi_scale)), opt);
        } else {
          AnmProblem p = AnmProblem::from_measurement(m, 1.0);
          r = anm_constrained(p, 0.0, opt);
        }
        out.h_hat = r.h_hat;
        out.iterations = r.iterations;
        out.anm = std::move(r);
        out.ok = true;
      } catch (const AnmError& e) {
        out.error = e.what();
        out.failure_code = 3;
      }
      return out;
    }
  }
  return out;
}

// ---------------------------------------------------------------- drops

namespace {

SubArrayLayout layout_of(const ExperimentConfig& cfg) {
  return SubArrayLayout::contiguous(cfg.system.n_bs, cfg.system.chains);
}

double sigma2_for_snr(const CMatrix& h, double rho_ue, double snr_db) {
  const double denom = static_cast<double>(h.rows() * h.cols()) * std::pow(10.0, snr_db / 10.0);
  return rho_ue * h.squaredNorm() / denom;
}

double to_db(double x) { return 10.0 * std::log10(x); }

template <typename Job>
void run_pool(int tasks, int threads, const ProgressFn& progress, Job job) {
  std::atomic<int> next{0};
  std::atomic<int> done{0};
  std::mutex progress_mutex;
  auto worker = [&]() {
    for (int i = next++; i < tasks; i = next++) {
      job(i);
      const int d = ++done;
      if (progress) {
        std::lock_guard<std::mutex> lock(progress_mutex);
        progress(d, tasks);
      }
    }
  };
  threads = std::max(1, std::min(threads, tasks));
  if (threads == 1) {
    worker();
    return;
  }
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
}

}  // namespace

int resolve_threads(const ExperimentConfig& cfg) {
  if (const char* env = std::getenv("MMWCE_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<int>(v);
  }
  if (cfg.threads > 0) return cfg.threads;
  return std::max(1u, std::thread::hardware_concurrency());
}

double snr_bucket(double snr_db, double width_db) { return width_db * std::floor(snr_db / width_db); }

UserDraw draw_user(const ExperimentConfig& cfg, std::uint64_t index) {
  UserDraw u;
  u.channel_seed = derive_seed(cfg.master_seed, SeedStream::kChannel, index);
  u.channel = generate_channel(cfg.channel, u.channel_seed);
  const PhaseShifterSpec ps{cfg.system.ps_bits};
  const UeCodebook codebook = build_ue_codebook(cfg.system.n_ue, ps);
  const BsTrainingBeams training = build_bs_training_beams(layout_of(cfg), ps);
  TrainingNoise noise{cfg.training_noise, derive_seed(cfg.master_seed, SeedStream::kTrainingNoise, index)};
  const RMatrix powers = received_power_matrix(u.channel.h, training, codebook,
                                               cfg.powers.rho_bs() / cfg.system.users, cfg.powers.sigma2_u(), noise);
  u.ue_beam = select_ue_beam(powers).index;
  u.w = codebook.beams.col(u.ue_beam);
  u.h = effective_channel(u.channel, u.w);
  u.snr_db = to_db(channel_snr(u.channel.h, cfg.powers.rho_ue(), cfg.powers.sigma2_b()));
  return u;
}

// ---------------------------------------------------------------- NMSE sweep

const NmseAggregate* NmseRecord::find(double bucket_db, const std::string& estimator) const {
  for (const auto& a : aggregates)
    if (a.bucket_db == bucket_db && a.estimator == estimator) return &a;
  return nullptr;
}

double NmseRecord::overall_mean(const std::string& estimator) const {
  double sum = 0.0;
  int count = 0;
  for (const auto& r : rows)
    if (r.estimator == estimator && r.ok) {
      sum += r.nmse;
      ++count;
    }
  return count > 0 ? sum / count : std::numeric_limits<double>::quiet_NaN();
}

int NmseRecord::failures() const {
  return static_cast<int>(std::count_if(rows.begin(), rows.end(), [](const NmseRow& r) { return !r.ok; }));
}

NmseRecord run_nmse_sweep(const ExperimentConfig& cfg, const ProgressFn& progress) {
  cfg.validate();
  const SubArrayLayout layout = layout_of(cfg);
  const PilotSet pilots = build_pilots(cfg.system.users, cfg.system.pilot_length, cfg.powers.rho_ue());
  const double scale = pilots.gram_scale();
  const std::vector<double> points = cfg.native_snr() ? std::vector<double>{0.0} : cfg.snr_sweep_db;
  const std::size_t per_drop = points.size() * cfg.estimators.size();

  std::vector<NmseRow> rows(static_cast<std::size_t>(cfg.drops) * per_drop);
  run_pool(cfg.drops, resolve_threads(cfg), progress, [&](int drop) {
    std::map<int, GridDictionary> dictionaries;
    const UserDraw user = draw_user(cfg, static_cast<std::uint64_t>(drop));
    const SensingPlan plan = build_sensing_plan(layout, cfg.system.snapshots, scale,
                                                derive_seed(cfg.master_seed, SeedStream::kSensingPlan, drop));
    const std::uint64_t noise_seed = derive_seed(cfg.master_seed, SeedStream::kUplinkNoise, drop);
    for (std::size_t s = 0; s < points.size(); ++s) {
      const double sigma2 =
          cfg.native_snr() ? cfg.powers.sigma2_b() : sigma2_for_snr(user.channel.h, cfg.powers.rho_ue(), points[s]);
      const double snr = cfg.native_snr() ? user.snr_db : points[s];
      const Measurement m = simulate_measurement(plan, user.h, sigma2, noise_seed, pilots.sequences.front());
      for (std::size_t e = 0; e < cfg.estimators.size(); ++e) {
        NmseRow& row = rows[static_cast<std::size_t>(drop) * per_drop + s * cfg.estimators.size() + e];
        row.drop = drop;
        row.seed = user.channel_seed;
        row.snr_db = snr;
        row.bucket_db = cfg.native_snr() ? snr_bucket(snr) : snr;
        row.estimator = cfg.estimators[e].label();
        const EstimateOutcome est = run_estimator(cfg.estimators[e], m, &user.h, cfg.admm, &dictionaries);
        row.ok = est.ok;
        row.iterations = est.iterations;
        row.error = est.error;
        if (est.ok) row.nmse = nmse(user.h, est.h_hat);
      }
    }
  });

  NmseRecord rec;
  rec.config_hash = config_hash(cfg);
  rec.master_seed = cfg.master_seed;
  rec.native_snr = cfg.native_snr();
  rec.rows = std::move(rows);

  // Reduce in a fixed order: bucket, then configured estimator order, then drop.
  std::vector<double> buckets;
  for (const auto& r : rec.rows) buckets.push_back(r.bucket_db);
  std::sort(buckets.begin(), buckets.end());
  buckets.erase(std::unique(buckets.begin(), buckets.end()), buckets.end());
  for (double b : buckets) {
    for (const EstimatorSpec& spec : cfg.estimators) {
      NmseAggregate a;
      a.bucket_db = b;
      a.estimator = spec.label();
      double sum = 0.0;
      for (const auto& r : rec.rows) {
        if (r.bucket_db != b || r.estimator != a.estimator) continue;
        if (!r.ok) {
          ++a.failures;
          continue;
        }
        sum += r.nmse;
        ++a.count;
      }
      if (a.count == 0 && a.failures == 0) continue;
      a.mean_nmse = a.count > 0 ? sum / a.count : std::numeric_limits<double>::quiet_NaN();
      a.mean_nmse_db = a.mean_nmse > 0.0 ? to_db(a.mean_nmse) : -std::numeric_limits<double>::infinity();
      rec.aggregates.push_back(a);
    }
  }
  return rec;
}

// ---------------------------------------------------------------- SE evaluation

const SeAggregate* SeRecord::find(const std::string& estimator) const {
  for (const auto& a : aggregates)
    if (a.estimator == estimator) return &a;
  return nullptr;
}

int SeRecord::failures() const {
  int f = 0;
  for (const auto& a : aggregates) f += a.failures;
  return f;
}

namespace {

struct GroupResult {
  std::vector<SeRow> rows;  // estimator-major, user-minor
  std::vector<double> zf_leakage;
  std::vector<double> power_error;
};

double quantile(std::vector<double> v, double p) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const double pos = p * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

}  // namespace

SeRecord run_se_evaluation(const ExperimentConfig& cfg, const ProgressFn& progress) {
  cfg.validate();
  const int k_count = cfg.system.users;
  const SubArrayLayout layout = layout_of(cfg);
  const PhaseShifterSpec ps{cfg.system.ps_bits};
  const PilotSet pilots = build_pilots(k_count, cfg.system.pilot_length, cfg.powers.rho_ue());
  const double rho_bs_user = cfg.powers.rho_bs() / k_count;
  const std::size_t e_count = cfg.estimators.size();

  std::vector<GroupResult> groups(static_cast<std::size_t>(cfg.drops));
  run_pool(cfg.drops, resolve_threads(cfg), progress, [&](int g) {
    std::map<int, GridDictionary> dictionaries;
    std::vector<UserDraw> users;
    std::vector<CVector> h;
    std::vector<CMatrix> h_full;
    CMatrix w(cfg.system.n_ue, k_count);
    for (int k = 0; k < k_count; ++k) {
      users.push_back(draw_user(cfg, static_cast<std::uint64_t>(g) * k_count + k));
      h.push_back(users.back().h);
      h_full.push_back(users.back().channel.h);
      w.col(k) = users.back().w;
    }
    double sigma2 = cfg.powers.sigma2_b();
    if (!cfg.native_snr()) {
      // Operating point relative to the group's mean channel power.
      double mean_power = 0.0;
      for (const auto& hf : h_full) mean_power += hf.squaredNorm() / static_cast<double>(hf.size());
      mean_power /= k_count;
      sigma2 = cfg.powers.rho_ue() * mean_power / std::pow(10.0, cfg.snr_sweep_db.front() / 10.0);
    }
    const SensingPlan plan = build_sensing_plan(layout, cfg.system.snapshots, pilots.gram_scale(),
                                                derive_seed(cfg.master_seed, SeedStream::kSensingPlan, g));
    const std::vector<Measurement> meas = multiuser_training_round(
        plan, h, pilots.sequences, sigma2, derive_seed(cfg.master_seed, SeedStream::kUplinkNoise, g));

    GroupResult& res = groups[static_cast<std::size_t>(g)];
    res.zf_leakage.assign(e_count, 0.0);
    res.power_error.assign(e_count, 0.0);
    for (std::size_t e = 0; e < e_count; ++e) {
      const std::string label = cfg.estimators[e].label();
      std::vector<CVector> h_hat;
      std::vector<double> errs;
      std::string failure;
      for (int k = 0; k < k_count && failure.empty(); ++k) {
        const EstimateOutcome est = run_estimator(cfg.estimators[e], meas[static_cast<std::size_t>(k)],
                                                  &h[static_cast<std::size_t>(k)], cfg.admm, &dictionaries);
        if (!est.ok) {
          failure = est.error;
          break;
        }
        errs.push_back(nmse(h[static_cast<std::size_t>(k)], est.h_hat));
        h_hat.push_back(est.h_hat);
      }
      std::vector<double> sinr(static_cast<std::size_t>(k_count), 0.0), se(static_cast<std::size_t>(k_count), 0.0);
      if (failure.empty()) {
        try {
          PrecodingSolution sol = design_precoder(h_hat, layout, ps);
          sol.w = w;
          for (const auto& u : users) sol.ue_beam_index.push_back(u.ue_beam);
          evaluate_downlink(h_full, sol, rho_bs_user, cfg.powers.sigma2_u());
          sinr = sol.sinr;
          se = sol.se;
          res.zf_leakage[e] = zf_leakage(stack_channels(h_hat), sol.f_rf, sol.p_bb);
          res.power_error[e] = power_constraint_error(sol.f_rf, sol.p_bb);
        } catch (const ConditioningError& err) {
          failure = err.what();
        }
      }
      for (int k = 0; k < k_count; ++k) {
        SeRow row;
        row.group = g;
        row.user = k;
        row.estimator = label;
        row.ok = failure.empty();
        row.error = failure;
        if (row.ok) {
          row.sinr = sinr[static_cast<std::size_t>(k)];
          row.se = se[static_cast<std::size_t>(k)];
          row.nmse = errs[static_cast<std::size_t>(k)];
        }
        res.rows.push_back(std::move(row));
      }
    }
  });

  SeRecord rec;
  rec.config_hash = config_hash(cfg);
  rec.master_seed = cfg.master_seed;
  for (const auto& g : groups)
    for (const auto& r : g.rows) rec.rows.push_back(r);

  // Groups where perfect CSI succeeded define the loss baseline.
  std::optional<std::size_t> perfect_index;
  for (std::size_t e = 0; e < e_count; ++e)
    if (cfg.estimators[e].kind == EstimatorKind::kPerfect) perfect_index = e;

  auto group_ok = [&](const GroupResult& g, std::size_t e) {
    return g.rows[e * static_cast<std::size_t>(k_count)].ok;
  };
  auto group_se = [&](const GroupResult& g, std::size_t e) {
    double s = 0.0;
    for (int k = 0; k < k_count; ++k) s += g.rows[e * static_cast<std::size_t>(k_count) + k].se;
    return s;
  };

  for (std::size_t e = 0; e < e_count; ++e) {
    SeAggregate a;
    a.estimator = cfg.estimators[e].label();
    std::vector<double> samples;
    double se_sum = 0.0, nmse_sum = 0.0;
    double est_common = 0.0, ref_common = 0.0;
    for (const auto& g : groups) {
      if (!group_ok(g, e)) {
        ++a.failures;
        continue;
      }
      ++a.groups;
      for (int k = 0; k < k_count; ++k) {
        const SeRow& r = g.rows[e * static_cast<std::size_t>(k_count) + k];
        samples.push_back(r.se);
        se_sum += r.se;
        nmse_sum += r.nmse;
      }
      a.max_zf_leakage = std::max(a.max_zf_leakage, g.zf_leakage[e]);
      a.max_power_error = std::max(a.max_power_error, g.power_error[e]);
      if (perfect_index && group_ok(g, *perfect_index)) {
        est_common += group_se(g, e);
        ref_common += group_se(g, *perfect_index);
      }
    }
    const double n_samples = static_cast<double>(samples.size());
    a.mean_se = n_samples > 0 ? se_sum / n_samples : std::numeric_limits<double>::quiet_NaN();
    a.mean_nmse = n_samples > 0 ? nmse_sum / n_samples : std::numeric_limits<double>::quiet_NaN();
    a.se_loss = ref_common > 0.0 ? 1.0 - est_common / ref_common : std::numeric_limits<double>::quiet_NaN();
    for (double p : {0.05, 0.10, 0.25, 0.50, 0.75, 0.90, 0.95}) {
      std::ostringstream key;
      key << 'p' << std::setw(2) << std::setfill('0') << static_cast<int>(std::lround(p * 100));
      a.quantiles[key.str()] = quantile(samples, p);
    }
    rec.cdf_samples[a.estimator] = std::move(samples);
    rec.aggregates.push_back(std::move(a));
  }
  return rec;
}

// ---------------------------------------------------------------- export

namespace {

std::string num(double x) {
  std::ostringstream os;
  os << std::setprecision(17) << x;
  return os.str();
}

std::string csv_text(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c == '\n' ? ' ' : c;
  }
  return out + "\"";
}

json nan_safe(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

double from_nan_safe(const json& j) {
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << content;
  if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

}  // namespace

std::string nmse_csv(const NmseRecord& r) {
  std::ostringstream os;
  os << "config_hash,master_seed,drop,channel_seed,snr_db,bucket_db,estimator,status,nmse,iterations,error\n";
  for (const NmseRow& row : r.rows) {
    os << r.config_hash << ',' << r.master_seed << ',' << row.drop << ',' << row.seed << ',' << num(row.snr_db) << ','
       << num(row.bucket_db) << ',' << row.estimator << ',' << (row.ok ? "ok" : "failed") << ','
       << (row.ok ? num(row.nmse) : "") << ',' << row.iterations << ',' << csv_text(row.error) << '\n';
  }
  return os.str();
}

std::string se_csv(const SeRecord& r) {
  std::ostringstream os;
  os << "config_hash,master_seed,group,user,estimator,status,sinr,se,nmse,error\n";
  for (const SeRow& row : r.rows) {
    os << r.config_hash << ',' << r.master_seed << ',' << row.group << ',' << row.user << ',' << row.estimator << ','
       << (row.ok ? "ok" : "failed") << ',' << (row.ok ? num(row.sinr) : "") << ',' << (row.ok ? num(row.se) : "")
       << ',' << (row.ok ? num(row.nmse) : "") << ',' << csv_text(row.error) << '\n';
  }
  return os.str();
}

json nmse_json(const NmseRecord& r, const ExperimentConfig& cfg, const std::string& timestamp) {
  json aggs = json::array();
  for (const auto& a : r.aggregates)
    aggs.push_back({{"bucket_db", a.bucket_db},
                    {"estimator", a.estimator},
                    {"count", a.count},
                    {"failures", a.failures},
                    {"mean_nmse", nan_safe(a.mean_nmse)},
                    {"mean_nmse_db", nan_safe(a.mean_nmse_db)}});
  json j = {{"kind", "nmse-sweep"},
            {"config", config_to_json(cfg)},
            {"config_hash", r.config_hash},
            {"master_seed", r.master_seed},
            {"snr_mode", r.native_snr ? "native" : "sweep"},
            {"failures", r.failures()},
            {"aggregates", aggs}};
  if (!timestamp.empty()) j["generated_at"] = timestamp;
  return j;
}

json se_json(const SeRecord& r, const ExperimentConfig& cfg, const std::string& timestamp) {
  json aggs = json::array();
  for (const auto& a : r.aggregates) {
    json q = json::object();
    for (const auto& [k, v] : a.quantiles) q[k] = nan_safe(v);
    aggs.push_back({{"estimator", a.estimator},
                    {"groups", a.groups},
                    {"failures", a.failures},
                    {"mean_se", nan_safe(a.mean_se)},
                    {"se_loss", nan_safe(a.se_loss)},
                    {"mean_nmse", nan_safe(a.mean_nmse)},
                    {"quantiles", q},
                    {"max_zf_leakage", a.max_zf_leakage},
                    {"max_power_error", a.max_power_error}});
  }
  json j = {{"kind", "se-eval"},
            {"config", config_to_json(cfg)},
            {"config_hash", r.config_hash},
            {"master_seed", r.master_seed},
            {"failures", r.failures()},
            {"aggregates", aggs}};
  if (!timestamp.empty()) j["generated_at"] = timestamp;
  return j;
}

std::vector<NmseAggregate> nmse_aggregates_from_json(const json& j) {
  std::vector<NmseAggregate> out;
  for (const json& a : j.at("aggregates")) {
    NmseAggregate x;
    x.bucket_db = a.at("bucket_db").get<double>();
    x.estimator = a.at("estimator").get<std::string>();
    x.count = a.at("count").get<int>();
    x.failures = a.at("failures").get<int>();
    x.mean_nmse = from_nan_safe(a.at("mean_nmse"));
    x.mean_nmse_db = a.at("mean_nmse_db").is_null() ? -std::numeric_limits<double>::infinity()
                                                    : a.at("mean_nmse_db").get<double>();
    out.push_back(std::move(x));
  }
  return out;
}

std::vector<SeAggregate> se_aggregates_from_json(const json& j) {
  std::vector<SeAggregate> out;
  for (const json& a : j.at("aggregates")) {
    SeAggregate x;
    x.estimator = a.at("estimator").get<std::string>();
    x.groups = a.at("groups").get<int>();
    x.failures = a.at("failures").get<int>();
    x.mean_se = from_nan_safe(a.at("mean_se"));
    x.se_loss = from_nan_safe(a.at("se_loss"));
    x.mean_nmse = from_nan_safe(a.at("mean_nmse"));
    for (auto it = a.at("quantiles").begin(); it != a.at("quantiles").end(); ++it)
      x.quantiles[it.key()] = from_nan_safe(it.value());
    x.max_zf_leakage = a.at("max_zf_leakage").get<double>();
    x.max_power_error = a.at("max_power_error").get<double>();
    out.push_back(std::move(x));
  }
  return out;
}

namespace {

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

void export_results(const NmseRecord& r, const ExperimentConfig& cfg, const std::string& path, ExportFormat format) {
  write_file(path, format == ExportFormat::kCsv ? nmse_csv(r) : nmse_json(r, cfg, utc_timestamp()).dump(2) + "\n");
}

void export_results(const SeRecord& r, const ExperimentConfig& cfg, const std::string& path, ExportFormat format) {
  write_file(path, format == ExportFormat::kCsv ? se_csv(r) : se_json(r, cfg, utc_timestamp()).dump(2) + "\n");
}

}  // namespace mmwce
