// mmwce: command line front end for the channel-estimation experiments.
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "mmwce/config.hpp"
#include "mmwce/harness.hpp"
#include "mmwce/rng.hpp"
#include "mmwce/serialize.hpp"
#include "mmwce/validation.hpp"

namespace {

using mmwce::ConfigError;
using mmwce::ExperimentConfig;
using nlohmann::json;

constexpr int kExitConfig = 2;
constexpr int kExitSolver = 3;

struct CommonArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string format = "csv";
  std::vector<std::string> estimators;
  std::optional<int> drops;
  std::optional<int> threads;
  bool quiet = false;
};

void add_common(CLI::App* sub, CommonArgs& a) {
  sub->add_option("--config", a.config, "JSON experiment config (defaults apply when omitted)");
  sub->add_option("--seed", a.seed, "Master seed (overrides the config)");
  sub->add_option("--out", a.out, "Output file (stdout when omitted)");
  sub->add_option("--format", a.format, "Output format")->check(CLI::IsMember({"csv", "json"}));
  sub->add_option("--estimator", a.estimators, "Estimator, repeatable: omp:N, omp:2N, omp:4N, omp:<G>, anm[:scale], perfect");
  sub->add_option("--drops", a.drops, "Number of drops (nmse-sweep) or user groups (se-eval)");
  sub->add_option("--threads", a.threads, "Worker threads (MMWCE_THREADS still takes precedence)");
  sub->add_flag("--quiet", a.quiet, "No progress on stderr");
}

ExperimentConfig build_config(const CommonArgs& a) {
  ExperimentConfig cfg = a.config.empty() ? mmwce::parse_config("{}") : mmwce::load_config(a.config);
  if (a.seed) cfg.master_seed = *a.seed;
  if (a.drops) cfg.drops = *a.drops;
  if (a.threads) cfg.threads = *a.threads;
  if (!a.estimators.empty()) {
    cfg.estimators.clear();
    for (const auto& e : a.estimators) cfg.estimators.push_back(mmwce::EstimatorSpec::parse(e));
  }
  cfg.validate();
  return cfg;
}

mmwce::ProgressFn progress_printer(bool quiet, const char* what) {
  if (quiet) return {};
  return [what](int done, int total) {
    if (done == total || done % std::max(1, total / 20) == 0)
      std::cerr << '\r' << what << ' ' << done << '/' << total << (done == total ? "\n" : "") << std::flush;
  };
}

void emit(const std::string& text, const std::string& path) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << text;
}

mmwce::ExportFormat format_of(const std::string& f) {
  return f == "json" ? mmwce::ExportFormat::kJson : mmwce::ExportFormat::kCsv;
}

int run_nmse(const CommonArgs& a) {
  const ExperimentConfig cfg = build_config(a);
  const mmwce::NmseRecord rec = mmwce::run_nmse_sweep(cfg, progress_printer(a.quiet, "drops"));
  if (a.out.empty())
    emit(a.format == "json" ? mmwce::nmse_json(rec, cfg).dump(2) + "\n" : mmwce::nmse_csv(rec), "");
  else
    mmwce::export_results(rec, cfg, a.out, format_of(a.format));
  if (!a.quiet)
    for (const auto& ag : rec.aggregates)
      std::cerr << "snr " << ag.bucket_db << " dB  " << ag.estimator << "  mean NMSE " << ag.mean_nmse_db << " dB  ("
                << ag.count << " ok, " << ag.failures << " failed)\n";
  if (rec.failures() > 0) {
    std::cerr << "error: " << rec.failures() << " estimator runs failed\n";
    return kExitSolver;
  }
  return 0;
}

int run_se(const CommonArgs& a) {
  const ExperimentConfig cfg = build_config(a);
  const mmwce::SeRecord rec = mmwce::run_se_evaluation(cfg, progress_printer(a.quiet, "groups"));
  if (a.out.empty())
    emit(a.format == "json" ? mmwce::se_json(rec, cfg).dump(2) + "\n" : mmwce::se_csv(rec), "");
  else
    mmwce::export_results(rec, cfg, a.out, format_of(a.format));
  if (!a.quiet)
    for (const auto& ag : rec.aggregates)
      std::cerr << ag.estimator << "  mean SE " << ag.mean_se << " b/s/Hz  loss " << 100.0 * ag.se_loss << "%  ("
                << ag.groups << " groups, " << ag.failures << " failed)\n";
  if (rec.failures() > 0) {
    std::cerr << "error: " << rec.failures() << " groups failed\n";
    return kExitSolver;
  }
  return 0;
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  return json::parse(in);
}

int run_simulate(const CommonArgs& a, std::optional<double> snr_db) {
  ExperimentConfig cfg = build_config(a);
  const mmwce::UserDraw user = mmwce::draw_user(cfg, 0);
  const auto pilots = mmwce::build_pilots(cfg.system.users, cfg.system.pilot_length, cfg.powers.rho_ue());
  const auto layout = mmwce::SubArrayLayout::contiguous(cfg.system.n_bs, cfg.system.chains);
  const auto plan = mmwce::build_sensing_plan(layout, cfg.system.snapshots, pilots.gram_scale(),
                                              mmwce::derive_seed(cfg.master_seed, mmwce::SeedStream::kSensingPlan, 0));
  double sigma2 = cfg.powers.sigma2_b();
  if (snr_db) {
    const double mn = static_cast<double>(user.channel.h.size());
    sigma2 = cfg.powers.rho_ue() * user.channel.h.squaredNorm() / (mn * std::pow(10.0, *snr_db / 10.0));
  }
  const auto m = mmwce::simulate_measurement(plan, user.h, sigma2,
                                             mmwce::derive_seed(cfg.master_seed, mmwce::SeedStream::kUplinkNoise, 0),
                                             pilots.sequences.front());
  json j = {{"measurement", mmwce::to_json(m)},
            {"h_true", mmwce::to_json(user.h)},
            {"snr_db", snr_db ? *snr_db : user.snr_db},
            {"channel", mmwce::to_json(user.channel)}};
  emit(j.dump(2) + "\n", a.out);
  return 0;
}

int run_estimate(const CommonArgs& a, const std::string& input, bool trace) {
  const json doc = read_json_file(input);
  const json& mj = doc.contains("measurement") ? doc.at("measurement") : doc;
  const mmwce::Measurement m = mmwce::measurement_from_json(mj);
  std::optional<mmwce::CVector> truth;
  if (doc.contains("h_true")) truth = mmwce::cvector_from_json(doc.at("h_true"));

  ExperimentConfig cfg = a.config.empty() ? mmwce::parse_config("{}") : mmwce::load_config(a.config);
  std::vector<mmwce::EstimatorSpec> specs;
  for (const auto& e : a.estimators) specs.push_back(mmwce::EstimatorSpec::parse(e));
  if (specs.empty()) specs = {mmwce::EstimatorSpec::parse("anm")};
  mmwce::AdmmOptions admm = cfg.admm;
  admm.record_trace = trace;

  json results = json::array();
  std::ostringstream csv;
  csv << "estimator,status,nmse,iterations,error\n";
  int failures = 0;
  for (const auto& spec : specs) {
    if (spec.kind == mmwce::EstimatorKind::kPerfect && !truth)
      throw ConfigError("perfect CSI needs h_true in the input file", "estimators");
    const auto est = mmwce::run_estimator(spec, m, truth ? &*truth : nullptr, admm);
    json r = {{"estimator", spec.label()}, {"status", est.ok ? "ok" : "failed"}, {"iterations", est.iterations}};
    double err = std::nan("");
    if (est.ok) {
      r["h_hat"] = mmwce::to_json(est.h_hat);
      if (truth) err = mmwce::nmse(*truth, est.h_hat);
      if (truth) r["nmse"] = err;
      if (est.anm) r["anm"] = mmwce::to_json(*est.anm);
      if (est.omp) r["omp"] = {{"support", est.omp->support}, {"residual_history", est.omp->residual_history}};
    } else {
      ++failures;
      r["error"] = est.error;
    }
    results.push_back(r);
    csv << spec.label() << ',' << (est.ok ? "ok" : "failed") << ',' << (std::isnan(err) ? "" : std::to_string(err))
        << ',' << est.iterations << ',' << '"' << est.error << '"' << '\n';
  }
  emit(a.format == "json" ? json{{"results", results}}.dump(2) + "\n" : csv.str(), a.out);
  if (failures > 0) {
    std::cerr << "error: " << failures << " estimator(s) failed\n";
    return kExitSolver;
  }
  return 0;
}

int run_validate(std::uint64_t seed, const std::string& out) {
  std::ostringstream report;
  int failed = 0;
  mmwce::run_invariant_suite(seed, [&](const mmwce::CheckResult& r) {
    std::ostringstream line;
    line << (r.passed ? "PASS " : "FAIL ") << r.name << " (" << r.seconds << " s)";
    if (!r.passed) line << ": " << r.detail;
    std::cout << line.str() << std::endl;
    report << line.str() << '\n';
    if (!r.passed) ++failed;
  });
  if (!out.empty()) emit(report.str(), out);
  std::cout << (failed == 0 ? "all invariant checks passed" : std::to_string(failed) + " invariant check(s) failed")
            << std::endl;
  return failed == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mmWave sparse channel estimation (OMP / atomic norm) and hybrid precoding experiments"};
  app.require_subcommand(1);

  CommonArgs nmse_args, se_args, est_args, sim_args;
  auto* nmse = app.add_subcommand("nmse-sweep", "Monte-Carlo NMSE of each estimator versus SNR");
  add_common(nmse, nmse_args);
  auto* se = app.add_subcommand("se-eval", "Multi-user hybrid precoding spectral efficiency per estimator");
  add_common(se, se_args);

  auto* est = app.add_subcommand("estimate", "Estimate one effective channel from a serialized measurement");
  std::string input;
  bool trace = false;
  est->add_option("input", input, "Measurement JSON (as written by `simulate`)")->required();
  est->add_option("--config", est_args.config, "Config providing ADMM settings");
  est->add_option("--estimator", est_args.estimators, "Estimator, repeatable (default anm)");
  est->add_option("--out", est_args.out, "Output file (stdout when omitted)");
  est->add_option("--format", est_args.format, "Output format")->check(CLI::IsMember({"csv", "json"}));
  est->add_flag("--trace", trace, "Include the ADMM iteration trace in JSON output");

  auto* sim = app.add_subcommand("simulate", "Draw one user and write its ADSS measurement as JSON");
  std::optional<double> snr;
  sim->add_option("--config", sim_args.config, "JSON experiment config");
  sim->add_option("--seed", sim_args.seed, "Master seed");
  sim->add_option("--snr", snr, "Operating SNR in dB (native noise power when omitted)");
  sim->add_option("--out", sim_args.out, "Output file (stdout when omitted)");

  auto* val = app.add_subcommand("validate", "Run the invariant suite");
  std::uint64_t val_seed = 20240601;
  std::string val_out;
  val->add_option("--seed", val_seed, "Seed for the randomized checks");
  val->add_option("--out", val_out, "Also write the report to this file");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*nmse) return run_nmse(nmse_args);
    if (*se) return run_se(se_args);
    if (*est) return run_estimate(est_args, input, trace);
    if (*sim) return run_simulate(sim_args, snr);
    if (*val) return run_validate(val_seed, val_out);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const json::exception& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
