#include "mmwce/config.hpp"

#include <algorithm>
#include <climits>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

namespace mmwce {

using nlohmann::json;

double dbm_to_watt(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

double watt_to_dbm(double watt) {
  if (!(watt > 0.0)) throw DomainError("power must be positive to convert to dBm");
  return 10.0 * std::log10(watt) + 30.0;
}

double PowerConfig::rho_bs() const { return dbm_to_watt(rho_bs_total_dbm) / subcarriers; }
double PowerConfig::rho_ue() const { return dbm_to_watt(rho_ue_total_dbm) / subcarriers; }
double PowerConfig::sigma2_u() const { return dbm_to_watt(sigma2_u_total_dbm) / subcarriers; }
double PowerConfig::sigma2_b() const { return dbm_to_watt(sigma2_b_total_dbm) / subcarriers; }

// ---------------------------------------------------------------- estimators

EstimatorSpec EstimatorSpec::parse(const std::string& text) {
  auto bad = [&](const std::string& why) {
    return ConfigError("estimator '" + text + "': " + why, "estimators");
  };
  const auto colon = text.find(':');
  const std::string head = text.substr(0, colon);
  const std::string arg = colon == std::string::npos ? "" : text.substr(colon + 1);
  EstimatorSpec e;
  if (head == "perfect") {
    if (!arg.empty()) throw bad("perfect CSI takes no argument");
    e.kind = EstimatorKind::kPerfect;
    return e;
  }
  if (head == "anm") {
    e.kind = EstimatorKind::kAnm;
    if (!arg.empty()) {
      std::size_t used = 0;
      try {
        e.xi_scale = std::stod(arg, &used);
      } catch (const std::exception&) {
        throw bad("expected a numeric xi scale");
      }
      if (used != arg.size() || !(e.xi_scale > 0.0)) throw bad("xi scale must be a positive number");
    }
    return e;
  }
  if (head == "omp") {
    e.kind = EstimatorKind::kOmp;
    if (arg.empty()) return e;
    if (arg.back() == 'N') {
      const std::string mult = arg.substr(0, arg.size() - 1);
      if (mult.empty()) return e;
      std::size_t used = 0;
      try {
        e.grid_factor = std::stoi(mult, &used);
      } catch (const std::exception&) {
        throw bad("expected <k>N");
      }
      if (used != mult.size() || e.grid_factor < 1) throw bad("grid multiple must be a positive integer");
      return e;
    }
    std::size_t used = 0;
    try {
      e.grid_size = std::stoi(arg, &used);
    } catch (const std::exception&) {
      throw bad("expected a grid size like 128 or 2N");
    }
    if (used != arg.size() || e.grid_size < 1) throw bad("grid size must be a positive integer");
    return e;
  }
  throw bad("unknown estimator (use omp[:kN|:G], anm[:scale] or perfect)");
}

std::string EstimatorSpec::label() const {
  switch (kind) {
    case EstimatorKind::kPerfect:
      return "perfect";
    case EstimatorKind::kAnm: {
      if (xi_scale == 1.0) return "anm";
      std::ostringstream os;
      os << "anm:" << xi_scale;
      return os.str();
    }
    case EstimatorKind::kOmp:
      if (grid_size > 0) return "omp:" + std::to_string(grid_size);
      return grid_factor == 1 ? "omp:N" : "omp:" + std::to_string(grid_factor) + "N";
  }
  return "?";
}

int EstimatorSpec::dictionary_size(int n) const { return grid_size > 0 ? grid_size : grid_factor * n; }

std::vector<EstimatorSpec> ExperimentConfig::default_estimators() {
  return {EstimatorSpec::parse("omp:N"), EstimatorSpec::parse("omp:2N"), EstimatorSpec::parse("omp:4N"),
          EstimatorSpec::parse("anm"), EstimatorSpec::parse("perfect")};
}

void ExperimentConfig::validate() const {
  auto fail = [](const std::string& field, const std::string& msg) { throw ConfigError(field + ": " + msg, field); };
  const SystemConfig& s = system;
  if (s.n_bs < 1) fail("system.n_bs", "must be >= 1");
  if (s.n_ue < 1) fail("system.n_ue", "must be >= 1");
  if (s.chains < 1 || s.n_bs % s.chains != 0) fail("system.chains", "must be >= 1 and divide n_bs");
  if (s.users != s.chains) fail("system.users", "must equal system.chains (K = Q)");
  if (s.ps_bits < 1 || s.ps_bits > 16) fail("system.ps_bits", "must be in 1..16");
  if (s.snapshots < 1 || s.snapshots > s.n_bs / s.chains) fail("system.snapshots", "must be in 1..n_bs/chains");
  if (s.pilot_length < s.users) fail("system.pilot_length", "must be >= users");
  if (!(s.spacing_over_lambda > 0.0)) fail("system.spacing_over_lambda", "must be positive");
  if (powers.subcarriers < 1) fail("powers.subcarriers", "must be >= 1");
  if (drops < 1) fail("drops", "must be >= 1");
  if (estimators.empty()) fail("estimators", "at least one estimator is required");
  if (threads < 0) fail("threads", "must be >= 0");
  if (!(admm.rho >= 0.0)) fail("admm.rho", "must be >= 0");
  if (!(admm.abs_tol > 0.0)) fail("admm.abs_tol", "must be positive");
  if (!(admm.rel_tol >= 0.0)) fail("admm.rel_tol", "must be >= 0");
  if (admm.max_iterations < 1) fail("admm.max_iterations", "must be >= 1");
  for (double v : snr_sweep_db)
    if (!std::isfinite(v)) fail("snr_sweep", "entries must be finite");
  try {
    channel.validate();
  } catch (const DomainError& e) {
    fail("channel", e.what());
  }
}

// ---------------------------------------------------------------- parsing

namespace {

/// Best-effort line of a dotted field path: finds each quoted key in turn.
int locate_field(const std::string& text, const std::string& path) {
  std::size_t pos = 0;
  std::size_t start = 0;
  bool found = false;
  while (start <= path.size()) {
    std::size_t dot = path.find('.', start);
    if (dot == std::string::npos) dot = path.size();
    std::string key = path.substr(start, dot - start);
    const auto bracket = key.find('[');
    if (bracket != std::string::npos) key.resize(bracket);
    const std::size_t hit = text.find("\"" + key + "\"", pos);
    if (hit == std::string::npos) break;
    pos = hit;
    found = true;
    start = dot + 1;
  }
  if (!found) return 0;
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(pos), '\n'));
}

class Reader {
 public:
  explicit Reader(const std::string& text) : text_(text) {}

  [[noreturn]] void fail(const std::string& field, const std::string& msg) const {
    const int line = locate_field(text_, field);
    std::ostringstream os;
    if (line > 0) os << "line " << line << ": ";
    os << field << ": " << msg;
    throw ConfigError(os.str(), field, line);
  }

  void allow(const json& obj, const std::string& path, std::initializer_list<const char*> keys) const {
    if (!obj.is_object()) fail(path, "expected an object");
    std::set<std::string> known(keys.begin(), keys.end());
    for (auto it = obj.begin(); it != obj.end(); ++it)
      if (!known.count(it.key())) fail(join(path, it.key()), "unknown key");
  }

  void read(const json& obj, const std::string& path, const char* key, int& out) const {
    if (!obj.contains(key)) return;
    const json& v = obj.at(key);
    if (!v.is_number_integer()) fail(join(path, key), "expected an integer");
    const auto x = v.get<long long>();
    if (x < INT_MIN || x > INT_MAX) fail(join(path, key), "integer out of range");
    out = static_cast<int>(x);
  }

  void read(const json& obj, const std::string& path, const char* key, double& out) const {
    if (!obj.contains(key)) return;
    const json& v = obj.at(key);
    if (!v.is_number()) fail(join(path, key), "expected a number");
    out = v.get<double>();
  }

  void read(const json& obj, const std::string& path, const char* key, bool& out) const {
    if (!obj.contains(key)) return;
    const json& v = obj.at(key);
    if (!v.is_boolean()) fail(join(path, key), "expected true or false");
    out = v.get<bool>();
  }

  static std::string join(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
  }

 private:
  const std::string& text_;
};

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    const std::size_t byte = std::min(e.byte, text.size());
    const int line = 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(byte), '\n'));
    std::ostringstream os;
    os << "line " << line << ": malformed JSON (" << e.what() << ")";
    throw ConfigError(os.str(), "", line);
  }
  const Reader r(text);
  ExperimentConfig cfg;
  r.allow(root, "", {"system", "powers", "channel", "estimators", "drops", "snr_sweep", "master_seed", "admm",
                     "training_noise", "threads"});

  if (root.contains("system")) {
    const json& s = root["system"];
    r.allow(s, "system",
            {"n_bs", "n_ue", "chains", "users", "ps_bits", "snapshots", "pilot_length", "spacing_over_lambda"});
    r.read(s, "system", "n_bs", cfg.system.n_bs);
    r.read(s, "system", "n_ue", cfg.system.n_ue);
    r.read(s, "system", "chains", cfg.system.chains);
    r.read(s, "system", "users", cfg.system.users);
    r.read(s, "system", "ps_bits", cfg.system.ps_bits);
    r.read(s, "system", "snapshots", cfg.system.snapshots);
    r.read(s, "system", "pilot_length", cfg.system.pilot_length);
    r.read(s, "system", "spacing_over_lambda", cfg.system.spacing_over_lambda);
  }
  if (root.contains("powers")) {
    const json& p = root["powers"];
    r.allow(p, "powers",
            {"rho_bs_total_dbm", "rho_ue_total_dbm", "sigma2_u_total_dbm", "sigma2_b_total_dbm", "subcarriers"});
    r.read(p, "powers", "rho_bs_total_dbm", cfg.powers.rho_bs_total_dbm);
    r.read(p, "powers", "rho_ue_total_dbm", cfg.powers.rho_ue_total_dbm);
    r.read(p, "powers", "sigma2_u_total_dbm", cfg.powers.sigma2_u_total_dbm);
    r.read(p, "powers", "sigma2_b_total_dbm", cfg.powers.sigma2_b_total_dbm);
    r.read(p, "powers", "subcarriers", cfg.powers.subcarriers);
  }
  if (root.contains("channel")) {
    const json& c = root["channel"];
    r.allow(c, "channel",
            {"min_paths", "max_paths", "min_distance", "max_distance", "min_reflection", "max_reflection",
             "max_reflection_order", "min_angle_separation", "g0_db", "bs_pattern_floor_db", "bs_grid_points",
             "ue_grid_points", "max_retries", "carrier_hz", "bandwidth_hz"});
    ChannelGenConfig& g = cfg.channel;
    r.read(c, "channel", "min_paths", g.min_paths);
    r.read(c, "channel", "max_paths", g.max_paths);
    r.read(c, "channel", "min_distance", g.min_distance);
    r.read(c, "channel", "max_distance", g.max_distance);
    r.read(c, "channel", "min_reflection", g.min_reflection);
    r.read(c, "channel", "max_reflection", g.max_reflection);
    r.read(c, "channel", "max_reflection_order", g.max_reflection_order);
    if (c.contains("min_angle_separation") && !c["min_angle_separation"].is_null()) {
      double sep = 0.0;
      r.read(c, "channel", "min_angle_separation", sep);
      g.min_angle_separation = sep;
    }
    r.read(c, "channel", "g0_db", g.g0_db);
    r.read(c, "channel", "bs_pattern_floor_db", g.bs_pattern_floor_db);
    r.read(c, "channel", "bs_grid_points", g.bs_grid_points);
    r.read(c, "channel", "ue_grid_points", g.ue_grid_points);
    r.read(c, "channel", "max_retries", g.max_retries);
    r.read(c, "channel", "carrier_hz", g.carrier_hz);
    r.read(c, "channel", "bandwidth_hz", g.bandwidth_hz);
  }
  cfg.channel.n_bs = cfg.system.n_bs;
  cfg.channel.n_ue = cfg.system.n_ue;
  cfg.channel.spacing_over_lambda = cfg.system.spacing_over_lambda;

  if (root.contains("estimators")) {
    const json& e = root["estimators"];
    if (!e.is_array()) r.fail("estimators", "expected an array of strings");
    for (std::size_t i = 0; i < e.size(); ++i) {
      const std::string field = "estimators[" + std::to_string(i) + "]";
      if (!e[i].is_string()) r.fail(field, "expected a string such as \"omp:2N\"");
      try {
        cfg.estimators.push_back(EstimatorSpec::parse(e[i].get<std::string>()));
      } catch (const ConfigError& err) {
        r.fail(field, err.what());
      }
    }
  } else {
    cfg.estimators = ExperimentConfig::default_estimators();
  }
  r.read(root, "", "drops", cfg.drops);
  if (root.contains("snr_sweep")) {
    const json& s = root["snr_sweep"];
    if (s.is_string()) {
      if (s.get<std::string>() != "native") r.fail("snr_sweep", "expected \"native\" or a list of dB values");
    } else if (s.is_array()) {
      for (const json& v : s) {
        if (!v.is_number()) r.fail("snr_sweep", "entries must be numbers (dB)");
        cfg.snr_sweep_db.push_back(v.get<double>());
      }
      if (cfg.snr_sweep_db.empty()) r.fail("snr_sweep", "list must not be empty (use \"native\")");
    } else {
      r.fail("snr_sweep", "expected \"native\" or a list of dB values");
    }
  }
  if (root.contains("master_seed")) {
    const json& v = root["master_seed"];
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0))
      r.fail("master_seed", "expected a nonnegative integer");
    cfg.master_seed = v.get<std::uint64_t>();
  }
  if (root.contains("admm")) {
    const json& a = root["admm"];
    r.allow(a, "admm", {"rho", "abs_tol", "rel_tol", "max_iterations"});
    r.read(a, "admm", "rho", cfg.admm.rho);
    r.read(a, "admm", "abs_tol", cfg.admm.abs_tol);
    r.read(a, "admm", "rel_tol", cfg.admm.rel_tol);
    r.read(a, "admm", "max_iterations", cfg.admm.max_iterations);
  }
  r.read(root, "", "training_noise", cfg.training_noise);
  r.read(root, "", "threads", cfg.threads);

  try {
    cfg.validate();
  } catch (const ConfigError& e) {
    r.fail(e.field(), std::string(e.what()).substr(e.field().size() + 2));
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'", "");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

json config_to_json(const ExperimentConfig& cfg) {
  json j;
  const SystemConfig& s = cfg.system;
  j["system"] = {{"n_bs", s.n_bs},         {"n_ue", s.n_ue},           {"chains", s.chains},
                 {"users", s.users},       {"ps_bits", s.ps_bits},     {"snapshots", s.snapshots},
                 {"pilot_length", s.pilot_length}, {"spacing_over_lambda", s.spacing_over_lambda}};
  const PowerConfig& p = cfg.powers;
  j["powers"] = {{"rho_bs_total_dbm", p.rho_bs_total_dbm},
                 {"rho_ue_total_dbm", p.rho_ue_total_dbm},
                 {"sigma2_u_total_dbm", p.sigma2_u_total_dbm},
                 {"sigma2_b_total_dbm", p.sigma2_b_total_dbm},
                 {"subcarriers", p.subcarriers}};
  const ChannelGenConfig& c = cfg.channel;
  j["channel"] = {{"min_paths", c.min_paths},
                  {"max_paths", c.max_paths},
                  {"min_distance", c.min_distance},
                  {"max_distance", c.max_distance},
                  {"min_reflection", c.min_reflection},
                  {"max_reflection", c.max_reflection},
                  {"max_reflection_order", c.max_reflection_order},
                  {"min_angle_separation", c.min_angle_separation ? json(*c.min_angle_separation) : json(nullptr)},
                  {"g0_db", c.g0_db},
                  {"bs_pattern_floor_db", c.bs_pattern_floor_db},
                  {"bs_grid_points", c.bs_grid_points},
                  {"ue_grid_points", c.ue_grid_points},
                  {"max_retries", c.max_retries},
                  {"carrier_hz", c.carrier_hz},
                  {"bandwidth_hz", c.bandwidth_hz}};
  j["estimators"] = json::array();
  for (const EstimatorSpec& e : cfg.estimators) j["estimators"].push_back(e.label());
  j["drops"] = cfg.drops;
  j["snr_sweep"] = cfg.native_snr() ? json("native") : json(cfg.snr_sweep_db);
  j["master_seed"] = cfg.master_seed;
  j["admm"] = {{"rho", cfg.admm.rho},
               {"abs_tol", cfg.admm.abs_tol},
               {"rel_tol", cfg.admm.rel_tol},
               {"max_iterations", cfg.admm.max_iterations}};
  j["training_noise"] = cfg.training_noise;
  j["threads"] = cfg.threads;
  return j;
}

std::string config_hash(const ExperimentConfig& cfg) {
  json j = config_to_json(cfg);
  // Seed and thread count are reported separately; neither changes the experiment definition.
  j.erase("threads");
  j.erase("master_seed");
  const std::string dump = j.dump();
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : dump) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace mmwce
