#include "mmwce/serialize.hpp"

#include <stdexcept>

namespace mmwce {

using nlohmann::json;

namespace {

json complex_json(Complex c) { return json::array({c.real(), c.imag()}); }

Complex complex_from(const json& j) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    throw ContractViolation("expected a complex number as [re, im]");
  return {j[0].get<double>(), j[1].get<double>()};
}

const json& field(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw ContractViolation(std::string("missing field '") + key + "'");
  return j.at(key);
}

template <typename T>
std::vector<T> list_of(const json& j) {
  return j.get<std::vector<T>>();
}

}  // namespace

json to_json(const CVector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(complex_json(v[i]));
  return out;
}

json to_json(const CMatrix& m) {
  json data = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(complex_json(m(r, c)));
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
}

json to_json(const RMatrix& m) {
  json data = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
}

CVector cvector_from_json(const json& j) {
  if (!j.is_array()) throw ContractViolation("expected a complex vector");
  CVector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = complex_from(j[i]);
  return v;
}

CMatrix cmatrix_from_json(const json& j) {
  const auto rows = field(j, "rows").get<Eigen::Index>();
  const auto cols = field(j, "cols").get<Eigen::Index>();
  const json& data = field(j, "data");
  if (rows < 0 || cols < 0 || !data.is_array() || static_cast<Eigen::Index>(data.size()) != rows * cols)
    throw ContractViolation("matrix data length does not match its shape");
  CMatrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = complex_from(data[static_cast<std::size_t>(r * cols + c)]);
  return m;
}

RMatrix rmatrix_from_json(const json& j) {
  const auto rows = field(j, "rows").get<Eigen::Index>();
  const auto cols = field(j, "cols").get<Eigen::Index>();
  const json& data = field(j, "data");
  if (rows < 0 || cols < 0 || !data.is_array() || static_cast<Eigen::Index>(data.size()) != rows * cols)
    throw ContractViolation("matrix data length does not match its shape");
  RMatrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = data[static_cast<std::size_t>(r * cols + c)].get<double>();
  return m;
}

json to_json(const ChannelRealization& ch) {
  json paths = json::array();
  for (const PathParams& p : ch.paths) {
    paths.push_back({{"gain", complex_json(p.gain)},
                     {"dod", p.dod},
                     {"doa", p.doa},
                     {"reflection_order", p.reflection_order},
                     {"reflection_coeffs", p.reflection_coeffs},
                     {"distance", p.distance},
                     {"phase", p.phase}});
  }
  return {{"n_bs", ch.n_bs},
          {"n_ue", ch.n_ue},
          {"spacing_over_lambda", ch.spacing_over_lambda},
          {"paths", paths},
          {"h", to_json(ch.h)}};
}

ChannelRealization channel_from_json(const json& j) {
  ChannelRealization ch;
  ch.n_bs = field(j, "n_bs").get<int>();
  ch.n_ue = field(j, "n_ue").get<int>();
  ch.spacing_over_lambda = field(j, "spacing_over_lambda").get<double>();
  for (const json& p : field(j, "paths")) {
    PathParams pp;
    pp.gain = complex_from(field(p, "gain"));
    pp.dod = field(p, "dod").get<double>();
    pp.doa = field(p, "doa").get<double>();
    pp.reflection_order = field(p, "reflection_order").get<int>();
    pp.reflection_coeffs = list_of<double>(field(p, "reflection_coeffs"));
    pp.distance = field(p, "distance").get<double>();
    pp.phase = field(p, "phase").get<double>();
    ch.paths.push_back(std::move(pp));
  }
  ch.h = cmatrix_from_json(field(j, "h"));
  if (ch.h.rows() != ch.n_ue || ch.h.cols() != ch.n_bs) throw ContractViolation("channel matrix shape mismatch");
  return ch;
}

json to_json(const SensingPlan& plan) {
  return {{"n_antennas", plan.n_antennas}, {"scale", plan.scale}, {"antenna_indices", plan.antenna_indices}};
}

SensingPlan plan_from_json(const json& j) {
  SensingPlan plan;
  plan.n_antennas = field(j, "n_antennas").get<int>();
  plan.scale = field(j, "scale").get<double>();
  plan.antenna_indices = field(j, "antenna_indices").get<std::vector<std::vector<int>>>();
  plan.validate();
  return plan;
}

json to_json(const Measurement& m) {
  json j = {{"z", to_json(m.z)}, {"noise_power", m.noise_power}, {"plan", to_json(m.plan)}};
  if (m.interference.size() > 0) j["interference"] = to_json(m.interference);
  return j;
}

Measurement measurement_from_json(const json& j) {
  Measurement m;
  m.z = cvector_from_json(field(j, "z"));
  m.noise_power = field(j, "noise_power").get<double>();
  if (!(m.noise_power >= 0.0)) throw ContractViolation("noise_power must be nonnegative");
  m.plan = plan_from_json(field(j, "plan"));
  if (m.z.size() != m.plan.measurements()) throw ContractViolation("measurement length does not match its plan");
  if (j.contains("interference")) m.interference = cvector_from_json(j["interference"]);
  return m;
}

json to_json(const PrecodingSolution& s) {
  return {{"w", to_json(s.w)},
          {"ue_beam_index", s.ue_beam_index},
          {"f_rf", to_json(s.f_rf)},
          {"rf_codeword_index", s.rf_codeword_index},
          {"p_bb", to_json(s.p_bb)},
          {"sinr", s.sinr},
          {"se", s.se}};
}

PrecodingSolution solution_from_json(const json& j) {
  PrecodingSolution s;
  s.w = cmatrix_from_json(field(j, "w"));
  s.ue_beam_index = list_of<int>(field(j, "ue_beam_index"));
  s.f_rf = cmatrix_from_json(field(j, "f_rf"));
  s.rf_codeword_index = list_of<int>(field(j, "rf_codeword_index"));
  s.p_bb = cmatrix_from_json(field(j, "p_bb"));
  s.sinr = list_of<double>(field(j, "sinr"));
  s.se = list_of<double>(field(j, "se"));
  return s;
}

json to_json(const std::vector<AdmmIterate>& trace) {
  json out = json::array();
  for (const AdmmIterate& it : trace)
    out.push_back({{"iteration", it.iteration},
                   {"objective", it.objective},
                   {"primal_residual", it.primal_residual},
                   {"dual_residual", it.dual_residual},
                   {"rho", it.rho}});
  return out;
}

json to_json(const AnmResult& r) {
  json j = {{"h_hat", to_json(r.h_hat)},
            {"objective", r.objective},
            {"atomic_norm", r.atomic_norm_value},
            {"iterations", r.iterations},
            {"primal_residual", r.primal_residual},
            {"dual_residual", r.dual_residual},
            {"xi", r.xi},
            {"dual_sup_norm", r.dual_sup_norm}};
  if (!r.trace.empty()) j["trace"] = to_json(r.trace);
  if (r.extracted_paths) {
    json paths = json::array();
    for (const ExtractedPath& p : r.extracted_paths->paths)
      paths.push_back({{"angle", p.angle}, {"sine", p.sine}, {"gain", complex_json(p.gain)}});
    j["paths"] = {{"list", paths},
                  {"rank", r.extracted_paths->rank},
                  {"rank_gap", r.extracted_paths->rank_gap},
                  {"ambiguous", r.extracted_paths->ambiguous},
                  {"residual", r.extracted_paths->residual}};
  }
  return j;
}

json to_json(const OmpResult& r) {
  return {{"h_hat", to_json(r.h_hat)},
          {"support", r.support},
          {"iterations", r.iterations},
          {"final_residual", r.final_residual},
          {"residual_history", r.residual_history}};
}

}  // namespace mmwce
