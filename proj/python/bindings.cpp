#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "mmwce/anm.hpp"
#include "mmwce/array.hpp"
#include "mmwce/config.hpp"
#include "mmwce/harness.hpp"
#include "mmwce/omp.hpp"
#include "mmwce/precoding.hpp"
#include "mmwce/sensing.hpp"
#include "mmwce/validation.hpp"

namespace py = pybind11;
using namespace mmwce;

namespace {

// Results cross the boundary as JSON text; the Python side decodes them.
std::string nmse_sweep_json(const std::string& config) {
  const ExperimentConfig cfg = parse_config(config);
  NmseRecord rec;
  {
    py::gil_scoped_release release;
    rec = run_nmse_sweep(cfg);
  }
  nlohmann::json j = nmse_json(rec, cfg);
  j["csv"] = nmse_csv(rec);
  return j.dump();
}

std::string se_eval_json(const std::string& config) {
  const ExperimentConfig cfg = parse_config(config);
  SeRecord rec;
  {
    py::gil_scoped_release release;
    rec = run_se_evaluation(cfg);
  }
  nlohmann::json j = se_json(rec, cfg);
  j["csv"] = se_csv(rec);
  return j.dump();
}

py::dict omp_result(const OmpResult& r) {
  py::dict d;
  d["coefficients"] = r.coefficients;
  d["support"] = r.support;
  d["iterations"] = r.iterations;
  d["final_residual"] = r.final_residual;
  d["residual_history"] = r.residual_history;
  if (r.h_hat.size() > 0) d["h_hat"] = r.h_hat;
  return d;
}

py::dict anm_result(const AnmResult& r) {
  py::dict d;
  d["h_hat"] = r.h_hat;
  d["atomic_norm"] = r.atomic_norm_value;
  d["objective"] = r.objective;
  d["iterations"] = r.iterations;
  d["xi"] = r.xi;
  d["dual_sup_norm"] = r.dual_sup_norm;
  if (r.extracted_paths) {
    py::list paths;
    for (const ExtractedPath& p : r.extracted_paths->paths) {
      py::dict e;
      e["angle"] = p.angle;
      e["sine"] = p.sine;
      e["gain"] = p.gain;
      paths.append(e);
    }
    d["paths"] = paths;
  }
  return d;
}

AnmProblem make_problem(int n, const std::optional<std::vector<int>>& observed, const CVector& samples, double xi) {
  if (!observed) return AnmProblem::full_observation(samples, xi);
  AnmProblem p;
  p.n = n;
  p.observed = *observed;
  p.samples = samples;
  p.xi = xi;
  p.validate();
  return p;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Channel estimation for mmWave hybrid arrays: OMP, atomic-norm denoising, ZF precoding.";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<ContractViolation>(m, "ContractViolation", PyExc_ValueError);
  py::register_exception<AnmError>(m, "AnmError", PyExc_RuntimeError);
  py::register_exception<OmpError>(m, "OmpError", PyExc_RuntimeError);
  py::register_exception<ConditioningError>(m, "ConditioningError", PyExc_RuntimeError);

  m.def("steering_vector", &steering_vector_sine, py::arg("n"), py::arg("sine"), py::arg("spacing_over_lambda") = 0.5,
        "ULA response exp(j 2 pi d/lambda i sine), i = 0..n-1.");

  m.def(
      "grid_dictionary",
      [](int n, int grid) {
        const GridDictionary d = build_grid_dictionary(n, grid);
        return py::make_tuple(d.atoms, d.sines);
      },
      py::arg("n"), py::arg("grid"), "(atoms, sines) for the grid -1 + 2 (g + 1) / G.");

  m.def(
      "sensing_plan",
      [](int n, int chains, int snapshots, std::uint64_t seed) {
        return build_sensing_plan(SubArrayLayout::contiguous(n, chains), snapshots, 1.0, seed).antenna_indices;
      },
      py::arg("n"), py::arg("chains"), py::arg("snapshots"), py::arg("seed"),
      "Random antenna-selection schedule over contiguous sub-arrays: [snapshot][chain] -> antenna.");

  m.def("zadoff_chu", &zadoff_chu, py::arg("root"), py::arg("length"));

  m.def(
      "omp",
      [](const CMatrix& a, const CVector& z, double threshold, int max_iterations) {
        OmpOptions opt;
        opt.residual_threshold = threshold;
        opt.max_iterations = max_iterations;
        return omp_result(omp_estimate(a, z, opt));
      },
      py::arg("a"), py::arg("z"), py::arg("threshold") = 0.0, py::arg("max_iterations") = 8,
      "Orthogonal matching pursuit on z ~ A x.");

  m.def("mutual_coherence", &mutual_coherence, py::arg("a"));
  m.def("welch_bound", &welch_bound, py::arg("rows"), py::arg("cols"));

  m.def(
      "atomic_norm", [](const CVector& h) { return atomic_norm(h).value; }, py::arg("h"),
      "Atomic norm over ULA steering vectors, via the SDP characterization.");

  m.def(
      "anm_denoise",
      [](const CVector& samples, double xi, std::optional<std::vector<int>> observed, int n, bool extract) {
        AnmOptions opt;
        opt.extract_paths = extract;
        py::gil_scoped_release release;
        const AnmResult r = anm_denoise(make_problem(n, observed, samples, xi), opt);
        py::gil_scoped_acquire acquire;
        return anm_result(r);
      },
      py::arg("samples"), py::arg("xi"), py::arg("observed") = py::none(), py::arg("n") = 0,
      py::arg("extract_paths") = false,
      "Regularized atomic-norm denoising. `observed` lists the antenna of each sample (all antennas when omitted).");

  m.def(
      "anm_exact",
      [](const CVector& samples, std::vector<int> observed, int n, bool extract) {
        AnmOptions opt;
        opt.extract_paths = extract;
        py::gil_scoped_release release;
        const AnmResult r = anm_constrained(make_problem(n, observed, samples, 1.0), 0.0, opt);
        py::gil_scoped_acquire acquire;
        return anm_result(r);
      },
      py::arg("samples"), py::arg("observed"), py::arg("n"), py::arg("extract_paths") = false,
      "Minimum atomic norm subject to matching every sample exactly.");

  m.def(
      "zf_baseband", [](const CMatrix& h, const CMatrix& f) { return zf_baseband(h, f); }, py::arg("h_stacked"),
      py::arg("f_rf"), "Normalized zero-forcing baseband precoder for rows h_k^H.");

  m.def(
      "design_precoder",
      [](const std::vector<CVector>& h_hat, int chains, int ps_bits) {
        const SubArrayLayout layout = SubArrayLayout::contiguous(static_cast<int>(h_hat.front().size()), chains);
        const PrecodingSolution s = design_precoder(h_hat, layout, PhaseShifterSpec{ps_bits});
        return py::make_tuple(s.f_rf, s.p_bb, s.rf_codeword_index);
      },
      py::arg("h_hat"), py::arg("chains"), py::arg("ps_bits") = 4, "(F_RF, P_BB, codeword indices).");

  m.def(
      "canonical_config", [](const std::string& text) { return config_to_json(parse_config(text)).dump(); },
      py::arg("text") = "{}", "Parses a config (strictly) and returns it with every default filled in.");
  m.def(
      "config_hash", [](const std::string& text) { return config_hash(parse_config(text)); }, py::arg("text"));

  m.def("_nmse_sweep_json", &nmse_sweep_json, py::arg("config"));
  m.def("_se_eval_json", &se_eval_json, py::arg("config"));

  m.def(
      "validate",
      [](std::uint64_t seed) {
        std::vector<CheckResult> results;
        {
          py::gil_scoped_release release;
          results = run_invariant_suite(seed);
        }
        py::list out;
        for (const CheckResult& r : results) out.append(py::make_tuple(r.name, r.passed, r.detail, r.seconds));
        return out;
      },
      py::arg("seed") = 1, "Runs the invariant suite: [(name, passed, detail, seconds)].");

#ifdef MMWCE_VERSION
  m.attr("__version__") = MMWCE_VERSION;
#else
  m.attr("__version__") = "dev";
#endif
}
