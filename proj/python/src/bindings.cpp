#include <pybind11/complex.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>

#include "dtdd/campaign.hpp"
#include "dtdd/config.hpp"
#include "dtdd/csa.hpp"
#include "dtdd/kpi.hpp"
#include "dtdd/linalg.hpp"
#include "dtdd/phy.hpp"
#include "dtdd/sim.hpp"

namespace py = pybind11;
using namespace dtdd;
using linalg::cd;
using linalg::CMat;
using linalg::CVec;

namespace {

using CArray = py::array_t<cd, py::array::c_style | py::array::forcecast>;

CVec to_vec(const CArray& a) {
  if (a.ndim() != 1) throw py::value_error("expected a 1-D array");
  return CVec(std::vector<cd>(a.data(), a.data() + a.size()));
}

// Columns of a 2-D array.
std::vector<CVec> to_columns(const CArray& a) {
  if (a.ndim() != 2) throw py::value_error("expected a 2-D array whose columns are the vectors");
  const auto rows = static_cast<std::size_t>(a.shape(0));
  const auto cols = static_cast<std::size_t>(a.shape(1));
  std::vector<CVec> out;
  for (std::size_t c = 0; c < cols; ++c) {
    CVec v(rows);
    for (std::size_t r = 0; r < rows; ++r) v[r] = a.data()[r * cols + c];
    out.push_back(std::move(v));
  }
  return out;
}

CArray from_columns(const std::vector<CVec>& cols, std::size_t rows) {
  CArray out({rows, cols.size()});
  auto m = out.mutable_unchecked<2>();
  for (std::size_t c = 0; c < cols.size(); ++c)
    for (std::size_t r = 0; r < rows; ++r) m(r, c) = cols[c][r];
  return out;
}

CArray from_mat(const CMat& m) {
  CArray out({m.rows(), m.cols()});
  auto v = out.mutable_unchecked<2>();
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) v(r, c) = m(r, c);
  return out;
}

config::SimConfig configure(const std::string& yaml, std::optional<std::string> scheme, std::optional<std::uint64_t> seed,
                            std::optional<double> load) {
  auto cfg = config::parse_config(yaml);
  if (scheme) cfg.scheme = parse_scheme(*scheme);
  if (seed) cfg.seed = *seed;
  if (load) cfg.traffic.load_mbps = *load;
  return cfg;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Dynamic-TDD cross-link interference simulator core";

  py::register_exception<linalg::LinalgError>(m, "LinalgError", PyExc_ValueError);
  py::register_exception<config::ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<kpi::KpiError>(m, "KpiError", PyExc_RuntimeError);
  py::register_exception<campaign::CampaignError>(m, "CampaignError", PyExc_RuntimeError);

  m.def(
      "gram_schmidt",
      [](const CArray& vectors, double rel_tol) {
        const auto cols = to_columns(vectors);
        linalg::Tolerances tol;
        tol.dependence = rel_tol;
        const auto b = linalg::gram_schmidt(cols, tol);
        return py::make_tuple(from_columns(b.vectors, static_cast<std::size_t>(vectors.shape(0))), b.dropped);
      },
      py::arg("vectors"), py::arg("rel_tol") = linalg::kDefaultTolerances.dependence,
      "Orthogonal basis of the columns; returns (basis columns, dropped input indices).");

  m.def(
      "projector",
      [](const CArray& vectors) {
        const auto cols = to_columns(vectors);
        return from_mat(linalg::build_projector(linalg::gram_schmidt(cols)));
      },
      py::arg("vectors"), "Orthogonal projector onto the span of the columns.");

  m.def("signaling_overhead", &csa::signaling_overhead, py::arg("prbs"), py::arg("subband_prbs"), py::arg("pmi_bits"),
        py::arg("cli_slots"));

  m.def(
      "eesm", [](const std::vector<double>& sinrs, double beta) { return phy::eesm(sinrs, beta); }, py::arg("sinrs"),
      py::arg("beta"));

  m.def(
      "post_sinr",
      [](const CArray& u, const CArray& desired, const std::vector<CArray>& interferers, double noise, bool sir) {
        std::vector<CVec> q;
        for (const auto& a : interferers) q.push_back(to_vec(a));
        phy::SinrOptions opt;
        opt.mode = sir ? phy::SinrMode::kSir : phy::SinrMode::kSinr;
        return phy::post_sinr(to_vec(u), to_vec(desired), q, noise, opt);
      },
      py::arg("u"), py::arg("desired"), py::arg("interferers"), py::arg("noise_power"), py::arg("sir") = false);

  m.def(
      "outage_latency",
      [](const std::vector<double>& latency, std::size_t censored, double p) {
        const auto e = kpi::outage_latency(latency, censored, p);
        return py::make_tuple(e.value_ms, e.insufficient);
      },
      py::arg("latency_ms"), py::arg("censored"), py::arg("p"));

  m.def(
      "normalize_config", [](const std::string& yaml) { return config::normalize(yaml); }, py::arg("yaml"),
      "Canonical YAML with every default filled in.");
  m.def(
      "config_hash", [](const std::string& yaml) { return config::config_hash(config::parse_config(yaml)); },
      py::arg("yaml"));

  m.def(
      "run_json",
      [](const std::string& yaml, std::optional<std::string> scheme, std::optional<std::uint64_t> seed,
         std::optional<double> load) {
        const auto cfg = configure(yaml, scheme, seed, load);
        kpi::KpiStore store;
        {
          py::gil_scoped_release release;
          store = sim::run(cfg);
        }
        return kpi::serialize(store, cfg.kpi.outage_percentile);
      },
      py::arg("yaml") = "", py::arg("scheme") = py::none(), py::arg("seed") = py::none(),
      py::arg("load_mbps") = py::none(), "One run; returns the KPI document as JSON text.");

  m.def(
      "run_campaign",
      [](const std::string& yaml, const std::vector<double>& loads, const std::vector<std::string>& schemes,
         const std::vector<std::uint64_t>& seeds, const std::string& out_dir, int workers) {
        campaign::Campaign c;
        c.base = config::parse_config(yaml);
        c.loads_mbps = loads;
        for (const auto& s : schemes) c.schemes.push_back(parse_scheme(s));
        c.seeds = seeds;
        c.out_dir = out_dir;
        c.workers = workers;
        campaign::CampaignResult r;
        {
          py::gil_scoped_release release;
          r = campaign::run_campaign(c);
        }
        return py::make_tuple(r.failed_tuples, r.any_insufficient);
      },
      py::arg("yaml"), py::arg("loads_mbps"), py::arg("schemes"), py::arg("seeds"), py::arg("out_dir"),
      py::arg("workers") = 1, "Writes the campaign files; returns (failed tuples, any insufficient).");
}
