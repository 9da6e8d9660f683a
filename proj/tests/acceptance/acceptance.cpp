// One PASS/FAIL line per acceptance criterion; exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "dtdd/campaign.hpp"
#include "dtdd/config.hpp"
#include "dtdd/csa.hpp"
#include "dtdd/kpi.hpp"
#include "dtdd/linalg.hpp"
#include "dtdd/phy.hpp"
#include "dtdd/sim.hpp"
#include "dtdd/topology.hpp"

namespace fs = std::filesystem;
using namespace dtdd;
using linalg::cd;
using linalg::CMat;
using linalg::CVec;

namespace {

int failures = 0;

void report(int id, bool ok, const std::string& detail) {
  std::printf("%s criterion %d: %s\n", ok ? "PASS" : "FAIL", id, detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

CVec random_vec(std::mt19937_64& rng, std::size_t n) {
  std::normal_distribution<double> nd(0.0, 1.0);
  CVec v(n);
  for (auto& x : v) x = {nd(rng), nd(rng)};
  return v;
}

CMat identity(std::size_t n) {
  CMat m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

CMat minus(const CMat& a, const CMat& b) {
  CMat out(a.rows(), a.cols());
  for (std::size_t r = 0; r < a.rows(); ++r)
    for (std::size_t c = 0; c < a.cols(); ++c) out(r, c) = a(r, c) - b(r, c);
  return out;
}

CMat adjoint(const CMat& a) {
  CMat out(a.cols(), a.rows());
  for (std::size_t r = 0; r < a.rows(); ++r)
    for (std::size_t c = 0; c < a.cols(); ++c) out(c, r) = std::conj(a(r, c));
  return out;
}

void overhead() {
  const auto bits = csa::signaling_overhead(50, 8, 4, 3);
  report(1, bits == 124, "signaling_overhead(50, 8, 4, 3) = " + std::to_string(bits) + " bits, expected 124");
}

void projector_suite() {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> dim(1, 8);
  double worst = 0.0;
  int bad = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const auto n = static_cast<std::size_t>(dim(rng));
    const auto k = std::uniform_int_distribution<std::size_t>(1, n)(rng);
    std::vector<CVec> cols;
    for (std::size_t i = 0; i < k; ++i) cols.push_back(random_vec(rng, n));
    // Every fourth case carries a dependent column to exercise the drop path.
    if (trial % 4 == 0 && k >= 2) {
      CVec dep = cols[0];
      dep *= cd(0.5, -1.5);
      for (std::size_t r = 0; r < n; ++r) dep[r] += cols[1][r];
      cols.push_back(dep);
    }
    const auto basis = linalg::gram_schmidt(cols);
    const CMat p = linalg::build_projector(basis);
    const double scale = std::max(linalg::frobenius_norm(p), 1.0);
    const double idem = linalg::frobenius_norm(minus(p * p, p)) / scale;
    const double herm = linalg::frobenius_norm(minus(p, adjoint(p))) / scale;
    double capture = 0.0;
    for (const auto& v : cols) {
      const CVec pv = p * v;
      double err = 0.0;
      for (std::size_t r = 0; r < n; ++r) err += std::norm(pv[r] - v[r]);
      capture = std::max(capture, std::sqrt(err) / linalg::norm(v));
    }
    const CMat comp = minus(identity(n), p);
    double annihilate = 0.0;
    for (const auto& v : cols) annihilate = std::max(annihilate, linalg::norm(comp * v) / linalg::norm(v));
    const double w = std::max({idem, herm, capture, annihilate});
    worst = std::max(worst, w);
    if (w > 1e-8) ++bad;
  }
  report(2, bad == 0, fmt("1000 random projectors, N <= 8: worst relative residual %.3g, %.0f above 1e-8", worst, bad));
}

void suppression_fixture() {
  topo::LayoutSpec spec;
  spec.cells = 2;
  spec.ues_dl_per_cell = 1;
  spec.ues_ul_per_cell = 1;
  spec.bs_antennas = 8;
  spec.ue_antennas = 2;
  const topo::ChannelModel model;
  const config::SimConfig defaults = config::parse_config("");
  const auto codebook = phy::make_dft_codebook(spec.bs_antennas, defaults.csa.pmi_bits);
  const double prb_hz = 12.0 * defaults.radio.subcarrier_spacing_khz * 1e3;
  const double noise =
      phy::from_db(defaults.radio.noise_psd_dbm_hz + 10.0 * std::log10(prb_hz) + defaults.radio.bs_noise_figure_db);
  const config::ReceiverConfig rx;
  double plain_db = 0.0;
  double comp_db = 0.0;
  double oracle_db = 0.0;
  double worst_gap = 0.0;
  constexpr int kSeeds = 100;
  for (int seed = 1; seed <= kSeeds; ++seed) {
    const auto cluster = topo::build_cluster(spec, static_cast<std::uint64_t>(seed), model);
    const topo::ChannelField field(cluster, model, static_cast<std::uint64_t>(seed));
    const int victim = 0;
    const int aggressor = 1;
    const int ul_ue = cluster.nodes.ul_users[0][0];
    const int dl_ue = cluster.nodes.dl_users[1][0];

    // Aggressor beam: the PMI its own DL UE reports.
    const int pmi = phy::select_pmi(field.channel(dl_ue, aggressor, 0, 0), codebook);
    const CMat h_bb = field.fast_fading(victim, aggressor, 0, 0);
    CVec q = h_bb * codebook.at(pmi);
    // 30 dB above noise on every victim antenna.
    const double amp = std::sqrt(1000.0 * noise * spec.bs_antennas / linalg::norm_sq(q));
    q *= cd(amp);

    const CMat h_ul = field.channel(victim, ul_ue, 0, 0);
    const double p_ul = phy::from_db(topo::ul_tx_power_dbm(-field.gain_db(victim, ul_ue), defaults.power_control,
                                                           defaults.radio.prbs));
    CVec s = h_ul * phy::make_precoder(h_ul).vector;
    s *= cd(std::sqrt(p_ul));

    sim::LinkRequest req;
    req.desired = s;
    req.noise_power = noise;
    req.terms.push_back({aggressor, phy::TermClass::kCrossLink, q});
    const std::vector<csa::ScheduledPrecoder> sched{{0, 0, codebook.at(pmi)}};
    const std::vector<csa::PrecoderMap> maps{csa::build_precoder_map(aggressor, 0, sched, codebook)};
    req.estimates = csa::identify_interferers(
        victim, 0, 0, maps,
        [&](int) {
          CMat m = h_bb;
          for (std::size_t r = 0; r < m.rows(); ++r)
            for (std::size_t c = 0; c < m.cols(); ++c) m(r, c) *= amp;
          return m;
        },
        codebook, static_cast<std::size_t>(spec.bs_antennas - 1));

    const double p = phy::to_db(sim::evaluate_link(req, sim::ReceiverKind::kPlain, rx).sinr);
    const double b =
        phy::to_db(sim::evaluate_link(req, sim::ReceiverKind::kCsa, rx, csa::ConditionMode::kComplement).sinr);
    const double c = phy::to_db(sim::evaluate_link(req, sim::ReceiverKind::kCsa, rx, csa::ConditionMode::kOracle).sinr);
    plain_db += p / kSeeds;
    comp_db += b / kSeeds;
    oracle_db += c / kSeeds;
    worst_gap = std::max(worst_gap, std::abs(b - c));
  }
  const bool ok = std::abs(comp_db - oracle_db) <= 0.5 && comp_db - plain_db >= 20.0;
  report(3, ok,
         fmt("mean UL SINR over 100 seeds: CSA(b) %.2f dB, oracle(c) %.2f dB, plain IRC %.2f dB; "
             "b-c %.3f dB",
             comp_db, oracle_db, plain_db, comp_db - oracle_db) +
             fmt(", b-plain %.2f dB (worst per-seed |b-c| %.3f dB)", comp_db - plain_db, worst_gap));
}

struct Pooled {
  std::vector<double> latency;
  std::size_t censored = 0;
  std::vector<double> mu;
};

void scheme_campaign(const fs::path& config_path, const fs::path& out) {
  campaign::Campaign c;
  c.base = config::load_config(config_path);
  c.loads_mbps = {c.base.traffic.load_mbps};
  c.schemes = {SchemeKind::kCfTdd, SchemeKind::kCsa, SchemeKind::kCrfcTdd, SchemeKind::kNcTdd};
  for (std::uint64_t s = 1; s <= 10; ++s) c.seeds.push_back(s);
  c.out_dir = out;
  c.workers = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  const auto t0 = std::chrono::steady_clock::now();
  const auto res = campaign::run_campaign(c);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::printf("campaign: 4 schemes x 10 seeds x %.0f s at %.3g Mbps per cell in %.0f s, %d failed tuples\n",
              c.base.duration_s, c.base.traffic.load_mbps, secs, res.failed_tuples);

  std::map<SchemeKind, Pooled> pooled;
  for (auto scheme : c.schemes) {
    for (auto seed : c.seeds) {
      const auto path = out / campaign::kpi_path(scheme, c.loads_mbps[0], seed);
      if (!fs::exists(path)) continue;
      const auto k = kpi::read_kpi_file(path);
      auto& p = pooled[scheme];
      p.latency.insert(p.latency.end(), k.ul.latency_ms.begin(), k.ul.latency_ms.end());
      p.censored += k.ul.censored_ms.size();
      p.mu.insert(p.mu.end(), k.mu.begin(), k.mu.end());
    }
  }
  auto outage = [&](SchemeKind s) {
    const auto& p = pooled[s];
    if (p.latency.empty() && p.censored == 0) return std::nan("");
    return kpi::outage_latency(p.latency, p.censored, c.base.kpi.outage_percentile).value_ms;
  };
  auto mu = [&](SchemeKind s) { return pooled[s].mu.empty() ? std::nan("") : kpi::median(pooled[s].mu); };

  const double cf = outage(SchemeKind::kCfTdd);
  const double csa = outage(SchemeKind::kCsa);
  const double crfc = outage(SchemeKind::kCrfcTdd);
  const double nc = outage(SchemeKind::kNcTdd);
  const bool ordered = cf <= csa && csa <= crfc && crfc <= nc;
  const bool ok4 = res.failed_tuples == 0 && ordered && csa <= 2.0 * cf && nc >= 5.0 * cf;
  report(4, ok4,
         fmt("UL outage latency at 1e-2: CF_TDD %.3f ms, CSA %.3f ms, CRFC_TDD %.3f ms, NC_TDD %.3f ms", cf, csa, crfc,
             nc) +
             fmt("; CSA/CF %.2f (<= 2), NC/CF %.2f (>= 5)", csa / cf, nc / cf));

  const double mu_cf = mu(SchemeKind::kCfTdd);
  const double mu_csa = mu(SchemeKind::kCsa);
  const double mu_nc = mu(SchemeKind::kNcTdd);
  const bool ok5 = mu_nc < 0.5 && std::abs(mu_csa - mu_cf) <= 0.1;
  report(5, ok5,
         fmt("median buffered ratio: NC_TDD %.3f (< 0.5), CSA %.3f, CF_TDD %.3f, |CSA - CF| %.3f (<= 0.1)", mu_nc,
             mu_csa, mu_cf, std::abs(mu_csa - mu_cf)));

  // Determinism: rerun one tuple of the campaign into a fresh directory.
  auto again = c;
  again.schemes = {SchemeKind::kCsa};
  again.seeds = {3};
  again.workers = 1;
  again.out_dir = out / "rerun";
  fs::remove_all(again.out_dir);
  campaign::run_campaign(again);
  const auto rel = campaign::kpi_path(SchemeKind::kCsa, c.loads_mbps[0], 3);
  const auto first = slurp(out / rel);
  const auto second = slurp(again.out_dir / rel);
  report(7, !first.empty() && first == second,
         "rerun of " + rel.string() + ": " + std::to_string(first.size()) + " bytes, " +
             (first == second ? "byte-identical" : "differs"));
}

void sinr_fidelity() {
  // One antenna: SINR = |u s|^2 / (sum |u q_i|^2 + |u|^2 N0),
  // SIR drops the noise term.
  const CVec u(std::vector<cd>{{0.7, -0.2}});
  const CVec s(std::vector<cd>{{1.2, 0.4}});
  const std::vector<CVec> q{CVec(std::vector<cd>{{0.1, -0.3}}), CVec(std::vector<cd>{{-0.25, 0.05}})};
  const double n0 = 0.02;
  const double uu = std::norm(u[0]);
  const double sig = uu * std::norm(s[0]);
  const double inter = uu * (std::norm(q[0][0]) + std::norm(q[1][0]));
  const double sinr_hand = sig / (inter + uu * n0);
  const double sir_hand = sig / inter;
  phy::SinrOptions sir_opt;
  sir_opt.mode = phy::SinrMode::kSir;
  const double sinr = phy::post_sinr(u, s, q, n0);
  const double sir = phy::post_sinr(u, s, q, n0, sir_opt);
  const double e1 = std::abs(sinr - sinr_hand) / sinr_hand;
  const double e2 = std::abs(sir - sir_hand) / sir_hand;
  report(6, e1 <= 1e-9 && e2 <= 1e-9,
         fmt("1-antenna SINR %.9g vs %.9g (rel %.2g), SIR %.9g", sinr, sinr_hand, e1, sir) +
             fmt(" vs %.9g (rel %.2g)", sir_hand, e2));
}

void eesm_chase() {
  bool fixed = true;
  for (double g : {0.01, 1.0, 3.7, 250.0})
    for (double beta : {0.5, 1.0, 5.3, 40.0}) {
      const std::vector<double> v(13, g);
      fixed = fixed && phy::eesm(v, beta) == g;
    }
  phy::HarqProcess h;
  const std::vector<double> attempt(12, phy::from_db(7.0));
  h = phy::harq_combine(h, attempt);
  h = phy::harq_combine(h, attempt);
  const double gain = phy::to_db(h.accumulated[0]) - 7.0;
  const bool chase = std::abs(gain - 3.0103) < 5e-5;
  report(8, fixed && chase,
         std::string("eesm of constant input ") + (fixed ? "exact" : "inexact") +
             fmt("; two equal attempts combine to +%.4f dB", gain));
}

void nesting(const fs::path& config_path) {
  auto cfg = config::load_config(config_path);
  cfg.scheme = SchemeKind::kCsa;
  cfg.seed = 1;
  cfg.duration_s = 1.0;
  cfg.audit = true;
  const auto k = sim::run(cfg);
  std::size_t violations = 0;
  for (const auto& n : k.nesting)
    if (n.ifree_db < n.cf_db - 1e-9 || n.cf_db < n.csa_oracle_db - 1e-9) ++violations;
  report(9, !k.nesting.empty() && violations == 0,
         std::to_string(k.nesting.size()) + " audited UL decodes, " + std::to_string(violations) +
             " violations of I_FREE >= CF_TDD >= CSA(c)");
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path config_path = argc > 1 ? fs::path(argv[1]) : fs::path(DTDD_ACCEPTANCE_CONFIG);
  const fs::path out = argc > 2 ? fs::path(argv[2]) : fs::path("acceptance_out");
  const bool quick = argc > 3 && std::string(argv[3]) == "--skip-campaign";
  try {
    overhead();
    projector_suite();
    suppression_fixture();
    sinr_fidelity();
    eesm_chase();
    if (!quick) scheme_campaign(config_path, out);
    nesting(config_path);
  } catch (const std::exception& e) {
    std::printf("FAIL acceptance aborted: %s\n", e.what());
    return 1;
  }
  return failures == 0 ? 0 : 1;
}
