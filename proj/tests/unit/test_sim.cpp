#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "doctest.h"
#include "dtdd/kpi.hpp"
#include "dtdd/sim.hpp"
#include "json.hpp"
#include "unit/oracle.hpp"

using namespace dtdd;
using namespace dtdd::sim;
using linalg::cd;
using linalg::CVec;
using phy::TermClass;

namespace {

LinkRequest scalar_request() {
  LinkRequest req;
  req.desired = CVec(std::vector<cd>{{1.5, -0.5}});
  req.terms.push_back({1, TermClass::kSameLink, CVec(std::vector<cd>{{0.3, 0.2}})});
  req.terms.push_back({2, TermClass::kCrossLink, CVec(std::vector<cd>{{-0.4, 0.7}})});
  req.noise_power = 0.05;
  return req;
}

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

config::SimConfig small_config(SchemeKind scheme, double load = 3.0) {
  auto cfg = config::parse_config("");
  cfg.scheme = scheme;
  cfg.duration_s = 0.3;
  cfg.traffic.load_mbps = load;
  return cfg;
}

}  // namespace

TEST_CASE("single-antenna link evaluation matches hand formulas") {
  const auto req = scalar_request();
  const double s = std::norm(req.desired[0]);
  const double q1 = std::norm(req.terms[0].q[0]);
  const double q2 = std::norm(req.terms[1].q[0]);
  const double n = req.noise_power;
  config::ReceiverConfig rx;

  CHECK(rel(evaluate_link(req, ReceiverKind::kPlain, rx).sinr, s / (q1 + q2 + n)) < 1e-9);
  CHECK(rel(evaluate_link(req, ReceiverKind::kCrossLinkFree, rx).sinr, s / (q1 + n)) < 1e-9);
  CHECK(rel(evaluate_link(req, ReceiverKind::kInterferenceFree, rx).sinr, s / n) < 1e-9);

  rx.cli_visibility = config::CliVisibility::kExact;
  CHECK(rel(evaluate_link(req, ReceiverKind::kPlain, rx).sinr, s / (q1 + q2 + n)) < 1e-9);

  rx.sinr_mode = phy::SinrMode::kSir;
  CHECK(rel(evaluate_link(req, ReceiverKind::kPlain, rx).sinr, s / (q1 + q2)) < 1e-9);
}

TEST_CASE("CSA removes an identified aggressor on an 8-antenna victim") {
  std::mt19937_64 rng(7);
  config::ReceiverConfig rx;
  double margin = 0.0;
  const int trials = 50;
  for (int trial = 0; trial < trials; ++trial) {
    LinkRequest req;
    req.noise_power = 1.0;
    req.desired = oracle::random_vec(rng, 8);
    CVec q = oracle::random_vec(rng, 8);
    // 30 dB above noise on every antenna
    q *= cd(std::sqrt(8000.0 / linalg::norm_sq(q)));
    req.terms.push_back({3, TermClass::kCrossLink, q});
    req.estimates.push_back({0, 0, 3, q, linalg::norm_sq(q)});

    const double plain = phy::to_db(evaluate_link(req, ReceiverKind::kPlain, rx).sinr);
    const auto comp = evaluate_link(req, ReceiverKind::kCsa, rx, csa::ConditionMode::kComplement);
    const double ideal = phy::to_db(evaluate_link(req, ReceiverKind::kCsa, rx, csa::ConditionMode::kOracle).sinr);
    CHECK(comp.projected);
    CHECK(std::abs(phy::to_db(comp.sinr) - ideal) < 0.5);
    margin += phy::to_db(comp.sinr) - plain;
  }
  CHECK(margin / trials > 20.0);
}

TEST_CASE("literal CSA keeps the cross-link term") {
  std::mt19937_64 rng(11);
  LinkRequest req;
  req.noise_power = 1.0;
  req.desired = oracle::random_vec(rng, 4);
  CVec q = oracle::random_vec(rng, 4);
  req.terms.push_back({1, TermClass::kCrossLink, q});
  req.estimates.push_back({0, 0, 1, q, linalg::norm_sq(q)});
  const config::ReceiverConfig rx;
  const auto lit = evaluate_link(req, ReceiverKind::kCsa, rx, csa::ConditionMode::kLiteral);
  CHECK_FALSE(lit.projected);
  CHECK(lit.interference > 0.0);
}

TEST_CASE("receiver per scheme") {
  CHECK(receiver_for(SchemeKind::kCfTdd, Direction::kUl) == ReceiverKind::kCrossLinkFree);
  CHECK(receiver_for(SchemeKind::kCsa, Direction::kUl) == ReceiverKind::kCsa);
  CHECK(receiver_for(SchemeKind::kCsa, Direction::kDl) == ReceiverKind::kPlain);
  CHECK(receiver_for(SchemeKind::kNcTdd, Direction::kUl) == ReceiverKind::kPlain);
  CHECK(receiver_for(SchemeKind::kIFree, Direction::kDl) == ReceiverKind::kInterferenceFree);
}

TEST_CASE("zero load idles every cell") {
  auto cfg = small_config(SchemeKind::kNcTdd, 0.0);
  cfg.duration_s = 0.05;
  const auto k = run(cfg);
  CHECK(k.dl.generated == 0);
  CHECK(k.ul.generated == 0);
  CHECK(k.dl.latency_ms.empty());
  CHECK(k.ul.latency_ms.empty());
  REQUIRE_FALSE(k.mu.empty());
  for (double m : k.mu) CHECK(m == doctest::Approx(0.5));
}

TEST_CASE("every generated packet is decoded, failed or still queued") {
  for (auto scheme : {SchemeKind::kCfTdd, SchemeKind::kNcTdd, SchemeKind::kCrfcTdd, SchemeKind::kCsa}) {
    const auto k = run(small_config(scheme));
    for (Direction d : {Direction::kDl, Direction::kUl}) {
      const auto& x = k.direction(d);
      CAPTURE(to_string(scheme));
      CHECK(x.generated > 0);
      CHECK(x.generated == x.decoded + x.failed + x.in_flight);
      CHECK(static_cast<std::int64_t>(x.latency_ms.size()) == x.decoded);
      CHECK(static_cast<std::int64_t>(x.censored_ms.size()) == x.failed + x.in_flight);
    }
  }
}

TEST_CASE("latency is bounded below by one TTI plus processing") {
  const auto cfg = small_config(SchemeKind::kCfTdd);
  const auto k = run(cfg);
  const double sym_ms = 0.5 / 14.0;
  for (Direction d : {Direction::kDl, Direction::kUl}) {
    const double proc = d == Direction::kDl ? cfg.mac.dl_processing_symbols : cfg.mac.ul_processing_symbols;
    for (double l : k.direction(d).latency_ms) CHECK(l >= (cfg.mac.tti_symbols + proc) * sym_ms - 1e-9);
  }
}

TEST_CASE("identical config and seed serialize identically") {
  const auto cfg = small_config(SchemeKind::kCsa, 4.0);
  const auto a = kpi::serialize(run(cfg));
  const auto b = kpi::serialize(run(cfg));
  CHECK(a == b);
  auto other = cfg;
  other.seed = 2;
  CHECK(kpi::serialize(run(other)) != a);
}

TEST_CASE("restricted users are only granted in static slots") {
  auto cfg = small_config(SchemeKind::kCrfcTdd, 6.0);
  const auto path = std::filesystem::temp_directory_path() / "dtdd_test_events.jsonl";
  cfg.event_log = path.string();
  run(cfg);
  std::ifstream in(path);
  std::string line;
  int grants = 0;
  int restricted = 0;
  while (std::getline(in, line)) {
    const auto j = nlohmann::json::parse(line);
    if (j["event"] == "grant") {
      ++grants;
      CHECK(j["attempt"].get<int>() <= cfg.mac.max_attempts);
      if (j["restricted"].get<bool>()) {
        ++restricted;
        CHECK(j["static"].get<bool>());
      }
    } else if (j["event"] == "decode") {
      CHECK(j["attempt"].get<int>() <= cfg.mac.max_attempts);
    }
  }
  CHECK(grants > 0);
  CHECK(restricted > 0);
  std::filesystem::remove(path);
}

TEST_CASE("I_FREE >= CF_TDD >= CSA(c) on every audited decode") {
  auto cfg = small_config(SchemeKind::kCsa, 6.0);
  cfg.audit = true;
  cfg.csa.condition_mode = csa::ConditionMode::kOracle;
  const auto k = run(cfg);
  REQUIRE_FALSE(k.nesting.empty());
  int violations = 0;
  for (const auto& n : k.nesting) {
    if (n.ifree_db < n.cf_db - 1e-9 || n.cf_db < n.csa_oracle_db - 1e-9) ++violations;
  }
  CHECK(violations == 0);
}
