#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "dtdd/config.hpp"

using namespace dtdd;
using namespace dtdd::config;

TEST_CASE("empty document yields the defaults") {
  const auto c = parse_config("");
  CHECK(c.traffic.payload_bits == 400.0);
  CHECK(c.traffic.dl_ul_ratio == 2.0);
  CHECK(c.power_control.alpha == 1.0);
  CHECK(c.power_control.p0_dbm == -103.0);
  CHECK(c.mac.tti_symbols == 4);
  CHECK(c.mac.dl_processing_symbols == 4.5);
  CHECK(c.mac.ul_processing_symbols == 5.5);
  CHECK(c.radio.prbs == 50);
  CHECK(c.layout.cells == 7);
  CHECK(c.layout.bs_antennas == 4);
  CHECK(c.layout.ue_antennas == 2);
  CHECK(c.csa.condition_mode == csa::ConditionMode::kComplement);
  CHECK(c.kpi.outage_percentile == 1e-2);
  CHECK(c.radio.dl_precoding == DlPrecoding::kCodebook);
  CHECK(c.mac.olla_step_db == 0.5);
  CHECK(c.dl_load_bps() == doctest::Approx(2.0 * c.ul_load_bps()));
}

TEST_CASE("overrides and enum names") {
  const auto c = parse_config(R"(
scheme: nc-tdd
seed: 9
antennas: {bs: 8, ue: 2}
csa:
  condition_mode: c
receiver:
  sinr_mode: sir
  cli_visibility: exact
traffic:
  load_mbps: 6.5
radio:
  dl_precoding: eigen
mac:
  olla_step_db: 0
)");
  CHECK(c.scheme == SchemeKind::kNcTdd);
  CHECK(c.seed == 9);
  CHECK(c.layout.bs_antennas == 8);
  CHECK(c.csa.condition_mode == csa::ConditionMode::kOracle);
  CHECK(c.receiver.sinr_mode == phy::SinrMode::kSir);
  CHECK(c.receiver.cli_visibility == CliVisibility::kExact);
  CHECK(c.traffic.load_mbps == 6.5);
  CHECK(c.radio.dl_precoding == DlPrecoding::kEigen);
  CHECK(c.mac.olla_step_db == 0.0);
}

TEST_CASE("scheme names") {
  CHECK(parse_scheme("CF_TDD") == SchemeKind::kCfTdd);
  CHECK(parse_scheme("cf") == SchemeKind::kCfTdd);
  CHECK(parse_scheme("crfc-tdd") == SchemeKind::kCrfcTdd);
  CHECK(parse_scheme("csa") == SchemeKind::kCsa);
  CHECK(parse_scheme("i_free") == SchemeKind::kIFree);
  CHECK(parse_scheme("ifree") == SchemeKind::kIFree);
  for (auto s : {SchemeKind::kCfTdd, SchemeKind::kNcTdd, SchemeKind::kCrfcTdd, SchemeKind::kCsa, SchemeKind::kIFree})
    CHECK(parse_scheme(to_string(s)) == s);
  CHECK_THROWS(parse_scheme("tdd"));
}

TEST_CASE("validation names the key") {
  try {
    parse_config("antennas:\n  bs: 0\n");
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    CHECK(e.key() == "antennas.bs");
  }
  try {
    parse_config("mac:\n  tti_symbol: 4\n");
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    CHECK(e.key() == "mac.tti_symbol");
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
  try {
    parse_config("rfc:\n  static_format: \"7:1\"\n");
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    CHECK(e.key() == "rfc.static_format");
  }
  try {
    parse_config("mac:\n  olla_step_db: -1\n");
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    CHECK(e.key() == "mac.olla_step_db");
  }
  try {
    parse_config("csa:\n  condition_mode: z\n");
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    CHECK(e.key() == "csa.condition_mode");
  }
  CHECK_THROWS_AS(parse_config("kpi: {outage_percentile: 1.5}"), ValidationError);
}

TEST_CASE("parse errors carry the line") {
  try {
    parse_config("seed: 1\nlayout:\n  cells: [1, 2\n");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() >= 3);
  }
  try {
    parse_config("seed: 1\nduration_s: soon\n");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
  CHECK_THROWS_AS(parse_config("layout: 3\n"), ParseError);
}

TEST_CASE("dump round trip and hash") {
  const std::string text = "seed: 3\nlayout: {cells: 3}\ntraffic: {load_mbps: 0.1}\n";
  const auto c = parse_config(text);
  const auto dumped = dump_config(c);
  CHECK(dump_config(parse_config(dumped)) == dumped);
  CHECK(dumped == normalize(text));
  CHECK(config_hash(c) == config_hash(parse_config(dumped)));
  auto d = c;
  d.seed = 4;
  CHECK(config_hash(c) != config_hash(d));
  CHECK(config_hash(c).size() == 16);

  const auto path = std::filesystem::temp_directory_path() / "dtdd_cfg_test.yaml";
  {
    std::ofstream os(path);
    os << text;
  }
  CHECK(dump_config(load_config(path)) == dumped);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(load_config(path), ConfigError);
}

TEST_CASE("sub-band sizes") {
  RadioConfig r;
  CHECK(r.num_subbands() == 4);
  CHECK(r.subband_size(0) == 13);
  CHECK(r.subband_size(3) == 11);
  int total = 0;
  for (int sb = 0; sb < r.num_subbands(); ++sb) total += r.subband_size(sb);
  CHECK(total == r.prbs);
}
