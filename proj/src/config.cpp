#include "dtdd/config.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

#include "dtdd/mac.hpp"

namespace dtdd {

namespace {
constexpr std::array<std::pair<SchemeKind, std::string_view>, 5> kSchemeNames{{
    {SchemeKind::kCfTdd, "CF_TDD"},
    {SchemeKind::kNcTdd, "NC_TDD"},
    {SchemeKind::kCrfcTdd, "CRFC_TDD"},
    {SchemeKind::kCsa, "CSA"},
    {SchemeKind::kIFree, "I_FREE"},
}};
}  // namespace

std::string_view to_string(SchemeKind s) {
  for (const auto& [k, n] : kSchemeNames)
    if (k == s) return n;
  return "?";
}

SchemeKind parse_scheme(std::string_view s) {
  std::string key;
  for (char c : s) key.push_back(c == '-' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  if (key == "IFREE") key = "I_FREE";
  for (const auto& [k, n] : kSchemeNames) {
    if (key == n) return k;
    if (n.ends_with("_TDD") && key == n.substr(0, n.size() - 4)) return k;
  }
  throw std::invalid_argument("unknown scheme '" + std::string(s) + "'");
}

}  // namespace dtdd

namespace dtdd::config {

namespace {

std::string where(const YAML::Mark& m) {
  return "line " + std::to_string(m.line + 1) + ", column " + std::to_string(m.column + 1);
}

class MapReader {
 public:
  MapReader(YAML::Node node, std::string path) : node_(std::move(node)), path_(std::move(path)) {
    if (node_ && !node_.IsNull() && !node_.IsMap()) {
      throw ParseError(where(node_.Mark()) + ": '" + label() + "' must be a mapping", node_.Mark().line + 1,
                       node_.Mark().column + 1);
    }
  }

  template <class T>
  void get(const char* key, T& out) {
    known_.emplace_back(key);
    const YAML::Node v = lookup(key);
    if (!v || v.IsNull()) return;
    try {
      out = v.as<T>();
    } catch (const YAML::Exception&) {
      throw ParseError(where(v.Mark()) + ": cannot read '" + full(key) + "' from '" + scalar(v) + "'",
                       v.Mark().line + 1, v.Mark().column + 1);
    }
  }

  /// Reads a string and maps it through `parse`; parse errors name the key.
  template <class T, class F>
  void get_enum(const char* key, T& out, F parse) {
    std::string text;
    get(key, text);
    if (text.empty()) return;
    try {
      out = parse(text);
    } catch (const std::exception& e) {
      const YAML::Node v = lookup(key);
      throw ValidationError(where(v.Mark()) + ": " + full(key) + ": " + e.what(), full(key));
    }
  }

  MapReader sub(const char* key) {
    known_.emplace_back(key);
    return MapReader(lookup(key), full(key));
  }

  /// Rejects keys nobody asked for.
  void finish() const {
    if (!node_ || !node_.IsMap()) return;
    for (const auto& kv : node_) {
      const auto name = kv.first.as<std::string>();
      if (std::find(known_.begin(), known_.end(), name) == known_.end()) {
        throw ValidationError(where(kv.first.Mark()) + ": unknown key '" + full(name.c_str()) + "'",
                              full(name.c_str()));
      }
    }
  }

 private:
  YAML::Node lookup(const char* key) const {
    if (!node_ || !node_.IsMap()) return YAML::Node();
    const YAML::Node& n = node_;
    return n[key];
  }
  std::string full(const char* key) const { return path_.empty() ? std::string(key) : path_ + "." + key; }
  std::string label() const { return path_.empty() ? std::string("<root>") : path_; }
  static std::string scalar(const YAML::Node& v) { return v.IsScalar() ? v.Scalar() : std::string("<non-scalar>"); }

  YAML::Node node_;
  std::string path_;
  std::vector<std::string> known_;
};

void read_pathloss(MapReader r, topo::PathlossModel& m) {
  r.get("intercept_db", m.intercept_db);
  r.get("slope_db", m.slope_db);
  r.get("shadow_sigma_db", m.shadow_sigma_db);
  r.finish();
}

template <class E, std::size_t K>
E lookup_name(const std::array<std::pair<E, const char*>, K>& names, const std::string& s) {
  for (const auto& [e, n] : names)
    if (s == n) return e;
  std::string options;
  for (const auto& [e, n] : names) options += (options.empty() ? "" : ", ") + std::string(n);
  throw std::invalid_argument("'" + s + "' is not one of " + options);
}

template <class E, std::size_t K>
const char* name_of(const std::array<std::pair<E, const char*>, K>& names, E e) {
  for (const auto& [v, n] : names)
    if (v == e) return n;
  return "?";
}

constexpr std::array<std::pair<phy::IrcLoading, const char*>, 2> kLoading{{
    {phy::IrcLoading::kNoiseLoaded, "noise_loaded"},
    {phy::IrcLoading::kLiteral, "literal"},
}};
constexpr std::array<std::pair<CovarianceMode, const char*>, 2> kCovariance{{
    {CovarianceMode::kPerTerm, "per_term"},
    {CovarianceMode::kLiteralSum, "literal_sum"},
}};
constexpr std::array<std::pair<DlPrecoding, const char*>, 2> kDlPrecoding{{
    {DlPrecoding::kCodebook, "codebook"},
    {DlPrecoding::kEigen, "eigen"},
}};
constexpr std::array<std::pair<CliVisibility, const char*>, 2> kVisibility{{
    {CliVisibility::kWhite, "white"},
    {CliVisibility::kExact, "exact"},
}};
constexpr std::array<std::pair<phy::SinrMode, const char*>, 2> kSinrMode{{
    {phy::SinrMode::kSinr, "sinr"},
    {phy::SinrMode::kSir, "sir"},
}};

SimConfig from_node(const YAML::Node& root) {
  SimConfig c;
  MapReader r(root, "");
  r.get_enum("scheme", c.scheme, [](const std::string& s) { return parse_scheme(s); });
  r.get("seed", c.seed);
  r.get("duration_s", c.duration_s);
  r.get("audit", c.audit);
  r.get("event_log", c.event_log);
  {
    auto s = r.sub("layout");
    s.get("cells", c.layout.cells);
    s.get("isd_m", c.layout.isd_m);
    s.get("ues_dl_per_cell", c.layout.ues_dl_per_cell);
    s.get("ues_ul_per_cell", c.layout.ues_ul_per_cell);
    s.get("min_ue_distance_m", c.layout.min_ue_distance_m);
    s.finish();
  }
  {
    auto s = r.sub("antennas");
    s.get("bs", c.layout.bs_antennas);
    s.get("ue", c.layout.ue_antennas);
    s.finish();
  }
  {
    auto s = r.sub("channel");
    read_pathloss(s.sub("bs_ue"), c.channel.bs_ue);
    read_pathloss(s.sub("bs_bs"), c.channel.bs_bs);
    read_pathloss(s.sub("ue_ue"), c.channel.ue_ue);
    s.get("bs_bs_k_factor_db", c.channel.bs_bs_k_factor_db);
    s.get("fading_block_symbols", c.channel.fading_block_symbols);
    s.finish();
  }
  {
    auto s = r.sub("power_control");
    s.get("p0_dbm", c.power_control.p0_dbm);
    s.get("alpha", c.power_control.alpha);
    s.get("p_max_dbm", c.power_control.p_max_dbm);
    s.finish();
  }
  {
    auto s = r.sub("radio");
    s.get("prbs", c.radio.prbs);
    s.get("subband_prbs", c.radio.subband_prbs);
    s.get("dl_tx_power_dbm", c.radio.dl_tx_power_dbm);
    s.get("noise_psd_dbm_hz", c.radio.noise_psd_dbm_hz);
    s.get("bs_noise_figure_db", c.radio.bs_noise_figure_db);
    s.get("ue_noise_figure_db", c.radio.ue_noise_figure_db);
    s.get("subcarrier_spacing_khz", c.radio.subcarrier_spacing_khz);
    s.get_enum("dl_precoding", c.radio.dl_precoding, [](const std::string& v) { return lookup_name(kDlPrecoding, v); });
    s.finish();
  }
  {
    auto s = r.sub("traffic");
    s.get("load_mbps", c.traffic.load_mbps);
    s.get("dl_ul_ratio", c.traffic.dl_ul_ratio);
    s.get("payload_bits", c.traffic.payload_bits);
    s.get("drain_ms", c.traffic.drain_ms);
    s.finish();
  }
  {
    auto s = r.sub("mac");
    s.get("tti_symbols", c.mac.tti_symbols);
    s.get("harq_rtt_symbols", c.mac.harq_rtt_symbols);
    s.get("max_attempts", c.mac.max_attempts);
    s.get("pf_window_tti", c.mac.pf_window_tti);
    s.get("olla_step_db", c.mac.olla_step_db);
    s.get("bler_target", c.mac.bler_target);
    s.get("bler_slope_per_db", c.mac.bler_slope_per_db);
    s.get("dl_processing_symbols", c.mac.dl_processing_symbols);
    s.get("ul_processing_symbols", c.mac.ul_processing_symbols);
    s.get("mcs_table", c.mac.mcs_table);
    s.finish();
  }
  {
    auto s = r.sub("rfc");
    s.get("period_slots", c.rfc.period_slots);
    s.get("static_slots", c.rfc.static_slots);
    s.get("static_format", c.rfc.static_format);
    s.get("crfc_fraction", c.rfc.crfc_fraction);
    s.get("crfc_threshold_db", c.rfc.crfc_threshold_db);
    s.finish();
  }
  {
    auto s = r.sub("csa");
    s.get("pmi_bits", c.csa.pmi_bits);
    s.get_enum("condition_mode", c.csa.condition_mode,
               [](const std::string& v) { return csa::parse_condition_mode(v); });
    s.get("coordination_radius_isd", c.csa.coordination_radius_isd);
    s.get("max_interferers", c.csa.max_interferers);
    s.finish();
  }
  {
    auto s = r.sub("receiver");
    s.get_enum("irc_loading", c.receiver.loading, [](const std::string& v) { return lookup_name(kLoading, v); });
    s.get_enum("covariance", c.receiver.covariance,
               [](const std::string& v) { return lookup_name(kCovariance, v); });
    s.get_enum("cli_visibility", c.receiver.cli_visibility,
               [](const std::string& v) { return lookup_name(kVisibility, v); });
    s.get_enum("sinr_mode", c.receiver.sinr_mode, [](const std::string& v) { return lookup_name(kSinrMode, v); });
    s.get("sir_cap_db", c.receiver.sir_cap_db);
    s.finish();
  }
  {
    auto s = r.sub("kpi");
    s.get("outage_percentile", c.kpi.outage_percentile);
    s.finish();
  }
  r.finish();
  return c;
}

void require(bool ok, const char* key, const std::string& why) {
  if (!ok) throw ValidationError(std::string(key) + ": " + why, key);
}

/// Shortest text that reads back to the same double.
std::string fmt(double x) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

}  // namespace

int RadioConfig::subband_size(int sb) const {
  const int start = sb * subband_prbs;
  return std::max(0, std::min(subband_prbs, prbs - start));
}

double SimConfig::dl_load_bps() const {
  return traffic.load_mbps * 1e6 * traffic.dl_ul_ratio / (1.0 + traffic.dl_ul_ratio);
}

double SimConfig::ul_load_bps() const { return traffic.load_mbps * 1e6 / (1.0 + traffic.dl_ul_ratio); }

std::int64_t SimConfig::total_ticks() const {
  return static_cast<std::int64_t>(std::llround(duration_s * 1000.0 * kSymbolsPerMs));
}

SimConfig parse_config(const std::string& yaml_text) {
  YAML::Node root;
  try {
    root = YAML::Load(yaml_text);
  } catch (const YAML::ParserException& e) {
    throw ParseError(where(e.mark) + ": " + e.msg, e.mark.line + 1, e.mark.column + 1);
  }
  SimConfig c = from_node(root);
  validate(c);
  return c;
}

SimConfig load_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  try {
    return parse_config(ss.str());
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what(), e.line(), e.column());
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what(), e.key());
  }
}

void validate(const SimConfig& c) {
  require(c.duration_s > 0.0, "duration_s", "must be positive");
  require(c.layout.cells >= 1, "layout.cells", "need at least one cell");
  require(c.layout.isd_m > 0.0, "layout.isd_m", "must be positive");
  require(c.layout.ues_dl_per_cell >= 0, "layout.ues_dl_per_cell", "must be non-negative");
  require(c.layout.ues_ul_per_cell >= 0, "layout.ues_ul_per_cell", "must be non-negative");
  require(c.layout.min_ue_distance_m >= 0.0, "layout.min_ue_distance_m", "must be non-negative");
  require(c.layout.bs_antennas >= 1, "antennas.bs", "need at least one antenna");
  require(c.layout.ue_antennas >= 1, "antennas.ue", "need at least one antenna");
  require(c.channel.fading_block_symbols >= 1, "channel.fading_block_symbols", "must be at least 1");
  require(c.power_control.alpha >= 0.0 && c.power_control.alpha <= 1.0, "power_control.alpha", "must lie in [0, 1]");
  require(c.radio.prbs >= 1, "radio.prbs", "must be positive");
  require(c.radio.subband_prbs >= 1 && c.radio.subband_prbs <= c.radio.prbs, "radio.subband_prbs",
          "must lie in [1, radio.prbs]");
  require(c.radio.subcarrier_spacing_khz > 0.0, "radio.subcarrier_spacing_khz", "must be positive");
  require(c.traffic.load_mbps >= 0.0, "traffic.load_mbps", "must be non-negative");
  require(c.traffic.dl_ul_ratio > 0.0, "traffic.dl_ul_ratio", "must be positive");
  require(c.traffic.payload_bits > 0.0, "traffic.payload_bits", "must be positive");
  require(c.traffic.drain_ms >= 0.0, "traffic.drain_ms", "must be non-negative");
  require(c.mac.tti_symbols >= 1 && c.mac.tti_symbols <= kSymbolsPerSlot, "mac.tti_symbols", "must lie in [1, 14]");
  require(c.mac.harq_rtt_symbols >= c.mac.tti_symbols, "mac.harq_rtt_symbols", "must cover one TTI");
  require(c.mac.max_attempts >= 1, "mac.max_attempts", "must be at least 1");
  require(c.mac.pf_window_tti >= 1.0, "mac.pf_window_tti", "must be at least 1");
  require(c.mac.olla_step_db >= 0.0 && c.mac.olla_step_db <= 10.0, "mac.olla_step_db", "must lie in [0, 10]");
  require(c.mac.bler_target > 0.0 && c.mac.bler_target < 1.0, "mac.bler_target", "must lie in (0, 1)");
  require(c.mac.bler_slope_per_db > 0.0, "mac.bler_slope_per_db", "must be positive");
  require(c.mac.dl_processing_symbols >= 0.0, "mac.dl_processing_symbols", "must be non-negative");
  require(c.mac.ul_processing_symbols >= 0.0, "mac.ul_processing_symbols", "must be non-negative");
  require(c.rfc.period_slots >= 1, "rfc.period_slots", "must be positive");
  require(c.rfc.static_slots >= 0 && c.rfc.static_slots <= c.rfc.period_slots, "rfc.static_slots",
          "must lie in [0, rfc.period_slots]");
  try {
    (void)mac::find_format(mac::standard_codebook(), c.rfc.static_format);
  } catch (const mac::MacError& e) {
    require(false, "rfc.static_format", e.what());
  }
  require(c.rfc.crfc_fraction >= 0.0 && c.rfc.crfc_fraction <= 1.0, "rfc.crfc_fraction", "must lie in [0, 1]");
  require(c.csa.pmi_bits >= 1 && c.csa.pmi_bits <= 16, "csa.pmi_bits", "must lie in [1, 16]");
  require(c.csa.coordination_radius_isd > 0.0, "csa.coordination_radius_isd", "must be positive");
  require(c.csa.max_interferers >= 0, "csa.max_interferers", "must be non-negative");
  require(c.receiver.sir_cap_db > 0.0, "receiver.sir_cap_db", "must be positive");
  require(c.kpi.outage_percentile > 0.0 && c.kpi.outage_percentile < 1.0, "kpi.outage_percentile",
          "must lie in (0, 1)");
}

std::string dump_config(const SimConfig& c) {
  YAML::Emitter out;
  out << YAML::BeginMap;
  out << YAML::Key << "scheme" << YAML::Value << std::string(to_string(c.scheme));
  out << YAML::Key << "seed" << YAML::Value << c.seed;
  out << YAML::Key << "duration_s" << YAML::Value << fmt(c.duration_s);
  out << YAML::Key << "audit" << YAML::Value << c.audit;
  out << YAML::Key << "event_log" << YAML::Value << YAML::DoubleQuoted << c.event_log;

  out << YAML::Key << "layout" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "cells" << YAML::Value << c.layout.cells;
  out << YAML::Key << "isd_m" << YAML::Value << fmt(c.layout.isd_m);
  out << YAML::Key << "ues_dl_per_cell" << YAML::Value << c.layout.ues_dl_per_cell;
  out << YAML::Key << "ues_ul_per_cell" << YAML::Value << c.layout.ues_ul_per_cell;
  out << YAML::Key << "min_ue_distance_m" << YAML::Value << fmt(c.layout.min_ue_distance_m);
  out << YAML::EndMap;

  out << YAML::Key << "antennas" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "bs" << YAML::Value << c.layout.bs_antennas;
  out << YAML::Key << "ue" << YAML::Value << c.layout.ue_antennas;
  out << YAML::EndMap;

  auto pathloss = [&](const char* key, const topo::PathlossModel& m) {
    out << YAML::Key << key << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "intercept_db" << YAML::Value << fmt(m.intercept_db);
    out << YAML::Key << "slope_db" << YAML::Value << fmt(m.slope_db);
    out << YAML::Key << "shadow_sigma_db" << YAML::Value << fmt(m.shadow_sigma_db);
    out << YAML::EndMap;
  };
  out << YAML::Key << "channel" << YAML::Value << YAML::BeginMap;
  pathloss("bs_ue", c.channel.bs_ue);
  pathloss("bs_bs", c.channel.bs_bs);
  pathloss("ue_ue", c.channel.ue_ue);
  out << YAML::Key << "bs_bs_k_factor_db" << YAML::Value << fmt(c.channel.bs_bs_k_factor_db);
  out << YAML::Key << "fading_block_symbols" << YAML::Value << c.channel.fading_block_symbols;
  out << YAML::EndMap;

  out << YAML::Key << "power_control" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "p0_dbm" << YAML::Value << fmt(c.power_control.p0_dbm);
  out << YAML::Key << "alpha" << YAML::Value << fmt(c.power_control.alpha);
  out << YAML::Key << "p_max_dbm" << YAML::Value << fmt(c.power_control.p_max_dbm);
  out << YAML::EndMap;

  out << YAML::Key << "radio" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "prbs" << YAML::Value << c.radio.prbs;
  out << YAML::Key << "subband_prbs" << YAML::Value << c.radio.subband_prbs;
  out << YAML::Key << "dl_tx_power_dbm" << YAML::Value << fmt(c.radio.dl_tx_power_dbm);
  out << YAML::Key << "noise_psd_dbm_hz" << YAML::Value << fmt(c.radio.noise_psd_dbm_hz);
  out << YAML::Key << "bs_noise_figure_db" << YAML::Value << fmt(c.radio.bs_noise_figure_db);
  out << YAML::Key << "ue_noise_figure_db" << YAML::Value << fmt(c.radio.ue_noise_figure_db);
  out << YAML::Key << "subcarrier_spacing_khz" << YAML::Value << fmt(c.radio.subcarrier_spacing_khz);
  out << YAML::Key << "dl_precoding" << YAML::Value << name_of(kDlPrecoding, c.radio.dl_precoding);
  out << YAML::EndMap;

  out << YAML::Key << "traffic" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "load_mbps" << YAML::Value << fmt(c.traffic.load_mbps);
  out << YAML::Key << "dl_ul_ratio" << YAML::Value << fmt(c.traffic.dl_ul_ratio);
  out << YAML::Key << "payload_bits" << YAML::Value << fmt(c.traffic.payload_bits);
  out << YAML::Key << "drain_ms" << YAML::Value << fmt(c.traffic.drain_ms);
  out << YAML::EndMap;

  out << YAML::Key << "mac" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "tti_symbols" << YAML::Value << c.mac.tti_symbols;
  out << YAML::Key << "harq_rtt_symbols" << YAML::Value << c.mac.harq_rtt_symbols;
  out << YAML::Key << "max_attempts" << YAML::Value << c.mac.max_attempts;
  out << YAML::Key << "pf_window_tti" << YAML::Value << fmt(c.mac.pf_window_tti);
  out << YAML::Key << "olla_step_db" << YAML::Value << fmt(c.mac.olla_step_db);
  out << YAML::Key << "bler_target" << YAML::Value << fmt(c.mac.bler_target);
  out << YAML::Key << "bler_slope_per_db" << YAML::Value << fmt(c.mac.bler_slope_per_db);
  out << YAML::Key << "dl_processing_symbols" << YAML::Value << fmt(c.mac.dl_processing_symbols);
  out << YAML::Key << "ul_processing_symbols" << YAML::Value << fmt(c.mac.ul_processing_symbols);
  out << YAML::Key << "mcs_table" << YAML::Value << YAML::DoubleQuoted << c.mac.mcs_table;
  out << YAML::EndMap;

  out << YAML::Key << "rfc" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "period_slots" << YAML::Value << c.rfc.period_slots;
  out << YAML::Key << "static_slots" << YAML::Value << c.rfc.static_slots;
  out << YAML::Key << "static_format" << YAML::Value << YAML::DoubleQuoted << c.rfc.static_format;
  out << YAML::Key << "crfc_fraction" << YAML::Value << fmt(c.rfc.crfc_fraction);
  out << YAML::Key << "crfc_threshold_db" << YAML::Value << fmt(c.rfc.crfc_threshold_db);
  out << YAML::EndMap;

  out << YAML::Key << "csa" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "pmi_bits" << YAML::Value << c.csa.pmi_bits;
  out << YAML::Key << "condition_mode" << YAML::Value << std::string(csa::to_string(c.csa.condition_mode));
  out << YAML::Key << "coordination_radius_isd" << YAML::Value << fmt(c.csa.coordination_radius_isd);
  out << YAML::Key << "max_interferers" << YAML::Value << c.csa.max_interferers;
  out << YAML::EndMap;

  out << YAML::Key << "receiver" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "irc_loading" << YAML::Value << name_of(kLoading, c.receiver.loading);
  out << YAML::Key << "covariance" << YAML::Value << name_of(kCovariance, c.receiver.covariance);
  out << YAML::Key << "cli_visibility" << YAML::Value << name_of(kVisibility, c.receiver.cli_visibility);
  out << YAML::Key << "sinr_mode" << YAML::Value << name_of(kSinrMode, c.receiver.sinr_mode);
  out << YAML::Key << "sir_cap_db" << YAML::Value << fmt(c.receiver.sir_cap_db);
  out << YAML::EndMap;

  out << YAML::Key << "kpi" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "outage_percentile" << YAML::Value << fmt(c.kpi.outage_percentile);
  out << YAML::EndMap;

  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

std::string normalize(const std::string& yaml_text) { return dump_config(parse_config(yaml_text)); }

std::string config_hash(const SimConfig& cfg) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : dump_config(cfg)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace dtdd::config
