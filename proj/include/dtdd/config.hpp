#pragma once

// Simulation configuration: defaults, YAML loading with located errors,
// validation, canonical dump and content hash.

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "dtdd/csa.hpp"
#include "dtdd/phy.hpp"
#include "dtdd/topology.hpp"

namespace dtdd {

enum class SchemeKind { kCfTdd, kNcTdd, kCrfcTdd, kCsa, kIFree };

std::string_view to_string(SchemeKind s);
/// Accepts the canonical names (CF_TDD, NC_TDD, CRFC_TDD, CSA, I_FREE) in
/// any case, with '-' or '_' and with or without the _TDD suffix.
SchemeKind parse_scheme(std::string_view s);

}  // namespace dtdd

namespace dtdd::config {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public ConfigError {
 public:
  ParseError(const std::string& what, int line, int column)
      : ConfigError(what), line_(line), column_(column) {}
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

class ValidationError : public ConfigError {
 public:
  ValidationError(const std::string& what, std::string key) : ConfigError(what), key_(std::move(key)) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

/// How a DL BS picks its transmit beam: the codebook entry the UE reports as
/// PMI, or the unquantized dominant right singular vector.
enum class DlPrecoding { kCodebook, kEigen };

struct RadioConfig {
  int prbs = 50;
  int subband_prbs = 13;
  double dl_tx_power_dbm = 40.0;  ///< total over the carrier
  double noise_psd_dbm_hz = -174.0;
  double bs_noise_figure_db = 5.0;
  double ue_noise_figure_db = 9.0;
  double subcarrier_spacing_khz = 30.0;
  DlPrecoding dl_precoding = DlPrecoding::kCodebook;

  int num_subbands() const { return (prbs + subband_prbs - 1) / subband_prbs; }
  int subband_size(int sb) const;
};

struct TrafficConfig {
  double load_mbps = 5.0;  ///< total offered load per cell, both directions
  double dl_ul_ratio = 2.0;
  double payload_bits = 400.0;
  /// Arrivals stop this long before the end so queues can drain.
  double drain_ms = 20.0;
};

struct MacConfig {
  int tti_symbols = 4;
  int harq_rtt_symbols = 12;
  int max_attempts = 4;
  double pf_window_tti = 100.0;
  /// Outer-loop link adaptation: down-step per first-attempt NACK in dB; the
  /// up-step is scaled so the loop settles at bler_target. 0 disables it.
  double olla_step_db = 0.5;
  double bler_target = 0.01;
  double bler_slope_per_db = phy::kDefaultBlerSlope;
  double dl_processing_symbols = 4.5;
  double ul_processing_symbols = 5.5;
  std::string mcs_table;  ///< empty selects the built-in table
};

struct RfcConfig {
  int period_slots = 10;
  int static_slots = 2;
  std::string static_format = "1:1";
  double crfc_fraction = 0.25;
  double crfc_threshold_db = 20.0;
};

struct CsaConfig {
  int pmi_bits = 4;
  csa::ConditionMode condition_mode = csa::ConditionMode::kComplement;
  double coordination_radius_isd = 2.0;
  int max_interferers = 0;  ///< 0 means N - 1
};

enum class CovarianceMode { kPerTerm, kLiteralSum };
enum class CliVisibility { kWhite, kExact };

struct ReceiverConfig {
  phy::IrcLoading loading = phy::IrcLoading::kNoiseLoaded;
  CovarianceMode covariance = CovarianceMode::kPerTerm;
  CliVisibility cli_visibility = CliVisibility::kWhite;
  phy::SinrMode sinr_mode = phy::SinrMode::kSinr;
  double sir_cap_db = 60.0;
};

struct KpiConfig {
  double outage_percentile = 1e-2;
};

struct SimConfig {
  SchemeKind scheme = SchemeKind::kCsa;
  std::uint64_t seed = 1;
  double duration_s = 2.0;
  topo::LayoutSpec layout;
  topo::ChannelModel channel;
  topo::PowerControl power_control;
  RadioConfig radio;
  TrafficConfig traffic;
  MacConfig mac;
  RfcConfig rfc;
  CsaConfig csa;
  ReceiverConfig receiver;
  KpiConfig kpi;
  /// Records the per-decode SINR of I_FREE, CF_TDD and CSA(c) for the UL.
  bool audit = false;
  /// Writes allocation and HARQ records here when non-empty.
  std::string event_log;

  double dl_load_bps() const;
  double ul_load_bps() const;
  std::int64_t total_ticks() const;
};

SimConfig load_config(const std::filesystem::path& path);
SimConfig parse_config(const std::string& yaml_text);
/// Throws ValidationError naming the first offending key.
void validate(const SimConfig& cfg);

/// Canonical YAML with every key present in a fixed order.
std::string dump_config(const SimConfig& cfg);
/// dump_config(parse_config(text)).
std::string normalize(const std::string& yaml_text);
/// FNV-1a over the canonical dump, as 16 hex digits.
std::string config_hash(const SimConfig& cfg);

}  // namespace dtdd::config
