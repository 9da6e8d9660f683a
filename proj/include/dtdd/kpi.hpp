#pragma once

// Run outputs: latency, throughput and CIR samples, the buffered-ratio and
// mismatch series, derived statistics, and the JSON document a run writes.

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "dtdd/types.hpp"

namespace dtdd::kpi {

class KpiError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct OutageEstimate {
  double value_ms = 0.0;  ///< +inf when the quantile falls on a censored sample
  bool insufficient = false;
  std::size_t samples = 0;
};

/// Empirical (1 - p) quantile of `latencies_ms` plus `censored` samples that
/// rank above everything. Flags `insufficient` when fewer than 10 / p
/// samples back the estimate.
OutageEstimate outage_latency(std::span<const double> latencies_ms, std::size_t censored, double p);

using Curve = std::vector<std::pair<double, double>>;

/// Right-continuous empirical CDF; one point per distinct value.
Curve ecdf(std::span<const double> samples);
/// P(X > x) at the same points as ecdf.
Curve ccdf(std::span<const double> samples);

/// Linear-interpolation-free median (lower middle element for even counts
/// averaged with the upper one).
double median(std::span<const double> samples);
/// Value at cumulative fraction q (nearest rank).
double quantile(std::span<const double> samples, double q);

/// 10 log10(signal / interference), capped at `cap_db` when the interference
/// vanishes or the ratio exceeds the cap.
double cir_db(double signal, double interference, double cap_db = 60.0);

/// Symmetric percentage difference 200 (a - b) / (a + b).
double symmetric_percent(double a, double b);

struct RfcRecord {
  int cell = 0;
  std::int64_t slot = 0;
  double mu = 0.5;
  int d_c = 0;
  int u_c = 0;
  int d_opt = 0;
  int u_opt = 0;
};

/// sum over records of min(u_c, u_opt) * f_ul + min(d_c, d_opt) * f_dl,
/// with f the realized throughput per scheduled symbol of each direction.
double capacity(std::span<const RfcRecord> history, double f_ul, double f_dl);

struct DirectionKpi {
  std::vector<double> latency_ms;
  /// Censoring times of packets that failed or were still queued at the end.
  std::vector<double> censored_ms;
  std::vector<double> throughput_bits_per_ms;
  std::int64_t generated = 0;
  std::int64_t decoded = 0;
  std::int64_t failed = 0;
  std::int64_t in_flight = 0;
  std::int64_t transmissions = 0;  ///< TB attempts including retransmissions
  std::int64_t delivered_bits = 0;
  std::int64_t scheduled_symbols = 0;

  DirectionKpi& operator+=(const DirectionKpi& o);
};

struct NestingSample {
  double ifree_db = 0.0;
  double cf_db = 0.0;
  double csa_oracle_db = 0.0;
};

struct KpiStore {
  std::string scheme;
  std::string config_hash;
  std::uint64_t seed = 0;
  double load_mbps = 0.0;
  double duration_s = 0.0;
  DirectionKpi dl;
  DirectionKpi ul;
  std::vector<double> ul_cir_db;
  std::vector<double> mu;  ///< one value per cell per slot, slot-major
  std::vector<int> chi_ul;
  std::vector<int> chi_dl;
  double capacity_mbps = 0.0;
  std::int64_t overhead_bits = 0;
  std::int64_t irc_fallbacks = 0;
  std::vector<NestingSample> nesting;

  const DirectionKpi& direction(Direction d) const { return d == Direction::kDl ? dl : ul; }
  DirectionKpi& direction(Direction d) { return d == Direction::kDl ? dl : ul; }
};

/// Rounds stored samples to the precision used in the serialized document,
/// so statistics computed before and after a round trip agree.
void quantize_samples(KpiStore& store);

/// Deterministic JSON text including a summary block at `percentile`.
std::string serialize(const KpiStore& store, double percentile = 1e-2);
KpiStore deserialize(const std::string& text);

/// Writes through a temporary file and renames it into place.
void write_atomic(const std::filesystem::path& path, const std::string& contents);
KpiStore read_kpi_file(const std::filesystem::path& path);

}  // namespace dtdd::kpi
