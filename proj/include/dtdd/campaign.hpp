#pragma once

// Sweeps over (load, scheme, seed), one KPI file per tuple, and the tables
// derived from those files: per-tuple rows, the per-direction comparison
// against CF_TDD and the distribution curves for plotting.

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "dtdd/config.hpp"
#include "dtdd/kpi.hpp"

namespace dtdd::campaign {

class CampaignError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class MissingInput : public CampaignError {
 public:
  using CampaignError::CampaignError;
};

struct Campaign {
  config::SimConfig base;
  std::vector<double> loads_mbps;
  std::vector<SchemeKind> schemes;
  std::vector<std::uint64_t> seeds;
  std::filesystem::path out_dir;
  int workers = 1;
};

/// Throws CampaignError on empty axes, duplicate tuples or workers < 1.
void validate(const Campaign& c);

/// kpi/<scheme>_load<L>_seed<S>.json relative to the output directory.
std::filesystem::path kpi_path(SchemeKind scheme, double load_mbps, std::uint64_t seed);

struct ResultRow {
  std::string scheme;
  double load_mbps = 0.0;
  std::uint64_t seed = 0;
  Direction direction = Direction::kDl;
  bool failed = false;
  std::string error;
  kpi::OutageEstimate outage;
  double cir_p10_db = 0.0;  ///< UL only; NaN when there is nothing to report
  double throughput_p10 = 0.0;
  double mu_median = 0.0;
  std::int64_t overhead_bits = 0;
};

/// Two rows (DL, UL) for one stored run.
std::vector<ResultRow> rows_for(const kpi::KpiStore& store, double percentile);

struct CampaignResult {
  std::vector<ResultRow> rows;
  int failed_tuples = 0;
  bool any_insufficient = false;
};

/// Runs every tuple on a bounded worker pool. A tuple that throws is flagged
/// and the rest carry on. Writes kpi/*.json, results.csv and
/// comparison_dl.csv / comparison_ul.csv under the output directory.
CampaignResult run_campaign(const Campaign& c);

std::string results_csv(const std::vector<ResultRow>& rows);

/// Loads down, schemes across; outage pooled over seeds plus the symmetric
/// percentage against CF_TDD where that scheme is present.
std::string comparison_csv(const std::vector<kpi::KpiStore>& stores, Direction d, double percentile);

enum class PlotKind { kLatencyCcdf, kMuEcdf, kCirEcdf, kTputEcdf };
PlotKind parse_plot_kind(const std::string& s);

/// P(latency > x) with censored packets counted as exceeding every x.
kpi::Curve latency_ccdf(const std::vector<double>& latency_ms, std::size_t censored);

/// scheme,direction,value,probability rows pooled per scheme over the given
/// files. Throws MissingInput when a file is absent or the list is empty.
std::string emit_plotdata(const std::vector<std::filesystem::path>& files, PlotKind kind);

}  // namespace dtdd::campaign
