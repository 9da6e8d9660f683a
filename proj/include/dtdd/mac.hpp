#pragma once

// MAC layer pieces: slot formats and their selection from the buffered
// traffic ratio, Poisson packet sources, proportional-fair sub-band
// scheduling, static-slot gating for weak users and latency bookkeeping.

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "dtdd/rng.hpp"
#include "dtdd/types.hpp"

namespace dtdd::mac {

class MacError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Symbol : char { kD = 'D', kU = 'U', kS = 'S' };

struct SlotFormat {
  std::string label;  ///< "dl:ul" ratio label, e.g. "3:2"
  /// Downlink share the label stands for; used for selection.
  double label_fraction = 0.5;
  std::array<Symbol, kSymbolsPerSlot> pattern{};

  int count(Symbol s) const;
  int dl_symbols() const { return count(Symbol::kD); }
  int ul_symbols() const { return count(Symbol::kU); }
  Symbol at(int symbol) const { return pattern[static_cast<std::size_t>(symbol)]; }
  std::string pattern_string() const;
  bool carries(Direction d, int symbol) const { return at(symbol) == (d == Direction::kDl ? Symbol::kD : Symbol::kU); }
};

/// D^a S U^b D^c S U^e with a + c = dl, b + e = ul and each pair split as
/// evenly as possible (first run takes the extra symbol). dl + ul must be 12.
SlotFormat make_format(int dl, int ul, std::string label, double label_fraction);

/// {4:1, 3:2, 1:1, 2:3, 1:4}: 12 data symbols plus one special symbol per
/// half slot.
std::vector<SlotFormat> standard_codebook();

/// Looks a format up by label in `codebook`; throws MacError if absent.
const SlotFormat& find_format(const std::vector<SlotFormat>& codebook, const std::string& label);

/// Z_dl / (Z_dl + Z_ul), 0.5 when both are empty.
double buffered_ratio(double z_dl, double z_ul);

/// Index of the format whose label fraction is closest to mu; on a tie the
/// format with the smaller downlink share wins.
std::size_t select_slot_format(double mu, const std::vector<SlotFormat>& codebook);

struct SymbolSplit {
  int dl = 0;
  int ul = 0;
};

/// Real-valued split of `data_symbols` proportional to mu, rounded.
SymbolSplit optimal_split(double mu, int data_symbols);

struct Mismatch {
  int ul = 0;
  int dl = 0;
};

/// chi_ul = |u_c - u_opt|, chi_dl = |d_c - d_opt|.
Mismatch symbol_mismatch(SymbolSplit selected, SymbolSplit optimal);

struct TrafficSource {
  Direction direction = Direction::kDl;
  double payload_bits = 400.0;
  double rate_per_s = 0.0;  ///< lambda
};

/// Per-UE offered load: cell load (bits/s in one direction) split over the
/// cell's users of that direction.
double per_user_rate(double cell_load_bps, int users, double payload_bits);

struct PacketRecord {
  std::int64_t id = -1;
  Direction direction = Direction::kDl;
  int owner = -1;
  double size_bits = 0.0;
  double arrival = 0.0;  ///< symbol ticks, fractional
  double remaining_bits = 0.0;
  std::optional<double> completion;  ///< decode time in ticks
  int harq_attempts = 0;
  bool failed = false;
};

/// Poisson arrivals for one UE as a lazily advanced exponential renewal
/// process on its own keyed stream.
class ArrivalProcess {
 public:
  ArrivalProcess(std::uint64_t seed, int ue, const TrafficSource& source);

  /// Time of the next arrival in symbol ticks; +inf when the rate is zero.
  double peek() const { return next_; }
  double pop();

 private:
  void advance();
  rng::KeyedEngine eng_;
  double mean_gap_ticks_ = 0.0;
  double next_ = 0.0;
};

/// All arrivals of `source` for one UE in [begin, end) ticks.
std::vector<PacketRecord> generate_arrivals(std::uint64_t seed, int ue, const TrafficSource& source,
                                            double begin_ticks, double end_ticks);

struct PfCandidate {
  int user = -1;
  double average = 0.0;                ///< smoothed served rate
  std::vector<double> rate;            ///< per sub-band instantaneous rate estimate
  std::vector<double> bits_per_subband;///< deliverable bits per sub-band at the chosen MCS
  double demand_bits = 0.0;            ///< +inf for full buffer
};

/// Greedy per-sub-band PF: each free sub-band goes to the candidate with the
/// largest rate / average whose demand is not yet covered (lowest index on
/// ties). `taken` marks sub-bands already used, e.g. by retransmissions.
/// Returns the owning candidate index per sub-band or -1.
std::vector<int> pf_schedule(std::span<const PfCandidate> candidates, int num_subbands,
                             std::span<const bool> taken = {});

/// Exponential smoothing with time constant `window` TTIs.
double pf_update(double average, double served, double window);

struct QualityEntry {
  int user = -1;
  double wideband_sinr_db = 0.0;
};

/// Bottom `fraction` of users by wideband SINR (floor of the count), further
/// limited to users below `threshold_db`. Returns their ids sorted.
std::vector<int> crfc_restricted(std::span<const QualityEntry> users, double fraction = 0.25,
                                 double threshold_db = 20.0);

/// Static slots are spread evenly over the period: slot floor(i P / K) for i < K.
bool is_static_slot(int slot_in_period, int period, int count);

/// Candidates allowed in a TTI: restricted users only when the TTI lies
/// entirely in static slots.
std::vector<int> crfc_preavoid(std::span<const int> requested, std::span<const int> restricted, bool static_tti);

/// Milliseconds between arrival and decode.
double account_latency(const PacketRecord& packet, double decode_ticks);

/// TTI on the earliest grant: `tti_symbols` of transmission plus receive
/// processing.
double min_latency_ticks(int tti_symbols, double processing_symbols);

}  // namespace dtdd::mac
