#pragma once

// Coordinated CLI suppression: aggressor-side precoder maps, victim-side
// identification of the strongest BS-BS interferers, the CLI projector and
// covariance conditioning.

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <span>
#include <string_view>
#include <vector>

#include "dtdd/linalg.hpp"
#include "dtdd/phy.hpp"

namespace dtdd::csa {

using linalg::CMat;
using linalg::CVec;

class CsaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class WireFormatError : public CsaError {
 public:
  using CsaError::CsaError;
};

struct PmiEntry {
  int slot = 0;  ///< CLI slot id within the RFC period, 0..15
  int sub_band = 0;
  int pmi = 0;
  bool operator==(const PmiEntry&) const = default;
};

struct PrecoderMap {
  int sender = -1;
  std::int64_t tti = 0;
  std::vector<PmiEntry> entries;
  bool operator==(const PrecoderMap&) const = default;
};

/// An aggressor's own scheduled DL precoder for one slot and sub-band.
struct ScheduledPrecoder {
  int slot = 0;
  int sub_band = 0;
  CVec vector;
};

/// One entry per scheduled (slot, sub-band), PMI quantized from the actual
/// precoder. Entries are sorted by (slot, sub_band); duplicates are rejected.
PrecoderMap build_precoder_map(int bs, std::int64_t tti, std::span<const ScheduledPrecoder> schedule,
                               const phy::PmiCodebook& codebook);

struct WireFormat {
  int num_subbands = 1;
  int pmi_bits = 4;

  int sub_band_bits() const;
  static constexpr int kSenderBits = 16;
  static constexpr int kTtiBits = 32;
  static constexpr int kCountBits = 8;
  static constexpr int kSlotBits = 4;
};

/// Packs header {sender, tti, count} then entries {slot, sub_band, pmi},
/// MSB first, zero padded to a whole byte.
std::vector<std::uint8_t> encode_map(const PrecoderMap& map, const WireFormat& fmt);
PrecoderMap decode_map(std::span<const std::uint8_t> bytes, const WireFormat& fmt);

/// Bits carrying sub-band index and PMI, header and slot ids excluded.
std::int64_t payload_bits(const PrecoderMap& map, const WireFormat& fmt);

/// cli_slots * (prbs / subband_prbs) * (log2(prbs / subband_prbs) + pmi_bits),
/// evaluated in real arithmetic and truncated to whole bits.
std::int64_t signaling_overhead(int prbs, int subband_prbs, int pmi_bits, int cli_slots);

struct AggressorEstimate {
  int victim = -1;
  int sub_band = 0;
  int aggressor = -1;
  CVec interference;  ///< Q v_hat
  double strength = 0.0;  ///< |Q v_hat|^2
};

/// Victim-side BS-BS channel towards an aggressor on the sub-band of
/// interest, scaled by the aggressor's transmit amplitude.
using BsBsChannel = std::function<CMat(int aggressor)>;

/// Ranks every aggressor that announced `sub_band` in `slot` by the power of
/// its reconstructed interference vector and keeps the `max_count` strongest,
/// strongest first, lower BS id on ties.
std::vector<AggressorEstimate> identify_interferers(int victim, int sub_band, int slot,
                                                    std::span<const PrecoderMap> maps, const BsBsChannel& q,
                                                    const phy::PmiCodebook& codebook, std::size_t max_count);

struct ProjectorState {
  int victim = -1;
  int sub_band = 0;
  linalg::Basis basis;
  CMat projector;
  std::int64_t valid_from = 0;
  std::int64_t valid_to = 0;
  /// True when no projector could be built; conditioning is then a no-op.
  bool passthrough = true;
};

/// Gram-Schmidt basis over the estimates' interference vectors and the
/// projector onto their span. Throws linalg::SingularGram on failure.
ProjectorState build_cli_projector(std::span<const AggressorEstimate> estimates,
                                   const linalg::Tolerances& tol = linalg::kDefaultTolerances);

enum class ConditionMode {
  kLiteral,     ///< column-wise line projection onto the projector columns
  kComplement,  ///< (I - P) R (I - P)^H + sigma^2 I
  kOracle,      ///< rebuild without any cross-link contributor; test use only
};

std::string_view to_string(ConditionMode m);
ConditionMode parse_condition_mode(std::string_view s);

struct ConditionedCovariance {
  phy::InterferenceCovariance cov;
  ConditionMode mode = ConditionMode::kComplement;
  bool passthrough = false;
};

ConditionedCovariance condition_covariance(const phy::InterferenceCovariance& r, const ProjectorState& proj,
                                           ConditionMode mode, double noise_power);

}  // namespace dtdd::csa
