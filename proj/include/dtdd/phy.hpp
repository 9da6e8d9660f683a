#pragma once

// Link abstraction: single-stream precoding, PMI quantization, IRC receive
// filtering, post-combining SINR, EESM, BLER and Chase-combining HARQ.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "dtdd/linalg.hpp"

namespace dtdd::phy {

using linalg::CMat;
using linalg::CVec;

class PhyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class ZeroChannel : public PhyError {
 public:
  using PhyError::PhyError;
};
class MaxAttemptsExceeded : public PhyError {
 public:
  using PhyError::PhyError;
};
class McsTableError : public PhyError {
 public:
  using PhyError::PhyError;
};

struct Precoder {
  int user = -1;
  int sub_band = 0;
  CVec vector;
  std::optional<int> pmi_index;
};

/// Dominant right singular vector of `channel` (rx x tx): the unit-norm
/// transmit direction maximizing |H v|^2.
Precoder make_precoder(const CMat& channel);

/// Dominant left singular direction, i.e. the unit-norm receive combiner
/// matched to `channel` * `make_precoder(channel)`.
CVec dominant_receive_direction(const CMat& channel);

struct PmiCodebook {
  int num_ports = 0;
  int bits = 0;
  std::vector<CVec> entries;

  std::size_t size() const { return entries.size(); }
  const CVec& at(int index) const { return entries.at(static_cast<std::size_t>(index)); }
};

/// Single-layer DFT codebook: c_k[n] = exp(j 2 pi n k / 2^bits) / sqrt(N).
PmiCodebook make_dft_codebook(int num_ports, int bits);

/// argmax_k |c_k^H v|, lowest index on ties.
int quantize_pmi(const CVec& v, const PmiCodebook& codebook);

/// Codebook entry maximising ||H c_k||^2 for an M x N channel, lowest index on ties.
int select_pmi(const CMat& h, const PmiCodebook& codebook);

enum class TermClass { kSameLink, kCrossLink };

struct Contributor {
  int link_id = -1;
  TermClass cls = TermClass::kSameLink;
  /// The term as added, so the covariance can be rebuilt from a subset.
  CVec vector;
  double white_power = 0.0;
};

/// Receive-side interference covariance with a record of which transmitters
/// contributed.
struct InterferenceCovariance {
  CMat R;
  std::vector<Contributor> contributors;

  InterferenceCovariance() = default;
  explicit InterferenceCovariance(std::size_t dim) : R(dim, dim) {}

  std::size_t dim() const { return R.rows(); }
  /// R += q q^H where q already carries power and gain.
  void add_term(const CVec& q, Contributor who);
  /// R += power * I. Used for transmitters whose spatial signature the
  /// receiver cannot know.
  void add_white(double power_per_antenna, Contributor who);
  /// Rebuilds R from the contributors passing `keep`.
  template <class Pred>
  InterferenceCovariance filtered(Pred keep) const {
    InterferenceCovariance out(dim());
    for (const auto& c : contributors) {
      if (!keep(c)) continue;
      if (c.vector.empty()) {
        out.add_white(c.white_power, c);
      } else {
        out.add_term(c.vector, c);
      }
    }
    return out;
  }
};

/// Rank-1 reading of the covariance: (sum_i q_i)(sum_i q_i)^H.
InterferenceCovariance literal_sum_covariance(std::span<const CVec> terms, std::span<const Contributor> who);

enum class IrcLoading {
  kNoiseLoaded,  ///< (h h^H + R + sigma^2 I)^-1 h
  kLiteral,      ///< (h h^H + R)^-1 h
};

/// LMMSE-IRC combiner. An ill-conditioned literal system falls back to the
/// noise-loaded one and bumps `irc_fallback_count()`, which counts per thread.
CVec irc_filter(const CVec& effective_channel, const InterferenceCovariance& cov, double noise_power,
                IrcLoading loading = IrcLoading::kNoiseLoaded);

std::size_t irc_fallback_count();

enum class SinrMode { kSinr, kSir };

struct SinrOptions {
  SinrMode mode = SinrMode::kSinr;
  /// Returned by SIR mode when there is no interference at all, and an upper
  /// clamp for SIR mode otherwise.
  double sir_cap_db = 60.0;
};

/// |u^H s|^2 / (sum_j |u^H q_j|^2 + sigma^2 |u|^2). Every vector already
/// includes transmit power, large-scale gain and precoding.
double post_sinr(const CVec& u, const CVec& desired, std::span<const CVec> interferers, double noise_power,
                 const SinrOptions& opt = {});

/// -beta ln(mean(exp(-gamma_i / beta)))
double eesm(std::span<const double> sinrs, double beta);

struct McsEntry {
  int index = 0;
  double spectral_efficiency = 0.0;  ///< information bits per resource element
  double snr_threshold_db = 0.0;
  double eesm_beta = 1.0;
};

struct McsTable {
  std::vector<McsEntry> entries;

  std::size_t size() const { return entries.size(); }
  const McsEntry& at(int index) const { return entries.at(static_cast<std::size_t>(index)); }

  /// 15 entries, efficiency 0.25..5.0 and threshold -6..20 dB, both linear in
  /// the index.
  static McsTable standard();
  /// Whitespace or comma separated rows: index efficiency threshold_db beta.
  /// Lines starting with '#' are ignored.
  static McsTable load(const std::filesystem::path& path);
  /// Throws McsTableError unless both columns increase strictly.
  void validate() const;
};

inline constexpr double kDefaultBlerSlope = 2.0;

/// 1 / (1 + exp(k (gamma_dB - threshold_dB)))
double bler(double effective_sinr, const McsEntry& mcs, double slope_per_db = kDefaultBlerSlope);

/// Highest index whose BLER at `effective_sinr` is within `target`; index 0
/// when none qualifies. `effective_sinr` is linear.
int select_mcs(const McsTable& table, double effective_sinr, double target = 0.01,
               double slope_per_db = kDefaultBlerSlope);

struct HarqProcess {
  std::int64_t packet_id = -1;
  int attempts = 0;
  int max_attempts = 4;
  int mcs_index = 0;
  /// Linear SINR per allocated resource, summed over attempts.
  std::vector<double> accumulated;
};

/// Chase combining: adds the new per-resource SINRs to the accumulated ones.
/// Throws MaxAttemptsExceeded once `max_attempts` have been used.
HarqProcess harq_combine(HarqProcess process, std::span<const double> new_sinr);

double to_db(double linear);
double from_db(double db);

}  // namespace dtdd::phy
