#include "dtdd/csa.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace dtdd::csa {

namespace {

int ceil_log2(int n) {
  int bits = 0;
  while ((1 << bits) < n) ++bits;
  return bits;
}

class BitWriter {
 public:
  void put(std::uint64_t value, int bits) {
    for (int i = bits - 1; i >= 0; --i) {
      if (used_ % 8 == 0) bytes_.push_back(0);
      if ((value >> i) & 1U) bytes_.back() |= static_cast<std::uint8_t>(0x80U >> (used_ % 8));
      ++used_;
    }
  }
  std::vector<std::uint8_t> take() { return std::move(bytes_); }

 private:
  std::vector<std::uint8_t> bytes_;
  std::size_t used_ = 0;
};

class BitReader {
 public:
  explicit BitReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}
  std::uint64_t get(int bits) {
    std::uint64_t v = 0;
    for (int i = 0; i < bits; ++i) {
      if (pos_ / 8 >= bytes_.size()) throw WireFormatError("decode_map: truncated message");
      v = (v << 1) | ((bytes_[pos_ / 8] >> (7 - pos_ % 8)) & 1U);
      ++pos_;
    }
    return v;
  }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

PrecoderMap build_precoder_map(int bs, std::int64_t tti, std::span<const ScheduledPrecoder> schedule,
                               const phy::PmiCodebook& codebook) {
  PrecoderMap map;
  map.sender = bs;
  map.tti = tti;
  for (const auto& s : schedule) map.entries.push_back({s.slot, s.sub_band, phy::quantize_pmi(s.vector, codebook)});
  std::sort(map.entries.begin(), map.entries.end(), [](const PmiEntry& a, const PmiEntry& b) {
    return a.slot != b.slot ? a.slot < b.slot : a.sub_band < b.sub_band;
  });
  for (std::size_t i = 1; i < map.entries.size(); ++i) {
    if (map.entries[i].slot == map.entries[i - 1].slot && map.entries[i].sub_band == map.entries[i - 1].sub_band) {
      throw CsaError("build_precoder_map: sub-band " + std::to_string(map.entries[i].sub_band) +
                     " scheduled twice in slot " + std::to_string(map.entries[i].slot));
    }
  }
  return map;
}

int WireFormat::sub_band_bits() const { return ceil_log2(num_subbands); }

std::vector<std::uint8_t> encode_map(const PrecoderMap& map, const WireFormat& fmt) {
  if (map.entries.size() > 255) throw WireFormatError("encode_map: more than 255 entries");
  if (map.sender < 0 || map.sender > 0xFFFF) throw WireFormatError("encode_map: sender id out of range");
  if (map.tti < 0 || map.tti > 0xFFFFFFFFLL) throw WireFormatError("encode_map: tti out of range");
  BitWriter w;
  w.put(static_cast<std::uint64_t>(map.sender), WireFormat::kSenderBits);
  w.put(static_cast<std::uint64_t>(map.tti), WireFormat::kTtiBits);
  w.put(map.entries.size(), WireFormat::kCountBits);
  for (const auto& e : map.entries) {
    if (e.slot < 0 || e.slot >= (1 << WireFormat::kSlotBits) || e.sub_band < 0 || e.sub_band >= fmt.num_subbands ||
        e.pmi < 0 || e.pmi >= (1 << fmt.pmi_bits)) {
      throw WireFormatError("encode_map: entry field out of range");
    }
    w.put(static_cast<std::uint64_t>(e.slot), WireFormat::kSlotBits);
    w.put(static_cast<std::uint64_t>(e.sub_band), fmt.sub_band_bits());
    w.put(static_cast<std::uint64_t>(e.pmi), fmt.pmi_bits);
  }
  return w.take();
}

PrecoderMap decode_map(std::span<const std::uint8_t> bytes, const WireFormat& fmt) {
  BitReader r(bytes);
  PrecoderMap map;
  map.sender = static_cast<int>(r.get(WireFormat::kSenderBits));
  map.tti = static_cast<std::int64_t>(r.get(WireFormat::kTtiBits));
  const auto count = r.get(WireFormat::kCountBits);
  for (std::uint64_t i = 0; i < count; ++i) {
    PmiEntry e;
    e.slot = static_cast<int>(r.get(WireFormat::kSlotBits));
    e.sub_band = static_cast<int>(r.get(fmt.sub_band_bits()));
    e.pmi = static_cast<int>(r.get(fmt.pmi_bits));
    if (e.sub_band >= fmt.num_subbands) throw WireFormatError("decode_map: sub-band index out of range");
    map.entries.push_back(e);
  }
  return map;
}

std::int64_t payload_bits(const PrecoderMap& map, const WireFormat& fmt) {
  return static_cast<std::int64_t>(map.entries.size()) * (fmt.sub_band_bits() + fmt.pmi_bits);
}

std::int64_t signaling_overhead(int prbs, int subband_prbs, int pmi_bits, int cli_slots) {
  if (cli_slots == 0) return 0;
  if (prbs <= 0 || subband_prbs <= 0 || pmi_bits < 0 || cli_slots < 0) {
    throw CsaError("signaling_overhead: inputs must be positive");
  }
  const long double ratio = static_cast<long double>(prbs) / subband_prbs;
  const long double bits = cli_slots * ratio * (std::log2(ratio) + pmi_bits);
  return static_cast<std::int64_t>(std::floor(bits + 1e-9L));
}

std::vector<AggressorEstimate> identify_interferers(int victim, int sub_band, int slot,
                                                    std::span<const PrecoderMap> maps, const BsBsChannel& q,
                                                    const phy::PmiCodebook& codebook, std::size_t max_count) {
  std::vector<AggressorEstimate> all;
  for (const auto& map : maps) {
    if (map.sender == victim) continue;
    for (const auto& e : map.entries) {
      if (e.slot != slot || e.sub_band != sub_band) continue;
      AggressorEstimate est;
      est.victim = victim;
      est.sub_band = sub_band;
      est.aggressor = map.sender;
      est.interference = q(map.sender) * codebook.at(e.pmi);
      est.strength = linalg::norm_sq(est.interference);
      all.push_back(std::move(est));
    }
  }
  std::sort(all.begin(), all.end(), [](const AggressorEstimate& a, const AggressorEstimate& b) {
    return a.strength != b.strength ? a.strength > b.strength : a.aggressor < b.aggressor;
  });
  if (all.size() > max_count) all.resize(max_count);
  return all;
}

ProjectorState build_cli_projector(std::span<const AggressorEstimate> estimates, const linalg::Tolerances& tol) {
  if (estimates.empty()) throw linalg::DimensionMismatch("build_cli_projector: no estimates");
  ProjectorState st;
  st.victim = estimates.front().victim;
  st.sub_band = estimates.front().sub_band;
  std::vector<CVec> vs;
  vs.reserve(estimates.size());
  for (const auto& e : estimates) vs.push_back(e.interference);
  st.basis = linalg::gram_schmidt(vs, tol);
  if (st.basis.empty()) return st;
  st.projector = linalg::build_projector(st.basis, linalg::TransposeForm::kConjugate, tol);
  st.passthrough = false;
  return st;
}

std::string_view to_string(ConditionMode m) {
  switch (m) {
    case ConditionMode::kLiteral:
      return "literal";
    case ConditionMode::kComplement:
      return "complement";
    case ConditionMode::kOracle:
      return "oracle";
  }
  return "complement";
}

ConditionMode parse_condition_mode(std::string_view s) {
  if (s == "literal" || s == "a") return ConditionMode::kLiteral;
  if (s == "complement" || s == "b") return ConditionMode::kComplement;
  if (s == "oracle" || s == "c") return ConditionMode::kOracle;
  throw CsaError("unknown conditioning mode '" + std::string(s) + "'");
}

ConditionedCovariance condition_covariance(const phy::InterferenceCovariance& r, const ProjectorState& proj,
                                           ConditionMode mode, double noise_power) {
  ConditionedCovariance out;
  out.mode = mode;
  if (mode == ConditionMode::kOracle) {
    out.cov = r.filtered([](const phy::Contributor& c) { return c.cls != phy::TermClass::kCrossLink; });
    return out;
  }
  if (proj.passthrough) {
    out.cov = r;
    out.passthrough = true;
    return out;
  }
  const std::size_t n = r.dim();
  if (proj.projector.rows() != n || proj.projector.cols() != n) {
    throw linalg::DimensionMismatch("condition_covariance: projector and covariance differ in size");
  }
  out.cov.contributors = r.contributors;
  if (mode == ConditionMode::kLiteral) {
    out.cov.R = CMat(n, n);
    for (std::size_t rho = 0; rho < n; ++rho) {
      const CVec a = proj.projector.col(rho);
      if (linalg::norm(a) <= linalg::kDefaultTolerances.dependence) continue;  // projection onto a null line
      const CVec col = linalg::line_project(r.R.col(rho), a);
      for (std::size_t i = 0; i < n; ++i) out.cov.R(i, rho) = col[i];
    }
    return out;
  }
  CMat comp = CMat::identity(n) - proj.projector;
  out.cov.R = comp * r.R * comp.adjoint();
  out.cov.R.add_diagonal(noise_power);
  return out;
}

}  // namespace dtdd::csa
