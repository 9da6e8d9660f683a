#include "dtdd/mac.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace dtdd::mac {

int SlotFormat::count(Symbol s) const { return static_cast<int>(std::count(pattern.begin(), pattern.end(), s)); }

std::string SlotFormat::pattern_string() const {
  std::string out;
  for (Symbol s : pattern) out.push_back(static_cast<char>(s));
  return out;
}

SlotFormat make_format(int dl, int ul, std::string label, double label_fraction) {
  if (dl < 0 || ul < 0 || dl + ul != kSymbolsPerSlot - 2) {
    throw MacError("make_format: need dl + ul == " + std::to_string(kSymbolsPerSlot - 2));
  }
  SlotFormat f;
  f.label = std::move(label);
  f.label_fraction = label_fraction;
  std::size_t pos = 0;
  auto run = [&](Symbol s, int n) {
    for (int i = 0; i < n; ++i) f.pattern[pos++] = s;
  };
  const int a = (dl + 1) / 2;
  const int c = dl - a;
  const int b = (ul + 1) / 2;
  const int e = ul - b;
  if (c == 0 || e == 0) {
    run(Symbol::kD, dl);
    run(Symbol::kS, 2);
    run(Symbol::kU, ul);
  } else {
    run(Symbol::kD, a);
    run(Symbol::kS, 1);
    run(Symbol::kU, b);
    run(Symbol::kD, c);
    run(Symbol::kS, 1);
    run(Symbol::kU, e);
  }
  return f;
}

std::vector<SlotFormat> standard_codebook() {
  return {make_format(10, 2, "4:1", 0.8), make_format(7, 5, "3:2", 0.6), make_format(6, 6, "1:1", 0.5),
          make_format(5, 7, "2:3", 0.4), make_format(2, 10, "1:4", 0.2)};
}

const SlotFormat& find_format(const std::vector<SlotFormat>& codebook, const std::string& label) {
  for (const auto& f : codebook)
    if (f.label == label) return f;
  throw MacError("unknown slot format '" + label + "'");
}

double buffered_ratio(double z_dl, double z_ul) {
  if (z_dl < 0.0 || z_ul < 0.0) throw MacError("buffered_ratio: negative buffer");
  const double total = z_dl + z_ul;
  return total > 0.0 ? z_dl / total : 0.5;
}

std::size_t select_slot_format(double mu, const std::vector<SlotFormat>& codebook) {
  if (codebook.empty()) throw MacError("select_slot_format: empty codebook");
  std::size_t best = 0;
  for (std::size_t i = 1; i < codebook.size(); ++i) {
    const double d_best = std::abs(codebook[best].label_fraction - mu);
    const double d_i = std::abs(codebook[i].label_fraction - mu);
    // Distances are compared with a small slack so that ties such as
    // |0.4 - 0.3| vs |0.2 - 0.3| are recognized despite rounding.
    if (d_i < d_best - 1e-12 ||
        (std::abs(d_i - d_best) <= 1e-12 && codebook[i].label_fraction < codebook[best].label_fraction)) {
      best = i;
    }
  }
  return best;
}

SymbolSplit optimal_split(double mu, int data_symbols) {
  SymbolSplit s;
  s.dl = static_cast<int>(std::lround(mu * data_symbols));
  s.ul = data_symbols - s.dl;
  return s;
}

Mismatch symbol_mismatch(SymbolSplit selected, SymbolSplit optimal) {
  return {std::abs(selected.ul - optimal.ul), std::abs(selected.dl - optimal.dl)};
}

double per_user_rate(double cell_load_bps, int users, double payload_bits) {
  if (users <= 0 || cell_load_bps <= 0.0) return 0.0;
  return cell_load_bps / (users * payload_bits);
}

ArrivalProcess::ArrivalProcess(std::uint64_t seed, int ue, const TrafficSource& source)
    : eng_(seed, rng::Stream::kArrivals, {static_cast<std::uint64_t>(ue), static_cast<std::uint64_t>(index(source.direction))}) {
  if (source.rate_per_s < 0.0) throw MacError("arrival rate must be non-negative");
  if (source.rate_per_s == 0.0) {
    next_ = std::numeric_limits<double>::infinity();
    return;
  }
  mean_gap_ticks_ = kSymbolsPerMs * 1000.0 / source.rate_per_s;
  advance();
}

void ArrivalProcess::advance() {
  // Inverse transform on (0, 1].
  const double u = 1.0 - eng_.uniform();
  next_ += -std::log(u) * mean_gap_ticks_;
}

double ArrivalProcess::pop() {
  const double t = next_;
  if (std::isfinite(t)) advance();
  return t;
}

std::vector<PacketRecord> generate_arrivals(std::uint64_t seed, int ue, const TrafficSource& source,
                                            double begin_ticks, double end_ticks) {
  ArrivalProcess proc(seed, ue, source);
  std::vector<PacketRecord> out;
  while (proc.peek() < end_ticks) {
    const double t = proc.pop();
    if (t < begin_ticks) continue;
    PacketRecord p;
    p.id = static_cast<std::int64_t>(out.size());
    p.direction = source.direction;
    p.owner = ue;
    p.size_bits = source.payload_bits;
    p.remaining_bits = source.payload_bits;
    p.arrival = t;
    out.push_back(p);
  }
  return out;
}

std::vector<int> pf_schedule(std::span<const PfCandidate> candidates, int num_subbands, std::span<const bool> taken) {
  std::vector<int> owner(static_cast<std::size_t>(num_subbands), -1);
  std::vector<double> left;
  left.reserve(candidates.size());
  for (const auto& c : candidates) left.push_back(c.demand_bits);
  for (int sb = 0; sb < num_subbands; ++sb) {
    const auto s = static_cast<std::size_t>(sb);
    if (!taken.empty() && taken[s]) continue;
    int best = -1;
    double best_metric = -1.0;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      if (left[i] <= 0.0) continue;
      const double metric = candidates[i].rate[s] / std::max(candidates[i].average, 1e-9);
      if (metric > best_metric) {
        best_metric = metric;
        best = static_cast<int>(i);
      }
    }
    if (best < 0) continue;
    owner[s] = best;
    const auto& c = candidates[static_cast<std::size_t>(best)];
    left[static_cast<std::size_t>(best)] -= c.bits_per_subband.empty() ? 0.0 : c.bits_per_subband[s];
  }
  return owner;
}

double pf_update(double average, double served, double window) {
  const double a = 1.0 / std::max(window, 1.0);
  return (1.0 - a) * average + a * served;
}

std::vector<int> crfc_restricted(std::span<const QualityEntry> users, double fraction, double threshold_db) {
  std::vector<QualityEntry> sorted(users.begin(), users.end());
  std::sort(sorted.begin(), sorted.end(), [](const QualityEntry& a, const QualityEntry& b) {
    return a.wideband_sinr_db != b.wideband_sinr_db ? a.wideband_sinr_db < b.wideband_sinr_db : a.user < b.user;
  });
  const auto count = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(sorted.size()) + 1e-9));
  std::vector<int> out;
  for (std::size_t i = 0; i < count; ++i)
    if (sorted[i].wideband_sinr_db < threshold_db) out.push_back(sorted[i].user);
  std::sort(out.begin(), out.end());
  return out;
}

bool is_static_slot(int slot_in_period, int period, int count) {
  if (period <= 0 || count <= 0) return false;
  for (int i = 0; i < count && i < period; ++i)
    if (i * period / count == slot_in_period) return true;
  return false;
}

std::vector<int> crfc_preavoid(std::span<const int> requested, std::span<const int> restricted, bool static_tti) {
  std::vector<int> out;
  for (int u : requested) {
    const bool weak = std::find(restricted.begin(), restricted.end(), u) != restricted.end();
    if (!weak || static_tti) out.push_back(u);
  }
  return out;
}

double account_latency(const PacketRecord& packet, double decode_ticks) {
  if (decode_ticks < packet.arrival) throw MacError("account_latency: decode precedes arrival");
  return ticks_to_ms(decode_ticks - packet.arrival);
}

double min_latency_ticks(int tti_symbols, double processing_symbols) { return tti_symbols + processing_symbols; }

}  // namespace dtdd::mac
