#include "dtdd/phy.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>

namespace dtdd::phy {

namespace {
thread_local std::size_t g_irc_fallbacks = 0;
}

double to_db(double linear) { return 10.0 * std::log10(linear); }
double from_db(double db) { return std::pow(10.0, db / 10.0); }

Precoder make_precoder(const CMat& channel) {
  if (channel.rows() == 0 || channel.cols() == 0 || linalg::frobenius_norm(channel) == 0.0) {
    throw ZeroChannel("make_precoder: channel is zero");
  }
  Precoder p;
  CVec v;
  if (channel.rows() < channel.cols()) {
    // Wide channel: work on the small Gram matrix and map back.
    const auto eig = linalg::hermitian_eigen(channel * channel.adjoint());
    v = channel.adjoint() * eig.vectors.col(channel.rows() - 1);
  } else {
    const auto eig = linalg::hermitian_eigen(channel.adjoint() * channel);
    v = eig.vectors.col(channel.cols() - 1);
  }
  v *= 1.0 / linalg::norm(v);
  // Fix the global phase so the first non-negligible entry is real positive.
  for (const auto& x : v) {
    if (std::abs(x) > 1e-12) {
      v *= std::conj(x) / std::abs(x);
      break;
    }
  }
  p.vector = std::move(v);
  return p;
}

CVec dominant_receive_direction(const CMat& channel) {
  CVec g = channel * make_precoder(channel).vector;
  g *= 1.0 / linalg::norm(g);
  return g;
}

PmiCodebook make_dft_codebook(int num_ports, int bits) {
  if (num_ports <= 0 || bits < 0 || bits > 16) throw PhyError("make_dft_codebook: invalid dimensions");
  PmiCodebook cb;
  cb.num_ports = num_ports;
  cb.bits = bits;
  const int size = 1 << bits;
  const double scale = 1.0 / std::sqrt(static_cast<double>(num_ports));
  for (int k = 0; k < size; ++k) {
    CVec c(static_cast<std::size_t>(num_ports));
    for (int n = 0; n < num_ports; ++n) {
      c[static_cast<std::size_t>(n)] = std::polar(scale, 2.0 * std::numbers::pi * n * k / size);
    }
    cb.entries.push_back(std::move(c));
  }
  return cb;
}

int quantize_pmi(const CVec& v, const PmiCodebook& codebook) {
  if (codebook.entries.empty() || v.size() != static_cast<std::size_t>(codebook.num_ports)) {
    throw linalg::DimensionMismatch("quantize_pmi: vector and codebook dimensions differ");
  }
  int best = 0;
  double best_val = -1.0;
  for (std::size_t k = 0; k < codebook.entries.size(); ++k) {
    const double val = std::abs(linalg::dot(codebook.entries[k], v));
    // Strict comparison with a relative margin keeps the lowest index on ties.
    if (val > best_val * (1.0 + 1e-12) + 1e-300) {
      best_val = val;
      best = static_cast<int>(k);
    }
  }
  return best;
}

int select_pmi(const CMat& h, const PmiCodebook& codebook) {
  if (codebook.entries.empty() || h.cols() != static_cast<std::size_t>(codebook.num_ports)) {
    throw linalg::DimensionMismatch("select_pmi: channel and codebook dimensions differ");
  }
  int best = 0;
  double best_val = -1.0;
  for (std::size_t k = 0; k < codebook.entries.size(); ++k) {
    const double val = linalg::norm_sq(h * codebook.entries[k]);
    if (val > best_val * (1.0 + 1e-12) + 1e-300) {
      best_val = val;
      best = static_cast<int>(k);
    }
  }
  return best;
}

void InterferenceCovariance::add_term(const CVec& q, Contributor who) {
  if (q.size() != dim()) throw linalg::DimensionMismatch("add_term: dimension mismatch");
  R.add_outer(q, q);
  who.vector = q;
  who.white_power = 0.0;
  contributors.push_back(std::move(who));
}

void InterferenceCovariance::add_white(double power_per_antenna, Contributor who) {
  R.add_diagonal(power_per_antenna);
  who.vector = CVec();
  who.white_power = power_per_antenna;
  contributors.push_back(std::move(who));
}

InterferenceCovariance literal_sum_covariance(std::span<const CVec> terms, std::span<const Contributor> who) {
  if (terms.empty()) throw linalg::DimensionMismatch("literal_sum_covariance: no terms");
  InterferenceCovariance cov(terms.front().size());
  CVec sum(terms.front().size());
  for (const auto& t : terms) sum += t;
  cov.R.add_outer(sum, sum);
  cov.contributors.assign(who.begin(), who.end());
  return cov;
}

CVec irc_filter(const CVec& h, const InterferenceCovariance& cov, double noise_power, IrcLoading loading) {
  if (cov.dim() != h.size()) throw linalg::DimensionMismatch("irc_filter: covariance and channel differ in size");
  CMat a = cov.R;
  a.add_outer(h, h);
  CVec u;
  if (loading == IrcLoading::kLiteral) {
    try {
      u = linalg::hermitian_solve(a, h);
    } catch (const linalg::LinalgError&) {
      ++g_irc_fallbacks;
    }
    if (!u.empty() && u.all_finite()) return u;
  }
  a.add_diagonal(noise_power);
  try {
    u = linalg::hermitian_solve(a, h);
  } catch (const linalg::IllConditioned&) {
    // Extra loading relative to the matrix scale.
    ++g_irc_fallbacks;
    a.add_diagonal(1e-9 * linalg::frobenius_norm(a));
    u = linalg::hermitian_solve(a, h);
  }
  return u;
}

std::size_t irc_fallback_count() { return g_irc_fallbacks; }

double post_sinr(const CVec& u, const CVec& desired, std::span<const CVec> interferers, double noise_power,
                 const SinrOptions& opt) {
  const double signal = std::norm(linalg::dot(u, desired));
  double interference = 0.0;
  for (const auto& q : interferers) interference += std::norm(linalg::dot(u, q));
  if (opt.mode == SinrMode::kSinr) return signal / (interference + noise_power * linalg::norm_sq(u));
  const double cap = from_db(opt.sir_cap_db);
  if (interference <= 0.0) return cap;
  return std::min(signal / interference, cap);
}

double eesm(std::span<const double> sinrs, double beta) {
  if (sinrs.empty()) throw PhyError("eesm: empty input");
  if (!(beta > 0.0)) throw PhyError("eesm: beta must be positive");
  // Shift by the minimum so the exponentials cannot all underflow.
  const double g_min = *std::min_element(sinrs.begin(), sinrs.end());
  double acc = 0.0;
  for (double g : sinrs) acc += std::exp(-(g - g_min) / beta);
  return g_min - beta * std::log(acc / static_cast<double>(sinrs.size()));
}

McsTable McsTable::standard() {
  McsTable t;
  constexpr int kEntries = 15;
  for (int i = 0; i < kEntries; ++i) {
    const double f = static_cast<double>(i) / (kEntries - 1);
    t.entries.push_back({i, 0.25 + f * (5.0 - 0.25), -6.0 + f * 26.0, 1.0});
  }
  return t;
}

McsTable McsTable::load(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw McsTableError("cannot open MCS table " + path.string());
  McsTable t;
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    std::replace(line.begin(), line.end(), ',', ' ');
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ss(line);
    McsEntry e;
    if (!(ss >> e.index >> e.spectral_efficiency >> e.snr_threshold_db)) {
      throw McsTableError(path.string() + ":" + std::to_string(line_no) + ": expected index efficiency threshold_db [beta]");
    }
    if (!(ss >> e.eesm_beta)) e.eesm_beta = 1.0;
    if (e.index != static_cast<int>(t.entries.size())) {
      throw McsTableError(path.string() + ":" + std::to_string(line_no) + ": indices must count up from 0");
    }
    t.entries.push_back(e);
  }
  t.validate();
  return t;
}

void McsTable::validate() const {
  if (entries.empty()) throw McsTableError("MCS table is empty");
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (!(entries[i].eesm_beta > 0.0) || !(entries[i].spectral_efficiency > 0.0)) {
      throw McsTableError("MCS entry " + std::to_string(i) + " has non-positive efficiency or beta");
    }
    if (i > 0 && (entries[i].spectral_efficiency <= entries[i - 1].spectral_efficiency ||
                  entries[i].snr_threshold_db <= entries[i - 1].snr_threshold_db)) {
      throw McsTableError("MCS entry " + std::to_string(i) + " is not above its predecessor");
    }
  }
}

double bler(double effective_sinr, const McsEntry& mcs, double slope_per_db) {
  if (effective_sinr <= 0.0) return 1.0;
  const double x = slope_per_db * (to_db(effective_sinr) - mcs.snr_threshold_db);
  if (x > 700.0) return 0.0;
  return 1.0 / (1.0 + std::exp(x));
}

int select_mcs(const McsTable& table, double effective_sinr, double target, double slope_per_db) {
  int chosen = 0;
  for (const auto& e : table.entries) {
    if (bler(effective_sinr, e, slope_per_db) <= target) chosen = e.index;
  }
  return chosen;
}

HarqProcess harq_combine(HarqProcess process, std::span<const double> new_sinr) {
  if (process.attempts >= process.max_attempts) {
    throw MaxAttemptsExceeded("packet " + std::to_string(process.packet_id) + " used all " +
                              std::to_string(process.max_attempts) + " attempts");
  }
  if (process.accumulated.empty()) {
    process.accumulated.assign(new_sinr.begin(), new_sinr.end());
  } else {
    if (process.accumulated.size() != new_sinr.size()) {
      throw linalg::DimensionMismatch("harq_combine: retransmission uses a different allocation size");
    }
    for (std::size_t i = 0; i < new_sinr.size(); ++i) process.accumulated[i] += std::max(new_sinr[i], 0.0);
  }
  ++process.attempts;
  return process;
}

}  // namespace dtdd::phy
