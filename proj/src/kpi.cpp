#include "dtdd/kpi.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include "json.hpp"
#include <sstream>

namespace dtdd::kpi {

using nlohmann::json;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double round_to(double x, double step) { return std::round(x / step) * step; }

void round_all(std::vector<double>& v, double step) {
  for (auto& x : v) x = round_to(x, step);
}

json finite_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

json direction_json(const DirectionKpi& d) {
  return json{{"latency_ms", d.latency_ms},
              {"censored_ms", d.censored_ms},
              {"throughput_bits_per_ms", d.throughput_bits_per_ms},
              {"generated", d.generated},
              {"decoded", d.decoded},
              {"failed", d.failed},
              {"in_flight", d.in_flight},
              {"transmissions", d.transmissions},
              {"delivered_bits", d.delivered_bits},
              {"scheduled_symbols", d.scheduled_symbols}};
}

DirectionKpi direction_from(const json& j) {
  DirectionKpi d;
  j.at("latency_ms").get_to(d.latency_ms);
  j.at("censored_ms").get_to(d.censored_ms);
  j.at("throughput_bits_per_ms").get_to(d.throughput_bits_per_ms);
  j.at("generated").get_to(d.generated);
  j.at("decoded").get_to(d.decoded);
  j.at("failed").get_to(d.failed);
  j.at("in_flight").get_to(d.in_flight);
  j.at("transmissions").get_to(d.transmissions);
  j.at("delivered_bits").get_to(d.delivered_bits);
  j.at("scheduled_symbols").get_to(d.scheduled_symbols);
  return d;
}

json summary_json(const KpiStore& s, double p) {
  json out;
  out["percentile"] = p;
  for (Direction d : {Direction::kDl, Direction::kUl}) {
    const auto& k = s.direction(d);
    const auto o = outage_latency(k.latency_ms, k.censored_ms.size(), p);
    json dj;
    dj["outage_latency_ms"] = finite_or_null(o.value_ms);
    dj["outage_insufficient"] = o.insufficient;
    dj["samples"] = o.samples;
    dj["throughput_p10"] =
        k.throughput_bits_per_ms.empty() ? json(nullptr) : json(quantile(k.throughput_bits_per_ms, 0.1));
    out[std::string(to_string(d))] = dj;
  }
  out["ul_cir_p10_db"] = s.ul_cir_db.empty() ? json(nullptr) : json(quantile(s.ul_cir_db, 0.1));
  out["mu_median"] = s.mu.empty() ? json(nullptr) : json(median(s.mu));
  out["capacity_mbps"] = s.capacity_mbps;
  out["overhead_bits"] = s.overhead_bits;
  return out;
}

}  // namespace

OutageEstimate outage_latency(std::span<const double> latencies_ms, std::size_t censored, double p) {
  if (!(p > 0.0 && p < 1.0)) throw KpiError("outage_latency: p must lie in (0, 1)");
  OutageEstimate out;
  out.samples = latencies_ms.size() + censored;
  if (out.samples == 0) throw KpiError("outage_latency: no samples");
  out.insufficient = static_cast<double>(out.samples) < 10.0 / p;
  // Nearest-rank (1 - p) quantile over the samples sorted ascending with the
  // censored ones at the top.
  const auto n = static_cast<double>(out.samples);
  auto rank = static_cast<std::size_t>(std::ceil((1.0 - p) * n - 1e-9));
  rank = std::clamp<std::size_t>(rank, 1, out.samples);
  if (rank > latencies_ms.size()) {
    out.value_ms = kInf;
    return out;
  }
  std::vector<double> sorted(latencies_ms.begin(), latencies_ms.end());
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(rank - 1), sorted.end());
  out.value_ms = sorted[rank - 1];
  return out;
}

Curve ecdf(std::span<const double> samples) {
  if (samples.empty()) throw KpiError("ecdf: no samples");
  std::vector<double> s(samples.begin(), samples.end());
  std::sort(s.begin(), s.end());
  Curve out;
  const auto n = static_cast<double>(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i + 1 < s.size() && s[i + 1] == s[i]) continue;
    out.emplace_back(s[i], static_cast<double>(i + 1) / n);
  }
  out.back().second = 1.0;
  return out;
}

Curve ccdf(std::span<const double> samples) {
  Curve out = ecdf(samples);
  for (auto& [x, f] : out) f = 1.0 - f;
  out.back().second = 0.0;
  return out;
}

double median(std::span<const double> samples) {
  if (samples.empty()) throw KpiError("median: no samples");
  std::vector<double> s(samples.begin(), samples.end());
  std::sort(s.begin(), s.end());
  const std::size_t n = s.size();
  return n % 2 == 1 ? s[n / 2] : 0.5 * (s[n / 2 - 1] + s[n / 2]);
}

double quantile(std::span<const double> samples, double q) {
  if (samples.empty()) throw KpiError("quantile: no samples");
  std::vector<double> s(samples.begin(), samples.end());
  std::sort(s.begin(), s.end());
  auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(s.size()) - 1e-9));
  rank = std::clamp<std::size_t>(rank, 1, s.size());
  return s[rank - 1];
}

double cir_db(double signal, double interference, double cap_db) {
  if (interference <= 0.0) return cap_db;
  return std::min(10.0 * std::log10(signal / interference), cap_db);
}

double symmetric_percent(double a, double b) { return 200.0 * (a - b) / (a + b); }

double capacity(std::span<const RfcRecord> history, double f_ul, double f_dl) {
  double t = 0.0;
  for (const auto& r : history) t += std::min(r.u_c, r.u_opt) * f_ul + std::min(r.d_c, r.d_opt) * f_dl;
  return t;
}

DirectionKpi& DirectionKpi::operator+=(const DirectionKpi& o) {
  latency_ms.insert(latency_ms.end(), o.latency_ms.begin(), o.latency_ms.end());
  censored_ms.insert(censored_ms.end(), o.censored_ms.begin(), o.censored_ms.end());
  throughput_bits_per_ms.insert(throughput_bits_per_ms.end(), o.throughput_bits_per_ms.begin(),
                                o.throughput_bits_per_ms.end());
  generated += o.generated;
  decoded += o.decoded;
  failed += o.failed;
  in_flight += o.in_flight;
  transmissions += o.transmissions;
  delivered_bits += o.delivered_bits;
  scheduled_symbols += o.scheduled_symbols;
  return *this;
}

void quantize_samples(KpiStore& s) {
  for (DirectionKpi* d : {&s.dl, &s.ul}) {
    round_all(d->latency_ms, 1e-6);
    round_all(d->censored_ms, 1e-6);
    round_all(d->throughput_bits_per_ms, 1e-3);
  }
  round_all(s.ul_cir_db, 1e-4);
  round_all(s.mu, 1e-6);
  s.capacity_mbps = round_to(s.capacity_mbps, 1e-9);
  for (auto& n : s.nesting) {
    n.ifree_db = round_to(n.ifree_db, 1e-9);
    n.cf_db = round_to(n.cf_db, 1e-9);
    n.csa_oracle_db = round_to(n.csa_oracle_db, 1e-9);
  }
}

std::string serialize(const KpiStore& s, double percentile) {
  json j;
  j["scheme"] = s.scheme;
  j["config_hash"] = s.config_hash;
  j["seed"] = s.seed;
  j["load_mbps"] = s.load_mbps;
  j["duration_s"] = s.duration_s;
  j["dl"] = direction_json(s.dl);
  j["ul"] = direction_json(s.ul);
  j["ul_cir_db"] = s.ul_cir_db;
  j["mu"] = s.mu;
  j["chi_ul"] = s.chi_ul;
  j["chi_dl"] = s.chi_dl;
  j["capacity_mbps"] = s.capacity_mbps;
  j["overhead_bits"] = s.overhead_bits;
  j["irc_fallbacks"] = s.irc_fallbacks;
  json nest = json::array();
  for (const auto& n : s.nesting) nest.push_back({n.ifree_db, n.cf_db, n.csa_oracle_db});
  j["nesting"] = nest;
  j["summary"] = summary_json(s, percentile);
  return j.dump() + "\n";
}

KpiStore deserialize(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw KpiError(std::string("invalid KPI document: ") + e.what());
  }
  KpiStore s;
  try {
    j.at("scheme").get_to(s.scheme);
    j.at("config_hash").get_to(s.config_hash);
    j.at("seed").get_to(s.seed);
    j.at("load_mbps").get_to(s.load_mbps);
    j.at("duration_s").get_to(s.duration_s);
    s.dl = direction_from(j.at("dl"));
    s.ul = direction_from(j.at("ul"));
    j.at("ul_cir_db").get_to(s.ul_cir_db);
    j.at("mu").get_to(s.mu);
    j.at("chi_ul").get_to(s.chi_ul);
    j.at("chi_dl").get_to(s.chi_dl);
    j.at("capacity_mbps").get_to(s.capacity_mbps);
    j.at("overhead_bits").get_to(s.overhead_bits);
    j.at("irc_fallbacks").get_to(s.irc_fallbacks);
    for (const auto& n : j.at("nesting")) s.nesting.push_back({n.at(0), n.at(1), n.at(2)});
  } catch (const json::exception& e) {
    throw KpiError(std::string("incomplete KPI document: ") + e.what());
  }
  return s;
}

void write_atomic(const std::filesystem::path& path, const std::string& contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw KpiError("cannot write " + tmp.string());
    os << contents;
    if (!os) throw KpiError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

KpiStore read_kpi_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw KpiError("cannot open " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return deserialize(ss.str());
}

}  // namespace dtdd::kpi
