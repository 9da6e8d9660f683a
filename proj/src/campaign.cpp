#include "dtdd/campaign.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <thread>
#include <tuple>

#include "dtdd/sim.hpp"

namespace dtdd::campaign {
namespace {

std::string num(double v) {
  if (std::isnan(v)) return "";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

const char* direction_name(Direction d) { return d == Direction::kDl ? "DL" : "UL"; }

struct Pooled {
  std::vector<double> latency;
  std::size_t censored = 0;
};

}  // namespace

void validate(const Campaign& c) {
  if (c.loads_mbps.empty()) throw CampaignError("campaign: no loads");
  if (c.schemes.empty()) throw CampaignError("campaign: no schemes");
  if (c.seeds.empty()) throw CampaignError("campaign: no seeds");
  if (c.workers < 1) throw CampaignError("campaign: workers must be at least 1");
  for (double l : c.loads_mbps)
    if (!(l >= 0.0) || !std::isfinite(l)) throw CampaignError("campaign: load must be finite and non-negative");
  std::set<std::tuple<double, SchemeKind, std::uint64_t>> seen;
  for (double l : c.loads_mbps)
    for (auto s : c.schemes)
      for (auto seed : c.seeds)
        if (!seen.insert({l, s, seed}).second)
          throw CampaignError("campaign: duplicate tuple " + std::string(to_string(s)) + " load " + num(l) + " seed " +
                              std::to_string(seed));
}

std::filesystem::path kpi_path(SchemeKind scheme, double load_mbps, std::uint64_t seed) {
  return std::filesystem::path("kpi") /
         (std::string(to_string(scheme)) + "_load" + num(load_mbps) + "_seed" + std::to_string(seed) + ".json");
}

std::vector<ResultRow> rows_for(const kpi::KpiStore& store, double percentile) {
  std::vector<ResultRow> rows;
  const double mu = store.mu.empty() ? std::numeric_limits<double>::quiet_NaN() : kpi::median(store.mu);
  for (Direction d : {Direction::kDl, Direction::kUl}) {
    const auto& k = store.direction(d);
    ResultRow r;
    r.scheme = store.scheme;
    r.load_mbps = store.load_mbps;
    r.seed = store.seed;
    r.direction = d;
    if (k.latency_ms.empty() && k.censored_ms.empty()) {
      r.outage = {std::numeric_limits<double>::quiet_NaN(), true, 0};
    } else {
      r.outage = kpi::outage_latency(k.latency_ms, k.censored_ms.size(), percentile);
    }
    r.cir_p10_db = d == Direction::kUl && !store.ul_cir_db.empty() ? kpi::quantile(store.ul_cir_db, 0.1)
                                                                   : std::numeric_limits<double>::quiet_NaN();
    r.throughput_p10 = k.throughput_bits_per_ms.empty() ? std::numeric_limits<double>::quiet_NaN()
                                                        : kpi::quantile(k.throughput_bits_per_ms, 0.1);
    r.mu_median = mu;
    r.overhead_bits = store.overhead_bits;
    rows.push_back(std::move(r));
  }
  return rows;
}

std::string results_csv(const std::vector<ResultRow>& rows) {
  std::ostringstream os;
  os << "scheme,load_mbps,seed,direction,status,outage_latency_ms,insufficient,samples,ul_cir_p10_db,"
        "throughput_p10_kbps,mu_median,overhead_bits\n";
  for (const auto& r : rows) {
    os << r.scheme << ',' << num(r.load_mbps) << ',' << r.seed << ',' << direction_name(r.direction) << ',';
    if (r.failed) {
      os << "failed,,,,,,,\n";
      continue;
    }
    os << "ok," << num(r.outage.value_ms) << ',' << (r.outage.insufficient ? 1 : 0) << ',' << r.outage.samples << ','
       << num(r.cir_p10_db) << ',' << num(r.throughput_p10) << ',' << num(r.mu_median) << ',' << r.overhead_bits
       << '\n';
  }
  return os.str();
}

std::string comparison_csv(const std::vector<kpi::KpiStore>& stores, Direction d, double percentile) {
  std::map<double, std::map<SchemeKind, Pooled>> table;
  std::set<SchemeKind> schemes;
  for (const auto& s : stores) {
    const auto scheme = parse_scheme(s.scheme);
    schemes.insert(scheme);
    auto& p = table[s.load_mbps][scheme];
    const auto& k = s.direction(d);
    p.latency.insert(p.latency.end(), k.latency_ms.begin(), k.latency_ms.end());
    p.censored += k.censored_ms.size();
  }
  const bool has_cf = schemes.count(SchemeKind::kCfTdd) > 0;
  std::ostringstream os;
  os << "load_mbps";
  for (auto s : schemes) os << ',' << to_string(s) << "_ms";
  if (has_cf)
    for (auto s : schemes)
      if (s != SchemeKind::kCfTdd) os << ',' << to_string(s) << "_vs_CF_TDD_pct";
  os << '\n';
  for (const auto& [load, row] : table) {
    std::map<SchemeKind, double> value;
    for (auto s : schemes) {
      const auto it = row.find(s);
      double v = std::numeric_limits<double>::quiet_NaN();
      if (it != row.end() && !(it->second.latency.empty() && it->second.censored == 0))
        v = kpi::outage_latency(it->second.latency, it->second.censored, percentile).value_ms;
      value[s] = v;
    }
    os << num(load);
    for (auto s : schemes) os << ',' << num(value[s]);
    if (has_cf) {
      const double cf = value[SchemeKind::kCfTdd];
      for (auto s : schemes) {
        if (s == SchemeKind::kCfTdd) continue;
        const double v = value[s];
        double pct = std::numeric_limits<double>::quiet_NaN();
        if (std::isfinite(v) && std::isfinite(cf) && v + cf > 0.0) pct = kpi::symmetric_percent(v, cf);
        if (std::isinf(v) && std::isfinite(cf)) pct = 200.0;
        os << ',' << num(pct);
      }
    }
    os << '\n';
  }
  return os.str();
}

CampaignResult run_campaign(const Campaign& c) {
  validate(c);
  struct Tuple {
    double load;
    SchemeKind scheme;
    std::uint64_t seed;
  };
  std::vector<Tuple> tuples;
  for (double l : c.loads_mbps)
    for (auto s : c.schemes)
      for (auto seed : c.seeds) tuples.push_back({l, s, seed});

  std::filesystem::create_directories(c.out_dir / "kpi");
  std::vector<std::string> errors(tuples.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < tuples.size(); i = next++) {
      const auto& t = tuples[i];
      try {
        auto cfg = c.base;
        cfg.scheme = t.scheme;
        cfg.seed = t.seed;
        cfg.traffic.load_mbps = t.load;
        cfg.event_log.clear();
        const auto store = sim::run(cfg);
        kpi::write_atomic(c.out_dir / kpi_path(t.scheme, t.load, t.seed), kpi::serialize(store, cfg.kpi.outage_percentile));
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };
  const auto n = static_cast<std::size_t>(std::min<std::size_t>(static_cast<std::size_t>(c.workers), tuples.size()));
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < n; ++w) pool.emplace_back(work);
  work();
  for (auto& th : pool) th.join();

  // Everything below is rebuilt from the files just written.
  CampaignResult out;
  const double p = c.base.kpi.outage_percentile;
  std::vector<kpi::KpiStore> stores;
  for (std::size_t i = 0; i < tuples.size(); ++i) {
    const auto& t = tuples[i];
    if (errors[i].empty()) {
      try {
        stores.push_back(kpi::read_kpi_file(c.out_dir / kpi_path(t.scheme, t.load, t.seed)));
        for (auto& r : rows_for(stores.back(), p)) {
          out.any_insufficient = out.any_insufficient || r.outage.insufficient;
          out.rows.push_back(std::move(r));
        }
        continue;
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
    ++out.failed_tuples;
    for (Direction d : {Direction::kDl, Direction::kUl}) {
      ResultRow r;
      r.scheme = std::string(to_string(t.scheme));
      r.load_mbps = t.load;
      r.seed = t.seed;
      r.direction = d;
      r.failed = true;
      r.error = errors[i];
      out.rows.push_back(std::move(r));
    }
  }
  kpi::write_atomic(c.out_dir / "results.csv", results_csv(out.rows));
  for (Direction d : {Direction::kDl, Direction::kUl}) {
    kpi::write_atomic(c.out_dir / (std::string("comparison_") + (d == Direction::kDl ? "dl" : "ul") + ".csv"),
                      comparison_csv(stores, d, p));
  }
  return out;
}

PlotKind parse_plot_kind(const std::string& s) {
  if (s == "latency_ccdf") return PlotKind::kLatencyCcdf;
  if (s == "mu_ecdf") return PlotKind::kMuEcdf;
  if (s == "cir_ecdf") return PlotKind::kCirEcdf;
  if (s == "tput_ecdf") return PlotKind::kTputEcdf;
  throw CampaignError("unknown plot kind '" + s + "' (latency_ccdf, mu_ecdf, cir_ecdf, tput_ecdf)");
}

kpi::Curve latency_ccdf(const std::vector<double>& latency_ms, std::size_t censored) {
  kpi::Curve out;
  const double total = static_cast<double>(latency_ms.size() + censored);
  if (total == 0.0) return out;
  auto sorted = latency_ms;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (i + 1 < sorted.size() && sorted[i + 1] == sorted[i]) continue;
    const double above = static_cast<double>(sorted.size() - (i + 1) + censored);
    out.emplace_back(sorted[i], above / total);
  }
  return out;
}

std::string emit_plotdata(const std::vector<std::filesystem::path>& files, PlotKind kind) {
  if (files.empty()) throw MissingInput("plotdata: no input files");
  struct Acc {
    Pooled dir[2];
    std::vector<double> mu;
    std::vector<double> cir;
    std::vector<double> tput[2];
  };
  std::map<SchemeKind, Acc> acc;
  for (const auto& f : files) {
    if (!std::filesystem::exists(f)) throw MissingInput("plotdata: missing input " + f.string());
    const auto s = kpi::read_kpi_file(f);
    auto& a = acc[parse_scheme(s.scheme)];
    for (Direction d : {Direction::kDl, Direction::kUl}) {
      const auto& k = s.direction(d);
      auto& p = a.dir[index(d)];
      p.latency.insert(p.latency.end(), k.latency_ms.begin(), k.latency_ms.end());
      p.censored += k.censored_ms.size();
      a.tput[index(d)].insert(a.tput[index(d)].end(), k.throughput_bits_per_ms.begin(), k.throughput_bits_per_ms.end());
    }
    a.mu.insert(a.mu.end(), s.mu.begin(), s.mu.end());
    a.cir.insert(a.cir.end(), s.ul_cir_db.begin(), s.ul_cir_db.end());
  }
  std::ostringstream os;
  os << "scheme,direction,value,probability\n";
  auto put = [&](SchemeKind s, const char* dir, const kpi::Curve& c) {
    for (const auto& [x, p] : c) os << to_string(s) << ',' << dir << ',' << num(x) << ',' << num(p) << '\n';
  };
  auto ecdf = [](const std::vector<double>& v) { return v.empty() ? kpi::Curve{} : kpi::ecdf(v); };
  for (const auto& [s, a] : acc) {
    switch (kind) {
      case PlotKind::kLatencyCcdf:
        for (Direction d : {Direction::kDl, Direction::kUl})
          put(s, direction_name(d), latency_ccdf(a.dir[index(d)].latency, a.dir[index(d)].censored));
        break;
      case PlotKind::kMuEcdf:
        put(s, "both", ecdf(a.mu));
        break;
      case PlotKind::kCirEcdf:
        put(s, "UL", ecdf(a.cir));
        break;
      case PlotKind::kTputEcdf:
        for (Direction d : {Direction::kDl, Direction::kUl}) put(s, direction_name(d), ecdf(a.tput[index(d)]));
        break;
    }
  }
  return os.str();
}

}  // namespace dtdd::campaign
