// dtdd-sim: run, sweep and post-process dynamic-TDD simulations.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dtdd/campaign.hpp"
#include "dtdd/config.hpp"
#include "dtdd/kpi.hpp"
#include "dtdd/sim.hpp"

namespace fs = std::filesystem;
using namespace dtdd;

namespace {

struct Common {
  std::string config;
  std::vector<std::string> schemes;
  std::vector<std::string> seeds;
  std::vector<double> loads;
  std::string out;
  bool strict = false;
  std::optional<double> percentile;
};

config::SimConfig load_base(const Common& c) {
  auto cfg = c.config.empty() ? config::parse_config("") : config::load_config(c.config);
  if (c.percentile) cfg.kpi.outage_percentile = *c.percentile;
  config::validate(cfg);
  return cfg;
}

// "3", "1-10" or "1,4,7-9"
std::vector<std::uint64_t> expand_seeds(const std::vector<std::string>& items) {
  std::vector<std::uint64_t> out;
  for (const auto& item : items) {
    const auto dash = item.find('-');
    if (dash == std::string::npos) {
      out.push_back(std::stoull(item));
      continue;
    }
    const auto lo = std::stoull(item.substr(0, dash));
    const auto hi = std::stoull(item.substr(dash + 1));
    if (hi < lo) throw CLI::ValidationError("--seed", "empty range " + item);
    for (auto s = lo; s <= hi; ++s) out.push_back(s);
  }
  return out;
}

void print_summary(const kpi::KpiStore& s, double p) {
  for (const auto& r : campaign::rows_for(s, p)) {
    std::cout << s.scheme << " load " << s.load_mbps << " seed " << s.seed << ' '
              << (r.direction == Direction::kDl ? "DL" : "UL") << " outage@" << p << " = " << r.outage.value_ms
              << " ms" << (r.outage.insufficient ? " (insufficient samples)" : "") << ", mu median " << r.mu_median
              << '\n';
  }
}

int cmd_run(const Common& c) {
  auto cfg = load_base(c);
  if (!c.schemes.empty()) cfg.scheme = parse_scheme(c.schemes.front());
  if (!c.seeds.empty()) cfg.seed = expand_seeds(c.seeds).front();
  if (!c.loads.empty()) cfg.traffic.load_mbps = c.loads.front();
  const auto store = sim::run(cfg);
  const double p = cfg.kpi.outage_percentile;
  const auto text = kpi::serialize(store, p);
  if (c.out.empty()) {
    std::cout << text;
  } else {
    const auto path = fs::path(c.out) / campaign::kpi_path(cfg.scheme, cfg.traffic.load_mbps, cfg.seed);
    kpi::write_atomic(path, text);
    print_summary(store, p);
    std::cout << "wrote " << path.string() << '\n';
  }
  bool insufficient = false;
  for (const auto& r : campaign::rows_for(store, p)) insufficient = insufficient || r.outage.insufficient;
  return c.strict && insufficient ? 1 : 0;
}

int cmd_campaign(const Common& c, int workers) {
  campaign::Campaign camp;
  camp.base = load_base(c);
  camp.loads_mbps = c.loads.empty() ? std::vector<double>{camp.base.traffic.load_mbps} : c.loads;
  if (c.schemes.empty()) {
    camp.schemes = {SchemeKind::kCfTdd, SchemeKind::kNcTdd, SchemeKind::kCrfcTdd, SchemeKind::kCsa};
  } else {
    for (const auto& s : c.schemes) camp.schemes.push_back(parse_scheme(s));
  }
  camp.seeds = c.seeds.empty() ? std::vector<std::uint64_t>{camp.base.seed} : expand_seeds(c.seeds);
  camp.out_dir = c.out.empty() ? fs::path("out") : fs::path(c.out);
  camp.workers = workers;
  const auto res = campaign::run_campaign(camp);
  for (const auto& r : res.rows)
    if (r.failed && r.direction == Direction::kDl)
      std::cerr << "tuple " << r.scheme << " load " << r.load_mbps << " seed " << r.seed << " failed: " << r.error
                << '\n';
  std::ifstream ul(camp.out_dir / "comparison_ul.csv");
  std::cout << "UL outage latency (ms)\n" << ul.rdbuf();
  std::cout << "results in " << camp.out_dir.string() << '\n';
  if (res.failed_tuples > 0) return 1;
  if (c.strict && res.any_insufficient) {
    std::cerr << "insufficient samples for the requested percentile\n";
    return 1;
  }
  return 0;
}

int cmd_plotdata(const std::string& kind, const std::vector<std::string>& inputs, const std::string& out) {
  std::vector<fs::path> files;
  for (const auto& in : inputs) {
    const fs::path p(in);
    if (fs::is_directory(p)) {
      const auto dir = fs::is_directory(p / "kpi") ? p / "kpi" : p;
      std::vector<fs::path> found;
      for (const auto& e : fs::directory_iterator(dir))
        if (e.path().extension() == ".json") found.push_back(e.path());
      std::sort(found.begin(), found.end());
      files.insert(files.end(), found.begin(), found.end());
    } else {
      files.push_back(p);
    }
  }
  const auto text = campaign::emit_plotdata(files, campaign::parse_plot_kind(kind));
  if (out.empty()) {
    std::cout << text;
  } else {
    kpi::write_atomic(out, text);
  }
  return 0;
}

int cmd_validate(const std::string& path) {
  const auto cfg = config::load_config(path);
  std::cout << config::dump_config(cfg);
  std::cerr << path << ": ok, hash " << config::config_hash(cfg) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dynamic-TDD cross-link interference simulator"};
  app.require_subcommand(1);

  Common common;
  int workers = 1;
  auto add_common = [&](CLI::App* sub, bool multi) {
    sub->add_option("--config", common.config, "YAML configuration file")->check(CLI::ExistingFile);
    sub->add_option("--scheme", common.schemes, multi ? "schemes (repeat or comma separate)" : "scheme")
        ->delimiter(',');
    sub->add_option("--seed", common.seeds, multi ? "seeds, ranges like 1-10 allowed" : "seed")->delimiter(',');
    sub->add_option("--load-mbps", common.loads, multi ? "offered loads per cell" : "offered load per cell")
        ->delimiter(',');
    sub->add_option("--out", common.out, "output directory");
    sub->add_flag("--strict", common.strict, "fail when the outage estimate lacks samples");
    sub->add_option("--percentile", common.percentile, "outage probability, default from the config")
        ->check(CLI::Range(1e-9, 0.5));
  };

  auto* run = app.add_subcommand("run", "one simulation; KPI JSON to stdout or under --out");
  add_common(run, false);
  auto* camp = app.add_subcommand("campaign", "sweep loads x schemes x seeds");
  add_common(camp, true);
  camp->add_option("--workers", workers, "parallel runs")->check(CLI::PositiveNumber);

  std::string kind;
  std::vector<std::string> inputs;
  std::string plot_out;
  auto* plot = app.add_subcommand("plotdata", "distribution tables from KPI files");
  plot->add_option("--kind", kind, "latency_ccdf, mu_ecdf, cir_ecdf or tput_ecdf")->required();
  plot->add_option("--out", plot_out, "output CSV (stdout when absent)");
  plot->add_option("inputs", inputs, "KPI files or campaign directories")->required();

  std::string validate_path;
  auto* val = app.add_subcommand("validate", "parse and check a configuration");
  val->add_option("--config", validate_path, "YAML configuration file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      if (common.schemes.size() > 1 || common.seeds.size() > 1 || common.loads.size() > 1)
        throw CLI::ValidationError("run", "takes a single scheme, seed and load; use campaign for sweeps");
      return cmd_run(common);
    }
    if (*camp) return cmd_campaign(common, workers);
    if (*plot) return cmd_plotdata(kind, inputs, plot_out);
    if (*val) return cmd_validate(validate_path);
  } catch (const config::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const CLI::Error& e) {
    std::cerr << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
