#include "dtdd/sim.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <unordered_map>

#include "dtdd/mac.hpp"
#include "dtdd/rng.hpp"
#include "dtdd/topology.hpp"
#include "json.hpp"

namespace dtdd::sim {

using linalg::CMat;
using linalg::CVec;
using phy::TermClass;

LinkResult evaluate_link(const LinkRequest& req, ReceiverKind kind, const config::ReceiverConfig& rx,
                         csa::ConditionMode mode) {
  const std::size_t dim = req.desired.size();
  std::vector<CVec> exact;
  std::vector<phy::Contributor> exact_who;
  std::vector<std::pair<double, phy::Contributor>> white;
  std::vector<CVec> eval;

  auto identified = [&](int tx) {
    return std::any_of(req.estimates.begin(), req.estimates.end(),
                       [&](const csa::AggressorEstimate& e) { return e.aggressor == tx; });
  };
  auto see_exact = [&](const CVec& q, int who, TermClass cls) {
    exact.push_back(q);
    exact_who.push_back({who, cls, q, 0.0});
  };
  auto see_cross = [&](const LinkTerm& t) {
    if (rx.cli_visibility == config::CliVisibility::kExact) {
      see_exact(t.q, t.transmitter, t.cls);
    } else {
      white.push_back({linalg::norm_sq(t.q) / static_cast<double>(dim), {t.transmitter, t.cls, {}, 0.0}});
    }
  };

  for (const auto& t : req.terms) {
    if (kind == ReceiverKind::kInterferenceFree) break;
    if (t.cls == TermClass::kSameLink) {
      see_exact(t.q, t.transmitter, t.cls);
      continue;
    }
    if (kind == ReceiverKind::kCrossLinkFree) continue;
    if (kind == ReceiverKind::kCsa && identified(t.transmitter)) continue;
    see_cross(t);
  }
  if (kind == ReceiverKind::kCsa) {
    for (const auto& e : req.estimates) see_exact(e.interference, e.aggressor, TermClass::kCrossLink);
  }

  phy::InterferenceCovariance cov(dim);
  if (rx.covariance == config::CovarianceMode::kLiteralSum && !exact.empty()) {
    cov = phy::literal_sum_covariance(exact, exact_who);
  } else {
    for (std::size_t i = 0; i < exact.size(); ++i) cov.add_term(exact[i], exact_who[i]);
  }
  for (const auto& [p, who] : white) cov.add_white(p, who);

  LinkResult out;
  std::optional<csa::ProjectorState> proj;
  if (kind == ReceiverKind::kCsa) {
    csa::ProjectorState st;
    if (mode != csa::ConditionMode::kOracle && !req.estimates.empty()) {
      try {
        st = csa::build_cli_projector(req.estimates);
      } catch (const linalg::LinalgError&) {
        st.passthrough = true;
      }
    }
    cov = csa::condition_covariance(cov, st, mode, req.noise_power).cov;
    proj = std::move(st);
  }

  const CVec u = phy::irc_filter(req.desired, cov, req.noise_power, rx.loading);

  for (const auto& t : req.terms) {
    if (kind == ReceiverKind::kInterferenceFree) break;
    if (t.cls == TermClass::kCrossLink) {
      if (kind == ReceiverKind::kCrossLinkFree) continue;
      if (kind == ReceiverKind::kCsa) {
        if (mode == csa::ConditionMode::kOracle) continue;
        if (mode == csa::ConditionMode::kComplement && !proj->passthrough) {
          eval.push_back(t.q - proj->projector * t.q);
          out.projected = true;
          continue;
        }
      }
    }
    eval.push_back(t.q);
  }

  out.signal = std::norm(linalg::dot(u, req.desired));
  for (const auto& q : eval) out.interference += std::norm(linalg::dot(u, q));
  out.sinr = phy::post_sinr(u, req.desired, eval, req.noise_power, {rx.sinr_mode, rx.sir_cap_db});
  return out;
}

ReceiverKind receiver_for(SchemeKind scheme, Direction victim) {
  switch (scheme) {
    case SchemeKind::kIFree:
      return ReceiverKind::kInterferenceFree;
    case SchemeKind::kCfTdd:
      return ReceiverKind::kCrossLinkFree;
    case SchemeKind::kCsa:
      return victim == Direction::kUl ? ReceiverKind::kCsa : ReceiverKind::kPlain;
    case SchemeKind::kNcTdd:
    case SchemeKind::kCrfcTdd:
      return ReceiverKind::kPlain;
  }
  return ReceiverKind::kPlain;
}

namespace {

using nlohmann::json;

struct Packet {
  int user = -1;
  double size = 0.0;
  double arrival = 0.0;
  double delivered = 0.0;
  double unassigned = 0.0;
  bool done = false;
  bool failed = false;
};

struct Segment {
  std::int64_t packet = -1;
  double bits = 0.0;
};

struct Block {
  std::int64_t id = -1;
  int user = -1;
  int mcs = 0;
  double bits = 0.0;
  int num_subbands = 0;
  double tx_mw_per_prb = 0.0;
  double mean_gain = 1.0;  ///< mean normalized fading power over the first allocation
  std::vector<Segment> segments;
  phy::HarqProcess harq;
  Tick attempt_start = 0;
  double eligible = 0.0;
  // Samples of the attempt in progress.
  std::vector<double> sinr;
  std::vector<double> audit_ifree;
  std::vector<double> audit_cf;
  std::vector<double> audit_csa;
  double signal = 0.0;
  double interference = 0.0;
  // Outcome of the finished attempt, applied at decode time.
  bool success = false;
  double attempt_eff = 0.0;
};

struct Transmission {
  std::int64_t uid = -1;
  Direction dir = Direction::kDl;
  Tick start = 0;
  int symbols = 0;
  bool is_static = false;
  std::vector<std::int64_t> sb_block;  ///< transport block per sub-band, -1 if unused
};

struct User {
  int node = -1;
  int cell = -1;
  Direction dir = Direction::kDl;
  bool restricted = false;
  double geometry = 1.0;
  double pathloss_db = 0.0;
  double cqi = 1.0;  ///< effective SINR normalized by the fading gain it was seen at
  double olla_db = 0.0;
  double link_cqi() const { return cqi * phy::from_db(olla_db); }
  double pf_average = 1.0;
  double unassigned = 0.0;
  double backlog = 0.0;
  std::deque<std::int64_t> queue;
  std::unique_ptr<mac::ArrivalProcess> arrivals;
};

struct CellDir {
  std::vector<int> users;  ///< indices into users_
  std::optional<Transmission> active;
  bool transmitting = false;
  std::vector<std::int64_t> retx;
};

struct Sample {
  double sinr = 0.0;
  double signal = 0.0;
  double interference = 0.0;
  double ifree = 0.0;
  double cf = 0.0;
  double csa = 0.0;
};

constexpr double kOllaRangeDb = 20.0;

double dbm_to_mw(double dbm) { return std::pow(10.0, dbm / 10.0); }

class Engine {
 public:
  explicit Engine(const config::SimConfig& cfg);
  RunOutput run();

 private:
  int num_subbands() const { return nsb_; }
  bool gating() const { return cfg_.scheme == SchemeKind::kCrfcTdd || cfg_.scheme == SchemeKind::kCsa; }
  bool static_slot(std::int64_t slot) const {
    return gating() && mac::is_static_slot(static_cast<int>(slot % cfg_.rfc.period_slots), cfg_.rfc.period_slots,
                                           cfg_.rfc.static_slots);
  }
  CellDir& cd(int cell, Direction d) { return cells_[static_cast<std::size_t>(cell)][index(d)]; }
  User& user(int u) { return users_[static_cast<std::size_t>(u)]; }
  Block& block(std::int64_t id) { return blocks_.at(id); }

  const CMat& channel(int rx, int tx, int sb);
  double fading_gain(int rx, int tx, int sb);
  const CVec& precoder(int tx, int rx, int sb);
  int link_rx(int cell, Direction d, const User& u) const { return d == Direction::kDl ? u.node : cell; }
  int link_tx(int cell, Direction d, const User& u) const { return d == Direction::kDl ? cell : u.node; }

  void init_users();
  void on_slot(std::int64_t slot);
  void on_block();
  void process_decodes(Tick t);
  void enqueue_arrivals(Tick t);
  bool static_tti(int cell, Direction d, Tick t) const;
  bool spills_into_static(int cell, Direction d, Tick t) const;
  std::size_t csa_max_count() const {
    return cfg_.csa.max_interferers > 0 ? static_cast<std::size_t>(cfg_.csa.max_interferers)
                                        : static_cast<std::size_t>(cfg_.layout.bs_antennas - 1);
  }
  bool within_coordination(int victim, int aggressor) const {
    const auto& bs = field_.cluster().layout.bs_positions;
    return topo::distance(bs[static_cast<std::size_t>(victim)], bs[static_cast<std::size_t>(aggressor)]) <=
           cfg_.csa.coordination_radius_isd * cfg_.layout.isd_m + 1e-6;
  }
  bool try_start(int cell, Direction d, Tick t);
  void publish(int cell, const Transmission& tx);
  void evaluate(Tick t);
  Sample compute_sample(int cell, const Transmission& x, int sb, const Block& b,
                        const std::vector<std::pair<int, const Transmission*>>& others);
  void finish(Tick t);
  void deliver(Block& b, double time);
  void fail_packets(Block& b, double time);
  void log(const json& j);

  config::SimConfig cfg_;
  topo::ChannelField field_;
  phy::McsTable table_;
  phy::PmiCodebook codebook_;
  csa::WireFormat wire_;
  std::vector<mac::SlotFormat> formats_codebook_;
  mac::SlotFormat static_format_;
  int nsb_;
  int num_cells_;
  Tick total_ticks_;
  double arrival_end_;
  double dl_mw_per_prb_;
  double noise_bs_mw_;
  double noise_ue_mw_;

  std::vector<User> users_;
  std::vector<int> user_of_node_;
  std::vector<Packet> packets_;
  std::unordered_map<std::int64_t, Block> blocks_;
  std::vector<std::array<CellDir, 2>> cells_;
  std::vector<mac::SlotFormat> format_;
  std::vector<std::optional<csa::PrecoderMap>> maps_;
  std::set<std::pair<double, std::int64_t>> decodes_;

  std::int64_t block_index_ = -1;
  std::int64_t slot_ = 0;
  std::int64_t next_uid_ = 0;
  std::int64_t next_block_ = 0;
  std::unordered_map<std::uint64_t, CMat> channel_cache_;
  std::unordered_map<std::uint64_t, CVec> precoder_cache_;
  std::map<std::vector<std::int64_t>, Sample> sample_cache_;

  RunOutput out_;
  std::unique_ptr<std::ofstream> log_;
};

Engine::Engine(const config::SimConfig& cfg)
    : cfg_(cfg),
      field_(topo::build_cluster(cfg.layout, cfg.seed, cfg.channel), cfg.channel, cfg.seed),
      table_(cfg.mac.mcs_table.empty() ? phy::McsTable::standard() : phy::McsTable::load(cfg.mac.mcs_table)),
      codebook_(phy::make_dft_codebook(cfg.layout.bs_antennas, cfg.csa.pmi_bits)),
      formats_codebook_(mac::standard_codebook()),
      static_format_(mac::find_format(formats_codebook_, cfg.rfc.static_format)),
      nsb_(cfg.radio.num_subbands()),
      num_cells_(cfg.layout.cells),
      total_ticks_(cfg.total_ticks()) {
  table_.validate();
  wire_.num_subbands = nsb_;
  wire_.pmi_bits = cfg.csa.pmi_bits;
  arrival_end_ = std::max(0.0, static_cast<double>(total_ticks_) - cfg.traffic.drain_ms * kSymbolsPerMs);
  dl_mw_per_prb_ = dbm_to_mw(cfg.radio.dl_tx_power_dbm - 10.0 * std::log10(cfg.radio.prbs));
  const double prb_hz = kSubcarriersPerPrb * cfg.radio.subcarrier_spacing_khz * 1e3;
  const double thermal = cfg.radio.noise_psd_dbm_hz + 10.0 * std::log10(prb_hz);
  noise_bs_mw_ = dbm_to_mw(thermal + cfg.radio.bs_noise_figure_db);
  noise_ue_mw_ = dbm_to_mw(thermal + cfg.radio.ue_noise_figure_db);
  cells_.resize(static_cast<std::size_t>(num_cells_));
  format_.assign(static_cast<std::size_t>(num_cells_), mac::find_format(formats_codebook_, "1:1"));
  maps_.resize(static_cast<std::size_t>(num_cells_));
  if (!cfg.event_log.empty()) {
    log_ = std::make_unique<std::ofstream>(cfg.event_log, std::ios::trunc);
    if (!*log_) throw SimError("cannot open event log " + cfg.event_log);
  }
  init_users();
}

void Engine::log(const json& j) {
  if (log_) *log_ << j.dump() << '\n';
}

void Engine::init_users() {
  const auto& nodes = field_.cluster().nodes;
  user_of_node_.assign(static_cast<std::size_t>(nodes.num_nodes()), -1);
  const double dl_load = cfg_.dl_load_bps();
  const double ul_load = cfg_.ul_load_bps();
  const double nm = static_cast<double>(cfg_.layout.bs_antennas * cfg_.layout.ue_antennas);
  const int sb_prbs = cfg_.radio.subband_size(0);
  for (int c = 0; c < num_cells_; ++c) {
    for (Direction d : {Direction::kDl, Direction::kUl}) {
      const auto& ids = nodes.users(c, d);
      std::vector<mac::QualityEntry> quality;
      for (int node : ids) {
        User u;
        u.node = node;
        u.cell = c;
        u.dir = d;
        u.pathloss_db = -field_.gain_db(c, node);
        double s = 0.0;
        double i = 0.0;
        if (d == Direction::kDl) {
          s = dl_mw_per_prb_ * field_.gain_linear(node, c);
          for (int o = 0; o < num_cells_; ++o)
            if (o != c) i += dl_mw_per_prb_ * field_.gain_linear(node, o);
          u.geometry = s / (noise_ue_mw_ + i);
          u.cqi = nm * u.geometry;
        } else {
          s = dbm_to_mw(topo::ul_tx_power_dbm(u.pathloss_db, cfg_.power_control, sb_prbs)) *
              field_.gain_linear(c, node);
          for (int o = 0; o < num_cells_; ++o)
            if (o != c) i += dl_mw_per_prb_ * field_.gain_linear(c, o);
          u.geometry = s / (noise_bs_mw_ + i);
          u.cqi = nm * s / noise_bs_mw_;
        }
        const double load = d == Direction::kDl ? dl_load : ul_load;
        const mac::TrafficSource src{d, cfg_.traffic.payload_bits,
                                     mac::per_user_rate(load, static_cast<int>(ids.size()), cfg_.traffic.payload_bits)};
        u.arrivals = std::make_unique<mac::ArrivalProcess>(cfg_.seed, node, src);
        // Static slots only shield against cross-link interference, so rank by that exposure.
        double cli = 0.0;
        std::vector<std::pair<double, int>> bs_cli;
        for (int o = 0; o < num_cells_; ++o) {
          if (o == c) continue;
          if (d == Direction::kUl) {
            bs_cli.push_back({dl_mw_per_prb_ * field_.gain_linear(c, o), o});
          } else {
            for (int a : nodes.users(o, Direction::kUl))
              cli += dbm_to_mw(topo::ul_tx_power_dbm(-field_.gain_db(o, a), cfg_.power_control, sb_prbs)) *
                     field_.gain_linear(node, a);
          }
        }
        if (d == Direction::kUl) {
          // Under CSA only the aggressors its projection cannot reach still count.
          std::sort(bs_cli.begin(), bs_cli.end(), std::greater<>());
          std::size_t nulled = 0;
          for (const auto& [p, o] : bs_cli) {
            if (cfg_.scheme == SchemeKind::kCsa && nulled < csa_max_count() && within_coordination(c, o)) {
              ++nulled;
              continue;
            }
            cli += p;
          }
        }
        // UL at a full-carrier grant, where power-capped UEs fall behind.
        const double want = d == Direction::kDl
                                ? s
                                : dbm_to_mw(topo::ul_tx_power_dbm(u.pathloss_db, cfg_.power_control, cfg_.radio.prbs)) *
                                      field_.gain_linear(c, node);
        quality.push_back({node, kpi::cir_db(want, cli)});
        user_of_node_[static_cast<std::size_t>(node)] = static_cast<int>(users_.size());
        cd(c, d).users.push_back(static_cast<int>(users_.size()));
        users_.push_back(std::move(u));
      }
      if (gating()) {
        for (int node : mac::crfc_restricted(quality, cfg_.rfc.crfc_fraction, cfg_.rfc.crfc_threshold_db))
          user(user_of_node_[static_cast<std::size_t>(node)]).restricted = true;
      }
    }
  }
}

const CMat& Engine::channel(int rx, int tx, int sb) {
  const auto n = static_cast<std::uint64_t>(field_.cluster().nodes.num_nodes());
  const std::uint64_t key = (static_cast<std::uint64_t>(rx) * n + static_cast<std::uint64_t>(tx)) *
                                static_cast<std::uint64_t>(nsb_) +
                            static_cast<std::uint64_t>(sb);
  auto it = channel_cache_.find(key);
  if (it == channel_cache_.end()) it = channel_cache_.emplace(key, field_.channel(rx, tx, block_index_, sb)).first;
  return it->second;
}

double Engine::fading_gain(int rx, int tx, int sb) {
  const CMat& h = channel(rx, tx, sb);
  const double f = linalg::frobenius_norm(h);
  return f * f / (field_.gain_linear(rx, tx) * static_cast<double>(h.rows() * h.cols()));
}

const CVec& Engine::precoder(int tx, int rx, int sb) {
  const auto n = static_cast<std::uint64_t>(field_.cluster().nodes.num_nodes());
  const std::uint64_t key = (static_cast<std::uint64_t>(tx) * n + static_cast<std::uint64_t>(rx)) *
                                static_cast<std::uint64_t>(nsb_) +
                            static_cast<std::uint64_t>(sb);
  auto it = precoder_cache_.find(key);
  if (it == precoder_cache_.end()) {
    const CMat& h = channel(rx, tx, sb);
    if (tx < num_cells_ && cfg_.radio.dl_precoding == config::DlPrecoding::kCodebook) {
      it = precoder_cache_.emplace(key, codebook_.at(phy::select_pmi(h, codebook_))).first;
    } else {
      it = precoder_cache_.emplace(key, phy::make_precoder(h).vector).first;
    }
  }
  return it->second;
}

void Engine::on_slot(std::int64_t slot) {
  slot_ = slot;
  for (int c = 0; c < num_cells_; ++c) {
    double z[2] = {0.0, 0.0};
    for (Direction d : {Direction::kDl, Direction::kUl})
      for (int u : cd(c, d).users) z[index(d)] += user(u).backlog;
    const double mu = mac::buffered_ratio(z[0], z[1]);
    const auto& f =
        static_slot(slot) ? static_format_ : formats_codebook_[mac::select_slot_format(mu, formats_codebook_)];
    format_[static_cast<std::size_t>(c)] = f;
    const mac::SymbolSplit sel{f.dl_symbols(), f.ul_symbols()};
    const auto opt = mac::optimal_split(mu, kSymbolsPerSlot - 2);
    const auto chi = mac::symbol_mismatch(sel, opt);
    out_.rfc.push_back({c, slot, mu, sel.dl, sel.ul, opt.dl, opt.ul});
    out_.kpi.mu.push_back(mu);
    out_.kpi.chi_ul.push_back(chi.ul);
    out_.kpi.chi_dl.push_back(chi.dl);
  }
}

void Engine::on_block() {
  channel_cache_.clear();
  precoder_cache_.clear();
  sample_cache_.clear();
  if (cfg_.scheme != SchemeKind::kCsa) return;
  for (int c = 0; c < num_cells_; ++c) {
    const auto& a = cd(c, Direction::kDl).active;
    if (a) publish(c, *a);
  }
}

void Engine::publish(int cell, const Transmission& tx) {
  std::vector<csa::ScheduledPrecoder> sched;
  const int slot = static_cast<int>(slot_ % cfg_.rfc.period_slots);
  for (int sb = 0; sb < nsb_; ++sb) {
    const auto id = tx.sb_block[static_cast<std::size_t>(sb)];
    if (id < 0) continue;
    const User& u = user(block(id).user);
    sched.push_back({slot, sb, precoder(cell, u.node, sb)});
  }
  auto map = csa::build_precoder_map(cell, slot_, sched, codebook_);
  out_.kpi.overhead_bits += csa::payload_bits(map, wire_);
  maps_[static_cast<std::size_t>(cell)] = std::move(map);
}

void Engine::enqueue_arrivals(Tick t) {
  const double now = static_cast<double>(t);
  for (std::size_t i = 0; i < users_.size(); ++i) {
    User& u = users_[i];
    while (u.arrivals->peek() <= now && u.arrivals->peek() < arrival_end_) {
      Packet p;
      p.user = static_cast<int>(i);
      p.size = cfg_.traffic.payload_bits;
      p.arrival = u.arrivals->pop();
      p.unassigned = p.size;
      u.queue.push_back(static_cast<std::int64_t>(packets_.size()));
      u.unassigned += p.size;
      u.backlog += p.size;
      packets_.push_back(p);
      ++out_.kpi.direction(u.dir).generated;
    }
  }
}

bool Engine::static_tti(int cell, Direction d, Tick t) const {
  std::int64_t slot = t / kSymbolsPerSlot;
  int sym = static_cast<int>(t % kSymbolsPerSlot);
  int need = cfg_.mac.tti_symbols;
  const mac::SlotFormat* f = &format_[static_cast<std::size_t>(cell)];
  while (true) {
    if (!static_slot(slot)) return false;
    for (; sym < kSymbolsPerSlot; ++sym)
      if (f->carries(d, sym) && --need == 0) return true;
    ++slot;
    sym = 0;
    f = &static_format_;
  }
}

// A TTI from a flexible slot must not eat into the next static slot.
bool Engine::spills_into_static(int cell, Direction d, Tick t) const {
  const std::int64_t slot = t / kSymbolsPerSlot;
  if (static_slot(slot) || !static_slot(slot + 1)) return false;
  const auto& f = format_[static_cast<std::size_t>(cell)];
  int left = 0;
  for (int sym = static_cast<int>(t % kSymbolsPerSlot); sym < kSymbolsPerSlot; ++sym)
    if (f.carries(d, sym)) ++left;
  return left < cfg_.mac.tti_symbols;
}

bool Engine::try_start(int cell, Direction d, Tick t) {
  CellDir& c = cd(cell, d);
  const bool st = gating() && static_tti(cell, d, t);
  if (gating() && !st && spills_into_static(cell, d, t)) return false;
  const auto nsb = static_cast<std::size_t>(nsb_);
  std::unique_ptr<bool[]> taken(new bool[nsb]());
  std::vector<std::int64_t> sb_block(nsb, -1);
  std::vector<int> busy;
  std::vector<std::int64_t> granted;
  bool starved = false;

  auto free_count = [&] { return static_cast<int>(std::count(taken.get(), taken.get() + nsb, false)); };

  std::sort(c.retx.begin(), c.retx.end(), [&](std::int64_t a, std::int64_t b) {
    const double ea = block(a).eligible;
    const double eb = block(b).eligible;
    return ea != eb ? ea < eb : a < b;
  });
  std::vector<std::int64_t> waiting;
  for (std::int64_t id : c.retx) {
    Block& b = block(id);
    User& u = user(b.user);
    const bool eligible = b.eligible <= static_cast<double>(t) && (!gating() || !u.restricted || st) &&
                          std::find(busy.begin(), busy.end(), b.user) == busy.end();
    if (!eligible) {
      waiting.push_back(id);
      continue;
    }
    if (free_count() < b.num_subbands) {
      starved = true;
      waiting.push_back(id);
      continue;
    }
    std::vector<std::pair<double, int>> order;
    for (int sb = 0; sb < nsb_; ++sb)
      if (!taken[static_cast<std::size_t>(sb)])
        order.push_back({-fading_gain(link_rx(cell, d, u), link_tx(cell, d, u), sb), sb});
    std::sort(order.begin(), order.end());
    for (int k = 0; k < b.num_subbands; ++k) {
      const auto sb = static_cast<std::size_t>(order[static_cast<std::size_t>(k)].second);
      taken[sb] = true;
      sb_block[sb] = id;
    }
    busy.push_back(b.user);
    granted.push_back(id);
  }
  c.retx = std::move(waiting);

  std::vector<double> served(c.users.size(), 0.0);
  if (!starved && free_count() > 0) {
    std::vector<mac::PfCandidate> cands;
    std::vector<int> cand_user;
    std::vector<std::vector<double>> gains;
    for (int ui : c.users) {
      User& u = user(ui);
      if (u.unassigned <= 0.0) continue;
      if (std::find(busy.begin(), busy.end(), ui) != busy.end()) continue;
      if (gating() && u.restricted && !st) continue;
      mac::PfCandidate pc;
      pc.user = ui;
      pc.average = u.pf_average;
      pc.demand_bits = u.unassigned;
      std::vector<double> g(nsb);
      for (int sb = 0; sb < nsb_; ++sb) {
        const auto s = static_cast<std::size_t>(sb);
        g[s] = fading_gain(link_rx(cell, d, u), link_tx(cell, d, u), sb);
        const double pred = u.link_cqi() * g[s];
        pc.rate.push_back(std::log2(1.0 + pred));
        const auto& m = table_.at(phy::select_mcs(table_, pred, cfg_.mac.bler_target, cfg_.mac.bler_slope_per_db));
        pc.bits_per_subband.push_back(cfg_.radio.subband_size(sb) * kSubcarriersPerPrb * cfg_.mac.tti_symbols *
                                      m.spectral_efficiency);
      }
      cands.push_back(std::move(pc));
      cand_user.push_back(ui);
      gains.push_back(std::move(g));
    }
    // Static TTIs are the only chance restricted users get, so they go first.
    std::vector<int> owner(nsb, -1);
    auto schedule_pass = [&](bool restricted_pass) {
      std::vector<mac::PfCandidate> sub;
      std::vector<int> back;
      for (std::size_t ci = 0; ci < cands.size(); ++ci) {
        if ((gating() && user(cand_user[ci]).restricted) != restricted_pass) continue;
        sub.push_back(cands[ci]);
        back.push_back(static_cast<int>(ci));
      }
      if (sub.empty()) return;
      std::unique_ptr<bool[]> mask(new bool[nsb]);
      for (std::size_t sb = 0; sb < nsb; ++sb) mask[sb] = taken[sb] || owner[sb] >= 0;
      const auto o = mac::pf_schedule(sub, nsb_, std::span<const bool>(mask.get(), nsb));
      for (std::size_t sb = 0; sb < nsb; ++sb)
        if (o[sb] >= 0) owner[sb] = back[static_cast<std::size_t>(o[sb])];
    };
    schedule_pass(true);
    schedule_pass(false);
    for (std::size_t ci = 0; ci < cands.size(); ++ci) {
      std::vector<int> sbs;
      for (int sb = 0; sb < nsb_; ++sb)
        if (owner[static_cast<std::size_t>(sb)] == static_cast<int>(ci)) sbs.push_back(sb);
      if (sbs.empty()) continue;
      User& u = user(cand_user[ci]);
      double mean_gain = 0.0;
      int prbs = 0;
      for (int sb : sbs) {
        mean_gain += gains[ci][static_cast<std::size_t>(sb)];
        prbs += cfg_.radio.subband_size(sb);
      }
      mean_gain /= static_cast<double>(sbs.size());
      Block b;
      b.id = next_block_++;
      b.user = cand_user[ci];
      b.mcs = phy::select_mcs(table_, u.link_cqi() * mean_gain, cfg_.mac.bler_target, cfg_.mac.bler_slope_per_db);
      b.mean_gain = mean_gain;
      b.num_subbands = static_cast<int>(sbs.size());
      const double capacity =
          std::floor(prbs * kSubcarriersPerPrb * cfg_.mac.tti_symbols * table_.at(b.mcs).spectral_efficiency);
      double left = std::min(capacity, u.unassigned);
      while (left > 0.0 && !u.queue.empty()) {
        Packet& p = packets_[static_cast<std::size_t>(u.queue.front())];
        const double take = std::min(left, p.unassigned);
        b.segments.push_back({u.queue.front(), take});
        p.unassigned -= take;
        u.unassigned -= take;
        left -= take;
        b.bits += take;
        if (p.unassigned <= 0.0) u.queue.pop_front();
      }
      if (b.segments.empty()) continue;
      b.harq.packet_id = b.id;
      b.harq.max_attempts = cfg_.mac.max_attempts;
      b.harq.mcs_index = b.mcs;
      for (int sb : sbs) {
        taken[static_cast<std::size_t>(sb)] = true;
        sb_block[static_cast<std::size_t>(sb)] = b.id;
      }
      granted.push_back(b.id);
      blocks_.emplace(b.id, std::move(b));
    }
  }
  if (granted.empty()) return false;

  Transmission x;
  x.uid = next_uid_++;
  x.dir = d;
  x.start = t;
  x.is_static = st;
  x.sb_block = std::move(sb_block);
  for (std::int64_t id : granted) {
    Block& b = block(id);
    User& u = user(b.user);
    b.attempt_start = t;
    b.sinr.clear();
    b.audit_ifree.clear();
    b.audit_cf.clear();
    b.audit_csa.clear();
    b.signal = 0.0;
    b.interference = 0.0;
    if (d == Direction::kDl) {
      b.tx_mw_per_prb = dl_mw_per_prb_;
    } else {
      int prbs = 0;
      for (int sb = 0; sb < nsb_; ++sb)
        if (x.sb_block[static_cast<std::size_t>(sb)] == id) prbs += cfg_.radio.subband_size(sb);
      b.tx_mw_per_prb = dbm_to_mw(topo::ul_tx_power_dbm(u.pathloss_db, cfg_.power_control, prbs));
    }
    for (std::size_t k = 0; k < c.users.size(); ++k)
      if (c.users[k] == b.user) served[k] += b.bits;
    if (log_) {
      json sbs = json::array();
      for (int sb = 0; sb < nsb_; ++sb)
        if (x.sb_block[static_cast<std::size_t>(sb)] == id) sbs.push_back(sb);
      log({{"event", "grant"}, {"tick", t}, {"cell", cell}, {"user", u.node}, {"dir", std::string(to_string(d))},
           {"sub_bands", sbs}, {"mcs", b.mcs}, {"tb", id}, {"attempt", b.harq.attempts + 1},
           {"kind", b.harq.attempts == 0 ? "new" : "retx"}, {"static", st}, {"restricted", u.restricted},
           {"starved", starved}, {"outcome", "granted"}});
    }
  }
  for (std::size_t k = 0; k < c.users.size(); ++k) {
    User& u = user(c.users[k]);
    u.pf_average = mac::pf_update(u.pf_average, served[k], cfg_.mac.pf_window_tti);
  }
  c.active = std::move(x);
  if (cfg_.scheme == SchemeKind::kCsa && d == Direction::kDl) publish(cell, *c.active);
  return true;
}

Sample Engine::compute_sample(int cell, const Transmission& x, int sb, const Block& b,
                              const std::vector<std::pair<int, const Transmission*>>& others) {
  const User& u = user(b.user);
  const int rx = link_rx(cell, x.dir, u);
  const int tx = link_tx(cell, x.dir, u);
  LinkRequest req;
  req.desired = channel(rx, tx, sb) * precoder(tx, rx, sb);
  req.desired *= std::sqrt(b.tx_mw_per_prb);
  req.noise_power = x.dir == Direction::kDl ? noise_ue_mw_ : noise_bs_mw_;
  std::vector<csa::PrecoderMap> maps;
  for (const auto& [oc, ox] : others) {
    const Block& ob = block(ox->sb_block[static_cast<std::size_t>(sb)]);
    const User& ou = user(ob.user);
    const int otx = link_tx(oc, ox->dir, ou);
    const int orx = link_rx(oc, ox->dir, ou);
    LinkTerm term;
    term.transmitter = oc;
    term.cls = ox->dir == x.dir ? TermClass::kSameLink : TermClass::kCrossLink;
    term.q = channel(rx, otx, sb) * precoder(otx, orx, sb);
    term.q *= std::sqrt(ob.tx_mw_per_prb);
    req.terms.push_back(std::move(term));
    if (cfg_.scheme == SchemeKind::kCsa && x.dir == Direction::kUl && ox->dir == Direction::kDl &&
        within_coordination(cell, oc)) {
      const auto& m = maps_[static_cast<std::size_t>(oc)];
      if (m) maps.push_back(*m);
    }
  }
  if (!maps.empty()) {
    const std::size_t max_count = csa_max_count();
    const double amp = std::sqrt(dl_mw_per_prb_);
    req.estimates = csa::identify_interferers(
        cell, sb, static_cast<int>(slot_ % cfg_.rfc.period_slots), maps,
        [&](int a) { return linalg::cd(amp) * channel(cell, a, sb); }, codebook_, max_count);
  }
  Sample s;
  const auto r = evaluate_link(req, receiver_for(cfg_.scheme, x.dir), cfg_.receiver, cfg_.csa.condition_mode);
  s.sinr = r.sinr;
  s.signal = r.signal;
  s.interference = r.interference;
  if (cfg_.audit && x.dir == Direction::kUl) {
    s.ifree = evaluate_link(req, ReceiverKind::kInterferenceFree, cfg_.receiver).sinr;
    s.cf = evaluate_link(req, ReceiverKind::kCrossLinkFree, cfg_.receiver).sinr;
    s.csa = evaluate_link(req, ReceiverKind::kCsa, cfg_.receiver, csa::ConditionMode::kOracle).sinr;
  }
  return s;
}

void Engine::evaluate(Tick) {
  // Who transmits on each sub-band right now.
  std::vector<std::vector<std::pair<int, const Transmission*>>> on_sb(static_cast<std::size_t>(nsb_));
  for (int c = 0; c < num_cells_; ++c) {
    for (Direction d : {Direction::kDl, Direction::kUl}) {
      const CellDir& s = cd(c, d);
      if (!s.transmitting) continue;
      for (int sb = 0; sb < nsb_; ++sb)
        if (s.active->sb_block[static_cast<std::size_t>(sb)] >= 0)
          on_sb[static_cast<std::size_t>(sb)].push_back({c, &*s.active});
    }
  }
  for (int sb = 0; sb < nsb_; ++sb) {
    const auto& list = on_sb[static_cast<std::size_t>(sb)];
    for (const auto& [c, x] : list) {
      std::vector<std::pair<int, const Transmission*>> others;
      std::vector<std::int64_t> key{x->uid, sb};
      for (const auto& o : list) {
        if (o.first == c) continue;
        others.push_back(o);
        key.push_back(o.second->uid);
      }
      Block& b = block(x->sb_block[static_cast<std::size_t>(sb)]);
      auto it = sample_cache_.find(key);
      if (it == sample_cache_.end()) it = sample_cache_.emplace(key, compute_sample(c, *x, sb, b, others)).first;
      const Sample& s = it->second;
      b.sinr.push_back(s.sinr);
      b.signal += s.signal;
      b.interference += s.interference;
      if (cfg_.audit && x->dir == Direction::kUl) {
        b.audit_ifree.push_back(s.ifree);
        b.audit_cf.push_back(s.cf);
        b.audit_csa.push_back(s.csa);
      }
    }
  }
}

void Engine::finish(Tick t) {
  for (int c = 0; c < num_cells_; ++c) {
    for (Direction d : {Direction::kDl, Direction::kUl}) {
      CellDir& s = cd(c, d);
      if (!s.transmitting) continue;
      ++out_.kpi.direction(d).scheduled_symbols;
      if (s.active->symbols < cfg_.mac.tti_symbols) continue;
      const double proc = d == Direction::kDl ? cfg_.mac.dl_processing_symbols : cfg_.mac.ul_processing_symbols;
      const double decode_time = static_cast<double>(t + 1) + proc;
      std::vector<std::int64_t> ids;
      for (auto id : s.active->sb_block)
        if (id >= 0 && std::find(ids.begin(), ids.end(), id) == ids.end()) ids.push_back(id);
      for (auto id : ids) {
        Block& b = block(id);
        const auto& m = table_.at(b.mcs);
        b.attempt_eff = phy::eesm(b.sinr, m.eesm_beta);
        b.harq = phy::harq_combine(std::move(b.harq), b.sinr);
        const double eff = phy::eesm(b.harq.accumulated, m.eesm_beta);
        const double p_err = phy::bler(eff, m, cfg_.mac.bler_slope_per_db);
        rng::KeyedEngine draw(cfg_.seed, rng::Stream::kDecode,
                              {static_cast<std::uint64_t>(id), static_cast<std::uint64_t>(b.harq.attempts)});
        b.success = draw.uniform() >= p_err;
        decodes_.insert({decode_time, id});
      }
      s.active.reset();
    }
  }
}

void Engine::deliver(Block& b, double time) {
  User& u = user(b.user);
  auto& k = out_.kpi.direction(u.dir);
  for (const auto& seg : b.segments) {
    Packet& p = packets_[static_cast<std::size_t>(seg.packet)];
    if (p.failed) continue;
    p.delivered += seg.bits;
    u.backlog -= seg.bits;
    k.delivered_bits += static_cast<std::int64_t>(seg.bits);
    if (!p.done && p.delivered >= p.size) {
      p.done = true;
      mac::PacketRecord rec;
      rec.arrival = p.arrival;
      const double lat = mac::account_latency(rec, time);
      k.latency_ms.push_back(lat);
      k.throughput_bits_per_ms.push_back(p.size / lat);
      ++k.decoded;
    }
  }
}

void Engine::fail_packets(Block& b, double time) {
  User& u = user(b.user);
  auto& k = out_.kpi.direction(u.dir);
  for (const auto& seg : b.segments) {
    Packet& p = packets_[static_cast<std::size_t>(seg.packet)];
    if (p.failed || p.done) continue;
    p.failed = true;
    k.censored_ms.push_back(ticks_to_ms(time - p.arrival));
    ++k.failed;
    u.backlog -= p.size - p.delivered;
    if (p.unassigned > 0.0) {
      u.unassigned -= p.unassigned;
      p.unassigned = 0.0;
      u.queue.erase(std::remove(u.queue.begin(), u.queue.end(), seg.packet), u.queue.end());
    }
  }
}

void Engine::process_decodes(Tick t) {
  while (!decodes_.empty() && decodes_.begin()->first <= static_cast<double>(t)) {
    const auto [time, id] = *decodes_.begin();
    decodes_.erase(decodes_.begin());
    Block& b = block(id);
    User& u = user(b.user);
    auto& k = out_.kpi.direction(u.dir);
    ++k.transmissions;
    if (u.dir == Direction::kUl) {
      out_.kpi.ul_cir_db.push_back(kpi::cir_db(b.signal, b.interference, cfg_.receiver.sir_cap_db));
      if (cfg_.audit) {
        const double beta = table_.at(b.mcs).eesm_beta;
        out_.kpi.nesting.push_back({phy::to_db(phy::eesm(b.audit_ifree, beta)),
                                    phy::to_db(phy::eesm(b.audit_cf, beta)),
                                    phy::to_db(phy::eesm(b.audit_csa, beta))});
      }
    }
    if (b.harq.attempts == 1) {
      u.cqi = b.attempt_eff / std::max(b.mean_gain, 1e-6);
      const double step = cfg_.mac.olla_step_db;
      const double t = cfg_.mac.bler_target;
      u.olla_db += b.success ? step * t / (1.0 - t) : -step;
      u.olla_db = std::clamp(u.olla_db, -kOllaRangeDb, kOllaRangeDb / 4.0);
    }
    const char* outcome = "ack";
    if (b.success) {
      deliver(b, time);
    } else if (b.harq.attempts < b.harq.max_attempts) {
      outcome = "nack";
      b.eligible = std::max(static_cast<double>(b.attempt_start + cfg_.mac.harq_rtt_symbols), time);
      cd(u.cell, u.dir).retx.push_back(id);
    } else {
      outcome = "fail";
      fail_packets(b, time);
    }
    if (log_) {
      log({{"event", "decode"}, {"tick", t}, {"time", time}, {"cell", u.cell}, {"user", u.node},
           {"dir", std::string(to_string(u.dir))}, {"tb", id}, {"attempt", b.harq.attempts}, {"mcs", b.mcs},
           {"outcome", outcome}});
    }
    if (b.success || b.harq.attempts >= b.harq.max_attempts) blocks_.erase(id);
  }
}

RunOutput Engine::run() {
  const std::size_t fallbacks_before = phy::irc_fallback_count();
  const int block_len = cfg_.channel.fading_block_symbols;
  for (Tick t = 0; t < total_ticks_; ++t) {
    process_decodes(t);
    enqueue_arrivals(t);
    if (t % kSymbolsPerSlot == 0) on_slot(t / kSymbolsPerSlot);
    if (t / block_len != block_index_) {
      block_index_ = t / block_len;
      on_block();
    }
    const int sym = static_cast<int>(t % kSymbolsPerSlot);
    for (int c = 0; c < num_cells_; ++c) {
      const auto& f = format_[static_cast<std::size_t>(c)];
      for (Direction d : {Direction::kDl, Direction::kUl}) {
        CellDir& s = cd(c, d);
        s.transmitting = false;
        if (!f.carries(d, sym)) continue;
        if (s.active || try_start(c, d, t)) {
          ++s.active->symbols;
          s.transmitting = true;
        }
      }
    }
    evaluate(t);
    finish(t);
  }

  auto& k = out_.kpi;
  const double end = static_cast<double>(total_ticks_);
  for (const auto& p : packets_) {
    if (p.done || p.failed) continue;
    auto& dk = k.direction(user(p.user).dir);
    dk.censored_ms.push_back(ticks_to_ms(end - p.arrival));
    ++dk.in_flight;
  }
  k.scheme = std::string(to_string(cfg_.scheme));
  k.config_hash = config::config_hash(cfg_);
  k.seed = cfg_.seed;
  k.load_mbps = cfg_.traffic.load_mbps;
  k.duration_s = cfg_.duration_s;
  k.irc_fallbacks = static_cast<std::int64_t>(phy::irc_fallback_count() - fallbacks_before);
  const double f_dl =
      k.dl.scheduled_symbols > 0 ? static_cast<double>(k.dl.delivered_bits) / static_cast<double>(k.dl.scheduled_symbols) : 0.0;
  const double f_ul =
      k.ul.scheduled_symbols > 0 ? static_cast<double>(k.ul.delivered_bits) / static_cast<double>(k.ul.scheduled_symbols) : 0.0;
  k.capacity_mbps = kpi::capacity(out_.rfc, f_ul, f_dl) / cfg_.duration_s / 1e6;
  kpi::quantize_samples(k);
  if (log_) log_->flush();
  return std::move(out_);
}

}  // namespace

RunOutput run_detailed(const config::SimConfig& cfg) {
  config::validate(cfg);
  Engine e(cfg);
  return e.run();
}

kpi::KpiStore run(const config::SimConfig& cfg) { return run_detailed(cfg).kpi; }

}  // namespace dtdd::sim
