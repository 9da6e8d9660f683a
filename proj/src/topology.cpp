#include "dtdd/topology.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>

#include "dtdd/rng.hpp"

namespace dtdd::topo {

namespace {

double shadowing_db(std::uint64_t seed, int lo, int hi, std::uint32_t key_lo, std::uint32_t key_hi,
                    double sigma_db) {
  if (sigma_db <= 0.0) return 0.0;
  rng::KeyedEngine eng(seed, rng::Stream::kShadowing,
                       {static_cast<std::uint64_t>(lo), static_cast<std::uint64_t>(hi), key_lo, key_hi});
  std::normal_distribution<double> nd(0.0, sigma_db);
  return nd(eng);
}

LinkClass classify(bool a_bs, bool b_bs) {
  if (a_bs && b_bs) return LinkClass::kBsBs;
  if (!a_bs && !b_bs) return LinkClass::kUeUe;
  return LinkClass::kBsUe;
}

}  // namespace

double distance(Point a, Point b) { return std::hypot(a.x - b.x, a.y - b.y); }

std::vector<Point> hex_positions(int count, double isd_m) {
  // Axial hex coordinates walked ring by ring.
  static constexpr int kDirs[6][2] = {{1, 0}, {1, -1}, {0, -1}, {-1, 0}, {-1, 1}, {0, 1}};
  std::vector<Point> out;
  auto push = [&](int q, int r) {
    out.push_back({isd_m * (q + 0.5 * r), isd_m * (std::sqrt(3.0) / 2.0) * r});
  };
  if (count <= 0) return out;
  push(0, 0);
  for (int ring = 1; static_cast<int>(out.size()) < count; ++ring) {
    int q = kDirs[4][0] * ring;
    int r = kDirs[4][1] * ring;
    for (int side = 0; side < 6; ++side) {
      for (int step = 0; step < ring; ++step) {
        if (static_cast<int>(out.size()) == count) return out;
        push(q, r);
        q += kDirs[side][0];
        r += kDirs[side][1];
      }
    }
  }
  return out;
}

double mean_pathloss_db(const PathlossModel& model, double distance_m) {
  const double d_km = std::max(distance_m, 1.0) / 1000.0;
  return model.intercept_db + model.slope_db * std::log10(d_km);
}

const PathlossModel& pathloss_model(const ChannelModel& model, LinkClass cls) {
  switch (cls) {
    case LinkClass::kBsUe:
      return model.bs_ue;
    case LinkClass::kBsBs:
      return model.bs_bs;
    case LinkClass::kUeUe:
      return model.ue_ue;
  }
  return model.bs_ue;
}

double large_scale_gain_db(LinkClass cls, double distance_m, const ChannelModel& model,
                           double shadowing) {
  return -(mean_pathloss_db(pathloss_model(model, cls), distance_m) + shadowing);
}

Cluster build_cluster(const LayoutSpec& spec, std::uint64_t seed, const ChannelModel& model) {
  Cluster out;
  auto& layout = out.layout;
  layout.num_cells = spec.cells;
  layout.inter_site_distance_m = spec.isd_m;
  layout.cell_radius_m = spec.isd_m / std::sqrt(3.0);
  layout.bs_positions = hex_positions(spec.cells, spec.isd_m);

  auto& nodes = out.nodes;
  nodes.num_cells = spec.cells;
  nodes.bs_antennas = spec.bs_antennas;
  nodes.ue_antennas = spec.ue_antennas;
  nodes.dl_users.assign(static_cast<std::size_t>(spec.cells), {});
  nodes.ul_users.assign(static_cast<std::size_t>(spec.cells), {});

  const double r_max = layout.cell_radius_m;
  const double r_min = std::min(spec.min_ue_distance_m, 0.5 * r_max);
  const int per_cell = spec.ues_dl_per_cell + spec.ues_ul_per_cell;
  constexpr std::uint32_t kMaxRedraws = 1000;

  for (int cell = 0; cell < spec.cells; ++cell) {
    const Point centre = layout.bs_positions[static_cast<std::size_t>(cell)];
    for (int i = 0; i < per_cell; ++i) {
      UeNode ue;
      ue.node = spec.cells + cell * per_cell + i;
      ue.cell = cell;
      ue.direction = i < spec.ues_dl_per_cell ? Direction::kDl : Direction::kUl;
      for (std::uint32_t attempt = 0; attempt < kMaxRedraws; ++attempt) {
        rng::KeyedEngine eng(seed, rng::Stream::kPlacement, {static_cast<std::uint64_t>(ue.node), attempt});
        const double u = eng.uniform();
        const double r = std::sqrt(u * (r_max * r_max - r_min * r_min) + r_min * r_min);
        const double theta = 2.0 * std::numbers::pi * eng.uniform();
        ue.position = {centre.x + r * std::cos(theta), centre.y + r * std::sin(theta)};
        ue.shadow_key = attempt;
        int best = cell;
        double best_gain = -1e300;
        for (int b = 0; b < spec.cells; ++b) {
          const double d = distance(ue.position, layout.bs_positions[static_cast<std::size_t>(b)]);
          const double g = large_scale_gain_db(
              LinkClass::kBsUe, d, model,
              shadowing_db(seed, b, ue.node, 0, attempt, model.bs_ue.shadow_sigma_db));
          if (g > best_gain) {
            best_gain = g;
            best = b;
          }
        }
        if (best == cell) break;
      }
      nodes.ues.push_back(ue);
      (ue.direction == Direction::kDl ? nodes.dl_users : nodes.ul_users)[static_cast<std::size_t>(cell)]
          .push_back(ue.node);
    }
  }
  return out;
}

double ul_tx_power_dbm(double pathloss_db, const PowerControl& pc, int num_prbs) {
  const double cap = pc.p_max_dbm - 10.0 * std::log10(std::max(num_prbs, 1));
  return std::min(cap, pc.p0_dbm + pc.alpha * pathloss_db);
}

ChannelField::ChannelField(const Cluster& cluster, const ChannelModel& model, std::uint64_t seed)
    : cluster_(cluster), model_(model), seed_(seed), n_(cluster.nodes.num_nodes()) {
  const auto& nodes = cluster_.nodes;
  gain_db_.assign(static_cast<std::size_t>(n_) * static_cast<std::size_t>(n_), 0.0);
  gain_lin_.assign(gain_db_.size(), 1.0);
  auto position = [&](int node) {
    return nodes.is_bs(node) ? cluster_.layout.bs_positions[static_cast<std::size_t>(node)]
                             : nodes.ue(node).position;
  };
  auto key = [&](int node) -> std::uint32_t { return nodes.is_bs(node) ? 0U : nodes.ue(node).shadow_key; };
  for (int a = 0; a < n_; ++a) {
    for (int b = a + 1; b < n_; ++b) {
      const LinkClass cls = link_class(a, b);
      const double sh = shadowing_db(seed_, a, b, key(a), key(b), pathloss_model(model_, cls).shadow_sigma_db);
      const double g = large_scale_gain_db(cls, distance(position(a), position(b)), model_, sh);
      gain_db_[index(a, b)] = gain_db_[index(b, a)] = g;
      gain_lin_[index(a, b)] = gain_lin_[index(b, a)] = std::pow(10.0, g / 10.0);
    }
  }
}

LinkClass ChannelField::link_class(int a, int b) const {
  return classify(cluster_.nodes.is_bs(a), cluster_.nodes.is_bs(b));
}

linalg::CVec ChannelField::steering(int from, int toward) const {
  const auto& pos = cluster_.layout.bs_positions;
  const Point p = pos[static_cast<std::size_t>(from)];
  const Point q = pos[static_cast<std::size_t>(toward)];
  const double theta = std::atan2(q.y - p.y, q.x - p.x);
  const int n = cluster_.nodes.bs_antennas;
  linalg::CVec a(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) a[static_cast<std::size_t>(i)] = std::polar(1.0, std::numbers::pi * i * std::sin(theta));
  return a;
}

linalg::CMat ChannelField::fast_fading(int rx, int tx, std::int64_t block, int sub_band) const {
  const int lo = std::min(rx, tx);
  const int hi = std::max(rx, tx);
  const auto rows = static_cast<std::size_t>(cluster_.nodes.antennas(lo));
  const auto cols = static_cast<std::size_t>(cluster_.nodes.antennas(hi));
  rng::KeyedEngine eng(seed_, rng::Stream::kFading,
                       {static_cast<std::uint64_t>(lo), static_cast<std::uint64_t>(hi),
                        static_cast<std::uint64_t>(block), static_cast<std::uint64_t>(sub_band)});
  std::normal_distribution<double> nd(0.0, std::sqrt(0.5));
  linalg::CMat h(rows, cols);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) {
      const double re = nd(eng);
      const double im = nd(eng);
      h(r, c) = {re, im};
    }
  if (link_class(lo, hi) == LinkClass::kBsBs && model_.bs_bs_k_factor_db > -100.0) {
    const double k = std::pow(10.0, model_.bs_bs_k_factor_db / 10.0);
    h *= std::sqrt(1.0 / (k + 1.0));
    // LOS term a_lo a_hi^T; add_outer takes y and forms x y^H.
    linalg::CVec a_hi = steering(hi, lo);
    for (auto& v : a_hi) v = std::conj(v);
    h.add_outer(steering(lo, hi), a_hi, std::sqrt(k / (k + 1.0)));
  }
  return rx == lo ? h : h.transpose();
}

linalg::CMat ChannelField::channel(int rx, int tx, std::int64_t block, int sub_band) const {
  linalg::CMat h = fast_fading(rx, tx, block, sub_band);
  h *= std::sqrt(gain_linear(rx, tx));
  return h;
}

void dump_layout(const Cluster& cluster, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("dump_layout: cannot open " + path.string());
  os.precision(17);
  os << "kind,node,x_m,y_m,cell,direction,shadow_key\n";
  for (int b = 0; b < cluster.layout.num_cells; ++b) {
    const Point p = cluster.layout.bs_positions[static_cast<std::size_t>(b)];
    os << "bs," << b << ',' << p.x << ',' << p.y << ',' << b << ",-,0\n";
  }
  for (const UeNode& ue : cluster.nodes.ues) {
    os << "ue," << ue.node << ',' << ue.position.x << ',' << ue.position.y << ',' << ue.cell << ','
       << to_string(ue.direction) << ',' << ue.shadow_key << '\n';
  }
}

Cluster load_layout(const std::filesystem::path& path, const LayoutSpec& spec) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("load_layout: cannot open " + path.string());
  Cluster out;
  out.layout.inter_site_distance_m = spec.isd_m;
  out.layout.cell_radius_m = spec.isd_m / std::sqrt(3.0);
  out.nodes.bs_antennas = spec.bs_antennas;
  out.nodes.ue_antennas = spec.ue_antennas;
  std::string line;
  std::getline(is, line);
  int line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::vector<std::string> f;
    for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
    if (f.size() != 7) {
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": expected 7 fields");
    }
    const int node = std::stoi(f[1]);
    const Point p{std::stod(f[2]), std::stod(f[3])};
    if (f[0] == "bs") {
      if (node != out.layout.num_cells) {
        throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": BS ids must be 0..C-1 in order");
      }
      out.layout.bs_positions.push_back(p);
      ++out.layout.num_cells;
    } else {
      UeNode ue;
      ue.node = node;
      ue.position = p;
      ue.cell = std::stoi(f[4]);
      ue.direction = f[5] == "ul" ? Direction::kUl : Direction::kDl;
      ue.shadow_key = static_cast<std::uint32_t>(std::stoul(f[6]));
      out.nodes.ues.push_back(ue);
    }
  }
  out.nodes.num_cells = out.layout.num_cells;
  out.nodes.dl_users.assign(static_cast<std::size_t>(out.layout.num_cells), {});
  out.nodes.ul_users.assign(static_cast<std::size_t>(out.layout.num_cells), {});
  for (std::size_t i = 0; i < out.nodes.ues.size(); ++i) {
    const UeNode& ue = out.nodes.ues[i];
    if (ue.node != out.layout.num_cells + static_cast<int>(i)) {
      throw std::runtime_error("load_layout: UE node ids must follow the BS ids contiguously");
    }
    if (ue.cell < 0 || ue.cell >= out.layout.num_cells) {
      throw std::runtime_error("load_layout: UE " + std::to_string(ue.node) + " has an unknown cell");
    }
    (ue.direction == Direction::kDl ? out.nodes.dl_users : out.nodes.ul_users)[static_cast<std::size_t>(ue.cell)]
        .push_back(ue.node);
  }
  return out;
}

}  // namespace dtdd::topo
