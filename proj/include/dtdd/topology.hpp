#pragma once

// Cluster geometry, node drop, large-scale gains and keyed fast fading.
//
// The 3D urban-macro channel is replaced by log-distance pathloss with
// log-normal shadowing per link class and Rayleigh block fading. The BS-BS
// class additionally carries a line-of-sight component (Rician) between the
// rooftop arrays, which fixes the cross-link arrival direction at the
// victim for a given aggressor.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "dtdd/linalg.hpp"
#include "dtdd/types.hpp"

namespace dtdd::topo {

struct Point {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const Point&) const = default;
};

double distance(Point a, Point b);

enum class LinkClass { kBsUe, kBsBs, kUeUe };

struct PathlossModel {
  double intercept_db = 0.0;  ///< loss at 1 km
  double slope_db = 0.0;      ///< loss per decade of distance
  double shadow_sigma_db = 0.0;
};

struct ChannelModel {
  PathlossModel bs_ue{128.1, 37.6, 8.0};
  PathlossModel bs_bs{103.3, 20.0, 6.0};
  PathlossModel ue_ue{140.0, 40.0, 6.0};
  /// Rician K-factor of BS-BS links; large negative values give pure Rayleigh.
  double bs_bs_k_factor_db = 20.0;
  /// Fading is block-constant over this many symbol ticks.
  int fading_block_symbols = kSymbolsPerSlot;
};

struct LayoutSpec {
  int cells = 7;
  double isd_m = 500.0;
  int ues_dl_per_cell = 5;
  int ues_ul_per_cell = 5;
  double min_ue_distance_m = 35.0;
  int bs_antennas = 4;
  int ue_antennas = 2;
};

struct ClusterLayout {
  int num_cells = 0;
  double inter_site_distance_m = 0.0;
  double cell_radius_m = 0.0;
  std::vector<Point> bs_positions;
};

struct UeNode {
  int node = 0;  ///< global node id; BSs occupy [0, num_cells)
  int cell = 0;  ///< serving BS
  Direction direction = Direction::kDl;
  Point position;
  /// Redraw counter of the drop; part of the shadowing key.
  std::uint32_t shadow_key = 0;
};

struct NodeSet {
  int num_cells = 0;
  int bs_antennas = 0;
  int ue_antennas = 0;
  std::vector<UeNode> ues;                  ///< indexed by node - num_cells
  std::vector<std::vector<int>> dl_users;   ///< per cell, global node ids
  std::vector<std::vector<int>> ul_users;

  int num_nodes() const { return num_cells + static_cast<int>(ues.size()); }
  bool is_bs(int node) const { return node < num_cells; }
  const UeNode& ue(int node) const { return ues.at(static_cast<std::size_t>(node - num_cells)); }
  int antennas(int node) const { return is_bs(node) ? bs_antennas : ue_antennas; }
  const std::vector<int>& users(int cell, Direction d) const {
    return d == Direction::kDl ? dl_users.at(static_cast<std::size_t>(cell))
                               : ul_users.at(static_cast<std::size_t>(cell));
  }
};

/// Hexagonal spiral of BS sites around the origin.
std::vector<Point> hex_positions(int count, double isd_m);

double mean_pathloss_db(const PathlossModel& model, double distance_m);
const PathlossModel& pathloss_model(const ChannelModel& model, LinkClass cls);

/// -(PL(d) + shadowing) in dB; distances below 1 m are clamped.
double large_scale_gain_db(LinkClass cls, double distance_m, const ChannelModel& model,
                           double shadowing_db = 0.0);

struct Cluster {
  ClusterLayout layout;
  NodeSet nodes;
};

/// Drops the UEs uniformly over their cell discs. A UE whose strongest
/// large-scale gain points at a different cell is redrawn, so every UE ends
/// up associated with the cell it was dropped into.
Cluster build_cluster(const LayoutSpec& spec, std::uint64_t seed, const ChannelModel& model);

/// Open-loop fractional power control, per-PRB power in dBm:
/// min(p_max - 10 log10(num_prbs), p0 + alpha * PL).
struct PowerControl {
  double p0_dbm = -103.0;
  double alpha = 1.0;
  double p_max_dbm = 23.0;
};
double ul_tx_power_dbm(double pathloss_db, const PowerControl& pc, int num_prbs = 1);

/// Deterministic-by-key channel source for every node pair.
class ChannelField {
 public:
  ChannelField(const Cluster& cluster, const ChannelModel& model, std::uint64_t seed);

  const Cluster& cluster() const { return cluster_; }
  const ChannelModel& model() const { return model_; }
  LinkClass link_class(int a, int b) const;

  /// Large-scale gain (dB, negative) including shadowing; symmetric.
  double gain_db(int a, int b) const { return gain_db_[index(a, b)]; }
  double gain_linear(int a, int b) const { return gain_lin_[index(a, b)]; }

  /// Small-scale matrix (rx antennas x tx antennas) with unit mean power per
  /// entry. channel(b <- a) equals the transpose of channel(a <- b).
  linalg::CMat fast_fading(int rx, int tx, std::int64_t block, int sub_band) const;
  /// fast_fading scaled by the large-scale amplitude.
  linalg::CMat channel(int rx, int tx, std::int64_t block, int sub_band) const;

  std::int64_t block_of(Tick t) const { return t / model_.fading_block_symbols; }

 private:
  std::size_t index(int a, int b) const {
    return static_cast<std::size_t>(a) * static_cast<std::size_t>(n_) + static_cast<std::size_t>(b);
  }
  linalg::CVec steering(int from, int toward) const;

  Cluster cluster_;
  ChannelModel model_;
  std::uint64_t seed_;
  int n_;
  std::vector<double> gain_db_;
  std::vector<double> gain_lin_;
};

/// Plain CSV drop file: kind,node,x_m,y_m,cell,direction,shadow_key
void dump_layout(const Cluster& cluster, const std::filesystem::path& path);
Cluster load_layout(const std::filesystem::path& path, const LayoutSpec& spec);

}  // namespace dtdd::topo
