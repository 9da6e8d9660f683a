#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include "doctest.h"
#include "dtdd/csa.hpp"
#include "unit/oracle.hpp"

using namespace dtdd;
using namespace dtdd::csa;
using linalg::cd;

TEST_CASE("signaling overhead") {
  CHECK(signaling_overhead(50, 8, 4, 3) == 124);
  CHECK(signaling_overhead(50, 8, 4, 0) == 0);
  CHECK(signaling_overhead(100, 10, 4, 2) == 146);
  // Independent evaluation over a grid; the bit count is the whole part.
  for (int prbs : {25, 50, 52, 100, 106, 273})
    for (int sb : {2, 4, 8, 12, 16})
      for (int bits : {2, 4, 8})
        for (int slots : {1, 3, 10}) {
          const double r = static_cast<double>(prbs) / sb;
          const double exact = slots * r * (std::log(r) / std::log(2.0) + bits);
          CHECK(signaling_overhead(prbs, sb, bits, slots) == static_cast<std::int64_t>(exact + 1e-9));
        }
}

TEST_CASE("precoder map entries") {
  const auto cb = phy::make_dft_codebook(4, 4);
  CHECK(build_precoder_map(3, 10, {}, cb).entries.empty());
  std::vector<ScheduledPrecoder> sched;
  for (int sb = 0; sb < 6; ++sb) sched.push_back({1, 5 - sb, cb.at(sb * 2)});
  const auto map = build_precoder_map(3, 10, sched, cb);
  REQUIRE(map.entries.size() == 6);
  CHECK(map.entries.front().sub_band == 0);
  CHECK(map.entries.front().pmi == 10);
  sched.push_back({1, 2, cb.at(0)});
  CHECK_THROWS_AS(build_precoder_map(3, 10, sched, cb), CsaError);
}

TEST_CASE("precoder map wire round trip") {
  std::mt19937_64 rng(3);
  const auto cb = phy::make_dft_codebook(8, 4);
  const WireFormat fmt{6, 4};
  CHECK(fmt.sub_band_bits() == 3);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<ScheduledPrecoder> sched;
    for (int slot = 0; slot < 3; ++slot)
      for (int sb = 0; sb < 6; ++sb)
        if ((rng() & 1U) != 0U) sched.push_back({slot, sb, oracle::random_vec(rng, 8)});
    const auto map = build_precoder_map(static_cast<int>(rng() % 1000), static_cast<std::int64_t>(rng() % 100000), sched, cb);
    const auto bytes = encode_map(map, fmt);
    const auto header = WireFormat::kSenderBits + WireFormat::kTtiBits + WireFormat::kCountBits;
    const auto entry = WireFormat::kSlotBits + fmt.sub_band_bits() + fmt.pmi_bits;
    CHECK(bytes.size() == static_cast<std::size_t>((header + entry * static_cast<int>(map.entries.size()) + 7) / 8));
    CHECK(decode_map(bytes, fmt) == map);
    CHECK(payload_bits(map, fmt) == static_cast<std::int64_t>(map.entries.size()) * 7);
    for (const auto& e : map.entries) CHECK(e.pmi < 16);
  }
  CHECK_THROWS_AS(decode_map(std::vector<std::uint8_t>{1, 2}, fmt), WireFormatError);
}

TEST_CASE("full-band maps over a period match the overhead formula for power-of-two sub-band counts") {
  const auto cb = phy::make_dft_codebook(4, 4);
  const WireFormat fmt{8, 4};
  std::int64_t bits = 0;
  for (int slot = 0; slot < 3; ++slot) {
    std::vector<ScheduledPrecoder> sched;
    for (int sb = 0; sb < 8; ++sb) sched.push_back({slot, sb, cb.at(sb)});
    bits += payload_bits(build_precoder_map(0, slot, sched, cb), fmt);
  }
  CHECK(bits == signaling_overhead(64, 8, 4, 3));
}

namespace {

std::vector<PrecoderMap> one_entry_maps(const std::vector<int>& senders, const std::vector<int>& pmis) {
  std::vector<PrecoderMap> maps;
  for (std::size_t i = 0; i < senders.size(); ++i) maps.push_back({senders[i], 0, {{0, 0, pmis[i]}}});
  return maps;
}

}  // namespace

TEST_CASE("identify_interferers ranking") {
  std::mt19937_64 rng(5);
  const auto cb = phy::make_dft_codebook(4, 4);
  std::map<int, CMat> q;
  for (int a = 1; a <= 5; ++a) q[a] = oracle::random_mat(rng, 4, 4);
  const BsBsChannel channel = [&](int a) { return q.at(a); };

  const auto single = identify_interferers(0, 0, 0, one_entry_maps({1}, {3}), channel, cb, 3);
  REQUIRE(single.size() == 1);
  CHECK(single[0].strength == doctest::Approx(linalg::norm_sq(single[0].interference)).epsilon(1e-12));

  for (int trial = 0; trial < 50; ++trial) {
    std::vector<int> pmis;
    for (int a = 0; a < 5; ++a) pmis.push_back(static_cast<int>(rng() % 16));
    const auto maps = one_entry_maps({1, 2, 3, 4, 5}, pmis);
    const auto est = identify_interferers(0, 0, 0, maps, channel, cb, 3);
    REQUIRE(est.size() == 3);
    std::vector<std::pair<double, int>> brute;
    for (int a = 1; a <= 5; ++a) {
      const oracle::Vec v = oracle::to_eigen(q[a]) * oracle::to_eigen(cb.at(pmis[static_cast<std::size_t>(a - 1)]));
      brute.push_back({v.squaredNorm(), a});
    }
    std::sort(brute.begin(), brute.end(), [](auto x, auto y) { return x.first > y.first; });
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(est[i].aggressor == brute[i].second);
      CHECK(est[i].strength == doctest::Approx(brute[i].first).epsilon(1e-12));
    }
  }
}

TEST_CASE("identify_interferers ties go to the lower BS id and filters by slot and sub-band") {
  const auto cb = phy::make_dft_codebook(2, 2);
  const BsBsChannel channel = [](int) { return CMat::identity(2); };
  std::vector<PrecoderMap> maps{{7, 0, {{0, 0, 1}}}, {4, 0, {{0, 0, 2}}}, {2, 0, {{1, 0, 0}}}, {3, 0, {{0, 1, 0}}}};
  const auto est = identify_interferers(0, 0, 0, maps, channel, cb, 5);
  REQUIRE(est.size() == 2);
  CHECK(est[0].aggressor == 4);
  CHECK(est[1].aggressor == 7);
}

TEST_CASE("CLI projector construction") {
  AggressorEstimate e1{0, 0, 1, CVec{1.0, 0.0, 0.0, 0.0}, 1.0};
  auto st = build_cli_projector(std::vector<AggressorEstimate>{e1});
  CHECK_FALSE(st.passthrough);
  for (std::size_t r = 0; r < 4; ++r)
    for (std::size_t c = 0; c < 4; ++c)
      CHECK(std::abs(st.projector(r, c) - cd(r == 0 && c == 0 ? 1.0 : 0.0)) < 1e-15);

  AggressorEstimate e2 = e1;
  e2.interference *= cd(0.0, 3.0);
  st = build_cli_projector(std::vector<AggressorEstimate>{e1, e2});
  CHECK(st.basis.size() == 1);
  CHECK_THROWS_AS(build_cli_projector(std::vector<AggressorEstimate>{}), linalg::DimensionMismatch);

  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<AggressorEstimate> est;
    for (int i = 0; i < 3; ++i) est.push_back({0, 0, i + 1, oracle::random_vec(rng, 4), 0.0});
    st = build_cli_projector(est);
    Eigen::SelfAdjointEigenSolver<oracle::Mat> es(oracle::to_eigen(st.projector));
    int rank = 0;
    for (Eigen::Index i = 0; i < 4; ++i)
      if (std::abs(es.eigenvalues()(i) - 1.0) < 1e-6) ++rank;
    CHECK(rank == 3);
    for (const auto& e : est) {
      CVec diff = st.projector * e.interference;
      diff -= e.interference;
      CHECK(linalg::norm(diff) <= 1e-8 * linalg::norm(e.interference));
    }
  }
}

TEST_CASE("complement conditioning removes in-span interference") {
  std::mt19937_64 rng(9);
  const double noise = 1e-3;
  for (int trial = 0; trial < 50; ++trial) {
    const CVec q = oracle::random_vec(rng, 4);
    phy::InterferenceCovariance r(4);
    r.add_term(q, {1, phy::TermClass::kCrossLink});
    const auto st = build_cli_projector(std::vector<AggressorEstimate>{{0, 0, 1, q, 0.0}});
    const auto out = condition_covariance(r, st, ConditionMode::kComplement, noise);
    CHECK(out.mode == ConditionMode::kComplement);
    CMat floor = CMat::identity(4);
    floor *= noise;
    CHECK(linalg::frobenius_norm(out.cov.R - floor) <= 1e-8 * linalg::frobenius_norm(r.R));
  }
}

TEST_CASE("complement conditioning keeps interference orthogonal to the CLI span") {
  const CVec cli{1.0, 1.0, 0.0, 0.0};
  const CVec same{0.0, 0.0, 2.0, cd(0.0, 1.0)};
  phy::InterferenceCovariance r(4);
  r.add_term(cli, {1, phy::TermClass::kCrossLink});
  r.add_term(same, {2, phy::TermClass::kSameLink});
  const auto st = build_cli_projector(std::vector<AggressorEstimate>{{0, 0, 1, cli, 0.0}});
  const auto out = condition_covariance(r, st, ConditionMode::kComplement, 0.0);
  // Dense oracle: (I - P) R (I - P)^H with P from the SVD of the CLI vector.
  const auto p = oracle::svd_projector(oracle::to_eigen(CMat::from_columns(std::vector<CVec>{cli})));
  const oracle::Mat comp = oracle::Mat::Identity(4, 4) - p;
  const oracle::Mat ref = comp * oracle::to_eigen(r.R) * comp.adjoint();
  CHECK(oracle::max_abs_diff(oracle::to_eigen(out.cov.R), ref) < 1e-12);
  const oracle::Vec s = oracle::to_eigen(same);
  CHECK(oracle::max_abs_diff(oracle::to_eigen(out.cov.R), s * s.adjoint()) < 1e-8);
}

TEST_CASE("oracle conditioning drops every cross-link contributor") {
  std::mt19937_64 rng(13);
  phy::InterferenceCovariance r(4);
  phy::InterferenceCovariance same_only(4);
  for (int j = 0; j < 4; ++j) {
    const CVec v = oracle::random_vec(rng, 4);
    const auto cls = j % 2 == 0 ? phy::TermClass::kSameLink : phy::TermClass::kCrossLink;
    r.add_term(v, {j, cls});
    if (cls == phy::TermClass::kSameLink) same_only.add_term(v, {j, cls});
  }
  r.add_white(0.5, {9, phy::TermClass::kCrossLink});
  const ProjectorState none;
  const auto out = condition_covariance(r, none, ConditionMode::kOracle, 1.0);
  CHECK(out.cov.R == same_only.R);
}

TEST_CASE("literal conditioning keeps parallel columns and zeroes orthogonal ones") {
  const auto st = build_cli_projector(std::vector<AggressorEstimate>{{0, 0, 1, CVec{1.0, 0.0}, 1.0}});
  phy::InterferenceCovariance r(2);
  r.R = CMat(2, 2, {3.0, 0.0, 0.0, 5.0});
  const auto out = condition_covariance(r, st, ConditionMode::kLiteral, 0.0);
  CHECK(out.cov.R(0, 0) == cd(3.0));
  CHECK(out.cov.R(1, 1) == cd(0.0));
  phy::InterferenceCovariance r2(2);
  r2.R = CMat(2, 2, {0.0, 0.0, 4.0, 1.0});
  const auto out2 = condition_covariance(r2, st, ConditionMode::kLiteral, 0.0);
  CHECK(out2.cov.R(0, 0) == cd(0.0));
  CHECK(out2.cov.R(1, 0) == cd(0.0));
}

TEST_CASE("passthrough projector leaves the covariance alone") {
  phy::InterferenceCovariance r(2);
  r.R = CMat::identity(2);
  const auto out = condition_covariance(r, ProjectorState{}, ConditionMode::kComplement, 1.0);
  CHECK(out.passthrough);
  CHECK(out.cov.R == r.R);
}

TEST_CASE("condition modes parse") {
  CHECK(parse_condition_mode("complement") == ConditionMode::kComplement);
  CHECK(parse_condition_mode("a") == ConditionMode::kLiteral);
  CHECK(to_string(ConditionMode::kOracle) == "oracle");
  CHECK_THROWS_AS(parse_condition_mode("sideways"), CsaError);
}
