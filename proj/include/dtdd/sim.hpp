#pragma once

// Symbol-tick system simulation of a dynamic-TDD cluster: Poisson traffic,
// per-slot format selection, PF scheduling in 4-symbol TTIs, per-scheme link
// evaluation, Chase-combining HARQ and KPI capture.

#include <stdexcept>
#include <vector>

#include "dtdd/config.hpp"
#include "dtdd/csa.hpp"
#include "dtdd/kpi.hpp"
#include "dtdd/linalg.hpp"
#include "dtdd/phy.hpp"

namespace dtdd::sim {

class SimError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One interfering stream as seen by the victim receiver.
struct LinkTerm {
  int transmitter = -1;  ///< aggressor BS id for cross-link terms at a BS
  phy::TermClass cls = phy::TermClass::kSameLink;
  linalg::CVec q;  ///< includes transmit power, large-scale gain and precoder
};

enum class ReceiverKind {
  kInterferenceFree,  ///< every inter-cell term removed
  kCrossLinkFree,     ///< cross-link terms removed, IRC over the rest
  kPlain,             ///< IRC over everything; cross-link seen per ReceiverConfig
  kCsa,               ///< identified aggressors projected out of the covariance
};

struct LinkRequest {
  linalg::CVec desired;
  std::vector<LinkTerm> terms;
  double noise_power = 0.0;
  /// Aggressors identified from precoder maps (kCsa only). Their
  /// reconstructed vectors stand in for the true ones in the covariance.
  std::vector<csa::AggressorEstimate> estimates;
};

struct LinkResult {
  double sinr = 0.0;
  double signal = 0.0;        ///< |u^H s|^2
  double interference = 0.0;  ///< sum of |u^H q|^2 over the terms left after the scheme
  bool projected = false;
};

/// Receiver covariance, combiner and post-combining SINR for one resource.
///
/// Under kCsa in complement mode the cross-link terms reach the combiner as
/// (I - P) q, i.e. the CLI span is removed from the cross-link part of the
/// received signal while the desired and same-link terms pass unchanged.
/// Oracle mode drops the cross-link terms; literal mode leaves them intact.
LinkResult evaluate_link(const LinkRequest& req, ReceiverKind kind, const config::ReceiverConfig& rx,
                         csa::ConditionMode mode = csa::ConditionMode::kComplement);

/// Receiver a scheme applies at a victim of direction `victim`.
ReceiverKind receiver_for(SchemeKind scheme, Direction victim);

struct RunOutput {
  kpi::KpiStore kpi;
  std::vector<kpi::RfcRecord> rfc;
};

/// Full run. Throws config::ValidationError on an invalid configuration.
RunOutput run_detailed(const config::SimConfig& cfg);
kpi::KpiStore run(const config::SimConfig& cfg);

}  // namespace dtdd::sim
