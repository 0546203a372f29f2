#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ppn/integrate.hpp"
#include "ppn/model.hpp"

namespace ppn {

enum class ProtocolKind { Ramp, SDP, Delay, PIR, PIF, Custom };
std::string to_string(ProtocolKind k);

/// How the holding state is prepared: relax the trajectory (and keep the
/// reached attractor, e.g. tonic firing), or start from the computed holding
/// equilibrium (quiescent baselines).
enum class HoldingPolicy { Attractor, Equilibrium };

struct Segment {
  std::string name;
  double t_start = 0, t_end = 0;
  bool is_ramp = false;
  double level = 0;              // step level, pA/pF (absolute, not relative)
  double slope = 0, offset = 0;  // ramp: offset + slope*(t - t_start)
};

/// A named applied-current waveform plus holding/settling policy.
struct Protocol {
  ProtocolKind kind = ProtocolKind::Custom;
  std::string name = "custom";
  Variant variant = Variant::C;
  double holding_current = 0.0;  // pA/pF
  double total_duration = 0.0;   // ms
  std::vector<Segment> segments;
  std::set<ChannelId> channel_blocks;
  double spike_threshold = -20.0;
  double refractory = 2.0;
  double peak_prominence = 5.0;  // mV, subthreshold oscillation detector
  HoldingPolicy holding_policy = HoldingPolicy::Attractor;
  std::string notes;

  Stimulus stimulus() const;
  void validate() const;
  Segment* segment(const std::string& nm);
  const Segment* segment(const std::string& nm) const;
  /// End of the first inhibitory segment (level below holding), if any.
  std::optional<double> release_time() const;
};

/// Canonical parameterizations: ramp, sdp, delay, pir, pif_nc, pif_ct, pif_c.
Protocol make_protocol(const std::string& name);
std::vector<std::string> canonical_protocol_names();

struct ProtocolResult {
  Protocol protocol;
  SettleResult settled;
  Trace trace;
  std::vector<double> spikes;
  std::vector<double> isis;
  std::vector<Peak> peaks;  // prominence-based oscillation peaks (ramp)
  std::vector<std::pair<double, double>> normalized_isis;
  std::optional<double> delay_to_first_spike;
  std::map<std::string, double> metrics;
};

/// Settle at the holding current, run the waveform, compute metrics.
ProtocolResult run_protocol(const Protocol& p, const ModelSpec& model,
                            const IntegratorConfig& cfg);
ProtocolResult run_protocol(const Protocol& p, const IntegratorConfig& cfg);

/// I_app at the first detected subthreshold oscillation peak of a ramp run.
std::optional<double> ramp_onset_current(const ProtocolResult& r);

/// (normalized time, ISI) over the oscillation window; absent with < 3 peaks.
std::optional<std::vector<std::pair<double, double>>> normalized_isi_curve(
    const ProtocolResult& r);

/// Least-squares fit of ISI ~ a*exp(b*x); returns (a, b, rms residual).
struct ExpFit {
  double a = 0, b = 0, rms = 0;
};
std::optional<ExpFit> fit_exponential(const std::vector<std::pair<double, double>>& xy);

struct PifVerdict {
  int inhibition_only = 0;
  int excitation_only = 0;
  int paired = 0;
  bool facilitation = false;
  double paired_first_spike = 0, paired_last_spike = 0;
};

/// Runs the paired protocol plus each pulse in isolation.
PifVerdict pif_verdict(Variant variant, const IntegratorConfig& cfg,
                       std::optional<Protocol> base = std::nullopt);

}  // namespace ppn
