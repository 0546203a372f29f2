#include "ppn/protocol.hpp"

#include <algorithm>
#include <cmath>

namespace ppn {

std::string to_string(ProtocolKind k) {
  switch (k) {
    case ProtocolKind::Ramp: return "Ramp";
    case ProtocolKind::SDP: return "SDP";
    case ProtocolKind::Delay: return "Delay";
    case ProtocolKind::PIR: return "PIR";
    case ProtocolKind::PIF: return "PIF";
    case ProtocolKind::Custom: return "Custom";
  }
  return "?";
}

Stimulus Protocol::stimulus() const {
  Stimulus s;
  s.holding = holding_current;
  for (const auto& seg : segments) {
    Stimulus::Piece p;
    p.t0 = seg.t_start;
    p.t1 = seg.t_end;
    p.is_ramp = seg.is_ramp;
    p.level = seg.level;
    p.slope = seg.slope;
    p.offset = seg.offset;
    s.pieces.push_back(p);
  }
  return s;
}

void Protocol::validate() const {
  for (const auto& seg : segments) {
    if (!(seg.t_end > seg.t_start)) throw ModelError("segment '" + seg.name + "' has no width");
    if (seg.t_start < 0.0 || seg.t_end > total_duration)
      throw ModelError("segment '" + seg.name + "' outside [0, total_duration]");
  }
  for (size_t i = 0; i < segments.size(); ++i)
    for (size_t j = i + 1; j < segments.size(); ++j) {
      const auto& a = segments[i];
      const auto& b = segments[j];
      if (a.t_start < b.t_end && b.t_start < a.t_end)
        throw ModelError("segments '" + a.name + "' and '" + b.name + "' overlap");
    }
  ModelSpec m = build_model(variant);
  for (ChannelId id : channel_blocks)
    if (!m.has_channel(id))
      throw ModelError("blocked channel " + to_string(id) + " absent from variant");
}

Segment* Protocol::segment(const std::string& nm) {
  for (auto& s : segments)
    if (s.name == nm) return &s;
  return nullptr;
}

const Segment* Protocol::segment(const std::string& nm) const {
  for (const auto& s : segments)
    if (s.name == nm) return &s;
  return nullptr;
}

std::optional<double> Protocol::release_time() const {
  for (const auto& s : segments)
    if (!s.is_ramp && s.level < holding_current) return s.t_end;
  return std::nullopt;
}

std::vector<std::string> canonical_protocol_names() {
  return {"ramp", "sdp", "delay", "pir", "pif_nc", "pif_ct", "pif_c"};
}

Protocol make_protocol(const std::string& name) {
  Protocol p;
  p.name = name;
  if (name == "ramp") {
    p.kind = ProtocolKind::Ramp;
    p.variant = Variant::NC;
    p.holding_current = 0.0;
    p.total_duration = 800.0;
    p.segments.push_back({"ramp", 100.0, 700.0, true, 0.0, 0.0085, 0.0});
    p.channel_blocks = {ChannelId::Na};
    p.notes = "TTX ramp: I(t)=0.0085*(t-100) on [100,700] ms, NC with sodium blocked";
  } else if (name == "sdp") {
    p.kind = ProtocolKind::SDP;
    p.variant = Variant::NC;
    p.holding_current = -0.6;
    p.total_duration = 1500.0;
    p.segments.push_back({"step", 100.0, 300.0, false, -0.415, 0.0, 0.0});
    p.notes = "subthreshold depolarizing step; a 185 pA/pF variant exists as override";
  } else if (name == "delay") {
    p.kind = ProtocolKind::Delay;
    p.variant = Variant::C;
    p.holding_current = 1.3;
    p.total_duration = 1000.0;
    p.segments.push_back({"inh1", 100.0, 400.0, false, -2.7, 0.0, 0.0});
    p.segments.push_back({"inh2", 660.0, 800.0, false, -2.7, 0.0, 0.0});
  } else if (name == "pir") {
    p.kind = ProtocolKind::PIR;
    p.variant = Variant::CT;
    p.holding_current = -0.95;
    p.total_duration = 1200.0;
    p.segments.push_back({"inh", 50.0, 350.0, false, -3.45, 0.0, 0.0});
    p.holding_policy = HoldingPolicy::Equilibrium;
  } else if (name == "pif_nc") {
    p.kind = ProtocolKind::PIF;
    p.variant = Variant::NC;
    p.holding_current = 0.0;
    p.total_duration = 800.0;
    p.segments.push_back({"inh", 100.0, 120.0, false, -2.0, 0.0, 0.0});
    p.segments.push_back({"exc", 150.0, 170.0, false, 0.5, 0.0, 0.0});
    p.holding_policy = HoldingPolicy::Equilibrium;
  } else if (name == "pif_ct") {
    p.kind = ProtocolKind::PIF;
    p.variant = Variant::CT;
    p.holding_current = 0.0;
    p.total_duration = 1100.0;
    p.segments.push_back({"inh", 100.0, 120.0, false, -2.7, 0.0, 0.0});
    p.segments.push_back({"exc", 250.0, 270.0, false, 0.15, 0.0, 0.0});
    p.holding_policy = HoldingPolicy::Equilibrium;
  } else if (name == "pif_c") {
    p.kind = ProtocolKind::PIF;
    p.variant = Variant::C;
    p.holding_current = 0.0;
    p.total_duration = 1100.0;
    p.segments.push_back({"inh", 100.0, 120.0, false, -2.7, 0.0, 0.0});
    p.segments.push_back({"exc", 250.0, 270.0, false, 0.15, 0.0, 0.0});
    p.holding_policy = HoldingPolicy::Equilibrium;
  } else {
    throw ModelError("unknown protocol: " + name);
  }
  return p;
}

namespace {

double mean(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / v.size();
}

double coeff_variation(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double mu = mean(v);
  double ss = 0;
  for (double x : v) ss += (x - mu) * (x - mu);
  return std::sqrt(ss / (v.size() - 1)) / std::abs(mu);
}

}  // namespace

ProtocolResult run_protocol(const Protocol& p, const ModelSpec& model,
                            const IntegratorConfig& cfg_in) {
  p.validate();
  ProtocolResult r;
  r.protocol = p;

  IntegratorConfig cfg = cfg_in;
  cfg.spike_threshold = p.spike_threshold;
  cfg.refractory = p.refractory;

  ModelSpec m = model.with_blocks(p.channel_blocks);
  r.settled = p.holding_policy == HoldingPolicy::Equilibrium
                  ? settle_to_equilibrium(m, p.holding_current, cfg)
                  : settle(m, p.holding_current, cfg);
  r.trace = integrate(m, r.settled.state, p.stimulus(), {0.0, p.total_duration}, cfg);
  if (r.trace.failure)
    throw ModelError("integration failure in protocol " + p.name + " at t=" +
                     std::to_string(r.trace.failure->time) + " (" + r.trace.failure->reason + ")");

  r.spikes = detect_spikes(r.trace, p.spike_threshold, p.refractory);
  r.isis = interspike_intervals(r.spikes);
  r.peaks = detect_peaks(r.trace, p.peak_prominence);

  r.metrics["spike_count"] = static_cast<double>(r.spikes.size());
  if (!r.spikes.empty()) {
    r.metrics["first_spike_ms"] = r.spikes.front();
    r.metrics["last_spike_ms"] = r.spikes.back();
  }
  if (!r.isis.empty()) {
    r.metrics["mean_isi_ms"] = mean(r.isis);
    r.metrics["isi_cv"] = coeff_variation(r.isis);
  }

  if (auto rel = p.release_time()) {
    for (double s : r.spikes)
      if (s > *rel) {
        r.delay_to_first_spike = s - *rel;
        break;
      }
    if (r.delay_to_first_spike) r.metrics["delay_ms"] = *r.delay_to_first_spike;
  }

  // Calcium excursion
  double ca_min = 1e300, ca_max = -1e300;
  const int ica = m.ca_index();
  for (const auto& s : r.trace.states) {
    ca_min = std::min(ca_min, s[ica]);
    ca_max = std::max(ca_max, s[ica]);
  }
  r.metrics["ca_min_nM"] = ca_min;
  r.metrics["ca_max_nM"] = ca_max;

  if (p.kind == ProtocolKind::Ramp) {
    if (auto onset = ramp_onset_current(r)) r.metrics["onset_current"] = *onset;
    if (auto curve = normalized_isi_curve(r)) {
      r.normalized_isis = *curve;
      r.metrics["first_isi_ms"] = curve->front().second;
      r.metrics["last_isi_ms"] = curve->back().second;
      if (auto fit = fit_exponential(*curve)) r.metrics["isi_fit_rms_ms"] = fit->rms;
    }
  }

  if (p.kind == ProtocolKind::SDP && !p.segments.empty()) {
    const double t_off = p.segments.front().t_end;
    const double v_eq = r.settled.state[0];
    if (!r.spikes.empty() && r.spikes.size() >= 2)
      r.metrics["spike_separation_ms"] = r.spikes[1] - r.spikes[0];
    // first time after stimulus end from which V stays within 0.5 mV of the
    // pre-stimulus equilibrium
    const auto& tr = r.trace;
    double t_return = -1;
    for (size_t i = tr.index_before(t_off) + 1; i < tr.times.size(); ++i) {
      if (std::abs(tr.states[i][0] - v_eq) <= 0.5) {
        if (t_return < 0) t_return = tr.times[i];
      } else {
        t_return = -1;
      }
    }
    if (t_return >= 0) r.metrics["return_time_ms"] = t_return - t_off;
  }

  if (p.kind == ProtocolKind::PIR) {
    // amplitude monotonicity over the rebound burst
    if (r.spikes.size() >= 2) {
      bool decreasing = true;
      double prev = 1e300;
      for (double st : r.spikes) {
        const double v = r.trace.state_at(st)[0];
        if (v > prev + 0.1) decreasing = false;
        prev = v;
      }
      r.metrics["amplitudes_decreasing"] = decreasing ? 1.0 : 0.0;
    }
    if (!r.spikes.empty()) {
      // repolarization: last spike until V stays within 1 mV of baseline rest
      const double v_eq = r.settled.state[0];
      const auto& tr = r.trace;
      double t_rest = -1;
      for (size_t i = tr.index_before(r.spikes.back()) + 1; i < tr.times.size(); ++i) {
        if (std::abs(tr.states[i][0] - v_eq) <= 1.0) {
          if (t_rest < 0) t_rest = tr.times[i];
        } else {
          t_rest = -1;
        }
      }
      if (t_rest >= 0) r.metrics["repolarization_ms"] = t_rest - r.spikes.back();
    }
  }

  return r;
}

ProtocolResult run_protocol(const Protocol& p, const IntegratorConfig& cfg) {
  return run_protocol(p, build_model(p.variant), cfg);
}

std::optional<double> ramp_onset_current(const ProtocolResult& r) {
  const Segment* ramp = nullptr;
  for (const auto& s : r.protocol.segments)
    if (s.is_ramp) ramp = &s;
  if (!ramp) return std::nullopt;
  const Stimulus stim = r.protocol.stimulus();
  for (const auto& pk : r.peaks)
    if (pk.time > ramp->t_start && pk.time < ramp->t_end) return stim(pk.time);
  return std::nullopt;
}

std::optional<std::vector<std::pair<double, double>>> normalized_isi_curve(
    const ProtocolResult& r) {
  std::vector<double> times;
  if (r.protocol.kind == ProtocolKind::Ramp) {
    for (const auto& pk : r.peaks) times.push_back(pk.time);
  } else {
    times = r.spikes;
  }
  if (times.size() < 3) return std::nullopt;
  const double t0 = times.front(), t1 = times.back();
  if (t1 <= t0) return std::nullopt;
  std::vector<std::pair<double, double>> xy;
  for (size_t i = 0; i + 1 < times.size(); ++i)
    xy.push_back({(times[i] - t0) / (t1 - t0), times[i + 1] - times[i]});
  return xy;
}

std::optional<ExpFit> fit_exponential(const std::vector<std::pair<double, double>>& xy) {
  if (xy.size() < 2) return std::nullopt;
  // linear least squares on log(y)
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(xy.size());
  for (const auto& [x, y] : xy) {
    if (y <= 0) return std::nullopt;
    sx += x;
    sy += std::log(y);
    sxx += x * x;
    sxy += x * std::log(y);
  }
  const double denom = n * sxx - sx * sx;
  if (std::abs(denom) < 1e-14) return std::nullopt;
  ExpFit f;
  f.b = (n * sxy - sx * sy) / denom;
  f.a = std::exp((sy - f.b * sx) / n);
  double ss = 0;
  for (const auto& [x, y] : xy) {
    const double e = y - f.a * std::exp(f.b * x);
    ss += e * e;
  }
  f.rms = std::sqrt(ss / n);
  return f;
}

PifVerdict pif_verdict(Variant variant, const IntegratorConfig& cfg,
                       std::optional<Protocol> base) {
  Protocol p = base ? *base
                    : make_protocol(variant == Variant::NC   ? "pif_nc"
                                    : variant == Variant::CT ? "pif_ct"
                                                             : "pif_c");
  PifVerdict v;
  auto count = [&](std::vector<std::string> keep) {
    Protocol q = p;
    q.segments.clear();
    for (const auto& s : p.segments)
      if (std::find(keep.begin(), keep.end(), s.name) != keep.end()) q.segments.push_back(s);
    ProtocolResult r = run_protocol(q, cfg);
    return r;
  };
  v.inhibition_only = static_cast<int>(count({"inh"}).spikes.size());
  v.excitation_only = static_cast<int>(count({"exc"}).spikes.size());
  ProtocolResult paired = count({"inh", "exc"});
  v.paired = static_cast<int>(paired.spikes.size());
  if (!paired.spikes.empty()) {
    v.paired_first_spike = paired.spikes.front();
    v.paired_last_spike = paired.spikes.back();
  }
  v.facilitation = v.paired > 0 && v.inhibition_only == 0 && v.excitation_only == 0;
  return v;
}

}  // namespace ppn
