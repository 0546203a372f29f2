#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ppn/model.hpp"

namespace ppn {

enum class Scheme { DormandPrince, Rosenbrock };

struct IntegratorConfig {
  double rel_tol = 1e-9;
  Vec abs_tol;                  // per-variable; built from state scales when empty
  double max_step = 1.0;        // ms
  double dense_output_dt = 0.05;  // ms, sampling grid for Trace
  double init_step = 1e-3;
  Scheme scheme = Scheme::DormandPrince;
  double spike_threshold = -20.0;  // mV, event threshold
  double refractory = 2.0;         // ms

  Vec abs_tol_for(const ModelSpec& m) const {
    if (abs_tol.size() == m.dim()) return abs_tol;
    return state_scales(m) * (rel_tol * 0.1);
  }
};

/// Applied current waveform: piecewise step/ramp segments over a holding level.
/// Segment boundaries are integration breakpoints.
struct Stimulus {
  struct Piece {
    double t0 = 0, t1 = 0;
    bool is_ramp = false;
    double level = 0;             // step
    double slope = 0, offset = 0; // ramp: offset + slope*(t - t0)
  };
  double holding = 0.0;
  std::vector<Piece> pieces;

  double operator()(double t) const {
    for (const auto& p : pieces)
      if (t >= p.t0 && t < p.t1) return p.is_ramp ? p.offset + p.slope * (t - p.t0) : p.level;
    return holding;
  }
  std::vector<double> breakpoints() const {
    std::vector<double> b;
    for (const auto& p : pieces) {
      b.push_back(p.t0);
      b.push_back(p.t1);
    }
    return b;
  }
  static Stimulus constant(double level) {
    Stimulus s;
    s.holding = level;
    return s;
  }
};

enum class EventKind { SpikePeak, UpCross, DownCross, StimulusEdge };
std::string to_string(EventKind k);

struct Event {
  double time = 0;
  EventKind kind = EventKind::SpikePeak;
  double value = 0;  // V at the event
};

struct IntegrationFailure {
  double time = 0;
  std::string reason;
};

/// Dense time series of the full state plus event annotations.
struct Trace {
  std::vector<double> times;
  std::vector<Vec> states;          // same layout as ModelSpec
  std::vector<double> applied;      // I_app on the grid
  std::vector<Event> events;
  std::vector<std::string> names;   // variable names
  std::optional<IntegrationFailure> failure;

  double v_at(size_t i) const { return states[i][0]; }
  /// Linear interpolation of the sampled state.
  Vec state_at(double t) const;
  size_t index_before(double t) const;
};

/// Integrate the model under a time-varying applied current. Stimulus
/// discontinuities are never stepped over; local error follows cfg.
Trace integrate(const ModelSpec& m, const Vec& x0, const Stimulus& stim,
                std::pair<double, double> t_span, const IntegratorConfig& cfg);

/// Integrate without dense storage; returns the final state (used by shooting).
Vec integrate_to(const ModelSpec& m, const Vec& x0, double i_app, double duration,
                 const IntegratorConfig& cfg);

struct SettleResult {
  Vec state;
  bool stationary = false;
  double residual = 0.0;  // max-norm of rhs at the returned state
};

/// Relax the model at a holding current for up to 2000 ms; Newton-polish if a
/// stationary point is reached, otherwise flag the state as non-stationary.
SettleResult settle(const ModelSpec& m, double i_hold, const IntegratorConfig& cfg,
                    double max_time = 2000.0, std::optional<Vec> start = std::nullopt);

/// Holding state taken as a computed equilibrium of the holding current
/// (Newton on the scalar-reduction roots); falls back to settle() when no
/// equilibrium is found. stationary reports its linear stability.
SettleResult settle_to_equilibrium(const ModelSpec& m, double i_hold,
                                   const IntegratorConfig& cfg);

/// Spike times: local maxima of V following an upward threshold crossing,
/// separated by at least the refractory interval.
std::vector<double> detect_spikes(const Trace& tr, double threshold = -20.0,
                                  double refractory = 2.0);

struct Peak {
  double time;
  double value;
  double prominence;
};

/// Local maxima of V with at least the requested prominence (used for
/// subthreshold oscillations where no spike threshold applies).
std::vector<Peak> detect_peaks(const Trace& tr, double min_prominence);

std::vector<double> interspike_intervals(const std::vector<double>& spikes);

}  // namespace ppn
