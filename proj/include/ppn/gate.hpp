#pragma once

#include <algorithm>
#include <cmath>

namespace ppn {

// Floor applied to every evaluated gating time constant. The A-current gates
// have t0 = 0, so the raw formula tends to zero at extreme voltages.
constexpr double kTauFloorMs = 0.01;

inline double safe_exp(double x) { return std::exp(std::clamp(x, -500.0, 500.0)); }

/// Kinetics of one voltage-dependent gating variable: Boltzmann steady state
/// and a double-exponential time constant, both in mV/ms units.
struct GateKinetics {
  double p_half = 0.0;  // half-activation voltage, mV
  double k_p = 1.0;     // slope, mV (negative for inactivation gates)
  double t0 = 1.0;      // ms
  double t1 = 1.0;      // ms
  double theta = 0.0;   // mV
  double sigma0 = 1.0;  // mV
  double sigma1 = 1.0;  // mV
  int exponent = 1;     // power to which the gate enters the current product

  double steady(double v) const { return 1.0 / (1.0 + safe_exp(-(v - p_half) / k_p)); }

  // d p_inf / dV
  double steady_dv(double v) const {
    const double p = steady(v);
    return p * (1.0 - p) / k_p;
  }

  // Time constant is clamped into [min(t0,t1), max(t0,t1)] (and above the
  // global floor). The raw two-exponential form only stays in that interval
  // when sigma0 > 0 > sigma1; for rows where both sigmas are positive
  // placeholders (h_CaT) the denominator vanishes at depolarized voltages and
  // the raw value would turn negative.
  double tau(double v) const {
    const double lo = std::max(kTauFloorMs, std::min(t0, t1));
    const double hi = std::max(kTauFloorMs, std::max(t0, t1));
    if (t0 == t1) return hi;
    const double d = safe_exp((theta - v) / sigma0) + safe_exp((theta - v) / sigma1);
    const double raw = t0 + (t1 - t0) / d;
    return std::clamp(raw, lo, hi);
  }

  // d tau / dV; zero wherever the clamp is active.
  double tau_dv(double v) const {
    if (t0 == t1) return 0.0;
    const double e0 = safe_exp((theta - v) / sigma0);
    const double e1 = safe_exp((theta - v) / sigma1);
    const double d = e0 + e1;
    const double raw = t0 + (t1 - t0) / d;
    const double lo = std::max(kTauFloorMs, std::min(t0, t1));
    const double hi = std::max(kTauFloorMs, std::max(t0, t1));
    if (raw <= lo || raw >= hi) return 0.0;
    return (t1 - t0) * (e0 / sigma0 + e1 / sigma1) / (d * d);
  }
};

/// Hill activation of the calcium-gated potassium channel (exponent 4).
inline double kca_activation(double ca, double affinity) {
  const double c4 = ca * ca * ca * ca;
  const double k4 = affinity * affinity * affinity * affinity;
  return c4 / (c4 + k4);
}

inline double kca_activation_dca(double ca, double affinity) {
  const double c2 = ca * ca;
  const double c3 = c2 * ca;
  const double c4 = c2 * c2;
  const double k4 = affinity * affinity * affinity * affinity;
  const double s = c4 + k4;
  return 4.0 * c3 * k4 / (s * s);
}

}  // namespace ppn
