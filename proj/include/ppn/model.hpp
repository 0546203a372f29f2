#pragma once

#include <Eigen/Dense>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "ppn/gate.hpp"

namespace ppn {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

enum class Variant { C, CT, NC };
enum class ChannelId { Na, K, L, CaPQ, KCa, A, CaT };

std::string to_string(Variant v);
Variant variant_from_string(const std::string& s);
std::string to_string(ChannelId c);
ChannelId channel_from_string(const std::string& s);

struct ModelError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// One membrane current: maximal conductance, reversal potential, and up to
/// two gating variables. KCa carries a Hill affinity instead of voltage gates.
struct ChannelDef {
  ChannelId id = ChannelId::L;
  double g = 0.0;  // nS/pF
  double E = 0.0;  // mV
  std::optional<GateKinetics> activation;
  std::optional<GateKinetics> inactivation;
  double kca_affinity = 0.0;  // nM, KCa only
};

struct CalciumParams {
  double f_ca = 0.025;
  double t_store = 12.5;  // ms
  double ca_eq = 100.0;   // nM
  // Effective compartment volume. The current-to-concentration conversion is
  // the one place dCa/dt touches absolute units; membrane capacitance is
  // taken as 1 pF so pA/pF currents convert directly.
  double volume_pl = 7.238;
  double faraday = 96485.33212;  // C/mol

  // nM/ms of calcium influx per pA/pF of inward calcium current.
  double flux_per_current() const { return 1.0e6 / (2.0 * faraday * volume_pl); }
};

/// Position of one dynamic gating variable in the state vector.
struct GateSlot {
  int channel = -1;       // index into ModelSpec::channels
  bool inactivation = false;
  std::string name;       // e.g. "m_Na"
  int state_index = -1;   // index into the state vector
};

/// A full neuron variant. State layout: [V, gates..., Ca].
struct ModelSpec {
  Variant variant = Variant::C;
  std::vector<ChannelDef> channels;
  CalciumParams calcium;
  std::vector<ChannelId> calcium_sources;
  // Gates forced to their steady-state value (quasi-steady-state reduction);
  // they drop out of the state vector.
  std::set<std::string> instantaneous;

  std::vector<GateSlot> gates;          // dynamic gates in state order
  std::vector<std::string> names;       // V, gates..., Ca

  void rebuild_layout();
  int dim() const { return static_cast<int>(names.size()); }
  int ca_index() const { return dim() - 1; }
  int index_of(const std::string& name) const;
  const ChannelDef& channel(ChannelId id) const;
  ChannelDef& channel(ChannelId id);
  bool has_channel(ChannelId id) const;

  ModelSpec with_blocks(const std::set<ChannelId>& blocked) const;
  ModelSpec with_instantaneous(const std::set<std::string>& gate_names) const;
};

ModelSpec build_model(Variant variant);

/// Membrane current of one channel, pA/pF. Gates are read from the state (or
/// evaluated at steady state when instantaneous).
double channel_current(const ModelSpec& m, int channel_index, const Vec& x);

void rhs(const ModelSpec& m, const Vec& x, double i_app, Vec& dx);
Vec rhs(const ModelSpec& m, const Vec& x, double i_app);
Mat jacobian(const ModelSpec& m, const Vec& x, double i_app);

/// Canonical initial condition: gates at steady state for v0, Ca at rest.
Vec initial_state(const ModelSpec& m, double v0 = -60.0);

/// Per-variable scale used for scaled norms (k_v for V, k_ca for Ca, 1 for gates).
Vec state_scales(const ModelSpec& m);

// --- Equilibrium scalar reduction -----------------------------------------
// At any equilibrium every gate sits at p_inf(V) and Ca at its balance value,
// so the whole system reduces to one equation in V. Used as an independent
// oracle for the multidimensional Newton solves.

/// Ca value solving dCa/dt = 0 with gates at steady state for the given V.
double ca_balance(const ModelSpec& m, double v);

/// State with all gates at p_inf(v) and Ca at ca_balance(v).
Vec steady_state_at(const ModelSpec& m, double v);

/// dV/dt evaluated on the reduced manifold (gates and Ca slaved to V).
double scalar_reduction_residual(const ModelSpec& m, double v, double i_app);

/// Roots of the scalar reduction over a voltage bracket (dense scan + bisection).
std::vector<double> scalar_reduction_roots(const ModelSpec& m, double i_app,
                                           double v_lo = -120.0, double v_hi = 20.0,
                                           double step = 0.01);

}  // namespace ppn
