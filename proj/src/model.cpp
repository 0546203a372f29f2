#include "ppn/model.hpp"

#include <algorithm>
#include <cmath>

namespace ppn {

std::string to_string(Variant v) {
  switch (v) {
    case Variant::C: return "C";
    case Variant::CT: return "CT";
    case Variant::NC: return "NC";
  }
  return "?";
}

Variant variant_from_string(const std::string& s) {
  if (s == "C" || s == "c") return Variant::C;
  if (s == "CT" || s == "ct") return Variant::CT;
  if (s == "NC" || s == "nc") return Variant::NC;
  throw ModelError("unknown model variant: " + s);
}

std::string to_string(ChannelId c) {
  switch (c) {
    case ChannelId::Na: return "Na";
    case ChannelId::K: return "K";
    case ChannelId::L: return "L";
    case ChannelId::CaPQ: return "CaPQ";
    case ChannelId::KCa: return "KCa";
    case ChannelId::A: return "A";
    case ChannelId::CaT: return "CaT";
  }
  return "?";
}

ChannelId channel_from_string(const std::string& s) {
  if (s == "Na") return ChannelId::Na;
  if (s == "K") return ChannelId::K;
  if (s == "L") return ChannelId::L;
  if (s == "CaPQ") return ChannelId::CaPQ;
  if (s == "KCa") return ChannelId::KCa;
  if (s == "A") return ChannelId::A;
  if (s == "CaT") return ChannelId::CaT;
  throw ModelError("unknown channel: " + s);
}

static std::string gate_name(ChannelId ch, bool inact) {
  return (inact ? std::string("h_") : std::string("m_")) + to_string(ch);
}

void ModelSpec::rebuild_layout() {
  gates.clear();
  names.clear();
  names.push_back("V");
  for (int ci = 0; ci < static_cast<int>(channels.size()); ++ci) {
    const ChannelDef& ch = channels[ci];
    for (bool inact : {false, true}) {
      const auto& kin = inact ? ch.inactivation : ch.activation;
      if (!kin) continue;
      std::string nm = gate_name(ch.id, inact);
      if (instantaneous.count(nm)) continue;
      GateSlot slot;
      slot.channel = ci;
      slot.inactivation = inact;
      slot.name = nm;
      slot.state_index = static_cast<int>(names.size());
      names.push_back(nm);
      gates.push_back(slot);
    }
  }
  names.push_back("Ca");
}

int ModelSpec::index_of(const std::string& name) const {
  for (int i = 0; i < static_cast<int>(names.size()); ++i)
    if (names[i] == name) return i;
  throw ModelError("no state variable named " + name + " in " + to_string(variant) + " model");
}

const ChannelDef& ModelSpec::channel(ChannelId id) const {
  for (const auto& ch : channels)
    if (ch.id == id) return ch;
  throw ModelError("channel " + to_string(id) + " absent from " + to_string(variant) + " model");
}

ChannelDef& ModelSpec::channel(ChannelId id) {
  for (auto& ch : channels)
    if (ch.id == id) return ch;
  throw ModelError("channel " + to_string(id) + " absent from " + to_string(variant) + " model");
}

bool ModelSpec::has_channel(ChannelId id) const {
  for (const auto& ch : channels)
    if (ch.id == id) return true;
  return false;
}

ModelSpec ModelSpec::with_blocks(const std::set<ChannelId>& blocked) const {
  ModelSpec out = *this;
  for (ChannelId id : blocked) {
    if (!out.has_channel(id))
      throw ModelError("cannot block channel " + to_string(id) + ": absent from variant");
    out.channel(id).g = 0.0;
  }
  return out;
}

ModelSpec ModelSpec::with_instantaneous(const std::set<std::string>& gate_names) const {
  ModelSpec out = *this;
  out.instantaneous.insert(gate_names.begin(), gate_names.end());
  out.rebuild_layout();
  return out;
}

static double pick(Variant v, double c, double ct, double nc) {
  switch (v) {
    case Variant::C: return c;
    case Variant::CT: return ct;
    case Variant::NC: return nc;
  }
  return 0.0;
}

ModelSpec build_model(Variant variant) {
  ModelSpec m;
  m.variant = variant;

  const double e_na = 50.0, e_k = -87.0, e_l = -59.0, e_ca = 60.0;

  ChannelDef na;
  na.id = ChannelId::Na;
  na.g = pick(variant, 50.0, 50.0, 20.0);
  na.E = e_na;
  na.activation = GateKinetics{-32.5, 7.0, 0.05, 0.2, -12.0, 4.0, -10.0, 3};
  na.inactivation = GateKinetics{-63.0, -8.0, 0.7, 31.0, -48.0, 12.0, -6.0, 1};
  m.channels.push_back(na);

  ChannelDef k;
  k.id = ChannelId::K;
  k.g = pick(variant, 40.0, 40.0, 0.9);
  k.E = e_k;
  k.activation = GateKinetics{-32.0, 10.0, 0.3, 13.0, -38.0, 19.0, -16.0, 4};
  m.channels.push_back(k);

  ChannelDef leak;
  leak.id = ChannelId::L;
  leak.g = pick(variant, 0.1, 0.1, 0.07);
  leak.E = e_l;
  m.channels.push_back(leak);

  ChannelDef capq;
  capq.id = ChannelId::CaPQ;
  capq.g = pick(variant, 0.35, 0.35, 0.21);
  capq.E = e_ca;
  capq.activation = GateKinetics{-23.0, 5.5, 1.0, 1.0, 1.0, 1.0, 1.0, 1};
  m.channels.push_back(capq);

  ChannelDef kca;
  kca.id = ChannelId::KCa;
  kca.g = pick(variant, 0.5, 0.6, 0.5);
  kca.E = e_k;
  kca.kca_affinity = 400.0;
  m.channels.push_back(kca);

  if (variant != Variant::NC) {
    ChannelDef a;
    a.id = ChannelId::A;
    a.g = pick(variant, 4.0, 9.0, 0.0);
    a.E = e_k;
    a.activation = GateKinetics{-16.5, 5.14, 0.0, 7.58, -79.0, 13.3, -40.3, 1};
    a.inactivation = GateKinetics{-75.7, -6.0, 0.0, 16.82, -104.0, 5.1, -255.0, 1};
    m.channels.push_back(a);
  }

  if (variant != Variant::C) {
    ChannelDef cat;
    cat.id = ChannelId::CaT;
    cat.g = pick(variant, 0.0, 4.0, 1.0);
    cat.E = e_ca;
    cat.activation = GateKinetics{-53.2, 6.4, 10.0, 10.0, 1.0, 1.0, 1.0, 2};
    cat.inactivation = GateKinetics{-76.8, -4.5, 125.0, 100.0, 1.0, 1.0, 1.0, 1};
    m.channels.push_back(cat);
  }

  m.calcium_sources = {ChannelId::CaPQ};
  if (variant != Variant::C) m.calcium_sources.push_back(ChannelId::CaT);

  m.rebuild_layout();
  return m;
}

namespace {

struct GateVal {
  double value = 1.0;
  int state_index = -1;  // -1 when instantaneous (value from p_inf)
  const GateKinetics* kin = nullptr;
};

// Fetch one gate's current value (state or steady-state).
GateVal gate_value(const ModelSpec& m, int channel_index, bool inact, const Vec& x) {
  const ChannelDef& ch = m.channels[channel_index];
  const auto& kin = inact ? ch.inactivation : ch.activation;
  GateVal gv;
  if (!kin) return gv;
  gv.kin = &*kin;
  for (const auto& slot : m.gates) {
    if (slot.channel == channel_index && slot.inactivation == inact) {
      gv.state_index = slot.state_index;
      gv.value = x[slot.state_index];
      return gv;
    }
  }
  gv.value = kin->steady(x[0]);  // instantaneous
  return gv;
}

double ipow(double base, int e) {
  double r = 1.0;
  for (int i = 0; i < e; ++i) r *= base;
  return r;
}

}  // namespace

double channel_current(const ModelSpec& m, int channel_index, const Vec& x) {
  const ChannelDef& ch = m.channels[channel_index];
  const double v = x[0];
  if (ch.id == ChannelId::KCa) {
    if (ch.kca_affinity <= 0.0) throw ModelError("KCa channel lacks affinity constant");
    return ch.g * kca_activation(x[m.ca_index()], ch.kca_affinity) * (v - ch.E);
  }
  double open = 1.0;
  if (ch.activation) {
    GateVal a = gate_value(m, channel_index, false, x);
    open *= ipow(a.value, ch.activation->exponent);
  }
  if (ch.inactivation) {
    GateVal h = gate_value(m, channel_index, true, x);
    open *= ipow(h.value, ch.inactivation->exponent);
  }
  return ch.g * open * (v - ch.E);
}

void rhs(const ModelSpec& m, const Vec& x, double i_app, Vec& dx) {
  const int n = m.dim();
  dx.resize(n);
  const double v = x[0];
  const double ca = x[m.ca_index()];
  const double kflux = m.calcium.flux_per_current();

  double i_total = 0.0, i_ca = 0.0;
  for (int ci = 0; ci < static_cast<int>(m.channels.size()); ++ci) {
    const double cur = channel_current(m, ci, x);
    i_total += cur;
    for (ChannelId src : m.calcium_sources)
      if (m.channels[ci].id == src) i_ca += cur;
  }
  dx[0] = -i_total + i_app;

  for (const auto& slot : m.gates) {
    const ChannelDef& ch = m.channels[slot.channel];
    const GateKinetics& kin = slot.inactivation ? *ch.inactivation : *ch.activation;
    dx[slot.state_index] = (kin.steady(v) - x[slot.state_index]) / kin.tau(v);
  }

  dx[m.ca_index()] = m.calcium.f_ca * (-i_ca * kflux - (ca - m.calcium.ca_eq) / m.calcium.t_store);
}

Vec rhs(const ModelSpec& m, const Vec& x, double i_app) {
  Vec dx;
  rhs(m, x, i_app, dx);
  return dx;
}

Mat jacobian(const ModelSpec& m, const Vec& x, double /*i_app*/) {
  const int n = m.dim();
  const int ica = m.ca_index();
  const double v = x[0];
  const double ca = x[ica];
  const double kflux = m.calcium.flux_per_current();
  Mat J = Mat::Zero(n, n);

  for (int ci = 0; ci < static_cast<int>(m.channels.size()); ++ci) {
    const ChannelDef& ch = m.channels[ci];
    bool is_ca_source = false;
    for (ChannelId src : m.calcium_sources)
      if (ch.id == src) is_ca_source = true;

    if (ch.id == ChannelId::KCa) {
      const double act = kca_activation(ca, ch.kca_affinity);
      J(0, 0) -= ch.g * act;
      J(0, ica) -= ch.g * kca_activation_dca(ca, ch.kca_affinity) * (v - ch.E);
      continue;
    }

    GateVal a, h;
    double open = 1.0;
    if (ch.activation) {
      a = gate_value(m, ci, false, x);
      open *= ipow(a.value, ch.activation->exponent);
    }
    if (ch.inactivation) {
      h = gate_value(m, ci, true, x);
      open *= ipow(h.value, ch.inactivation->exponent);
    }

    // d(open)/dV through instantaneous gates only
    double dopen_dv = 0.0;
    if (ch.activation && a.state_index < 0) {
      const int e = ch.activation->exponent;
      double rest = (ch.inactivation ? ipow(h.value, ch.inactivation->exponent) : 1.0);
      dopen_dv += e * ipow(a.value, e - 1) * a.kin->steady_dv(v) * rest;
    }
    if (ch.inactivation && h.state_index < 0) {
      const int e = ch.inactivation->exponent;
      double rest = (ch.activation ? ipow(a.value, ch.activation->exponent) : 1.0);
      dopen_dv += e * ipow(h.value, e - 1) * h.kin->steady_dv(v) * rest;
    }

    const double dI_dv = ch.g * (open + dopen_dv * (v - ch.E));
    J(0, 0) -= dI_dv;
    if (is_ca_source) J(ica, 0) -= m.calcium.f_ca * kflux * dI_dv;

    auto add_gate_partial = [&](const GateVal& gv, const GateKinetics& kin, const GateVal& other,
                                const GateKinetics* other_kin) {
      if (gv.state_index < 0) return;
      double dopen = kin.exponent * ipow(gv.value, kin.exponent - 1);
      if (other_kin) dopen *= ipow(other.value, other_kin->exponent);
      const double dI = ch.g * dopen * (v - ch.E);
      J(0, gv.state_index) -= dI;
      if (is_ca_source) J(ica, gv.state_index) -= m.calcium.f_ca * kflux * dI;
    };
    if (ch.activation)
      add_gate_partial(a, *ch.activation, h, ch.inactivation ? &*ch.inactivation : nullptr);
    if (ch.inactivation)
      add_gate_partial(h, *ch.inactivation, a, ch.activation ? &*ch.activation : nullptr);
  }

  for (const auto& slot : m.gates) {
    const ChannelDef& ch = m.channels[slot.channel];
    const GateKinetics& kin = slot.inactivation ? *ch.inactivation : *ch.activation;
    const double tau = kin.tau(v);
    const double p = x[slot.state_index];
    J(slot.state_index, 0) =
        kin.steady_dv(v) / tau - (kin.steady(v) - p) * kin.tau_dv(v) / (tau * tau);
    J(slot.state_index, slot.state_index) = -1.0 / tau;
  }

  J(ica, ica) += -m.calcium.f_ca / m.calcium.t_store;
  return J;
}

Vec initial_state(const ModelSpec& m, double v0) {
  Vec x(m.dim());
  x[0] = v0;
  for (const auto& slot : m.gates) {
    const ChannelDef& ch = m.channels[slot.channel];
    const GateKinetics& kin = slot.inactivation ? *ch.inactivation : *ch.activation;
    x[slot.state_index] = kin.steady(v0);
  }
  x[m.ca_index()] = m.calcium.ca_eq;
  x[m.ca_index()] = ca_balance(m, v0);
  return x;
}

Vec state_scales(const ModelSpec& m) {
  Vec s = Vec::Ones(m.dim());
  s[0] = 100.0;
  s[m.ca_index()] = 100.0;
  return s;
}

double ca_balance(const ModelSpec& m, double v) {
  // Ca currents do not depend on Ca, so the balance is explicit.
  Vec x = Vec::Zero(m.dim());
  x[0] = v;
  for (const auto& slot : m.gates) {
    const ChannelDef& ch = m.channels[slot.channel];
    const GateKinetics& kin = slot.inactivation ? *ch.inactivation : *ch.activation;
    x[slot.state_index] = kin.steady(v);
  }
  double i_ca = 0.0;
  for (int ci = 0; ci < static_cast<int>(m.channels.size()); ++ci)
    for (ChannelId src : m.calcium_sources)
      if (m.channels[ci].id == src) i_ca += channel_current(m, ci, x);
  return m.calcium.ca_eq - m.calcium.t_store * m.calcium.flux_per_current() * i_ca;
}

Vec steady_state_at(const ModelSpec& m, double v) {
  Vec x(m.dim());
  x[0] = v;
  for (const auto& slot : m.gates) {
    const ChannelDef& ch = m.channels[slot.channel];
    const GateKinetics& kin = slot.inactivation ? *ch.inactivation : *ch.activation;
    x[slot.state_index] = kin.steady(v);
  }
  x[m.ca_index()] = ca_balance(m, v);
  return x;
}

double scalar_reduction_residual(const ModelSpec& m, double v, double i_app) {
  Vec x = steady_state_at(m, v);
  double i_total = 0.0;
  for (int ci = 0; ci < static_cast<int>(m.channels.size()); ++ci)
    i_total += channel_current(m, ci, x);
  return -i_total + i_app;
}

std::vector<double> scalar_reduction_roots(const ModelSpec& m, double i_app, double v_lo,
                                           double v_hi, double step) {
  std::vector<double> roots;
  double prev_v = v_lo;
  double prev_f = scalar_reduction_residual(m, prev_v, i_app);
  for (double v = v_lo + step; v <= v_hi + 0.5 * step; v += step) {
    const double f = scalar_reduction_residual(m, v, i_app);
    if (prev_f == 0.0) roots.push_back(prev_v);
    if (prev_f * f < 0.0) {
      double a = prev_v, b = v, fa = prev_f;
      for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (a + b);
        const double fm = scalar_reduction_residual(m, mid, i_app);
        if (fa * fm <= 0.0) {
          b = mid;
        } else {
          a = mid;
          fa = fm;
        }
        if (b - a < 1e-13 * std::max(1.0, std::abs(a))) break;
      }
      roots.push_back(0.5 * (a + b));
    }
    prev_v = v;
    prev_f = f;
  }
  return roots;
}

}  // namespace ppn
