#include "ppn/io_util.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace ppn {

using nlohmann::json;

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

void write_trace_csv(const Trace& tr, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ModelError("cannot write " + path);
  out << "t";
  for (size_t i = 1; i < tr.names.size(); ++i) out << "," << tr.names[i];
  out << ",I_app\n";
  // column 0 of names is V; states carry [V, gates..., Ca]
  for (size_t r = 0; r < tr.times.size(); ++r) {
    out << format_double(tr.times[r]);
    out << "," << format_double(tr.states[r][0]);
    for (int c = 1; c < tr.states[r].size(); ++c) out << "," << format_double(tr.states[r][c]);
    out << "," << format_double(tr.applied[r]) << "\n";
  }
}

json trace_events_json(const Trace& tr) {
  json ev = json::array();
  for (const auto& e : tr.events)
    ev.push_back({{"time", e.time}, {"kind", to_string(e.kind)}, {"value", e.value}});
  return ev;
}

void write_trace_json(const Trace& tr, const std::string& path) {
  json j;
  j["names"] = tr.names;
  j["events"] = trace_events_json(tr);
  j["times"] = tr.times;
  json rows = json::array();
  for (const auto& s : tr.states) {
    json row = json::array();
    for (int i = 0; i < s.size(); ++i) row.push_back(s[i]);
    rows.push_back(row);
  }
  j["states"] = rows;
  j["applied"] = tr.applied;
  if (tr.failure) j["failure"] = {{"time", tr.failure->time}, {"reason", tr.failure->reason}};
  std::ofstream out(path);
  if (!out) throw ModelError("cannot write " + path);
  out << j.dump(2) << "\n";
}

json to_json(const Protocol& p) {
  json segs = json::array();
  for (const auto& s : p.segments) {
    json js{{"name", s.name}, {"t_start", s.t_start}, {"t_end", s.t_end}};
    if (s.is_ramp) {
      js["shape"] = "ramp";
      js["slope"] = s.slope;
      js["offset"] = s.offset;
    } else {
      js["shape"] = "step";
      js["level"] = s.level;
    }
    segs.push_back(js);
  }
  json blocks = json::array();
  for (ChannelId id : p.channel_blocks) blocks.push_back(to_string(id));
  json j{{"name", p.name},
         {"kind", to_string(p.kind)},
         {"variant", to_string(p.variant)},
         {"holding_current", p.holding_current},
         {"total_duration", p.total_duration},
         {"segments", segs},
         {"channel_blocks", blocks},
         {"holding_policy", p.holding_policy == HoldingPolicy::Equilibrium ? "equilibrium" : "attractor"},
         {"spike_threshold", p.spike_threshold},
         {"refractory", p.refractory},
         {"peak_prominence", p.peak_prominence}};
  if (!p.notes.empty()) j["notes"] = p.notes;
  return j;
}

static ProtocolKind kind_from_string(const std::string& s) {
  if (s == "Ramp") return ProtocolKind::Ramp;
  if (s == "SDP") return ProtocolKind::SDP;
  if (s == "Delay") return ProtocolKind::Delay;
  if (s == "PIR") return ProtocolKind::PIR;
  if (s == "PIF") return ProtocolKind::PIF;
  if (s == "Custom") return ProtocolKind::Custom;
  throw ModelError("unknown protocol kind: " + s);
}

Protocol protocol_from_json(const json& j) {
  Protocol p;
  p.name = j.at("name").get<std::string>();
  p.kind = kind_from_string(j.value("kind", "Custom"));
  p.variant = variant_from_string(j.at("variant").get<std::string>());
  p.holding_current = j.at("holding_current").get<double>();
  p.total_duration = j.at("total_duration").get<double>();
  for (const auto& js : j.at("segments")) {
    Segment s;
    s.name = js.at("name").get<std::string>();
    s.t_start = js.at("t_start").get<double>();
    s.t_end = js.at("t_end").get<double>();
    s.is_ramp = js.at("shape").get<std::string>() == "ramp";
    if (s.is_ramp) {
      s.slope = js.at("slope").get<double>();
      s.offset = js.value("offset", 0.0);
    } else {
      s.level = js.at("level").get<double>();
    }
    p.segments.push_back(s);
  }
  for (const auto& b : j.value("channel_blocks", json::array()))
    p.channel_blocks.insert(channel_from_string(b.get<std::string>()));
  p.holding_policy = j.value("holding_policy", std::string("attractor")) == "equilibrium"
                         ? HoldingPolicy::Equilibrium
                         : HoldingPolicy::Attractor;
  p.spike_threshold = j.value("spike_threshold", -20.0);
  p.refractory = j.value("refractory", 2.0);
  p.peak_prominence = j.value("peak_prominence", 5.0);
  p.notes = j.value("notes", std::string());
  p.validate();
  return p;
}

Protocol load_protocol_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ModelError("cannot open protocol file: " + path);
  json j;
  in >> j;
  return protocol_from_json(j);
}

void save_protocol_file(const Protocol& p, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ModelError("cannot write protocol file: " + path);
  out << to_json(p).dump(2) << "\n";
}

namespace {
std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, sep)) parts.push_back(tok);
  return parts;
}
}  // namespace

void apply_protocol_override(Protocol& p, const std::string& key, double value) {
  const auto parts = split(key, '.');
  if (parts.size() == 1) {
    if (key == "holding_current") {
      p.holding_current = value;
      return;
    }
    if (key == "total_duration") {
      p.total_duration = value;
      return;
    }
    if (key == "spike_threshold") {
      p.spike_threshold = value;
      return;
    }
    if (key == "refractory") {
      p.refractory = value;
      return;
    }
    if (key == "peak_prominence") {
      p.peak_prominence = value;
      return;
    }
  } else if (parts.size() == 3 && parts[0] == "segments") {
    Segment* s = p.segment(parts[1]);
    if (!s) throw ModelError("no segment named " + parts[1]);
    const std::string& f = parts[2];
    if (f == "level") {
      s->level = value;
      return;
    }
    if (f == "t_start") {
      s->t_start = value;
      return;
    }
    if (f == "t_end") {
      s->t_end = value;
      return;
    }
    if (f == "duration") {
      s->t_end = s->t_start + value;
      return;
    }
    if (f == "slope") {
      s->slope = value;
      return;
    }
    if (f == "offset") {
      s->offset = value;
      return;
    }
  }
  throw ModelError("unknown protocol override key: " + key);
}

void apply_model_override(ModelSpec& m, const std::string& key, double value) {
  const auto parts = split(key, '.');
  if (parts.size() == 2 && parts[0] == "calcium") {
    const std::string& f = parts[1];
    if (f == "f_ca") {
      m.calcium.f_ca = value;
      return;
    }
    if (f == "t_store") {
      m.calcium.t_store = value;
      return;
    }
    if (f == "ca_eq") {
      m.calcium.ca_eq = value;
      return;
    }
    if (f == "volume_pl") {
      m.calcium.volume_pl = value;
      return;
    }
  } else if (parts.size() >= 3 && parts[0] == "channels") {
    ChannelDef& ch = m.channel(channel_from_string(parts[1]));
    if (parts.size() == 3) {
      if (parts[2] == "g") {
        if (value < 0) throw ModelError("negative conductance");
        ch.g = value;
        return;
      }
      if (parts[2] == "E") {
        ch.E = value;
        return;
      }
      if (parts[2] == "kca_affinity") {
        ch.kca_affinity = value;
        return;
      }
    } else if (parts.size() == 4) {
      GateKinetics* k = nullptr;
      if (parts[2] == "activation" && ch.activation) k = &*ch.activation;
      if (parts[2] == "inactivation" && ch.inactivation) k = &*ch.inactivation;
      if (k) {
        const std::string& f = parts[3];
        if (f == "p_half") {
          k->p_half = value;
          return;
        }
        if (f == "k_p") {
          k->k_p = value;
          return;
        }
        if (f == "t0") {
          k->t0 = value;
          return;
        }
        if (f == "t1") {
          k->t1 = value;
          return;
        }
        if (f == "theta") {
          k->theta = value;
          return;
        }
        if (f == "sigma0") {
          k->sigma0 = value;
          return;
        }
        if (f == "sigma1") {
          k->sigma1 = value;
          return;
        }
        if (f == "exponent") {
          k->exponent = static_cast<int>(value);
          return;
        }
      }
    }
  }
  throw ModelError("unknown model override key: " + key);
}

uint64_t fnv1a(const std::string& s) {
  uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string hash_hex(const std::string& s) {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%016" PRIx64, fnv1a(s));
  return buf;
}

void append_results_row(const std::filesystem::path& csv_path, const std::string& protocol,
                        const std::string& variant, const std::string& overrides_hash,
                        const std::map<std::string, double>& metrics) {
  const bool existed = std::filesystem::exists(csv_path);
  std::ofstream out(csv_path, std::ios::app);
  if (!out) throw ModelError("cannot append to " + csv_path.string());
  if (!existed) out << "protocol,variant,overrides_hash,metrics\n";
  out << protocol << "," << variant << "," << overrides_hash << ",\"";
  bool first = true;
  for (const auto& [k, v] : metrics) {
    if (!first) out << ";";
    out << k << "=" << format_double(v);
    first = false;
  }
  out << "\"\n";
}

void write_manifest(const Manifest& m, const std::filesystem::path& dir) {
  json j;
  j["schema"] = "ppn-manifest/1";
  j["tool_version"] = "1.0.0";
  j["command"] = m.command;
  j["config"] = m.config;
  j["config_hash"] = hash_hex(m.config.dump());
  j["outputs"] = m.outputs;
  std::ofstream out(dir / "manifest.json");
  if (!out) throw ModelError("cannot write manifest in " + dir.string());
  out << j.dump(2) << "\n";
}

}  // namespace ppn
