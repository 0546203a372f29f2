#include "ppn/model_json.hpp"

#include <fstream>

namespace ppn {

using nlohmann::json;

json to_json(const GateKinetics& k) {
  return json{{"p_half", k.p_half},   {"k_p", k.k_p},       {"t0", k.t0},
              {"t1", k.t1},           {"theta", k.theta},   {"sigma0", k.sigma0},
              {"sigma1", k.sigma1},   {"exponent", k.exponent}};
}

GateKinetics gate_from_json(const json& j) {
  GateKinetics k;
  k.p_half = j.at("p_half").get<double>();
  k.k_p = j.at("k_p").get<double>();
  k.t0 = j.at("t0").get<double>();
  k.t1 = j.at("t1").get<double>();
  k.theta = j.at("theta").get<double>();
  k.sigma0 = j.at("sigma0").get<double>();
  k.sigma1 = j.at("sigma1").get<double>();
  k.exponent = j.value("exponent", 1);
  if (k.t0 < 0 || k.t1 < 0) throw ModelError("gate time constants must be nonnegative");
  if (k.exponent < 1) throw ModelError("gate exponent must be a positive integer");
  return k;
}

json to_json(const ModelSpec& m) {
  json channels = json::array();
  for (const auto& ch : m.channels) {
    json c{{"name", to_string(ch.id)}, {"g", ch.g}, {"E", ch.E}};
    if (ch.activation) c["activation"] = to_json(*ch.activation);
    if (ch.inactivation) c["inactivation"] = to_json(*ch.inactivation);
    if (ch.id == ChannelId::KCa) c["kca_affinity"] = ch.kca_affinity;
    channels.push_back(c);
  }
  json sources = json::array();
  for (ChannelId id : m.calcium_sources) sources.push_back(to_string(id));
  return json{{"variant", to_string(m.variant)},
              {"channels", channels},
              {"calcium",
               {{"f_ca", m.calcium.f_ca},
                {"t_store", m.calcium.t_store},
                {"ca_eq", m.calcium.ca_eq},
                {"volume_pl", m.calcium.volume_pl},
                {"faraday", m.calcium.faraday}}},
              {"calcium_sources", sources}};
}

ModelSpec model_from_json(const json& j) {
  ModelSpec m;
  m.variant = variant_from_string(j.at("variant").get<std::string>());
  for (const auto& c : j.at("channels")) {
    ChannelDef ch;
    ch.id = channel_from_string(c.at("name").get<std::string>());
    ch.g = c.at("g").get<double>();
    ch.E = c.at("E").get<double>();
    if (ch.g < 0) throw ModelError("negative conductance for " + to_string(ch.id));
    if (c.contains("activation")) ch.activation = gate_from_json(c["activation"]);
    if (c.contains("inactivation")) ch.inactivation = gate_from_json(c["inactivation"]);
    if (c.contains("kca_affinity")) ch.kca_affinity = c["kca_affinity"].get<double>();
    if (ch.id == ChannelId::L && (ch.activation || ch.inactivation))
      throw ModelError("leak channel must not carry gates");
    if (ch.id == ChannelId::KCa && ch.kca_affinity <= 0)
      throw ModelError("KCa channel requires a positive affinity constant");
    m.channels.push_back(ch);
  }
  const auto& cal = j.at("calcium");
  m.calcium.f_ca = cal.at("f_ca").get<double>();
  m.calcium.t_store = cal.at("t_store").get<double>();
  m.calcium.ca_eq = cal.at("ca_eq").get<double>();
  m.calcium.volume_pl = cal.at("volume_pl").get<double>();
  m.calcium.faraday = cal.value("faraday", 96485.33212);
  for (const auto& s : j.at("calcium_sources"))
    m.calcium_sources.push_back(channel_from_string(s.get<std::string>()));
  m.rebuild_layout();
  return m;
}

ModelSpec load_model_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ModelError("cannot open model file: " + path);
  json j;
  in >> j;
  return model_from_json(j);
}

void save_model_file(const ModelSpec& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ModelError("cannot write model file: " + path);
  out << to_json(m).dump(2) << "\n";
}

}  // namespace ppn
