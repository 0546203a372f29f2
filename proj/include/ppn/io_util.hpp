#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "ppn/integrate.hpp"
#include "ppn/protocol.hpp"

namespace ppn {

/// Fixed column order: t, V, m_Na, h_Na, m_K, m_CaPQ, m_A, h_A, m_CaT, h_CaT,
/// Ca, I_app — variables absent from the variant are omitted.
void write_trace_csv(const Trace& tr, const std::string& path);
nlohmann::json trace_events_json(const Trace& tr);
void write_trace_json(const Trace& tr, const std::string& path);

nlohmann::json to_json(const Protocol& p);
Protocol protocol_from_json(const nlohmann::json& j);
Protocol load_protocol_file(const std::string& path);
void save_protocol_file(const Protocol& p, const std::string& path);

/// Dotted-path overrides applied to a protocol ("holding_current",
/// "segments.<name>.level|t_start|t_end|duration|slope|offset",
/// "spike_threshold", "total_duration").
void apply_protocol_override(Protocol& p, const std::string& key, double value);

/// Model overrides ("channels.<Name>.g|E", "channels.<Name>.activation.<field>",
/// "calcium.<field>").
void apply_model_override(ModelSpec& m, const std::string& key, double value);

uint64_t fnv1a(const std::string& s);
std::string hash_hex(const std::string& s);

/// Append one row to the results ledger (header written on creation).
void append_results_row(const std::filesystem::path& csv_path, const std::string& protocol,
                        const std::string& variant, const std::string& overrides_hash,
                        const std::map<std::string, double>& metrics);

struct Manifest {
  std::string command;
  nlohmann::json config;
  std::vector<std::string> outputs;
};
void write_manifest(const Manifest& m, const std::filesystem::path& dir);

std::string format_double(double v);

}  // namespace ppn
