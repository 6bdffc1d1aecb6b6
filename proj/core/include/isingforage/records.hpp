#pragma once

#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "isingforage/environment.hpp"
#include "isingforage/evolution.hpp"

namespace isingforage {

inline constexpr int kSchemaVersion = 1;

/// One JSONL line of a generation log. Unmeasured deltas are written as null.
nlohmann::json to_json(const GenerationRecord& record);
GenerationRecord generation_record_from_json(const nlohmann::json& doc);

/// One JSONL line of a lifetime trace.
nlohmann::json to_json(const TraceRecord& record);
TraceRecord trace_record_from_json(const nlohmann::json& doc);

/// Reads every non-empty line of a JSONL file. Throws std::runtime_error on
/// I/O failure and std::invalid_argument on malformed content or a
/// schema_version mismatch.
std::vector<nlohmann::json> read_jsonl(const std::string& path);

/// Shortest round-trip decimal representation.
std::string format_double(double v);

}  // namespace isingforage
