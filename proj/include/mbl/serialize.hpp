#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include <json.hpp>

#include "mbl/agent.hpp"
#include "mbl/geometry.hpp"
#include "mbl/instances.hpp"

namespace mbl {

/// printf("%.<digits>g"); non-finite values become "inf", "-inf" or "nan".
std::string format_number(double value, int digits);

/// Instance as JSON with every number written to 17 significant digits.
std::string instance_to_json(const Instance& instance);
Instance instance_from_json(const std::string& text);

void write_instance(const std::filesystem::path& path, const Instance& instance);
Instance read_instance(const std::filesystem::path& path);

/// One JSON object per round, then a summary object.
void write_trace_jsonl(std::ostream& out, const Instance& instance, const Trace& trace);

/// Debug dump of a confidence state (t, epsilon, gram, xy, history).
nlohmann::json state_to_json(const ConfidenceState& state);
ConfidenceState state_from_json(const nlohmann::json& j);

}  // namespace mbl
