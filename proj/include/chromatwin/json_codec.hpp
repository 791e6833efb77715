#pragma once

#include "chromatwin/acquisition.hpp"
#include "chromatwin/store.hpp"

#include <json.hpp>

namespace chromatwin {

// Wire forms shared by the log file, the service and the CLI. Record field
// names mirror the CSV header.
nlohmann::json record_to_json(const ExperimentRecord& r);
ExperimentRecord record_from_json(const nlohmann::json& j);

// Parses a client submission: drop counts, r/g/b and optional metadata.
// Any id or timestamp in the body is ignored.
NewRecord new_record_from_json(const nlohmann::json& j);

nlohmann::json filter_to_json(const RecordFilter& f);
RecordFilter filter_from_json(const nlohmann::json& j);

nlohmann::json suggestion_to_json(const SuggestionPair& s);
SuggestionPair suggestion_from_json(const nlohmann::json& j);

} // namespace chromatwin
