#pragma once

// JSON shapes shared by the newline-delimited files, the CLI and the HTTP API.

#include <nlohmann/json.hpp>

#include "r0scope/analytics.hpp"
#include "r0scope/extraction.hpp"
#include "r0scope/ingest.hpp"
#include "r0scope/normalize.hpp"
#include "r0scope/store.hpp"

namespace r0scope {

void to_json(nlohmann::json& j, const PaperRecord& p);
void from_json(const nlohmann::json& j, PaperRecord& p);

void to_json(nlohmann::json& j, const RawSummary& s);
void from_json(const nlohmann::json& j, RawSummary& s);

void to_json(nlohmann::json& j, const ExtractorResponse& r);
void from_json(const nlohmann::json& j, ExtractorResponse& r);

void to_json(nlohmann::json& j, const ResolvedLocation& l);
void from_json(const nlohmann::json& j, ResolvedLocation& l);

void to_json(nlohmann::json& j, const ConfidenceInterval& ci);
void from_json(const nlohmann::json& j, ConfidenceInterval& ci);

void to_json(nlohmann::json& j, const StructuredSummary& s);
void from_json(const nlohmann::json& j, StructuredSummary& s);

void to_json(nlohmann::json& j, const StoredSummary& s);  // summary fields plus content_hash

void to_json(nlohmann::json& j, const RowError& e);
void to_json(nlohmann::json& j, const UpsertReport& r);

void to_json(nlohmann::json& j, const DiseaseMaxR0Row& r);
void to_json(nlohmann::json& j, const LocationStudyCountRow& r);
void to_json(nlohmann::json& j, const LocationR0RangeRow& r);
void to_json(nlohmann::json& j, const MapPoint& p);
void to_json(nlohmann::json& j, const StatsSnapshot& s);
void to_json(nlohmann::json& j, const DrilldownPaper& p);

// Reads newline-delimited JSON, skipping blank lines. Throws Error(Unparseable)
// naming the line on malformed input.
std::vector<nlohmann::json> read_ndjson(std::string_view text);

}  // namespace r0scope
