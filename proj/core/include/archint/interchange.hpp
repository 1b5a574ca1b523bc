#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "archint/model.hpp"

/// JSON interchange form for every model type. Objects are written with
/// sorted keys and without insignificant whitespace (`canonical`), so equal
/// values always produce byte-equal text. Optional members are omitted when
/// absent.
namespace archint {

using json = nlohmann::json;

void to_json(json& j, const Country& v);
void from_json(const json& j, Country& v);
void to_json(json& j, const Repository& v);
void from_json(const json& j, Repository& v);
void to_json(json& j, const DateRange& v);
void from_json(const json& j, DateRange& v);
void to_json(json& j, const AccessPoint& v);
void from_json(const json& j, AccessPoint& v);
void to_json(json& j, const Description& v);
void from_json(const json& j, Description& v);
void to_json(json& j, const DocumentaryUnit& v);
void from_json(const json& j, DocumentaryUnit& v);
void to_json(json& j, const Vocabulary& v);
void from_json(const json& j, Vocabulary& v);
void to_json(json& j, const Concept& v);
void from_json(const json& j, Concept& v);
void to_json(json& j, const HistoricalAgent& v);
void from_json(const json& j, HistoricalAgent& v);
void to_json(json& j, const Link& v);
void from_json(const json& j, Link& v);
void to_json(json& j, const RecordField& v);
void from_json(const json& j, RecordField& v);
void to_json(json& j, const Record& v);
void from_json(const json& j, Record& v);

std::string canonical(const json& j);

std::string canonical_records(const std::vector<Record>& forest);
std::vector<Record> records_from_canonical(const std::string& text);

/// SHA-256 of the canonical unit with `sibling_index` removed; this is the
/// value stored in sync manifests.
std::string unit_content_digest(const DocumentaryUnit& unit);
/// SHA-256 of the complete canonical unit.
std::string unit_full_digest(const DocumentaryUnit& unit);

}  // namespace archint
