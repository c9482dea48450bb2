#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "nnm/graph.hpp"

namespace nnm {

/// Lossless JSON form of a map, topic texts included:
/// `{"schema_version":1,"graph":{...}}`.
std::string map_document_json(const MapGraph& graph);

/// Accepts a map document or a session document (anything with a "graph"
/// member). Throws FormatError on schema violations.
MapGraph parse_map_document(std::string_view json);

/// Reads a map from disk: `.gml` files go through import_gml, everything else
/// through parse_map_document. Throws NotFound when the file is unreadable.
MapGraph load_map_file(const std::filesystem::path& path);

std::string read_text_file(const std::filesystem::path& path);
/// Writes through a temporary file and renames it into place.
void write_text_file(const std::filesystem::path& path, std::string_view text);

} // namespace nnm
