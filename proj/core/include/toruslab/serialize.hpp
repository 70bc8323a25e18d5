#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

namespace toruslab {

/// printf "%.17g"; round-trips any double.
std::string fmt17(double v);

/// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view bytes);
std::string hex64(std::uint64_t v);

/// Hash of the canonical (sorted-key, compact) dump of a JSON value.
std::string json_hash(const nlohmann::json& j);

std::string read_file(const std::filesystem::path& path);
nlohmann::json read_json(const std::filesystem::path& path);

/// Writes through a temporary sibling and renames into place.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

}  // namespace toruslab
