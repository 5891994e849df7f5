#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace srn {

std::string read_file(const std::filesystem::path& path);

/// Writes to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

std::uint32_t crc32_of(std::string_view bytes);

}  // namespace srn
