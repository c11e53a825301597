#pragma once

// Mask container internals shared by the volume and interslice modules.

#include <filesystem>

#include <json.hpp>

#include "lineamorph/volume.hpp"

namespace lineamorph::detail {

struct LoadedContainer {
    VoxelMask mask;
    nlohmann::json header;  // full header, including optional extension keys
};

LoadedContainer load_container(const std::filesystem::path& header_path);

/// `extra` keys are merged into the header; required keys always win.
void save_container(const VoxelMask& mask, const std::filesystem::path& header_path,
                    const nlohmann::json& extra = nlohmann::json::object());

/// Parses JSON rejecting duplicate keys at any depth. Throws MalformedHeader.
nlohmann::json parse_strict_json(const std::string& text, const std::string& what);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace lineamorph::detail
