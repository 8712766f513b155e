#pragma once

#include <filesystem>
#include <string>

#include "contagion/model.hpp"

namespace contagion {

/// Parses a model config (YAML text). Structural problems and missing keys
/// raise ValidationError naming the key; the result is not yet validated.
ModelParams parse_config(const std::string& text);

/// Reads and parses a config file. A missing or unreadable file raises IoError.
ModelParams load_config(const std::filesystem::path& path);

/// Reads a whole text file; IoError on failure.
std::string read_text_file(const std::filesystem::path& path);

}  // namespace contagion
