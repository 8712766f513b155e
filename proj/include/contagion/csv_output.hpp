#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "contagion/hjb_solver.hpp"

namespace contagion {

inline constexpr const char* kCsvVersion = "0.1.0";

/// "# contagion-hjb v<version>" followed by a newline.
void write_csv_banner(std::ostream& out);

/// Columns t, regime, z_bitmask, phi; rows ordered by state, regime, node.
void write_phi_csv(std::ostream& out, const ValueSurface& value);

/// Columns t, regime, z_bitmask, pi_1..pi_n, l; same row order as phi.csv.
void write_policy_csv(std::ostream& out, const PolicySurface& policy);

/// Shortest round-trip decimal representation.
std::string format_number(double v);

/// Writes `contents` to `path`, creating parent directories; IoError on failure.
void write_file(const std::filesystem::path& path, const std::string& contents);

}  // namespace contagion
