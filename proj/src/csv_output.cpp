#include "contagion/csv_output.hpp"

#include <fstream>
#include <ostream>

#include <fmt/format.h>

#include "contagion/errors.hpp"

namespace contagion {

std::string format_number(double v) { return fmt::format("{}", v); }

void write_csv_banner(std::ostream& out) { out << "# contagion-hjb v" << kCsvVersion << '\n'; }

void write_phi_csv(std::ostream& out, const ValueSurface& value) {
    write_csv_banner(out);
    out << "t,regime,z_bitmask,phi\n";
    const auto& grid = value.grid();
    const std::size_t states = std::size_t{1} << value.n_stocks();
    for (std::size_t s = 0; s < states; ++s) {
        const DefaultState z(value.n_stocks(), static_cast<std::uint32_t>(s));
        for (std::size_t i = 0; i < value.n_regimes(); ++i) {
            for (std::size_t k = 0; k < grid.nodes(); ++k) {
                out << fmt::format("{},{},{},{}\n", grid.time(k), i + 1, s, value(k, i, z));
            }
        }
    }
}

void write_policy_csv(std::ostream& out, const PolicySurface& policy) {
    write_csv_banner(out);
    out << "t,regime,z_bitmask";
    for (std::size_t j = 0; j < policy.n_stocks(); ++j) out << ",pi_" << j + 1;
    out << ",l\n";
    const auto& grid = policy.grid();
    const std::size_t states = std::size_t{1} << policy.n_stocks();
    std::string line;
    for (std::size_t s = 0; s < states; ++s) {
        const DefaultState z(policy.n_stocks(), static_cast<std::uint32_t>(s));
        for (std::size_t i = 0; i < policy.n_regimes(); ++i) {
            for (std::size_t k = 0; k < grid.nodes(); ++k) {
                line = fmt::format("{},{},{}", grid.time(k), i + 1, s);
                for (std::size_t j = 0; j < policy.n_stocks(); ++j) line += fmt::format(",{}", policy.pi(k, i, z, j));
                line += fmt::format(",{}\n", policy.l(k, i, z));
                out << line;
            }
        }
    }
}

void write_file(const std::filesystem::path& path, const std::string& contents) {
    std::error_code ec;
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << contents;
    out.flush();
    if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace contagion
