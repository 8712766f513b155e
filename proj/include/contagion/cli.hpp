#pragma once

#include <iosfwd>

namespace contagion {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitNumerical = 2;
inline constexpr int kExitIo = 3;

/// Entry point of the contagion-hjb command line (validate | solve | sweep | simulate).
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace contagion
