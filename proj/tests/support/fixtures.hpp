#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "contagion/model.hpp"

namespace contagion::testing {

inline std::string source_path(const std::string& rel) { return std::string(CONTAGION_SOURCE_DIR) + "/" + rel; }

/// The bundled two-stock, two-regime benchmark, built in code so tests do not
/// depend on the config reader.
ModelParams table1_params();

/// Single-regime, single-stock model with tiny intensities.
ModelParams scalar_params(double rate, double excess, double vol, double h, double nu);

/// Random valid model with n stocks and m regimes.
ModelParams random_params(std::mt19937_64& rng, std::size_t n, std::size_t m);

/// Straightforward re-implementation of the inner objective
///   sum_j (1 - pi_j)^gamma h_j phi_next_j + x H((pi, l), i, z)
/// over a full n-vector pi (defaulted entries ignored). Returns -inf outside
/// the admissible box.
double reference_objective(const ModelParams& p, std::size_t regime, DefaultState z, double x,
                           const std::vector<double>& phi_next, const std::vector<double>& pi, double l);

/// Golden-section maximum of a unimodal function on [a, b].
struct ScalarMax {
    double arg;
    double value;
};
ScalarMax golden_section_max(const std::function<double(double)>& f, double a, double b, double tol = 1e-12);

/// Dense grid search with zoom refinement over the survivors' pi in
/// [lo, 1] and l in [0, 1/g]. If the optimum sits on the lower pi edge, the
/// box is widened and the search restarted.
struct GridMax {
    std::vector<double> pi;  // n entries
    double l;
    double value;
};
GridMax grid_oracle(const ModelParams& p, std::size_t regime, DefaultState z, double x,
                    const std::vector<double>& phi_next, double lo = -5.0);

}  // namespace contagion::testing
