#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "contagion/hjb_solver.hpp"
#include "contagion/model.hpp"

namespace contagion {

/// Parameter addressed by a sweep, e.g. "h[stock=1][z=(0,1)][regime=2]".
///
/// Kinds h, nu, p, r, mu, c, g and gamma set the addressed coefficient to the
/// sweep value. sigma_scale and Q_scale multiply the base sigma(i) (all regimes
/// unless one is given) or the generator by it.
struct SweepTarget {
    enum class Kind { h, nu, p, r, mu, c, g, gamma, sigma_scale, q_scale };
    Kind kind = Kind::h;
    std::optional<std::size_t> stock;   // 0-based
    std::optional<std::size_t> regime;  // 0-based
    std::optional<DefaultState> state;
    std::string text;
};

/// A solver output read at one grid time.
struct Observable {
    enum class Quantity { phi, pi_star, l_star, phi_gap, stock_share };
    Quantity quantity = Quantity::phi;
    std::size_t stock = 0;     // pi_star only, 0-based
    std::size_t regime = 0;    // 0-based; first regime of phi_gap
    std::size_t regime_b = 1;  // second regime of phi_gap
    double t = 0.0;
    DefaultState state;
    std::string label;  // CSV column name
};

struct SweepSpec {
    SweepTarget target;
    std::vector<double> values;
    std::vector<Observable> observables;
};

struct SweepResult {
    std::vector<double> values;
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;  // rows[v][observable]
};

SweepTarget parse_sweep_target(const std::string& text, const ModelParams& base);

/// Parses a sweep spec (YAML) and checks its indices against `base`.
/// Observables may list several times or states; each combination becomes
/// one column.
SweepSpec parse_sweep_spec(const std::string& text, const ModelParams& base, const TimeGrid& grid);

/// Copy of `base` with the target set (or scaled) to `value`; not validated.
ModelParams apply_sweep_value(const ModelParams& base, const SweepTarget& target, double value);

double evaluate_observable(const Solution& solution, const Observable& obs);

/// One validated cold solve per value, run on up to `threads` workers; rows
/// follow the order of `spec.values`.
SweepResult run_sweep(const ModelParams& base, const SweepSpec& spec, const TimeGrid& grid, std::size_t threads,
                      const OptimizerOptions& optimizer = {});

/// Banner, then sweep_value followed by one column per observable.
void write_sweep_csv(std::ostream& out, const SweepResult& result);

}  // namespace contagion
