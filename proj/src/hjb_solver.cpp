#include "contagion/hjb_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>

#include "contagion/errors.hpp"
#include "contagion/parallel.hpp"

namespace contagion {

ValueSurface::ValueSurface(TimeGrid grid, std::size_t n_regimes, std::size_t n_stocks)
    : grid_(grid), m_(n_regimes), n_(n_stocks), data_(grid.nodes() * n_regimes * (std::size_t{1} << n_stocks), 0.0) {}

Vector ValueSurface::state_vector(std::size_t node, DefaultState z) const {
    Vector out(static_cast<Eigen::Index>(m_));
    for (std::size_t i = 0; i < m_; ++i) out(static_cast<Eigen::Index>(i)) = (*this)(node, i, z);
    return out;
}

void ValueSurface::set_state_vector(std::size_t node, DefaultState z, const Vector& values) {
    for (std::size_t i = 0; i < m_; ++i) at(node, i, z) = values(static_cast<Eigen::Index>(i));
}

PolicySurface::PolicySurface(TimeGrid grid, std::size_t n_regimes, std::size_t n_stocks)
    : grid_(grid),
      m_(n_regimes),
      n_(n_stocks),
      pi_(grid.nodes() * n_regimes * (std::size_t{1} << n_stocks) * n_stocks, 0.0),
      l_(grid.nodes() * n_regimes * (std::size_t{1} << n_stocks), 0.0) {}

PolicyPoint PolicySurface::point(std::size_t node, std::size_t regime, DefaultState z) const {
    PolicyPoint p;
    p.pi.resize(static_cast<Eigen::Index>(n_));
    const double* src = pi_data(node, regime, z);
    for (std::size_t j = 0; j < n_; ++j) p.pi(static_cast<Eigen::Index>(j)) = src[j];
    p.l = l(node, regime, z);
    return p;
}

void PolicySurface::set(std::size_t node, std::size_t regime, DefaultState z, const PolicyPoint& p) {
    const std::size_t base = offset(node, regime, z.index());
    for (std::size_t j = 0; j < n_; ++j) pi_[base * n_ + j] = p.pi(static_cast<Eigen::Index>(j));
    l_[base] = p.l;
}

Matrix build_A_terminal(const ModelParams& params) {
    Matrix a = params.generator;
    for (std::size_t i = 0; i < params.n_regimes; ++i) {
        const auto ii = static_cast<Eigen::Index>(i);
        a(ii, ii) += params.risk_aversion * params.regimes[i].rate + maximize_terminal(i, params).value;
    }
    return a;
}

Matrix build_A_general(const ModelParams& params, DefaultState z) {
    if (z.is_all_defaulted()) throw ValidationError("build_A_general: state " + z.to_string() + " is all-defaulted");
    Matrix a = params.generator;
    const auto surv = z.survivors();
    for (std::size_t i = 0; i < params.n_regimes; ++i) {
        const auto ii = static_cast<Eigen::Index>(i);
        double diag = params.risk_aversion * params.regimes[i].rate;
        for (std::size_t j : surv) diag -= params.intensity(i, z, j);
        a(ii, ii) += diag;
    }
    return a;
}

StateTrajectory solve_terminal_state(const ModelParams& params, const TimeGrid& grid) {
    const Matrix a = build_A_terminal(params);
    const auto m = static_cast<Eigen::Index>(params.n_regimes);
    const Vector terminal = Vector::Constant(m, 1.0 / params.risk_aversion);

    std::vector<PolicyPoint> optimum(params.n_regimes);
    for (std::size_t i = 0; i < params.n_regimes; ++i) {
        optimum[i].pi = Vector::Zero(static_cast<Eigen::Index>(params.n_stocks));
        optimum[i].l = maximize_terminal(i, params).l;
    }

    StateTrajectory out;
    out.value.resize(grid.nodes());
    out.derivative.resize(grid.nodes());
    out.policy.assign(grid.nodes(), optimum);
    for (std::size_t k = 0; k < grid.nodes(); ++k) {
        out.value[k] = numerics::expm(a, grid.horizon() - grid.time(k)) * terminal;
        out.derivative[k] = -a * out.value[k];
    }
    for (std::size_t k = 0; k < grid.nodes(); ++k) {
        if ((out.value[k].array() <= 0.0).any()) {
            throw NumericalError("terminal-state solution lost positivity at t = " + std::to_string(grid.time(k)));
        }
    }
    return out;
}

PsiFloor psi_floor(const ModelParams& params, DefaultState z, const TimeGrid& grid) {
    const Matrix a = build_A_general(params, z);
    const Vector start = Vector::Constant(static_cast<Eigen::Index>(params.n_regimes), 1.0 / params.risk_aversion);
    PsiFloor out;
    out.value.resize(grid.nodes());
    out.epsilon = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < grid.nodes(); ++k) {
        out.value[k] = numerics::expm(a, grid.horizon() - grid.time(k)) * start;
        out.epsilon = std::min(out.epsilon, out.value[k].minCoeff());
    }
    if (!(out.epsilon > 0.0)) {
        throw NumericalError("psi floor for state " + z.to_string() + " is not positive");
    }
    return out;
}

namespace {

// Cubic Hermite interpolation of a solved neighbour between grid nodes, using
// the stored nodal derivatives so the coupling keeps fourth-order accuracy.
double neighbour_value(const StateTrajectory& traj, const TimeGrid& grid, double t, Eigen::Index regime) {
    const std::size_t k = grid.left_node(t);
    const double h = grid.dt();
    const double s = std::clamp((t - grid.time(k)) / h, 0.0, 1.0);
    const double s2 = s * s;
    const double s3 = s2 * s;
    const double h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
    const double h10 = s3 - 2.0 * s2 + s;
    const double h01 = -2.0 * s3 + 3.0 * s2;
    const double h11 = s3 - s2;
    return h00 * traj.value[k](regime) + h10 * h * traj.derivative[k](regime) + h01 * traj.value[k + 1](regime) +
           h11 * h * traj.derivative[k + 1](regime);
}

}  // namespace

StateTrajectory solve_state(const ModelParams& params, DefaultState z, const TimeGrid& grid,
                            const std::vector<const StateTrajectory*>& neighbours, const OptimizerOptions& optimizer,
                            StateDiagnostics* diagnostics) {
    const Matrix a = build_A_general(params, z);
    const PsiFloor psi = psi_floor(params, z, grid);
    const double level = 0.5 * psi.epsilon;
    const auto surv = z.survivors();
    const std::size_t m = params.n_regimes;
    const auto n = static_cast<Eigen::Index>(params.n_stocks);

    if (neighbours.size() != params.n_stocks) throw ValidationError("solve_state: need one neighbour slot per stock");
    for (std::size_t j : surv) {
        if (neighbours[j] == nullptr || neighbours[j]->value.size() != grid.nodes() ||
            neighbours[j]->derivative.size() != grid.nodes()) {
            throw ValidationError("solve_state: missing solved neighbour " + z.flip(j + 1).to_string() + " of state " +
                                  z.to_string());
        }
    }

    std::size_t stage_hits = 0;
    const auto phi_next_at = [&](double t, std::size_t i) {
        Vector next = Vector::Ones(n);
        for (std::size_t j : surv) {
            next(static_cast<Eigen::Index>(j)) = neighbour_value(*neighbours[j], grid, t, static_cast<Eigen::Index>(i));
        }
        return next;
    };
    const auto optimum = [&](double t, std::size_t i, double x) {
        try {
            return maximize_hamiltonian(i, z, x, phi_next_at(t, i), params, optimizer);
        } catch (const NumericalError& e) {
            throw NumericalError(std::string(e.what()) + " [state " + z.to_string() + ", regime " +
                                 std::to_string(i + 1) + ", t = " + std::to_string(t) + "]");
        }
    };

    const numerics::VectorField rhs = [&](double t, const Vector& x) {
        Vector out = -(a * x);
        for (std::size_t i = 0; i < m; ++i) {
            const auto ii = static_cast<Eigen::Index>(i);
            double xi = x(ii);
            if (xi < level) {
                ++stage_hits;
                xi = level;
            }
            out(ii) -= optimum(t, i, xi).value;
        }
        return out;
    };

    StateTrajectory out;
    const Vector terminal = Vector::Constant(static_cast<Eigen::Index>(m), 1.0 / params.risk_aversion);
    out.value = numerics::integrate_backward(rhs, terminal, grid);
    out.derivative.resize(grid.nodes());
    out.policy.resize(grid.nodes(), std::vector<PolicyPoint>(m));

    double min_margin = std::numeric_limits<double>::infinity();
    double min_excess = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < grid.nodes(); ++k) {
        const double t = grid.time(k);
        const Vector& x = out.value[k];
        if ((x.array() < level).any()) {
            throw NumericalError("truncation floor active at grid node t = " + std::to_string(t) + " in state " +
                                 z.to_string() + " (grid too coarse or invalid inputs)");
        }
        Vector deriv = -(a * x);
        for (std::size_t i = 0; i < m; ++i) {
            const auto ii = static_cast<Eigen::Index>(i);
            const Vector next = phi_next_at(t, i);
            const HamiltonianOptimum opt = maximize_hamiltonian(i, z, x(ii), next, params, optimizer);
            deriv(ii) -= opt.value;
            out.policy[k][i] = opt.point;
            double jump_sum = 0.0;
            for (std::size_t j : surv) jump_sum += params.intensity(i, z, j) * next(static_cast<Eigen::Index>(j));
            min_excess = std::min(min_excess, opt.value - jump_sum);
        }
        out.derivative[k] = deriv;
        min_margin = std::min(min_margin, (x - psi.value[k]).minCoeff());
    }

    if (diagnostics) {
        diagnostics->truncation_level = level;
        diagnostics->floor_hits_at_stages = stage_hits;
        diagnostics->min_margin_over_psi = min_margin;
        diagnostics->min_g_excess = min_excess;
    }
    return out;
}

Solution solve_all(const ModelParams& params, const TimeGrid& grid, const SolverOptions& options) {
    const std::size_t n = params.n_stocks;
    const std::size_t states = params.state_count();
    Solution sol{ValueSurface(grid, params.n_regimes, n), PolicySurface(grid, params.n_regimes, n),
                 std::vector<StateDiagnostics>(states), std::vector<PsiFloor>(states),
                 states_by_descending_weight(n)};

    std::vector<std::optional<StateTrajectory>> solved(states);
    const DefaultState full = DefaultState::all_defaulted(n);
    solved[full.index()] = solve_terminal_state(params, grid);

    for (std::size_t level = 1; level < sol.order.size(); ++level) {
        const auto& batch = sol.order[level];
        run_parallel(batch.size(), options.threads, [&](std::size_t b) {
            const DefaultState z = batch[b];
            std::vector<const StateTrajectory*> nbrs(n, nullptr);
            for (std::size_t j : z.survivors()) nbrs[j] = &*solved[z.flip(j + 1).index()];
            solved[z.index()] = solve_state(params, z, grid, nbrs, options.optimizer, &sol.diagnostics[z.index()]);
            sol.psi[z.index()] = psi_floor(params, z, grid);
        });
    }

    for (std::size_t s = 0; s < states; ++s) {
        const DefaultState z(n, static_cast<std::uint32_t>(s));
        const StateTrajectory& traj = *solved[s];
        for (std::size_t k = 0; k < grid.nodes(); ++k) {
            sol.value.set_state_vector(k, z, traj.value[k]);
            for (std::size_t i = 0; i < params.n_regimes; ++i) sol.policy.set(k, i, z, traj.policy[k][i]);
        }
    }
    return sol;
}

}  // namespace contagion
