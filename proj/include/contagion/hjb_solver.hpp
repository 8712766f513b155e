#pragma once

#include <cstddef>
#include <vector>

#include "contagion/model.hpp"
#include "contagion/numerics.hpp"
#include "contagion/policy_optimizer.hpp"

namespace contagion {

using numerics::TimeGrid;

/// phi(t_k, i, z) for every grid node, regime and default state.
class ValueSurface {
public:
    ValueSurface(TimeGrid grid, std::size_t n_regimes, std::size_t n_stocks);

    const TimeGrid& grid() const noexcept { return grid_; }
    std::size_t n_regimes() const noexcept { return m_; }
    std::size_t n_stocks() const noexcept { return n_; }

    double operator()(std::size_t node, std::size_t regime, DefaultState z) const {
        return data_[offset(node, regime, z.index())];
    }
    double& at(std::size_t node, std::size_t regime, DefaultState z) { return data_[offset(node, regime, z.index())]; }

    /// The m-vector phi(t_k, ., z).
    Vector state_vector(std::size_t node, DefaultState z) const;
    void set_state_vector(std::size_t node, DefaultState z, const Vector& values);

private:
    std::size_t offset(std::size_t node, std::size_t regime, std::size_t state) const {
        return (state * grid_.nodes() + node) * m_ + regime;
    }
    TimeGrid grid_;
    std::size_t m_;
    std::size_t n_;
    std::vector<double> data_;
};

/// Optimal feedback (pi*, l*) on the same grid as ValueSurface.
class PolicySurface {
public:
    PolicySurface(TimeGrid grid, std::size_t n_regimes, std::size_t n_stocks);

    const TimeGrid& grid() const noexcept { return grid_; }
    std::size_t n_regimes() const noexcept { return m_; }
    std::size_t n_stocks() const noexcept { return n_; }

    double pi(std::size_t node, std::size_t regime, DefaultState z, std::size_t stock) const {
        return pi_[offset(node, regime, z.index()) * n_ + stock];
    }
    double l(std::size_t node, std::size_t regime, DefaultState z) const { return l_[offset(node, regime, z.index())]; }

    PolicyPoint point(std::size_t node, std::size_t regime, DefaultState z) const;
    void set(std::size_t node, std::size_t regime, DefaultState z, const PolicyPoint& p);

    /// Contiguous pi block of one (node, regime, state): n values.
    const double* pi_data(std::size_t node, std::size_t regime, DefaultState z) const {
        return pi_.data() + offset(node, regime, z.index()) * n_;
    }

private:
    std::size_t offset(std::size_t node, std::size_t regime, std::size_t state) const {
        return (state * grid_.nodes() + node) * m_ + regime;
    }
    TimeGrid grid_;
    std::size_t m_;
    std::size_t n_;
    std::vector<double> pi_;
    std::vector<double> l_;
};

/// Diagonal gamma r(i) + sup_l H^(n)(l,i) plus the generator.
Matrix build_A_terminal(const ModelParams& params);

/// Diagonal gamma r(i) - sum of surviving intensities plus the generator.
Matrix build_A_general(const ModelParams& params, DefaultState z);

/// Values of one default state on the grid, with their time derivative at
/// each node (needed to interpolate this state inside its neighbours' steps).
struct StateTrajectory {
    std::vector<Vector> value;       // value[k] = phi(t_k, ., z)
    std::vector<Vector> derivative;  // d/dt phi(t_k, ., z)
    std::vector<std::vector<PolicyPoint>> policy;  // policy[k][i]
};

/// phi(., e_n) = (1/gamma) exp(A^(n) (T - t)) e at every node; l* from the
/// terminal optimum, pi* = 0.
StateTrajectory solve_terminal_state(const ModelParams& params, const TimeGrid& grid);

/// Linear lower bound psi' = A^(k) psi, psi(0) = e / gamma, solved in the
/// reversed time s = T - t. `value[k]` is psi at s = T - t_k, so it is aligned
/// with phi(t_k); `epsilon` is the minimum over nodes and regimes.
struct PsiFloor {
    std::vector<Vector> value;
    double epsilon = 0.0;
};
PsiFloor psi_floor(const ModelParams& params, DefaultState z, const TimeGrid& grid);

struct StateDiagnostics {
    double truncation_level = 0.0;      // a = epsilon / 2
    std::size_t floor_hits_at_stages = 0;  // RK4 stage evaluations where x_i < a
    double min_margin_over_psi = 0.0;   // min over nodes of phi - psi
    double min_g_excess = 0.0;          // min over nodes of G_i - sum_j h_j phi_next_j
};

struct SolverOptions {
    std::size_t threads = 1;
    OptimizerOptions optimizer{};
};

/// One non-terminal state: backward RK4 on phi' = -A^(k) phi - G^(k)(t, phi v a e)
/// with a = psi.epsilon / 2. `neighbours[j]` must hold the solved state with
/// stock j additionally defaulted for every survivor j (other entries ignored).
/// Throws NumericalError if the floor binds at a grid node.
StateTrajectory solve_state(const ModelParams& params, DefaultState z, const TimeGrid& grid,
                            const std::vector<const StateTrajectory*>& neighbours,
                            const OptimizerOptions& optimizer = {}, StateDiagnostics* diagnostics = nullptr);

struct Solution {
    ValueSurface value;
    PolicySurface policy;
    std::vector<StateDiagnostics> diagnostics;  // indexed by state bitmask
    std::vector<PsiFloor> psi;                  // indexed by state bitmask; empty for the all-defaulted state
    std::vector<std::vector<DefaultState>> order;  // processing order (by weight level)
};

/// Backward recursion from the all-defaulted state to the all-alive state.
/// States of equal weight are independent and may run on `threads` workers.
Solution solve_all(const ModelParams& params, const TimeGrid& grid, const SolverOptions& options = {});

}  // namespace contagion
