#pragma once

#include <cstddef>
#include <vector>

#include "contagion/model.hpp"

namespace contagion {

/// A feedback control value: stock fractions and liability ratio.
/// `pi` has one entry per stock; entries of defaulted stocks are 0.
struct PolicyPoint {
    Vector pi;
    double l = 0.0;
};

/// Inner objective of the HJB supremum at one (regime, default state):
///
///   F(pi, l) = sum_j (1 - pi_j)^gamma * w_j + x * H(pi, l)
///
/// where the sum runs over surviving stocks, w_j = h_j * phi_next_j is the
/// default-jump weight and H is the Hamiltonian of the state. The variable is
/// v = (pi of surviving stocks..., l); defaulted stocks are not part of it.
/// With no survivors and x = 1 this is the all-defaulted Hamiltonian.
class HamiltonianObjective {
public:
    HamiltonianObjective(const ModelParams& params, std::size_t regime, DefaultState z, double x,
                         const Vector& jump_weight);

    std::size_t dim() const noexcept { return static_cast<std::size_t>(theta_.size()) + 1; }
    std::size_t survivor_count() const noexcept { return static_cast<std::size_t>(theta_.size()); }
    double l_max() const noexcept { return 1.0 / claim_size_; }

    /// Objective value; -infinity outside pi_j <= 1, 0 <= l <= 1/g.
    double value(const Vector& v) const;
    Vector gradient(const Vector& v) const;
    Matrix hessian(const Vector& v) const;

    /// H(pi, l) without the x factor and without the jump-weight sum.
    double hamiltonian(const Vector& v) const;

    const Vector& jump_weight() const noexcept { return weight_; }
    double claim_rate() const noexcept { return claim_rate_; }
    const std::vector<std::size_t>& survivors() const noexcept { return survivors_; }

private:
    double gamma_;
    double x_;
    std::vector<std::size_t> survivors_;
    Vector theta_;       // survivors' excess returns
    Matrix cov_;         // survivors' sigma sigma^T
    Vector cross_;       // survivors' sigma phi^T
    double claim_var_;   // phi phi^T + phi_bar phi_bar^T
    double premium_gap_; // p - c
    double claim_size_;
    double claim_rate_;
    Vector weight_;      // survivors' h_j * phi_next_j
};

struct OptimizerOptions {
    double grad_tol = 1e-9;  // relative to 1 + |value|
    int max_iterations = 200;
};

struct OptimizerResult {
    Vector v;       // (pi of survivors..., l)
    double value = 0.0;
    double projected_gradient_norm = 0.0;
    int iterations = 0;
};

/// Projected Newton ascent with backtracking on the box pi <= 1, 0 <= l <= 1/g.
/// Bounds whose one-sided slope is infinite (positive jump weight or claim
/// rate) are kept strictly inside by a fraction-to-boundary rule instead of
/// projection. Throws NumericalError on non-finite values or when the iteration
/// cap is reached.
OptimizerResult maximize(const HamiltonianObjective& objective, const OptimizerOptions& options = {});

/// All-defaulted Hamiltonian H^(n)(l, i). Throws ValidationError if 1 - l g(i) < 0 or l < 0.
double hamiltonian_terminal(double l, std::size_t regime, const ModelParams& params);

struct TerminalOptimum {
    double l = 0.0;
    double value = 0.0;
};

/// argmax and max of H^(n)(., i) over [0, 1/g(i)].
TerminalOptimum maximize_terminal(std::size_t regime, const ModelParams& params,
                                  const OptimizerOptions& options = {});

struct HamiltonianOptimum {
    PolicyPoint point;
    double value = 0.0;
    double projected_gradient_norm = 0.0;
};

/// Maximizes sum_j (1 - pi_j)^gamma h_j(i,z) phi_next_j + H((pi,l), i, z) x
/// over the policy space of state z. `phi_next` has one entry per stock; only
/// surviving stocks' entries are read (the value of the state with that stock
/// additionally defaulted, in regime i).
HamiltonianOptimum maximize_hamiltonian(std::size_t regime, DefaultState z, double x, const Vector& phi_next,
                                        const ModelParams& params, const OptimizerOptions& options = {});

}  // namespace contagion
