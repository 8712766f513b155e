#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace contagion::numerics {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Uniform grid t_k = k * T / N on [0, T].
class TimeGrid {
public:
    TimeGrid(double horizon, std::size_t steps);

    double horizon() const noexcept { return horizon_; }
    std::size_t steps() const noexcept { return steps_; }
    std::size_t nodes() const noexcept { return steps_ + 1; }
    double dt() const noexcept { return horizon_ / static_cast<double>(steps_); }
    double time(std::size_t k) const noexcept;

    /// Index of the node at time t, if t is within `tol` of one; throws otherwise.
    std::size_t node_at(double t, double tol = 1e-9) const;
    /// Index of the last node with t_k <= t (clamped to [0, N-1]).
    std::size_t left_node(double t) const noexcept;

private:
    double horizon_;
    std::size_t steps_;
};

/// Matrix exponential e^{A s} by scaling and squaring of a Taylor series
/// truncated once terms stop changing the sum in double precision.
/// Throws NumericalError on non-finite input or overflow.
Matrix expm(const Matrix& a, double s = 1.0);

using VectorField = std::function<Vector(double t, const Vector& x)>;

/// Classical RK4 from x(T) = terminal back to t_0 = 0. Result[k] is x(t_k).
/// Throws NumericalError naming (t, component) if the field returns a non-finite value.
std::vector<Vector> integrate_backward(const VectorField& rhs, const Vector& terminal, const TimeGrid& grid);

/// Classical RK4 from x(0) = initial forward to T. Result[k] is x(t_k).
std::vector<Vector> integrate_forward(const VectorField& rhs, const Vector& initial, const TimeGrid& grid);

/// True iff every off-diagonal entry is >= 0, i.e. x -> A x is of type K.
bool is_type_k(const Matrix& a);

}  // namespace contagion::numerics
