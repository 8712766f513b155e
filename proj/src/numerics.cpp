#include "contagion/numerics.hpp"

#include <cmath>
#include <string>

#include "contagion/errors.hpp"

namespace contagion::numerics {

TimeGrid::TimeGrid(double horizon, std::size_t steps) : horizon_(horizon), steps_(steps) {
    if (!(std::isfinite(horizon) && horizon > 0.0)) throw ValidationError("time grid: horizon must be positive");
    if (steps < 1) throw ValidationError("time grid: need at least one step");
}

double TimeGrid::time(std::size_t k) const noexcept {
    if (k >= steps_) return horizon_;
    return horizon_ * static_cast<double>(k) / static_cast<double>(steps_);
}

std::size_t TimeGrid::node_at(double t, double tol) const {
    const double pos = t / dt();
    const double k = std::round(pos);
    if (k < 0.0 || k > static_cast<double>(steps_) || std::abs(t - time(static_cast<std::size_t>(k))) > tol) {
        throw ValidationError("time " + std::to_string(t) + " is not a grid node (dt = " + std::to_string(dt()) + ")");
    }
    return static_cast<std::size_t>(k);
}

std::size_t TimeGrid::left_node(double t) const noexcept {
    // The small offset keeps t = t_k from landing on k-1 after rounding.
    const double pos = std::floor(t / dt() + 1e-9);
    if (pos <= 0.0) return 0;
    const auto k = static_cast<std::size_t>(pos);
    return k >= steps_ ? steps_ - 1 : k;
}

Matrix expm(const Matrix& a, double s) {
    if (a.rows() != a.cols()) throw NumericalError("expm: matrix must be square");
    if (!a.allFinite() || !std::isfinite(s)) throw NumericalError("expm: non-finite input");
    const Eigen::Index m = a.rows();
    Matrix scaled = a * s;

    // Scale so that ||A s / 2^k||_1 <= 1/2, sum the series, square k times.
    const double norm = scaled.cwiseAbs().colwise().sum().maxCoeff();
    int squarings = 0;
    if (norm > 0.5) {
        squarings = static_cast<int>(std::ceil(std::log2(norm / 0.5)));
        scaled /= std::ldexp(1.0, squarings);
    }

    Matrix result = Matrix::Identity(m, m);
    Matrix term = Matrix::Identity(m, m);
    for (int k = 1; k <= 60; ++k) {
        term = term * scaled / static_cast<double>(k);
        const Matrix next = result + term;
        const bool stagnated = (next - result).cwiseAbs().maxCoeff() == 0.0;
        result = next;
        if (stagnated) break;
    }
    for (int i = 0; i < squarings; ++i) result = result * result;

    if (!result.allFinite()) throw NumericalError("expm: overflow (non-finite result)");
    return result;
}

namespace {

void check_finite(const Vector& v, double t) {
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (!std::isfinite(v(i))) {
            throw NumericalError("vector field returned non-finite value at t = " + std::to_string(t) +
                                 ", component " + std::to_string(i + 1));
        }
    }
}

Vector eval(const VectorField& rhs, double t, const Vector& x) {
    Vector out = rhs(t, x);
    check_finite(out, t);
    return out;
}

}  // namespace

std::vector<Vector> integrate_backward(const VectorField& rhs, const Vector& terminal, const TimeGrid& grid) {
    const std::size_t n = grid.steps();
    const double h = grid.dt();
    std::vector<Vector> traj(n + 1);
    traj[n] = terminal;
    for (std::size_t k = n; k-- > 0;) {
        const double t = grid.time(k + 1);
        const Vector& x = traj[k + 1];
        // Step with -h: dx/dt = f  =>  x(t - h) = x(t) - h * (weighted slopes).
        const Vector k1 = eval(rhs, t, x);
        const Vector k2 = eval(rhs, t - 0.5 * h, x - 0.5 * h * k1);
        const Vector k3 = eval(rhs, t - 0.5 * h, x - 0.5 * h * k2);
        const Vector k4 = eval(rhs, grid.time(k), x - h * k3);
        traj[k] = x - (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    return traj;
}

std::vector<Vector> integrate_forward(const VectorField& rhs, const Vector& initial, const TimeGrid& grid) {
    const std::size_t n = grid.steps();
    const double h = grid.dt();
    std::vector<Vector> traj(n + 1);
    traj[0] = initial;
    for (std::size_t k = 0; k < n; ++k) {
        const double t = grid.time(k);
        const Vector& x = traj[k];
        const Vector k1 = eval(rhs, t, x);
        const Vector k2 = eval(rhs, t + 0.5 * h, x + 0.5 * h * k1);
        const Vector k3 = eval(rhs, t + 0.5 * h, x + 0.5 * h * k2);
        const Vector k4 = eval(rhs, grid.time(k + 1), x + h * k3);
        traj[k + 1] = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    return traj;
}

bool is_type_k(const Matrix& a) {
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        for (Eigen::Index j = 0; j < a.cols(); ++j) {
            if (i != j && a(i, j) < 0.0) return false;
        }
    }
    return true;
}

}  // namespace contagion::numerics
