#include "contagion/policy_optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "contagion/errors.hpp"

namespace contagion {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kFractionToBoundary = 0.995;
constexpr double kArmijo = 1e-4;
constexpr double kRoundingSlack = 1e-14;

// (1 - u)^gamma and its derivatives, with base clamped at zero.
double pow_base(double base, double e) { return std::pow(std::max(base, 0.0), e); }

}  // namespace

HamiltonianObjective::HamiltonianObjective(const ModelParams& params, std::size_t regime, DefaultState z, double x,
                                           const Vector& jump_weight)
    : gamma_(params.risk_aversion), x_(x), survivors_(z.survivors()) {
    if (regime >= params.n_regimes) throw std::out_of_range("regime index out of range");
    if (!(std::isfinite(x) && x > 0.0)) {
        throw ValidationError("Hamiltonian objective: x must be positive and finite, got " + std::to_string(x));
    }
    const auto& rc = params.regimes[regime];
    const auto s = static_cast<Eigen::Index>(survivors_.size());
    if (jump_weight.size() != s) throw ValidationError("Hamiltonian objective: one jump weight per surviving stock");

    const Vector full_theta = theta(params, regime, z);
    const Matrix full_cov = rc.volatility * rc.volatility.transpose();
    const Vector full_cross = rc.volatility * rc.claim_vol.transpose();
    theta_.resize(s);
    cov_.resize(s, s);
    cross_.resize(s);
    for (Eigen::Index a = 0; a < s; ++a) {
        const auto ja = static_cast<Eigen::Index>(survivors_[static_cast<std::size_t>(a)]);
        theta_(a) = full_theta(ja);
        cross_(a) = full_cross(ja);
        for (Eigen::Index b = 0; b < s; ++b) {
            cov_(a, b) = full_cov(ja, static_cast<Eigen::Index>(survivors_[static_cast<std::size_t>(b)]));
        }
    }
    claim_var_ = params.claim_variance(regime);
    premium_gap_ = params.premium_rate(regime, z) - rc.claim_drift;
    claim_size_ = rc.claim_size;
    claim_rate_ = params.claim_rate(regime, z);
    weight_ = jump_weight;
}

double HamiltonianObjective::hamiltonian(const Vector& v) const {
    const auto s = theta_.size();
    const auto pi = v.head(s);
    const double l = v(s);
    const double g = gamma_;
    const double quad = pi.dot(cov_ * pi) + l * l * claim_var_ - 2.0 * l * pi.dot(cross_);
    return g * (pi.dot(theta_) + premium_gap_ * l) + 0.5 * g * (g - 1.0) * quad +
           (pow_base(1.0 - l * claim_size_, g) - 1.0) * claim_rate_;
}

double HamiltonianObjective::value(const Vector& v) const {
    const auto s = theta_.size();
    const double l = v(s);
    if (!(l >= 0.0) || l > l_max()) return kNegInf;
    double jump = 0.0;
    for (Eigen::Index a = 0; a < s; ++a) {
        if (!(v(a) <= 1.0)) return kNegInf;
        jump += weight_(a) * pow_base(1.0 - v(a), gamma_);
    }
    return jump + x_ * hamiltonian(v);
}

Vector HamiltonianObjective::gradient(const Vector& v) const {
    const auto s = theta_.size();
    const auto pi = v.head(s);
    const double l = v(s);
    const double g = gamma_;
    const double curv = g * (g - 1.0);
    Vector out(s + 1);
    out.head(s) = x_ * (g * theta_ + curv * (cov_ * pi - l * cross_));
    for (Eigen::Index a = 0; a < s; ++a) {
        if (weight_(a) != 0.0) out(a) -= g * weight_(a) * pow_base(1.0 - v(a), g - 1.0);
    }
    double dl = g * premium_gap_ + curv * (l * claim_var_ - pi.dot(cross_));
    if (claim_rate_ != 0.0) dl -= g * claim_size_ * claim_rate_ * pow_base(1.0 - l * claim_size_, g - 1.0);
    out(s) = x_ * dl;
    return out;
}

Matrix HamiltonianObjective::hessian(const Vector& v) const {
    const auto s = theta_.size();
    const double l = v(s);
    const double g = gamma_;
    const double curv = g * (g - 1.0);
    Matrix out(s + 1, s + 1);
    out.topLeftCorner(s, s) = x_ * curv * cov_;
    out.topRightCorner(s, 1) = -x_ * curv * cross_;
    out.bottomLeftCorner(1, s) = -x_ * curv * cross_.transpose();
    for (Eigen::Index a = 0; a < s; ++a) {
        if (weight_(a) != 0.0) out(a, a) += curv * weight_(a) * pow_base(1.0 - v(a), g - 2.0);
    }
    double dll = curv * claim_var_;
    if (claim_rate_ != 0.0) {
        dll += curv * claim_size_ * claim_size_ * claim_rate_ * pow_base(1.0 - l * claim_size_, g - 2.0);
    }
    out(s, s) = x_ * dll;
    return out;
}

namespace {

struct Bounds {
    Vector lower;
    Vector upper;
    std::vector<bool> soft_upper;  // infinite inward slope at the upper bound
};

Bounds make_bounds(const HamiltonianObjective& obj) {
    const auto dim = static_cast<Eigen::Index>(obj.dim());
    const auto s = dim - 1;
    Bounds b{Vector::Constant(dim, kNegInf), Vector::Ones(dim), std::vector<bool>(static_cast<std::size_t>(dim))};
    for (Eigen::Index a = 0; a < s; ++a) b.soft_upper[static_cast<std::size_t>(a)] = obj.jump_weight()(a) > 0.0;
    b.lower(s) = 0.0;
    b.upper(s) = obj.l_max();
    b.soft_upper[static_cast<std::size_t>(s)] = obj.claim_rate() > 0.0;
    return b;
}

// Variables pinned at a hard bound with the gradient pointing outward.
std::vector<bool> active_set(const Vector& v, const Vector& grad, const Bounds& b) {
    std::vector<bool> active(static_cast<std::size_t>(v.size()), false);
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        const auto iu = static_cast<std::size_t>(i);
        if (v(i) <= b.lower(i) && grad(i) <= 0.0) active[iu] = true;
        if (!b.soft_upper[iu] && v(i) >= b.upper(i) && grad(i) >= 0.0) active[iu] = true;
    }
    return active;
}

double projected_norm(const Vector& grad, const std::vector<bool>& active) {
    double sq = 0.0;
    for (Eigen::Index i = 0; i < grad.size(); ++i) {
        if (!active[static_cast<std::size_t>(i)]) sq += grad(i) * grad(i);
    }
    return std::sqrt(sq);
}

}  // namespace

namespace {

// True if every free coordinate with a non-negligible slope either sits one ulp
// from its bound or has its slope change sign one ulp away. Near an
// infinite-slope bound the curvature can be so large that no representable
// point meets the gradient tolerance; this accepts the optimum bracketed there.
bool bracketed_to_ulp(const HamiltonianObjective& obj, const Vector& v, const Vector& grad,
                      const std::vector<bool>& active, const Bounds& bounds, double tol) {
    const auto needs_check = [&](Eigen::Index i) {
        return !active[static_cast<std::size_t>(i)] && std::abs(grad(i)) > tol;
    };
    // Only plausible right next to an infinite-slope bound; skip the gradient calls otherwise.
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (!needs_check(i)) continue;
        if (!bounds.soft_upper[static_cast<std::size_t>(i)] || bounds.upper(i) - v(i) > 1e-9) return false;
    }
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (!needs_check(i)) continue;
        Vector nb = v;
        nb(i) = std::nextafter(v(i), grad(i) > 0.0 ? INFINITY : -INFINITY);
        if (nb(i) >= bounds.upper(i) || nb(i) <= bounds.lower(i)) continue;
        const double g = obj.gradient(nb)(i);
        if (std::isfinite(g) && g * grad(i) <= 0.0) continue;
        return false;
    }
    return true;
}

}  // namespace

OptimizerResult maximize(const HamiltonianObjective& obj, const OptimizerOptions& options) {
    const auto dim = static_cast<Eigen::Index>(obj.dim());
    const auto s = dim - 1;
    const Bounds bounds = make_bounds(obj);

    Vector v = Vector::Zero(dim);
    {
        // Stationary point of the quadratic part in l at pi = 0, with the
        // claim-jump term linearised at l = 0.
        const auto& o = obj;
        Vector probe = Vector::Zero(dim);
        const double slope0 = o.gradient(probe)(s);
        const double curv0 = -o.hessian(probe)(s, s);
        double l0 = curv0 > 0.0 ? slope0 / curv0 : 0.0;
        l0 = std::clamp(l0, 0.0, 0.5 * o.l_max());
        v(s) = l0;
    }

    OptimizerResult res;
    double f = obj.value(v);
    for (int it = 0; it <= options.max_iterations; ++it) {
        if (!std::isfinite(f)) throw NumericalError("policy optimizer: non-finite objective value");
        const Vector grad = obj.gradient(v);
        if (!grad.allFinite()) throw NumericalError("policy optimizer: non-finite gradient");
        const std::vector<bool> active = active_set(v, grad, bounds);
        const double pg = projected_norm(grad, active);
        res.v = v;
        res.value = f;
        res.projected_gradient_norm = pg;
        res.iterations = it;
        if (pg <= options.grad_tol * (1.0 + std::abs(f))) return res;
        if (bracketed_to_ulp(obj, v, grad, active, bounds, options.grad_tol * (1.0 + std::abs(f)))) return res;
        if (it == options.max_iterations) break;

        // Newton direction on the free variables.
        std::vector<Eigen::Index> free;
        for (Eigen::Index i = 0; i < dim; ++i) {
            if (!active[static_cast<std::size_t>(i)]) free.push_back(i);
        }
        const auto nf = static_cast<Eigen::Index>(free.size());
        const Matrix hess = obj.hessian(v);
        Matrix neg_h(nf, nf);
        Vector gf(nf);
        for (Eigen::Index a = 0; a < nf; ++a) {
            gf(a) = grad(free[static_cast<std::size_t>(a)]);
            for (Eigen::Index b = 0; b < nf; ++b) {
                neg_h(a, b) = -hess(free[static_cast<std::size_t>(a)], free[static_cast<std::size_t>(b)]);
            }
        }
        Vector step = Vector::Zero(dim);
        Eigen::LDLT<Matrix> ldlt(neg_h);
        Vector df;
        bool newton_ok = ldlt.info() == Eigen::Success && ldlt.isPositive();
        if (newton_ok) {
            df = ldlt.solve(gf);
            newton_ok = df.allFinite() && gf.dot(df) > 0.0;
        }
        if (!newton_ok) {
            // Projected gradient fallback, scaled by the diagonal curvature.
            df = gf;
            for (Eigen::Index a = 0; a < nf; ++a) {
                const double c = neg_h(a, a);
                if (c > 0.0 && std::isfinite(c)) df(a) /= c;
            }
        }
        for (Eigen::Index a = 0; a < nf; ++a) step(free[static_cast<std::size_t>(a)]) = df(a);

        double alpha = 1.0;
        for (Eigen::Index i = 0; i < dim; ++i) {
            if (bounds.soft_upper[static_cast<std::size_t>(i)] && step(i) > 0.0) {
                alpha = std::min(alpha, kFractionToBoundary * (bounds.upper(i) - v(i)) / step(i));
            }
        }

        bool accepted = false;
        for (int ls = 0; ls < 80; ++ls) {
            Vector trial = v + alpha * step;
            for (Eigen::Index i = 0; i < dim; ++i) {
                trial(i) = std::max(trial(i), bounds.lower(i));
                if (!bounds.soft_upper[static_cast<std::size_t>(i)]) trial(i) = std::min(trial(i), bounds.upper(i));
            }
            const double ft = obj.value(trial);
            const double predicted = grad.dot(trial - v);
            if (std::isfinite(ft) && ft >= f + kArmijo * predicted - kRoundingSlack * (1.0 + std::abs(f))) {
                accepted = (trial - v).cwiseAbs().maxCoeff() > 0.0;
                v = trial;
                f = ft;
                break;
            }
            alpha *= 0.5;
        }
        if (!accepted) {
            // No representable ascent left: the iterate is optimal to rounding.
            const double tol = 1e3 * options.grad_tol * (1.0 + std::abs(f));
            if (pg <= tol || bracketed_to_ulp(obj, v, grad, active, bounds, tol)) return res;
            throw NumericalError("policy optimizer: line search failed (projected gradient " + std::to_string(pg) + ")");
        }
    }
    throw NumericalError("policy optimizer: no convergence within " + std::to_string(options.max_iterations) +
                         " iterations (projected gradient " + std::to_string(res.projected_gradient_norm) + ")");
}

double hamiltonian_terminal(double l, std::size_t regime, const ModelParams& params) {
    if (regime >= params.n_regimes) throw std::out_of_range("regime index out of range");
    const auto& rc = params.regimes[regime];
    const DefaultState full = DefaultState::all_defaulted(params.n_stocks);
    if (!(l >= 0.0) || l * rc.claim_size > 1.0 + 1e-15) {
        throw ValidationError("terminal Hamiltonian: l = " + std::to_string(l) + " outside [0, 1/g]");
    }
    const double g = params.risk_aversion;
    return g * (params.premium_rate(regime, full) - rc.claim_drift) * l +
           0.5 * g * (g - 1.0) * l * l * params.claim_variance(regime) +
           (pow_base(1.0 - l * rc.claim_size, g) - 1.0) * params.claim_rate(regime, full);
}

TerminalOptimum maximize_terminal(std::size_t regime, const ModelParams& params, const OptimizerOptions& options) {
    const DefaultState full = DefaultState::all_defaulted(params.n_stocks);
    const HamiltonianObjective obj(params, regime, full, 1.0, Vector());
    const OptimizerResult res = maximize(obj, options);
    return {res.v(0), res.value};
}

HamiltonianOptimum maximize_hamiltonian(std::size_t regime, DefaultState z, double x, const Vector& phi_next,
                                        const ModelParams& params, const OptimizerOptions& options) {
    if (phi_next.size() != static_cast<Eigen::Index>(params.n_stocks)) {
        throw ValidationError("maximize_hamiltonian: phi_next must have one entry per stock");
    }
    const std::vector<std::size_t> surv = z.survivors();
    Vector weight(static_cast<Eigen::Index>(surv.size()));
    for (std::size_t a = 0; a < surv.size(); ++a) {
        const double next = phi_next(static_cast<Eigen::Index>(surv[a]));
        if (!(std::isfinite(next) && next > 0.0)) {
            throw ValidationError("maximize_hamiltonian: phi_next must be positive for surviving stock " +
                                  std::to_string(surv[a] + 1));
        }
        weight(static_cast<Eigen::Index>(a)) = params.intensity(regime, z, surv[a]) * next;
    }
    const HamiltonianObjective obj(params, regime, z, x, weight);
    const OptimizerResult res = maximize(obj, options);

    HamiltonianOptimum out;
    out.point.pi = Vector::Zero(static_cast<Eigen::Index>(params.n_stocks));
    for (std::size_t a = 0; a < surv.size(); ++a) {
        out.point.pi(static_cast<Eigen::Index>(surv[a])) = res.v(static_cast<Eigen::Index>(a));
    }
    out.point.l = res.v(static_cast<Eigen::Index>(surv.size()));
    out.value = res.value;
    out.projected_gradient_norm = res.projected_gradient_norm;
    return out;
}

}  // namespace contagion
