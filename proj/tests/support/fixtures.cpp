#include "fixtures.hpp"

#include <algorithm>
#include <limits>

namespace contagion::testing {

namespace {

Matrix diag2(double a, double b) {
    Matrix m = Matrix::Zero(2, 2);
    m(0, 0) = a;
    m(1, 1) = b;
    return m;
}

RowVector row(std::initializer_list<double> xs) {
    RowVector v(static_cast<Eigen::Index>(xs.size()));
    Eigen::Index k = 0;
    for (double x : xs) v(k++) = x;
    return v;
}

}  // namespace

ModelParams table1_params() {
    ModelParams p;
    p.n_stocks = 2;
    p.n_regimes = 2;
    p.stock_noise_dim = 2;
    p.claim_noise_dim = 1;
    p.risk_aversion = 0.5;
    p.horizon = 1.0;
    p.generator.resize(2, 2);
    p.generator << -0.5, 0.5, 1.0, -1.0;

    RegimeCoefficients r1;
    r1.rate = 0.1;
    r1.drift = Vector(2);
    r1.drift << 1.0, 0.55;
    r1.volatility = diag2(0.7, 1.0);
    r1.claim_drift = 0.1;
    r1.claim_vol = row({0.4, 0.8});
    r1.claim_vol_idio = row({0.3});
    r1.claim_size = 0.2;

    RegimeCoefficients r2;
    r2.rate = 0.06;
    r2.drift = Vector(2);
    r2.drift << 1.4, 0.8;
    r2.volatility = diag2(1.0, 1.5);
    r2.claim_drift = 0.05;
    r2.claim_vol = row({0.7, 1.2});
    r2.claim_vol_idio = row({0.6});
    r2.claim_size = 0.1;
    p.regimes = {r1, r2};

    // Bitmask 1 = (1,0): stock 1 defaulted; bitmask 2 = (0,1): stock 2 defaulted.
    p.default_intensity.assign(4, Matrix::Zero(2, 2));
    p.default_intensity[0] << 0.5, 0.75,  // regime 1: h_1, h_2
        0.75, 1.1;                           // regime 2
    p.default_intensity[1](0, 1) = 0.9;
    p.default_intensity[1](1, 1) = 1.3;
    p.default_intensity[2](0, 0) = 0.7;
    p.default_intensity[2](1, 0) = 1.0;

    p.claim_intensity.resize(4, 2);
    p.claim_intensity << 2.0, 3.0, 2.5, 4.0, 2.3, 3.7, 2.6, 5.0;
    p.premium.resize(4, 2);
    for (Eigen::Index s = 0; s < 4; ++s) {
        p.premium(s, 0) = 0.8;
        p.premium(s, 1) = 0.5;
    }
    return p;
}

ModelParams scalar_params(double rate, double excess, double vol, double h, double nu) {
    ModelParams p;
    p.n_stocks = 1;
    p.n_regimes = 1;
    p.stock_noise_dim = 1;
    p.claim_noise_dim = 1;
    p.risk_aversion = 0.5;
    p.horizon = 1.0;
    p.generator = Matrix::Zero(1, 1);
    RegimeCoefficients rc;
    rc.rate = rate;
    rc.drift = Vector::Constant(1, rate + excess);
    rc.volatility = Matrix::Constant(1, 1, vol);
    rc.claim_drift = 0.1;
    rc.claim_vol = row({0.3});
    rc.claim_vol_idio = row({0.2});
    rc.claim_size = 0.2;
    p.regimes = {rc};
    p.default_intensity.assign(2, Matrix::Constant(1, 1, h));
    p.claim_intensity = Matrix::Constant(2, 1, nu);
    p.premium = Matrix::Constant(2, 1, 0.5);
    return p;
}

ModelParams random_params(std::mt19937_64& rng, std::size_t n, std::size_t m) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const auto U = [&](double a, double b) { return a + (b - a) * u(rng); };
    ModelParams p;
    p.n_stocks = n;
    p.n_regimes = m;
    p.stock_noise_dim = n;
    p.claim_noise_dim = 1;
    p.risk_aversion = U(0.2, 0.8);
    p.horizon = 1.0;
    const auto mi = static_cast<Eigen::Index>(m);
    const auto ni = static_cast<Eigen::Index>(n);
    p.generator = Matrix::Zero(mi, mi);
    for (Eigen::Index i = 0; i < mi; ++i) {
        for (Eigen::Index j = 0; j < mi; ++j) {
            if (i != j) p.generator(i, j) = U(0.1, 1.5);
        }
        p.generator(i, i) = -(p.generator.row(i).sum());
    }
    for (std::size_t i = 0; i < m; ++i) {
        RegimeCoefficients rc;
        rc.rate = U(0.01, 0.1);
        rc.drift = Vector(ni);
        for (Eigen::Index j = 0; j < ni; ++j) rc.drift(j) = rc.rate + U(-0.2, 1.0);
        rc.volatility = Matrix::Zero(ni, ni);
        for (Eigen::Index a = 0; a < ni; ++a) {
            rc.volatility(a, a) = U(0.3, 1.5);
            for (Eigen::Index b = 0; b < a; ++b) rc.volatility(a, b) = U(-0.3, 0.3);
        }
        rc.claim_drift = U(0.0, 0.3);
        rc.claim_vol = RowVector(ni);
        for (Eigen::Index j = 0; j < ni; ++j) rc.claim_vol(j) = U(-1.0, 1.0);
        rc.claim_vol_idio = RowVector::Constant(1, U(0.1, 1.0));
        rc.claim_size = U(0.05, 0.5);
        p.regimes.push_back(rc);
    }
    const std::size_t states = std::size_t{1} << n;
    p.default_intensity.assign(states, Matrix::Zero(mi, ni));
    p.claim_intensity = Matrix::Zero(static_cast<Eigen::Index>(states), mi);
    p.premium = Matrix::Zero(static_cast<Eigen::Index>(states), mi);
    for (std::size_t s = 0; s < states; ++s) {
        const DefaultState z(n, static_cast<std::uint32_t>(s));
        for (Eigen::Index i = 0; i < mi; ++i) {
            for (std::size_t j : z.survivors()) p.default_intensity[s](i, static_cast<Eigen::Index>(j)) = U(0.1, 2.0);
            p.claim_intensity(static_cast<Eigen::Index>(s), i) = U(0.5, 5.0);
            p.premium(static_cast<Eigen::Index>(s), i) =
                p.regimes[static_cast<std::size_t>(i)].claim_drift + U(-0.2, 1.0);
        }
    }
    return p;
}

double reference_objective(const ModelParams& p, std::size_t regime, DefaultState z, double x,
                           const std::vector<double>& phi_next, const std::vector<double>& pi, double l) {
    const auto& rc = p.regimes[regime];
    const double gam = p.risk_aversion;
    const double inf = std::numeric_limits<double>::infinity();
    if (l < 0.0 || 1.0 - l * rc.claim_size < 0.0) return -inf;
    const std::size_t n = p.n_stocks;
    const std::size_t d = p.stock_noise_dim;

    double jumps = 0.0;
    double linear = 0.0;
    std::vector<double> exposure(d, 0.0);  // pi^T sigma - l phi
    for (std::size_t k = 0; k < d; ++k) exposure[k] = -l * rc.claim_vol(static_cast<Eigen::Index>(k));
    for (std::size_t j = 0; j < n; ++j) {
        if (z.defaulted(j)) continue;
        if (pi[j] > 1.0) return -inf;
        const double hj = p.default_intensity[z.index()](static_cast<Eigen::Index>(regime), static_cast<Eigen::Index>(j));
        jumps += std::pow(1.0 - pi[j], gam) * hj * phi_next[j];
        linear += pi[j] * (rc.drift(static_cast<Eigen::Index>(j)) - rc.rate + hj);
        for (std::size_t k = 0; k < d; ++k) {
            exposure[k] += pi[j] * rc.volatility(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k));
        }
    }
    const double prem = p.premium(static_cast<Eigen::Index>(z.index()), static_cast<Eigen::Index>(regime));
    const double nu = p.claim_intensity(static_cast<Eigen::Index>(z.index()), static_cast<Eigen::Index>(regime));
    linear += (prem - rc.claim_drift) * l;
    double quad = l * l * rc.claim_vol_idio.squaredNorm();
    for (double e : exposure) quad += e * e;
    const double ham = gam * linear + 0.5 * gam * (gam - 1.0) * quad + (std::pow(1.0 - l * rc.claim_size, gam) - 1.0) * nu;
    return jumps + x * ham;
}

ScalarMax golden_section_max(const std::function<double(double)>& f, double a, double b, double tol) {
    const double ratio = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - ratio * (b - a);
    double d = a + ratio * (b - a);
    double fc = f(c);
    double fd = f(d);
    while (b - a > tol) {
        if (fc >= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = f(d);
        }
    }
    // Endpoints matter when the maximum sits on the boundary.
    ScalarMax best{0.5 * (a + b), f(0.5 * (a + b))};
    for (double e : {a, b}) {
        const double fe = f(e);
        if (fe > best.value) best = {e, fe};
    }
    return best;
}

GridMax grid_oracle(const ModelParams& p, std::size_t regime, DefaultState z, double x,
                    const std::vector<double>& phi_next, double lo) {
    const std::vector<std::size_t> alive = z.survivors();
    const std::size_t dim = alive.size() + 1;
    const double lmax = 1.0 / p.regimes[regime].claim_size;
    constexpr int kPoints = 21;

    std::vector<double> box_lo(dim), box_hi(dim);
    for (std::size_t a = 0; a < alive.size(); ++a) {
        box_lo[a] = lo;
        box_hi[a] = 1.0;
    }
    box_lo[dim - 1] = 0.0;
    box_hi[dim - 1] = lmax;

    std::vector<double> pi(p.n_stocks, 0.0);
    std::vector<double> best_v(dim, 0.0);
    double best = -std::numeric_limits<double>::infinity();
    const auto eval = [&](const std::vector<double>& v) {
        for (std::size_t a = 0; a < alive.size(); ++a) pi[alive[a]] = v[a];
        return reference_objective(p, regime, z, x, phi_next, pi, v[dim - 1]);
    };

    for (int level = 0; level < 40; ++level) {
        std::vector<double> step(dim);
        double widest = 0.0;
        for (std::size_t a = 0; a < dim; ++a) {
            step[a] = (box_hi[a] - box_lo[a]) / (kPoints - 1);
            widest = std::max(widest, box_hi[a] - box_lo[a]);
        }
        std::vector<int> idx(dim, 0);
        std::vector<double> v(dim);
        for (;;) {
            for (std::size_t a = 0; a < dim; ++a) v[a] = box_lo[a] + step[a] * idx[a];
            const double f = eval(v);
            if (f > best) {
                best = f;
                best_v = v;
            }
            std::size_t a = 0;
            while (a < dim && ++idx[a] == kPoints) idx[a++] = 0;
            if (a == dim) break;
        }
        if (widest < 1e-10) break;
        for (std::size_t a = 0; a < dim; ++a) {
            const double full_lo = a + 1 == dim ? 0.0 : lo;
            const double full_hi = a + 1 == dim ? lmax : 1.0;
            box_lo[a] = std::max(full_lo, best_v[a] - 2.0 * step[a]);
            box_hi[a] = std::min(full_hi, best_v[a] + 2.0 * step[a]);
        }
    }

    for (std::size_t a = 0; a < alive.size(); ++a) {
        if (best_v[a] <= lo + 1e-9) return grid_oracle(p, regime, z, x, phi_next, 2.0 * lo);
    }
    GridMax out{std::vector<double>(p.n_stocks, 0.0), best_v[dim - 1], best};
    for (std::size_t a = 0; a < alive.size(); ++a) out.pi[alive[a]] = best_v[a];
    return out;
}

}  // namespace contagion::testing
