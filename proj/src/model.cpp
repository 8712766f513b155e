#include "contagion/model.hpp"

#include <cmath>
#include <string>

#include "contagion/errors.hpp"

namespace contagion {

namespace {

constexpr double kGeneratorTol = 1e-10;
constexpr double kMinCovarianceEigen = 1e-12;

std::string regime_label(std::size_t i) { return "regime " + std::to_string(i + 1); }

void require(bool ok, const std::string& message) {
    if (!ok) throw ValidationError(message);
}

bool all_finite(const Matrix& m) { return m.allFinite(); }

}  // namespace

double ModelParams::claim_variance(std::size_t regime) const {
    const auto& rc = regimes[regime];
    return rc.claim_vol.squaredNorm() + rc.claim_vol_idio.squaredNorm();
}

ModelParams validate(ModelParams params) {
    const std::size_t n = params.n_stocks;
    const std::size_t m = params.n_regimes;
    const auto mi = static_cast<Eigen::Index>(m);
    const auto ni = static_cast<Eigen::Index>(n);

    require(n >= 1, "n_stocks must be at least 1");
    require(n <= DefaultState::kMaxStocks, "n_stocks must not exceed 16 (state space is 2^n)");
    require(m >= 1, "n_regimes must be at least 1");
    require(params.stock_noise_dim >= 1, "stock noise dimension d must be at least 1");
    require(params.claim_noise_dim >= 1, "claim noise dimension d_bar must be at least 1");
    require(params.risk_aversion > 0.0 && params.risk_aversion < 1.0,
            "gamma must lie in (0,1), got " + std::to_string(params.risk_aversion));
    require(std::isfinite(params.horizon) && params.horizon > 0.0, "horizon T must be positive");

    require(params.generator.rows() == mi && params.generator.cols() == mi,
            "generator must be " + std::to_string(m) + "x" + std::to_string(m));
    require(all_finite(params.generator), "generator entries must be finite");
    for (Eigen::Index i = 0; i < mi; ++i) {
        const std::string row = "generator row " + std::to_string(i + 1);
        require(std::abs(params.generator.row(i).sum()) <= kGeneratorTol, row + ": entries must sum to 0");
        require(params.generator(i, i) <= 0.0, row + ": diagonal entry must be <= 0");
        for (Eigen::Index j = 0; j < mi; ++j) {
            if (j != i) {
                require(params.generator(i, j) >= 0.0,
                        row + ": off-diagonal entry " + std::to_string(j + 1) + " must be >= 0");
            }
        }
    }

    require(params.regimes.size() == m, "expected coefficients for " + std::to_string(m) + " regimes");
    for (std::size_t i = 0; i < m; ++i) {
        const auto& rc = params.regimes[i];
        const std::string lbl = regime_label(i);
        require(std::isfinite(rc.rate) && rc.rate > 0.0, "r must be positive (" + lbl + ")");
        require(rc.drift.size() == ni && rc.drift.allFinite(),
                "mu must have " + std::to_string(n) + " finite entries (" + lbl + ")");
        require(rc.volatility.rows() == ni &&
                    rc.volatility.cols() == static_cast<Eigen::Index>(params.stock_noise_dim) &&
                    all_finite(rc.volatility),
                "sigma must be a finite " + std::to_string(n) + "x" + std::to_string(params.stock_noise_dim) +
                    " matrix (" + lbl + ")");
        const Matrix cov = rc.volatility * rc.volatility.transpose();
        Eigen::SelfAdjointEigenSolver<Matrix> eig(cov, Eigen::EigenvaluesOnly);
        require(eig.eigenvalues().minCoeff() > kMinCovarianceEigen,
                "sigma sigma^T must be positive definite (" + lbl + ")");
        require(std::isfinite(rc.claim_drift), "c must be finite (" + lbl + ")");
        require(rc.claim_vol.size() == static_cast<Eigen::Index>(params.stock_noise_dim) && rc.claim_vol.allFinite(),
                "phi must have d = " + std::to_string(params.stock_noise_dim) + " finite entries (" + lbl + ")");
        require(rc.claim_vol.norm() > 0.0, "phi must be nonzero (" + lbl + ")");
        require(rc.claim_vol_idio.size() == static_cast<Eigen::Index>(params.claim_noise_dim) &&
                    rc.claim_vol_idio.allFinite(),
                "phi_bar must have d_bar = " + std::to_string(params.claim_noise_dim) + " finite entries (" + lbl +
                    ")");
        require(rc.claim_vol_idio.norm() > 0.0, "phi_bar must be nonzero (" + lbl + ")");
        require(std::isfinite(rc.claim_size) && rc.claim_size > 0.0, "g must be positive (" + lbl + ")");
    }

    const std::size_t states = params.state_count();
    require(params.default_intensity.size() == states,
            "h table must cover all " + std::to_string(states) + " default states");
    require(params.claim_intensity.rows() == static_cast<Eigen::Index>(states) && params.claim_intensity.cols() == mi,
            "nu table must be " + std::to_string(states) + " states x " + std::to_string(m) + " regimes");
    require(params.premium.rows() == static_cast<Eigen::Index>(states) && params.premium.cols() == mi,
            "p table must be " + std::to_string(states) + " states x " + std::to_string(m) + " regimes");
    for (std::size_t s = 0; s < states; ++s) {
        const DefaultState z(n, static_cast<std::uint32_t>(s));
        const auto& hz = params.default_intensity[s];
        require(hz.rows() == mi && hz.cols() == ni, "h table for state " + z.to_string() + " has wrong shape");
        for (std::size_t i = 0; i < m; ++i) {
            const auto ii = static_cast<Eigen::Index>(i);
            for (std::size_t j : z.survivors()) {
                const double hv = hz(ii, static_cast<Eigen::Index>(j));
                require(std::isfinite(hv) && hv > 0.0, "h must be positive for surviving stock " + std::to_string(j + 1) +
                                                           " in state " + z.to_string() + ", " + regime_label(i));
            }
            const double nv = params.claim_intensity(static_cast<Eigen::Index>(s), ii);
            require(std::isfinite(nv) && nv > 0.0, "nu must be positive in state " + z.to_string() + ", " + regime_label(i));
            require(std::isfinite(params.premium(static_cast<Eigen::Index>(s), ii)),
                    "p must be finite in state " + z.to_string() + ", " + regime_label(i));
        }
    }
    return params;
}

Vector theta(const ModelParams& params, std::size_t regime, DefaultState z) {
    if (regime >= params.n_regimes) {
        throw std::out_of_range("regime index " + std::to_string(regime + 1) + " out of range");
    }
    const auto& rc = params.regimes[regime];
    Vector out = rc.drift.array() - rc.rate;
    out += params.default_intensity[z.index()].row(static_cast<Eigen::Index>(regime)).transpose();
    return out;
}

Vector stationary_distribution(const Matrix& generator) {
    const Eigen::Index m = generator.rows();
    // Solve Q^T pi = 0 with sum(pi) = 1 by replacing one equation.
    Matrix lhs = generator.transpose();
    Vector rhs = Vector::Zero(m);
    lhs.row(m - 1).setOnes();
    rhs(m - 1) = 1.0;
    return lhs.fullPivLu().solve(rhs);
}

}  // namespace contagion
