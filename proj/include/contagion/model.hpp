#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "contagion/default_state.hpp"

namespace contagion {

using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;
using Matrix = Eigen::MatrixXd;

/// Coefficients that depend on the regime only.
struct RegimeCoefficients {
    double rate = 0.0;           // riskless rate r(i)
    Vector drift;                // stock drifts mu(i), n entries
    Matrix volatility;           // sigma(i), n x d
    double claim_drift = 0.0;    // c(i)
    RowVector claim_vol;         // loading on the stock Brownian motion, d entries
    RowVector claim_vol_idio;    // idiosyncratic loading, d_bar entries
    double claim_size = 0.0;     // g(i)
};

/// Market and insurance coefficients of the regime-switching contagion model.
///
/// Regimes are 0-based here; configs and CSV outputs use 1-based regimes.
/// State-dependent tables are indexed by the default-state bitmask.
struct ModelParams {
    std::size_t n_stocks = 0;
    std::size_t n_regimes = 0;
    std::size_t stock_noise_dim = 0;  // d
    std::size_t claim_noise_dim = 0;  // d_bar

    Matrix generator;  // regime generator Q, per year
    std::vector<RegimeCoefficients> regimes;

    /// default_intensity[z](i, j): intensity of stock j in regime i, state z.
    /// Entries of defaulted stocks are carried but never read by the solver.
    std::vector<Matrix> default_intensity;
    /// claim_intensity(z, i) and premium(z, i).
    Matrix claim_intensity;
    Matrix premium;

    double risk_aversion = 0.5;  // gamma in (0,1)
    double horizon = 1.0;        // T in years

    std::size_t state_count() const { return std::size_t{1} << n_stocks; }

    double intensity(std::size_t regime, DefaultState z, std::size_t stock) const {
        return default_intensity[z.index()](static_cast<Eigen::Index>(regime), static_cast<Eigen::Index>(stock));
    }
    double claim_rate(std::size_t regime, DefaultState z) const {
        return claim_intensity(static_cast<Eigen::Index>(z.index()), static_cast<Eigen::Index>(regime));
    }
    double premium_rate(std::size_t regime, DefaultState z) const {
        return premium(static_cast<Eigen::Index>(z.index()), static_cast<Eigen::Index>(regime));
    }

    /// Total claim variance per unit liability: phi phi^T + phi_bar phi_bar^T.
    double claim_variance(std::size_t regime) const;
};

/// Checks every standing assumption and returns the parameters unchanged.
/// Throws ValidationError naming the violated invariant and the offending index
/// (1-based regimes, stocks and generator rows in messages).
ModelParams validate(ModelParams params);

/// Excess return mu(i) - r(i) + h(i,z). Entries of defaulted stocks are filled
/// in but never consumed downstream.
Vector theta(const ModelParams& params, std::size_t regime, DefaultState z);

/// Stationary distribution of the regime generator (null space of Q^T).
Vector stationary_distribution(const Matrix& generator);

}  // namespace contagion
