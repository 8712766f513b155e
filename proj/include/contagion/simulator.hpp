#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "contagion/hjb_solver.hpp"
#include "contagion/model.hpp"

namespace contagion {

/// Feedback control depending on (t, regime, default state) only.
class FeedbackPolicy {
public:
    virtual ~FeedbackPolicy() = default;
    /// Writes pi (one entry per stock) and returns l for the state in force at time t.
    virtual double evaluate(double t, std::size_t regime, DefaultState z, std::span<double> pi) const = 0;
};

/// Piecewise-constant lookup of a solved PolicySurface at the left grid node.
class SurfacePolicy final : public FeedbackPolicy {
public:
    explicit SurfacePolicy(const PolicySurface& surface) : surface_(surface) {}
    double evaluate(double t, std::size_t regime, DefaultState z, std::span<double> pi) const override;

private:
    const PolicySurface& surface_;
};

/// Constant (pi, l); fractions of defaulted stocks are forced to zero.
class ConstantPolicy final : public FeedbackPolicy {
public:
    ConstantPolicy(Vector pi, double l);
    double evaluate(double t, std::size_t regime, DefaultState z, std::span<double> pi) const override;

private:
    Vector pi_;
    double l_;
};

struct SimConfig {
    std::size_t paths = 10000;
    double dt = 1e-3;
    std::uint64_t seed = 20240501;
    double x0 = 1.0;
    std::size_t regime0 = 0;  // 0-based
    DefaultState z0;
    double t0 = 0.0;
    std::size_t workers = 1;
};

struct SimReport {
    double estimate = 0.0;   // mean of X(T)^gamma / gamma
    double std_error = 0.0;
    double wealth_mean = 0.0;  // mean of X(T)
    double wealth_std_error = 0.0;
    double mean_claims = 0.0;              // mean claim count on [t0, T]
    double claims_std_error = 0.0;
    double mean_claim_intensity = 0.0;     // mean of the integral of nu(Y,Z) along paths
    double claim_intensity_std_error = 0.0;
    std::vector<double> defaults_hist;     // fraction of paths with k defaults at T, k = 0..n
    std::vector<double> claims_hist;       // fraction of paths with k claims (last bin: >= size-1)
    std::vector<double> regime_occupancy;  // average fraction of time in each regime
    std::uint64_t seed = 0;
    std::size_t workers = 1;
    std::size_t paths = 0;
};

/// One row of the optional per-path event log.
struct PathEvent {
    std::size_t path;
    double time;
    char kind;  // 'R' regime switch, 'D' default, 'C' claim
    std::size_t detail;  // new regime (1-based) or defaulted stock (1-based); 0 for claims
    double wealth_before;
    double wealth_after;
};

struct EventLogOptions {
    std::size_t max_paths = 0;  // paths 0..max_paths-1 are logged
    std::vector<PathEvent>* sink = nullptr;
};

/// Monte Carlo estimate of E[U(X(T))] under `policy`. Regime switches,
/// defaults and claims are simulated exactly as competing exponential clocks;
/// between events the diffusion advances in steps of at most `dt` on a grid
/// anchored at t0, with the control frozen at the left end of each step. Each path draws from its own generator seeded by
/// (seed, path index), and results are aggregated by pairwise summation in
/// path order, so reports do not depend on the worker count.
SimReport simulate(const ModelParams& params, const FeedbackPolicy& policy, const SimConfig& cfg,
                   const EventLogOptions& log = {});

/// estimate(scale * x0) / estimate(x0) with common random numbers.
double homogeneity_check(const ModelParams& params, const FeedbackPolicy& policy, const SimConfig& cfg, double scale);

/// Writes the event log as CSV (path,t,event,detail,wealth_before,wealth_after).
void write_event_log(std::ostream& out, const std::vector<PathEvent>& events);

/// Deterministic pairwise sum.
double pairwise_sum(std::span<const double> values);

}  // namespace contagion
