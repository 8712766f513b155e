#include "contagion/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <ostream>
#include <random>
#include <string>
#include <thread>

#include <fmt/format.h>

#include "contagion/errors.hpp"

namespace contagion {

double SurfacePolicy::evaluate(double t, std::size_t regime, DefaultState z, std::span<double> pi) const {
    const std::size_t k = surface_.grid().left_node(t);
    const double* src = surface_.pi_data(k, regime, z);
    std::copy(src, src + surface_.n_stocks(), pi.begin());
    return surface_.l(k, regime, z);
}

ConstantPolicy::ConstantPolicy(Vector pi, double l) : pi_(std::move(pi)), l_(l) {
    if ((pi_.array() > 1.0).any()) throw ValidationError("constant policy: every pi_j must be <= 1");
    if (!(l_ >= 0.0)) throw ValidationError("constant policy: l must be >= 0");
}

double ConstantPolicy::evaluate(double, std::size_t, DefaultState z, std::span<double> pi) const {
    for (std::size_t j = 0; j < pi.size(); ++j) {
        pi[j] = z.defaulted(j) ? 0.0 : pi_(static_cast<Eigen::Index>(j));
    }
    return l_;
}

double pairwise_sum(std::span<const double> values) {
    if (values.size() <= 8) {
        double s = 0.0;
        for (double v : values) s += v;
        return s;
    }
    const std::size_t half = values.size() / 2;
    return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

namespace {

struct PathResult {
    double utility = 0.0;
    double wealth = 0.0;
    double claims = 0.0;
    double claim_intensity = 0.0;
    std::size_t defaults = 0;
    std::vector<double> regime_time;
    std::vector<PathEvent> events;
};

struct Mean {
    double mean;
    double std_error;
};

Mean mean_and_error(const std::vector<double>& xs) {
    const double n = static_cast<double>(xs.size());
    const double mean = pairwise_sum(xs) / n;
    if (xs.size() < 2) return {mean, 0.0};
    std::vector<double> sq(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) sq[i] = (xs[i] - mean) * (xs[i] - mean);
    const double var = pairwise_sum(sq) / (n - 1.0);
    return {mean, std::sqrt(var / n)};
}

class PathSimulator {
public:
    PathSimulator(const ModelParams& params, const FeedbackPolicy& policy, const SimConfig& cfg)
        : p_(params), policy_(policy), cfg_(cfg), pi_(params.n_stocks) {}

    PathResult run(std::size_t path, bool log_events) {
        std::seed_seq seq{static_cast<std::uint32_t>(cfg_.seed), static_cast<std::uint32_t>(cfg_.seed >> 32),
                          static_cast<std::uint32_t>(path), static_cast<std::uint32_t>(path >> 32)};
        std::mt19937_64 rng(seq);
        std::normal_distribution<double> normal(0.0, 1.0);
        std::exponential_distribution<double> expo(1.0);
        std::uniform_real_distribution<double> unif(0.0, 1.0);

        const double horizon = p_.horizon;
        PathResult res;
        res.regime_time.assign(p_.n_regimes, 0.0);
        double t = cfg_.t0;
        double x = cfg_.x0;
        std::size_t regime = cfg_.regime0;
        DefaultState z = cfg_.z0;
        std::size_t step = 1;
        const auto boundary = [&](std::size_t k) { return std::min(horizon, cfg_.t0 + static_cast<double>(k) * cfg_.dt); };

        double total_rate = 0.0;
        double next_event = 0.0;
        const auto reset_clock = [&] {
            total_rate = event_rate(regime, z);
            next_event = total_rate > 0.0 ? t + expo(rng) / total_rate : std::numeric_limits<double>::infinity();
        };
        reset_clock();

        while (t < horizon) {
            const double stop = boundary(step);
            const bool event_first = next_event < stop;
            const double until = event_first ? next_event : stop;

            const double nu = p_.claim_rate(regime, z);
            res.claim_intensity += nu * (until - t);
            res.regime_time[regime] += until - t;
            x = diffuse(x, t, until - t, regime, z, normal(rng));
            t = until;
            if (!event_first) {
                ++step;
                continue;
            }

            const double before = x;
            const double l = policy_.evaluate(t, regime, z, pi_);
            double u = unif(rng) * total_rate;
            const double leave = -p_.generator(static_cast<Eigen::Index>(regime), static_cast<Eigen::Index>(regime));
            char kind = 'C';
            std::size_t detail = 0;
            if (u < leave) {
                double pick = unif(rng) * leave;
                std::size_t dest = regime;
                for (std::size_t j = 0; j < p_.n_regimes; ++j) {
                    if (j == regime) continue;
                    dest = j;
                    pick -= p_.generator(static_cast<Eigen::Index>(regime), static_cast<Eigen::Index>(j));
                    if (pick < 0.0) break;
                }
                regime = dest;
                kind = 'R';
                detail = dest + 1;
            } else {
                u -= leave;
                bool defaulted = false;
                for (std::size_t j : z.survivors()) {
                    const double hj = p_.intensity(regime, z, j);
                    if (u < hj) {
                        x *= 1.0 - pi_[j];
                        z = z.flip(j + 1);
                        kind = 'D';
                        detail = j + 1;
                        defaulted = true;
                        break;
                    }
                    u -= hj;
                }
                if (!defaulted) {
                    x *= 1.0 - l * p_.regimes[regime].claim_size;
                    res.claims += 1.0;
                }
            }
            if (!(x >= 0.0)) {
                throw NumericalError("simulate: negative wealth after event on path " + std::to_string(path) +
                                     " (policy violates pi_j <= 1 or l g <= 1)");
            }
            if (log_events) res.events.push_back({path, t, kind, detail, before, x});
            reset_clock();
        }

        res.wealth = x;
        res.defaults = z.weight();
        res.utility = std::pow(x, p_.risk_aversion) / p_.risk_aversion;
        if (!std::isfinite(res.utility)) {
            throw NumericalError("simulate: non-finite terminal utility on path " + std::to_string(path));
        }
        return res;
    }

private:
    double event_rate(std::size_t regime, DefaultState z) const {
        double rate = -p_.generator(static_cast<Eigen::Index>(regime), static_cast<Eigen::Index>(regime));
        for (std::size_t j : z.survivors()) rate += p_.intensity(regime, z, j);
        return rate + p_.claim_rate(regime, z);
    }

    // Continuous part of the wealth dynamics over [t, t + h] with the control
    // frozen at its value at t. With constant coefficients X is a geometric
    // Brownian motion, so the step is taken exactly in log space. The d + d_bar
    // Brownian increments enter through their combined Gaussian loading, which
    // has the same law as drawing them separately.
    double diffuse(double x, double t, double h, std::size_t regime, DefaultState z, double shock) {
        if (h <= 0.0) return x;
        const auto& rc = p_.regimes[regime];
        const double l = policy_.evaluate(t, regime, z, pi_);
        double drift = rc.rate + l * (p_.premium_rate(regime, z) - rc.claim_drift);
        RowVector loading = -l * rc.claim_vol;
        for (std::size_t j = 0; j < p_.n_stocks; ++j) {
            if (pi_[j] == 0.0) continue;
            const auto jj = static_cast<Eigen::Index>(j);
            drift += pi_[j] * (rc.drift(jj) - rc.rate + p_.intensity(regime, z, j));
            loading += pi_[j] * rc.volatility.row(jj);
        }
        const double vol = std::sqrt(loading.squaredNorm() + l * l * rc.claim_vol_idio.squaredNorm());
        const double next = x * std::exp((drift - 0.5 * vol * vol) * h + vol * std::sqrt(h) * shock);
        if (!(next >= 0.0) || !std::isfinite(next)) {
            throw NumericalError("simulate: wealth left [0, inf) in a diffusion step at t = " + std::to_string(t));
        }
        return next;
    }

    const ModelParams& p_;
    const FeedbackPolicy& policy_;
    const SimConfig& cfg_;
    std::vector<double> pi_;
};

void check_config(const ModelParams& params, const SimConfig& cfg) {
    if (cfg.paths < 1) throw ValidationError("simulate: paths must be >= 1");
    if (!(cfg.x0 > 0.0)) throw ValidationError("simulate: x0 must be positive");
    if (!(cfg.t0 >= 0.0 && cfg.t0 < params.horizon)) throw ValidationError("simulate: t0 must lie in [0, T)");
    if (!(cfg.dt > 0.0 && cfg.dt <= params.horizon - cfg.t0 + 1e-12)) {
        throw ValidationError("simulate: dt must lie in (0, T - t0]");
    }
    if (cfg.regime0 >= params.n_regimes) throw ValidationError("simulate: initial regime out of range");
    if (cfg.z0.n_stocks() != params.n_stocks) throw ValidationError("simulate: initial default state has wrong size");
}

}  // namespace

SimReport simulate(const ModelParams& params, const FeedbackPolicy& policy, const SimConfig& cfg,
                   const EventLogOptions& log) {
    check_config(params, cfg);
    std::vector<PathResult> results(cfg.paths);
    const std::size_t workers = std::max<std::size_t>(1, std::min(cfg.workers, cfg.paths));

    std::exception_ptr error;
    std::mutex error_mutex;
    const auto work = [&](std::size_t worker) {
        try {
            PathSimulator sim(params, policy, cfg);
            for (std::size_t path = worker; path < cfg.paths; path += workers) {
                results[path] = sim.run(path, log.sink != nullptr && path < log.max_paths);
            }
        } catch (...) {
            std::lock_guard lock(error_mutex);
            if (!error) error = std::current_exception();
        }
    };
    if (workers == 1) {
        work(0);
    } else {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work, w);
        for (auto& th : pool) th.join();
    }
    if (error) std::rethrow_exception(error);

    const std::size_t n = cfg.paths;
    std::vector<double> buf(n);
    const auto collect = [&](auto field) {
        for (std::size_t i = 0; i < n; ++i) buf[i] = field(results[i]);
        return mean_and_error(buf);
    };

    SimReport rep;
    rep.seed = cfg.seed;
    rep.workers = workers;
    rep.paths = n;
    const Mean u = collect([](const PathResult& r) { return r.utility; });
    rep.estimate = u.mean;
    rep.std_error = u.std_error;
    const Mean w = collect([](const PathResult& r) { return r.wealth; });
    rep.wealth_mean = w.mean;
    rep.wealth_std_error = w.std_error;
    const Mean c = collect([](const PathResult& r) { return r.claims; });
    rep.mean_claims = c.mean;
    rep.claims_std_error = c.std_error;
    const Mean ci = collect([](const PathResult& r) { return r.claim_intensity; });
    rep.mean_claim_intensity = ci.mean;
    rep.claim_intensity_std_error = ci.std_error;

    rep.regime_occupancy.assign(params.n_regimes, 0.0);
    const double span = params.horizon - cfg.t0;
    for (std::size_t i = 0; i < params.n_regimes; ++i) {
        rep.regime_occupancy[i] = collect([&](const PathResult& r) { return r.regime_time[i] / span; }).mean;
    }

    rep.defaults_hist.assign(params.n_stocks + 1, 0.0);
    std::size_t max_claims = 0;
    for (const auto& r : results) max_claims = std::max(max_claims, static_cast<std::size_t>(r.claims));
    rep.claims_hist.assign(max_claims + 1, 0.0);
    for (const auto& r : results) {
        rep.defaults_hist[r.defaults] += 1.0;
        rep.claims_hist[static_cast<std::size_t>(r.claims)] += 1.0;
    }
    for (double& v : rep.defaults_hist) v /= static_cast<double>(n);
    for (double& v : rep.claims_hist) v /= static_cast<double>(n);

    if (log.sink) {
        for (std::size_t path = 0; path < std::min(n, log.max_paths); ++path) {
            log.sink->insert(log.sink->end(), results[path].events.begin(), results[path].events.end());
        }
    }
    return rep;
}

double homogeneity_check(const ModelParams& params, const FeedbackPolicy& policy, const SimConfig& cfg, double scale) {
    if (!(scale > 0.0)) throw ValidationError("homogeneity_check: scale must be positive");
    SimConfig scaled = cfg;
    scaled.x0 = cfg.x0 * scale;
    const SimReport base = simulate(params, policy, cfg);
    const SimReport other = simulate(params, policy, scaled);
    return other.estimate / base.estimate;
}

void write_event_log(std::ostream& out, const std::vector<PathEvent>& events) {
    out << "path,t,event,detail,wealth_before,wealth_after\n";
    for (const auto& e : events) {
        out << fmt::format("{},{:.17g},{},{},{:.17g},{:.17g}\n", e.path, e.time, e.kind, e.detail, e.wealth_before,
                           e.wealth_after);
    }
}

}  // namespace contagion
