#include "contagion/cli.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <memory>
#include <ostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "contagion/config.hpp"
#include "contagion/csv_output.hpp"
#include "contagion/errors.hpp"
#include "contagion/hjb_solver.hpp"
#include "contagion/simulator.hpp"
#include "contagion/sweep.hpp"

namespace contagion {

namespace {

namespace fs = std::filesystem;

struct CommonArgs {
    std::string config;
    std::string out = ".";
    std::size_t grid_n = 1000;
    std::size_t threads = 1;
};

struct SimArgs {
    std::string policy = "optimal";
    std::size_t paths = 10000;
    double dt = 1e-3;
    std::uint64_t seed = 20240501;
    double x0 = 1.0;
    std::size_t regime = 1;
    std::string state;
    std::string event_log;
    std::size_t event_log_paths = 10;
};

ModelParams load_validated(const std::string& path) { return validate(load_config(path)); }

TimeGrid make_grid(const ModelParams& p, std::size_t n) {
    if (n < 1) throw ValidationError("--grid-N must be at least 1");
    return TimeGrid(p.horizon, n);
}

std::string to_csv(void (*writer)(std::ostream&, const ValueSurface&), const ValueSurface& v) {
    std::ostringstream s;
    writer(s, v);
    return s.str();
}

void print_summary(std::ostream& out, const ModelParams& p) {
    out << fmt::format("n = {}, m = {}, d = {}, d_bar = {}, gamma = {}, T = {}\n", p.n_stocks, p.n_regimes,
                       p.stock_noise_dim, p.claim_noise_dim, p.risk_aversion, p.horizon);
    out << "Q =\n";
    for (Eigen::Index i = 0; i < p.generator.rows(); ++i) {
        out << " ";
        for (Eigen::Index j = 0; j < p.generator.cols(); ++j) out << fmt::format(" {:>9.4g}", p.generator(i, j));
        out << '\n';
    }
    out << fmt::format("{:>6} {:>8} {:>8} {:>8} {:>10} {:>10}\n", "regime", "r", "c", "g", "|phi|", "|phi_bar|");
    for (std::size_t i = 0; i < p.n_regimes; ++i) {
        const auto& rc = p.regimes[i];
        out << fmt::format("{:>6} {:>8.4g} {:>8.4g} {:>8.4g} {:>10.4g} {:>10.4g}\n", i + 1, rc.rate, rc.claim_drift,
                           rc.claim_size, rc.claim_vol.norm(), rc.claim_vol_idio.norm());
    }
    out << fmt::format("{:>8} {:>6} {:>8} {:>8}  h (surviving stocks)\n", "z", "regime", "nu", "p");
    for (std::size_t s = 0; s < p.state_count(); ++s) {
        const DefaultState z(p.n_stocks, static_cast<std::uint32_t>(s));
        for (std::size_t i = 0; i < p.n_regimes; ++i) {
            std::string hs;
            for (std::size_t j : z.survivors()) hs += fmt::format(" h{}={:.4g}", j + 1, p.intensity(i, z, j));
            out << fmt::format("{:>8} {:>6} {:>8.4g} {:>8.4g} {}\n", z.to_string(), i + 1, p.claim_rate(i, z),
                               p.premium_rate(i, z), hs);
        }
    }
}

void print_phi0(std::ostream& out, const Solution& sol) {
    const std::size_t n = sol.value.n_stocks();
    out << fmt::format("{:>8} {:>6} {:>20}\n", "z", "regime", "phi(0)");
    for (std::size_t s = 0; s < (std::size_t{1} << n); ++s) {
        const DefaultState z(n, static_cast<std::uint32_t>(s));
        for (std::size_t i = 0; i < sol.value.n_regimes(); ++i) {
            out << fmt::format("{:>8} {:>6} {:>20.15g}\n", z.to_string(), i + 1, sol.value(0, i, z));
        }
    }
}

int cmd_validate(const CommonArgs& a, std::ostream& out) {
    const ModelParams p = load_validated(a.config);
    print_summary(out, p);
    out << "config OK\n";
    return kExitOk;
}

int cmd_solve(const CommonArgs& a, std::ostream& out) {
    const ModelParams p = load_validated(a.config);
    const TimeGrid grid = make_grid(p, a.grid_n);
    const auto start = std::chrono::steady_clock::now();
    const Solution sol = solve_all(p, grid, SolverOptions{a.threads, {}});
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    const fs::path dir(a.out);
    write_file(dir / "phi.csv", to_csv(&write_phi_csv, sol.value));
    std::ostringstream pol;
    write_policy_csv(pol, sol.policy);
    write_file(dir / "policy.csv", pol.str());

    print_phi0(out, sol);
    out << fmt::format("solved {} states x {} regimes on N = {} in {:.3f} s; wrote {} and {}\n", p.state_count(),
                       p.n_regimes, a.grid_n, secs, (dir / "phi.csv").string(), (dir / "policy.csv").string());
    return kExitOk;
}

int cmd_sweep(const CommonArgs& a, const std::string& spec_path, std::ostream& out) {
    const ModelParams p = load_validated(a.config);
    const TimeGrid grid = make_grid(p, a.grid_n);
    const SweepSpec spec = parse_sweep_spec(read_text_file(spec_path), p, grid);
    const SweepResult res = run_sweep(p, spec, grid, a.threads);
    std::ostringstream csv;
    write_sweep_csv(csv, res);
    const fs::path file = fs::path(a.out) / "sweep.csv";
    write_file(file, csv.str());
    out << csv.str().substr(csv.str().find('\n') + 1);
    out << fmt::format("{} values x {} observables; wrote {}\n", res.values.size(), res.columns.size(), file.string());
    return kExitOk;
}

std::unique_ptr<FeedbackPolicy> make_policy(const std::string& spec, const ModelParams& p, const Solution& sol) {
    if (spec == "optimal") return std::make_unique<SurfacePolicy>(sol.policy);
    if (spec == "zero") return std::make_unique<ConstantPolicy>(Vector::Zero(static_cast<Eigen::Index>(p.n_stocks)), 0.0);
    const std::string prefix = "constant:";
    if (spec.rfind(prefix, 0) == 0) {
        std::vector<double> v;
        std::stringstream ss(spec.substr(prefix.size()));
        std::string item;
        while (std::getline(ss, item, ',')) {
            try {
                std::size_t pos = 0;
                v.push_back(std::stod(item, &pos));
                if (pos != item.size()) throw std::invalid_argument(item);
            } catch (const std::exception&) {
                throw ValidationError("--policy constant: cannot parse '" + item + "'");
            }
        }
        if (v.size() != p.n_stocks + 1) {
            throw ValidationError("--policy constant needs " + std::to_string(p.n_stocks) + " pi values and l");
        }
        Vector pi(static_cast<Eigen::Index>(p.n_stocks));
        for (std::size_t j = 0; j < p.n_stocks; ++j) pi(static_cast<Eigen::Index>(j)) = v[j];
        const double l = v.back();
        for (std::size_t i = 0; i < p.n_regimes; ++i) {
            if (l * p.regimes[i].claim_size > 1.0) {
                throw ValidationError("--policy constant: l g must be <= 1 (regime " + std::to_string(i + 1) + ")");
            }
        }
        return std::make_unique<ConstantPolicy>(pi, l);
    }
    throw ValidationError("--policy must be optimal, zero or constant:<pi_1,...,pi_n,l>, got '" + spec + "'");
}

int cmd_simulate(const CommonArgs& a, const SimArgs& s, std::ostream& out) {
    const ModelParams p = load_validated(a.config);
    const TimeGrid grid = make_grid(p, a.grid_n);
    if (s.regime < 1 || s.regime > p.n_regimes) {
        throw ValidationError("--regime must lie in 1.." + std::to_string(p.n_regimes));
    }
    SimConfig cfg;
    cfg.paths = s.paths;
    cfg.dt = s.dt;
    cfg.seed = s.seed;
    cfg.x0 = s.x0;
    cfg.regime0 = s.regime - 1;
    cfg.z0 = s.state.empty() ? DefaultState::all_alive(p.n_stocks) : DefaultState::parse(s.state);
    if (cfg.z0.n_stocks() != p.n_stocks) throw ValidationError("--state must have " + std::to_string(p.n_stocks) + " entries");
    cfg.workers = a.threads;

    const Solution sol = solve_all(p, grid, SolverOptions{a.threads, {}});
    const auto policy = make_policy(s.policy, p, sol);
    const double target = std::pow(cfg.x0, p.risk_aversion) * sol.value(0, cfg.regime0, cfg.z0);

    std::vector<PathEvent> events;
    EventLogOptions log;
    if (!s.event_log.empty()) {
        log.max_paths = s.event_log_paths;
        log.sink = &events;
    }
    const SimReport r = simulate(p, *policy, cfg, log);

    std::ostringstream csv;
    write_csv_banner(csv);
    csv << "policy,paths,dt,seed,workers,x0,regime,z_bitmask,estimate,std_error,target,wealth_mean,wealth_std_error,"
           "mean_claims,claims_std_error,mean_claim_intensity,claim_intensity_std_error";
    for (std::size_t i = 0; i < p.n_regimes; ++i) csv << ",occupancy_" << i + 1;
    for (std::size_t k = 0; k <= p.n_stocks; ++k) csv << ",defaults_" << k;
    csv << '\n';
    // constant:<...> holds commas, so the policy cell is quoted when needed.
    const std::string policy_cell = s.policy.find(',') == std::string::npos ? s.policy : "\"" + s.policy + "\"";
    csv << fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}", policy_cell, r.paths, cfg.dt, r.seed,
                       r.workers, cfg.x0, s.regime, cfg.z0.index(), r.estimate, r.std_error, target, r.wealth_mean,
                       r.wealth_std_error, r.mean_claims, r.claims_std_error, r.mean_claim_intensity,
                       r.claim_intensity_std_error);
    for (double v : r.regime_occupancy) csv << ',' << format_number(v);
    for (double v : r.defaults_hist) csv << ',' << format_number(v);
    csv << '\n';
    const fs::path file = fs::path(a.out) / "sim.csv";
    write_file(file, csv.str());
    if (!s.event_log.empty()) {
        std::ostringstream ev;
        write_event_log(ev, events);
        write_file(s.event_log, ev.str());
    }

    out << fmt::format("estimate  {:.10g} +/- {:.3g} (1 SE, {} paths, seed {}, {} workers)\n", r.estimate, r.std_error,
                       r.paths, r.seed, r.workers);
    out << fmt::format("target    {:.10g} (x0^gamma phi(0,{},{}))\n", target, s.regime, cfg.z0.to_string());
    out << fmt::format("deviation {:.3g} SE\n", r.std_error > 0 ? (r.estimate - target) / r.std_error : 0.0);
    out << fmt::format("wrote {}\n", file.string());
    return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Optimal investment and risk control under regime switching and default contagion"};
    app.name("contagion-hjb");
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string("contagion-hjb ") + kCsvVersion);

    CommonArgs common;
    SimArgs sim;
    std::string spec_path;

    const auto add_common = [&](CLI::App* sub, bool writes) {
        sub->add_option("--config", common.config, "Model config file (YAML)")->required();
        sub->add_option("--grid-N", common.grid_n, "Number of time steps on [0, T]")->capture_default_str();
        sub->add_option("--threads", common.threads, "Worker threads")->capture_default_str()->check(CLI::PositiveNumber);
        if (writes) sub->add_option("--out", common.out, "Output directory")->capture_default_str();
    };

    CLI::App* validate_cmd = app.add_subcommand("validate", "Check a config and print a parameter summary");
    validate_cmd->add_option("--config", common.config, "Model config file (YAML)")->required();

    CLI::App* solve_cmd = app.add_subcommand("solve", "Solve for phi and the optimal policy; write phi.csv and policy.csv");
    add_common(solve_cmd, true);

    CLI::App* sweep_cmd = app.add_subcommand("sweep", "Re-solve over a parameter grid; write sweep.csv");
    add_common(sweep_cmd, true);
    sweep_cmd->add_option("--spec", spec_path, "Sweep spec file (YAML)")->required();

    CLI::App* sim_cmd = app.add_subcommand("simulate", "Monte Carlo estimate of expected terminal utility; write sim.csv");
    add_common(sim_cmd, true);
    sim_cmd->add_option("--policy", sim.policy, "optimal | zero | constant:<pi_1,...,pi_n,l>")->capture_default_str();
    sim_cmd->add_option("--paths", sim.paths, "Number of paths")->capture_default_str()->check(CLI::PositiveNumber);
    sim_cmd->add_option("--dt", sim.dt, "Maximum diffusion step between events")->capture_default_str();
    sim_cmd->add_option("--seed", sim.seed, "RNG seed")->capture_default_str();
    sim_cmd->add_option("--x0", sim.x0, "Initial wealth")->capture_default_str();
    sim_cmd->add_option("--regime", sim.regime, "Initial regime (1-based)")->capture_default_str();
    sim_cmd->add_option("--state", sim.state, "Initial default state, e.g. (0,0); default all alive");
    sim_cmd->add_option("--event-log", sim.event_log, "Write a per-path event log CSV here");
    sim_cmd->add_option("--event-log-paths", sim.event_log_paths, "Paths included in the event log")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitValidation;
    }

    try {
        if (*validate_cmd) return cmd_validate(common, out);
        if (*solve_cmd) return cmd_solve(common, out);
        if (*sweep_cmd) return cmd_sweep(common, spec_path, out);
        if (*sim_cmd) return cmd_simulate(common, sim, out);
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const IoError& e) {
        err << "I/O error: " << e.what() << '\n';
        return kExitIo;
    } catch (const NumericalError& e) {
        err << "numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const std::out_of_range& e) {
        err << "error: " << e.what() << '\n';
        return kExitValidation;
    }
    return kExitValidation;
}

}  // namespace contagion
