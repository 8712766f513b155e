#include "contagion/sweep.hpp"

#include <cmath>
#include <map>
#include <ostream>
#include <regex>

#include <fmt/format.h>
#include <yaml-cpp/yaml.h>

#include "contagion/csv_output.hpp"
#include "contagion/errors.hpp"
#include "contagion/parallel.hpp"

namespace contagion {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw ValidationError("sweep: " + msg); }

std::size_t parse_index(const std::string& text, std::size_t count, const std::string& what) {
    std::size_t pos = 0;
    unsigned long v = 0;
    try {
        v = std::stoul(text, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (pos != text.size() || v < 1 || v > count) {
        fail(what + " must be an integer in 1.." + std::to_string(count) + ", got '" + text + "'");
    }
    return static_cast<std::size_t>(v - 1);
}

DefaultState parse_state(const std::string& text, std::size_t n) {
    DefaultState z;
    try {
        z = DefaultState::parse(text);
    } catch (const std::exception& e) {
        fail("bad default state '" + text + "': " + e.what());
    }
    if (z.n_stocks() != n) fail("default state '" + text + "' must have " + std::to_string(n) + " entries");
    return z;
}

std::string compact_state(DefaultState z) {
    std::string s;
    for (std::size_t j = 0; j < z.n_stocks(); ++j) s += z.defaulted(j) ? '1' : '0';
    return s;
}

YAML::Node load_yaml(const std::string& text) {
    try {
        return YAML::Load(text);
    } catch (const YAML::Exception& e) {
        fail(std::string("malformed YAML: ") + e.what());
    }
}

template <class T>
T scalar_as(const YAML::Node& node, const std::string& what) {
    if (!node || !node.IsScalar()) fail(what + " must be a scalar");
    try {
        return node.as<T>();
    } catch (const YAML::Exception&) {
        fail(what + ": cannot parse '" + node.Scalar() + "'");
    }
}

std::vector<YAML::Node> as_items(const YAML::Node& node) {
    std::vector<YAML::Node> out;
    if (node.IsSequence()) {
        for (const auto& item : node) out.push_back(item);
    } else {
        out.push_back(node);
    }
    return out;
}

}  // namespace

SweepTarget parse_sweep_target(const std::string& text, const ModelParams& base) {
    static const std::regex whole(R"(^([A-Za-z_]+)((?:\[[a-z]+=[^\]]+\])*)$)");
    static const std::regex part(R"(\[([a-z]+)=([^\]]+)\])");
    std::smatch m;
    if (!std::regex_match(text, m, whole)) fail("cannot parse target '" + text + "'");

    static const std::map<std::string, SweepTarget::Kind> kinds = {
        {"h", SweepTarget::Kind::h},         {"nu", SweepTarget::Kind::nu},
        {"p", SweepTarget::Kind::p},         {"r", SweepTarget::Kind::r},
        {"mu", SweepTarget::Kind::mu},       {"c", SweepTarget::Kind::c},
        {"g", SweepTarget::Kind::g},         {"gamma", SweepTarget::Kind::gamma},
        {"sigma_scale", SweepTarget::Kind::sigma_scale},
        {"Q_scale", SweepTarget::Kind::q_scale}};
    const auto kind = kinds.find(m[1].str());
    if (kind == kinds.end()) fail("unknown target '" + m[1].str() + "'");

    SweepTarget t;
    t.kind = kind->second;
    t.text = text;
    const std::string keys = m[2].str();
    for (auto it = std::sregex_iterator(keys.begin(), keys.end(), part); it != std::sregex_iterator(); ++it) {
        const std::string key = (*it)[1].str();
        const std::string val = (*it)[2].str();
        if (key == "stock") {
            t.stock = parse_index(val, base.n_stocks, "stock");
        } else if (key == "regime") {
            t.regime = parse_index(val, base.n_regimes, "regime");
        } else if (key == "z") {
            t.state = parse_state(val, base.n_stocks);
        } else {
            fail("unknown selector '" + key + "' in target '" + text + "'");
        }
    }

    using K = SweepTarget::Kind;
    const bool wants_stock = t.kind == K::h || t.kind == K::mu;
    const bool wants_state = t.kind == K::h || t.kind == K::nu || t.kind == K::p;
    const bool wants_regime = t.kind != K::gamma && t.kind != K::q_scale;
    const bool regime_required = wants_regime && t.kind != K::sigma_scale;
    const bool state_required = t.kind == K::h || t.kind == K::nu;
    if (t.stock && !wants_stock) fail("target '" + text + "' takes no stock selector");
    if (t.state && !wants_state) fail("target '" + text + "' takes no z selector");
    if (t.regime && !wants_regime) fail("target '" + text + "' takes no regime selector");
    if (wants_stock && !t.stock) fail("target '" + text + "' needs [stock=j]");
    if (state_required && !t.state) fail("target '" + text + "' needs [z=(...)]");
    if (regime_required && !t.regime) fail("target '" + text + "' needs [regime=i]");
    if (t.kind == K::h && t.state->defaulted(*t.stock)) {
        fail("target '" + text + "': stock " + std::to_string(*t.stock + 1) + " has defaulted in that state");
    }
    return t;
}

ModelParams apply_sweep_value(const ModelParams& base, const SweepTarget& target, double value) {
    ModelParams p = base;
    using K = SweepTarget::Kind;
    const auto ri = target.regime.value_or(0);
    const auto rx = static_cast<Eigen::Index>(ri);
    switch (target.kind) {
        case K::h:
            p.default_intensity[target.state->index()](rx, static_cast<Eigen::Index>(*target.stock)) = value;
            break;
        case K::nu:
            p.claim_intensity(static_cast<Eigen::Index>(target.state->index()), rx) = value;
            break;
        case K::p:
            if (target.state) {
                p.premium(static_cast<Eigen::Index>(target.state->index()), rx) = value;
            } else {
                p.premium.col(rx).setConstant(value);
            }
            break;
        case K::r:
            p.regimes[ri].rate = value;
            break;
        case K::mu:
            p.regimes[ri].drift(static_cast<Eigen::Index>(*target.stock)) = value;
            break;
        case K::c:
            p.regimes[ri].claim_drift = value;
            break;
        case K::g:
            p.regimes[ri].claim_size = value;
            break;
        case K::gamma:
            p.risk_aversion = value;
            break;
        case K::sigma_scale:
            for (std::size_t i = 0; i < p.n_regimes; ++i) {
                if (!target.regime || *target.regime == i) p.regimes[i].volatility *= value;
            }
            break;
        case K::q_scale:
            p.generator *= value;
            break;
    }
    return p;
}

SweepSpec parse_sweep_spec(const std::string& text, const ModelParams& base, const TimeGrid& grid) {
    const YAML::Node root = load_yaml(text);
    if (!root.IsMap()) fail("spec must be a mapping");
    SweepSpec spec;
    spec.target = parse_sweep_target(scalar_as<std::string>(root["target"], "target"), base);

    const YAML::Node values = root["values"];
    if (!values || !values.IsSequence() || values.size() == 0) fail("values must be a non-empty list");
    for (std::size_t k = 0; k < values.size(); ++k) {
        spec.values.push_back(scalar_as<double>(values[k], "values[" + std::to_string(k + 1) + "]"));
        if (!std::isfinite(spec.values.back())) fail("values must be finite");
    }
    if (spec.values.size() > 1) {
        const bool up = spec.values[1] > spec.values[0];
        for (std::size_t k = 1; k < spec.values.size(); ++k) {
            const bool ok = up ? spec.values[k] > spec.values[k - 1] : spec.values[k] < spec.values[k - 1];
            if (!ok) fail("values must be strictly monotone");
        }
    }

    const YAML::Node obs = root["observables"];
    if (!obs || !obs.IsSequence() || obs.size() == 0) fail("observables must be a non-empty list");
    const std::regex pi_re(R"(^pi_star\[(\d+)\]$)");
    for (std::size_t k = 0; k < obs.size(); ++k) {
        const YAML::Node o = obs[k];
        const std::string where = "observables[" + std::to_string(k + 1) + "]";
        if (!o.IsMap()) fail(where + " must be a mapping");
        const auto quantity = scalar_as<std::string>(o["quantity"], where + ".quantity");

        Observable proto;
        std::string stem;
        std::smatch m;
        if (quantity == "phi") {
            proto.quantity = Observable::Quantity::phi;
            stem = "phi";
        } else if (quantity == "l_star") {
            proto.quantity = Observable::Quantity::l_star;
            stem = "l_star";
        } else if (quantity == "stock_share") {
            proto.quantity = Observable::Quantity::stock_share;
            stem = "stock_share";
        } else if (quantity == "phi_gap") {
            proto.quantity = Observable::Quantity::phi_gap;
            if (base.n_regimes < 2) fail(where + ": phi_gap needs at least two regimes");
            if (const YAML::Node rg = o["regimes"]) {
                if (!rg.IsSequence() || rg.size() != 2) fail(where + ".regimes must list two regimes");
                proto.regime = parse_index(scalar_as<std::string>(rg[0], where + ".regimes"), base.n_regimes, where + ".regimes");
                proto.regime_b = parse_index(scalar_as<std::string>(rg[1], where + ".regimes"), base.n_regimes, where + ".regimes");
            } else {
                proto.regime = 0;
                proto.regime_b = 1;
            }
            stem = fmt::format("phi_gap_{}_{}", proto.regime + 1, proto.regime_b + 1);
        } else if (std::regex_match(quantity, m, pi_re)) {
            proto.quantity = Observable::Quantity::pi_star;
            proto.stock = parse_index(m[1].str(), base.n_stocks, where + " stock");
            stem = fmt::format("pi_star_{}", proto.stock + 1);
        } else {
            fail(where + ": unknown quantity '" + quantity + "'");
        }

        const bool gap = proto.quantity == Observable::Quantity::phi_gap;
        if (!gap) {
            proto.regime = parse_index(scalar_as<std::string>(o["regime"], where + ".regime"), base.n_regimes, where + ".regime");
        } else if (o["regime"]) {
            fail(where + ": phi_gap takes 'regimes', not 'regime'");
        }
        if (!o["t"]) fail(where + ": missing key t");
        if (!o["z"]) fail(where + ": missing key z");
        for (const auto& tn : as_items(o["t"])) {
            const double t = scalar_as<double>(tn, where + ".t");
            try {
                grid.node_at(t);
            } catch (const std::exception&) {
                fail(where + ": t = " + format_number(t) + " is not a grid node");
            }
            for (const auto& zn : as_items(o["z"])) {
                Observable ob = proto;
                ob.t = t;
                ob.state = parse_state(scalar_as<std::string>(zn, where + ".z"), base.n_stocks);
                if (ob.quantity == Observable::Quantity::pi_star && ob.state.defaulted(ob.stock)) {
                    fail(where + ": stock " + std::to_string(ob.stock + 1) + " has defaulted in " + ob.state.to_string());
                }
                ob.label = stem + "_t" + format_number(t) + (gap ? "" : "_i" + std::to_string(ob.regime + 1)) + "_z" +
                           compact_state(ob.state);
                spec.observables.push_back(std::move(ob));
            }
        }
    }
    return spec;
}

double evaluate_observable(const Solution& solution, const Observable& obs) {
    const std::size_t k = solution.value.grid().node_at(obs.t);
    switch (obs.quantity) {
        case Observable::Quantity::phi:
            return solution.value(k, obs.regime, obs.state);
        case Observable::Quantity::pi_star:
            return solution.policy.pi(k, obs.regime, obs.state, obs.stock);
        case Observable::Quantity::l_star:
            return solution.policy.l(k, obs.regime, obs.state);
        case Observable::Quantity::phi_gap:
            return std::abs(solution.value(k, obs.regime, obs.state) - solution.value(k, obs.regime_b, obs.state));
        case Observable::Quantity::stock_share: {
            double s = 0.0;
            for (std::size_t j = 0; j < solution.policy.n_stocks(); ++j) s += solution.policy.pi(k, obs.regime, obs.state, j);
            return s;
        }
    }
    return 0.0;
}

SweepResult run_sweep(const ModelParams& base, const SweepSpec& spec, const TimeGrid& grid, std::size_t threads,
                      const OptimizerOptions& optimizer) {
    SweepResult result;
    result.values = spec.values;
    for (const auto& ob : spec.observables) result.columns.push_back(ob.label);
    result.rows.assign(spec.values.size(), std::vector<double>(spec.observables.size(), 0.0));

    run_parallel(spec.values.size(), threads, [&](std::size_t v) {
        ModelParams p;
        try {
            p = validate(apply_sweep_value(base, spec.target, spec.values[v]));
        } catch (const ValidationError& e) {
            throw ValidationError(spec.target.text + " = " + format_number(spec.values[v]) + ": " + e.what());
        }
        SolverOptions opts;
        opts.optimizer = optimizer;
        const Solution sol = solve_all(p, grid, opts);
        for (std::size_t o = 0; o < spec.observables.size(); ++o) {
            result.rows[v][o] = evaluate_observable(sol, spec.observables[o]);
        }
    });
    return result;
}

void write_sweep_csv(std::ostream& out, const SweepResult& result) {
    write_csv_banner(out);
    out << "sweep_value";
    for (const auto& c : result.columns) out << ',' << c;
    out << '\n';
    for (std::size_t v = 0; v < result.values.size(); ++v) {
        out << format_number(result.values[v]);
        for (double x : result.rows[v]) out << ',' << format_number(x);
        out << '\n';
    }
}

}  // namespace contagion
