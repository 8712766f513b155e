#include "contagion/config.hpp"

#include <fstream>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "contagion/errors.hpp"

namespace contagion {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw ValidationError("config: " + msg); }

YAML::Node child(const YAML::Node& node, const std::string& key, const std::string& where) {
    const YAML::Node c = node[key];
    if (!c) fail("missing key " + where + key);
    return c;
}

double as_double(const YAML::Node& node, const std::string& what) {
    if (!node.IsScalar()) fail(what + " must be a number");
    try {
        return node.as<double>();
    } catch (const YAML::Exception&) {
        fail(what + " must be a number, got '" + node.Scalar() + "'");
    }
}

std::size_t as_count(const YAML::Node& node, const std::string& what) {
    const double v = as_double(node, what);
    if (v < 1.0 || v != static_cast<double>(static_cast<std::size_t>(v))) fail(what + " must be a positive integer");
    return static_cast<std::size_t>(v);
}

std::vector<double> as_list(const YAML::Node& node, const std::string& what) {
    if (node.IsScalar()) return {as_double(node, what)};
    if (!node.IsSequence()) fail(what + " must be a number or a list of numbers");
    std::vector<double> out;
    for (std::size_t k = 0; k < node.size(); ++k) out.push_back(as_double(node[k], what + "[" + std::to_string(k + 1) + "]"));
    return out;
}

Matrix as_matrix(const YAML::Node& node, const std::string& what) {
    if (!node.IsSequence() || node.size() == 0) fail(what + " must be a non-empty list of rows");
    const std::size_t rows = node.size();
    std::size_t cols = 0;
    Matrix out;
    for (std::size_t r = 0; r < rows; ++r) {
        const auto row = as_list(node[r], what + " row " + std::to_string(r + 1));
        if (r == 0) {
            cols = row.size();
            out.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
        } else if (row.size() != cols) {
            fail(what + " rows must have equal length");
        }
        for (std::size_t c = 0; c < cols; ++c) out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = row[c];
    }
    return out;
}

RowVector as_row(const YAML::Node& node, const std::string& what) {
    const auto v = as_list(node, what);
    RowVector out(static_cast<Eigen::Index>(v.size()));
    for (std::size_t k = 0; k < v.size(); ++k) out(static_cast<Eigen::Index>(k)) = v[k];
    return out;
}

// Per-regime vector of a state-dependent quantity, e.g. nu["(1,1)"] = [2.6, 5].
std::vector<double> per_regime(const YAML::Node& node, std::size_t m, const std::string& what) {
    auto v = as_list(node, what);
    if (v.size() != m) {
        if (v.size() < m) fail("missing key " + what + " for regime " + std::to_string(v.size() + 1));
        fail(what + " has " + std::to_string(v.size()) + " entries, expected " + std::to_string(m));
    }
    return v;
}

void reject_unknown_states(const YAML::Node& node, std::size_t n, const std::string& what) {
    for (const auto& kv : node) {
        const auto key = kv.first.as<std::string>();
        try {
            if (DefaultState::parse(key).n_stocks() != n) fail(what + " key " + key + " has the wrong number of stocks");
        } catch (const ValidationError&) {
            throw;
        } catch (const std::exception& e) {
            fail(what + " key " + key + ": " + e.what());
        }
    }
}

YAML::Node state_entry(const YAML::Node& table, const std::string& name, const std::string& key) {
    const YAML::Node c = table[key];
    if (!c) fail("missing key " + name + "[" + key + "]");
    return c;
}

}  // namespace

ModelParams parse_config(const std::string& text) {
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::Exception& e) {
        fail(std::string("malformed YAML: ") + e.what());
    }
    if (!root.IsMap()) fail("top level must be a mapping");

    ModelParams p;
    p.n_stocks = as_count(child(root, "n", ""), "n");
    p.n_regimes = as_count(child(root, "m", ""), "m");
    if (p.n_stocks > DefaultState::kMaxStocks) fail("n must not exceed 16");
    const std::size_t n = p.n_stocks;
    const std::size_t m = p.n_regimes;
    p.risk_aversion = as_double(child(root, "gamma", ""), "gamma");
    p.horizon = as_double(child(root, "T", ""), "T");
    p.generator = as_matrix(child(root, "Q", ""), "Q");

    const YAML::Node regimes = child(root, "regimes", "");
    if (!regimes.IsSequence()) fail("regimes must be a list");
    if (regimes.size() != m) fail("regimes has " + std::to_string(regimes.size()) + " entries, expected m = " + std::to_string(m));
    for (std::size_t i = 0; i < m; ++i) {
        const YAML::Node node = regimes[i];
        const std::string where = "regimes[" + std::to_string(i + 1) + "].";
        RegimeCoefficients rc;
        rc.rate = as_double(child(node, "r", where), where + "r");
        rc.drift = as_row(child(node, "mu", where), where + "mu").transpose();
        rc.volatility = as_matrix(child(node, "sigma", where), where + "sigma");
        rc.claim_drift = as_double(child(node, "c", where), where + "c");
        rc.claim_vol = as_row(child(node, "phi", where), where + "phi");
        rc.claim_vol_idio = as_row(child(node, "phi_bar", where), where + "phi_bar");
        rc.claim_size = as_double(child(node, "g", where), where + "g");
        p.regimes.push_back(std::move(rc));
    }
    p.stock_noise_dim = static_cast<std::size_t>(p.regimes.front().volatility.cols());
    p.claim_noise_dim = static_cast<std::size_t>(p.regimes.front().claim_vol_idio.size());

    const std::size_t states = p.state_count();
    const auto mi = static_cast<Eigen::Index>(m);

    // Premium: per-regime list broadcast to all states, or a per-state table.
    p.premium.resize(static_cast<Eigen::Index>(states), mi);
    const YAML::Node prem = child(root, "p", "");
    if (prem.IsMap()) reject_unknown_states(prem, n, "p");
    for (std::size_t s = 0; s < states; ++s) {
        const DefaultState z(n, static_cast<std::uint32_t>(s));
        const std::string key = z.to_string();
        const auto v = prem.IsMap() ? per_regime(state_entry(prem, "p", key), m, "p[" + key + "]") : per_regime(prem, m, "p");
        for (std::size_t i = 0; i < m; ++i) p.premium(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(i)) = v[i];
    }

    const YAML::Node nu = child(root, "nu", "");
    if (!nu.IsMap()) fail("nu must map default states to per-regime lists");
    reject_unknown_states(nu, n, "nu");
    p.claim_intensity.resize(static_cast<Eigen::Index>(states), mi);
    for (std::size_t s = 0; s < states; ++s) {
        const std::string key = DefaultState(n, static_cast<std::uint32_t>(s)).to_string();
        const auto v = per_regime(state_entry(nu, "nu", key), m, "nu[" + key + "]");
        for (std::size_t i = 0; i < m; ++i) p.claim_intensity(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(i)) = v[i];
    }

    const YAML::Node h = child(root, "h", "");
    if (!h.IsMap()) fail("h must map default states to per-stock tables");
    reject_unknown_states(h, n, "h");
    p.default_intensity.assign(states, Matrix::Zero(mi, static_cast<Eigen::Index>(n)));
    for (std::size_t s = 0; s < states; ++s) {
        const DefaultState z(n, static_cast<std::uint32_t>(s));
        if (z.is_all_defaulted()) continue;
        const std::string key = z.to_string();
        const YAML::Node table = state_entry(h, "h", key);
        if (!table.IsMap()) fail("h[" + key + "] must map stock numbers to per-regime lists");
        for (const auto& kv : table) {
            const auto stock = kv.first.as<std::string>();
            const bool known = [&] {
                for (std::size_t j = 0; j < n; ++j) {
                    if (stock == std::to_string(j + 1)) return !z.defaulted(j);
                }
                return false;
            }();
            if (!known) fail("h[" + key + "] has entry for stock " + stock + ", which is not a survivor");
        }
        for (std::size_t j : z.survivors()) {
            const std::string sk = std::to_string(j + 1);
            const std::string what = "h[" + key + "][" + sk + "]";
            if (!table[sk]) fail("missing key " + what);
            const auto v = per_regime(table[sk], m, what);
            for (std::size_t i = 0; i < m; ++i) {
                p.default_intensity[s](static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v[i];
            }
        }
    }
    return p;
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) throw IoError("cannot read " + path.string());
    return buf.str();
}

ModelParams load_config(const std::filesystem::path& path) { return parse_config(read_text_file(path)); }

}  // namespace contagion
