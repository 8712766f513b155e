#include <doctest.h>

#include <string>

#include "contagion/config.hpp"
#include "contagion/errors.hpp"
#include "fixtures.hpp"

using namespace contagion;

namespace {

std::string bundled() { return read_text_file(testing::source_path("configs/table1.cfg")); }

std::string replace(std::string text, const std::string& from, const std::string& to) {
    const auto pos = text.find(from);
    REQUIRE(pos != std::string::npos);
    return text.replace(pos, from.size(), to);
}

std::string parse_error(const std::string& text) {
    try {
        validate(parse_config(text));
    } catch (const ValidationError& e) {
        return e.what();
    }
    return {};
}

bool contains(const std::string& s, const std::string& part) { return s.find(part) != std::string::npos; }

}  // namespace

TEST_CASE("bundled config equals the in-code benchmark") {
    const ModelParams a = validate(load_config(testing::source_path("configs/table1.cfg")));
    const ModelParams b = testing::table1_params();
    CHECK(a.n_stocks == b.n_stocks);
    CHECK(a.n_regimes == b.n_regimes);
    CHECK(a.stock_noise_dim == b.stock_noise_dim);
    CHECK(a.claim_noise_dim == b.claim_noise_dim);
    CHECK(a.risk_aversion == b.risk_aversion);
    CHECK(a.horizon == b.horizon);
    CHECK(a.generator == b.generator);
    for (std::size_t i = 0; i < 2; ++i) {
        const auto& x = a.regimes[i];
        const auto& y = b.regimes[i];
        CHECK(x.rate == y.rate);
        CHECK(x.drift == y.drift);
        CHECK(x.volatility == y.volatility);
        CHECK(x.claim_drift == y.claim_drift);
        CHECK(x.claim_vol == y.claim_vol);
        CHECK(x.claim_vol_idio == y.claim_vol_idio);
        CHECK(x.claim_size == y.claim_size);
    }
    for (std::size_t s = 0; s < 4; ++s) CHECK(a.default_intensity[s] == b.default_intensity[s]);
    CHECK(a.claim_intensity == b.claim_intensity);
    CHECK(a.premium == b.premium);
}

TEST_CASE("missing keys are named") {
    CHECK(contains(parse_error(replace(bundled(), "\"(1,1)\": [2.6, 5.0]", "\"(1,1)\": [2.6]")),
                   "missing key nu[(1,1)] for regime 2"));
    CHECK(contains(parse_error(replace(bundled(), "  \"(1,1)\": [2.6, 5.0]\n", "")), "missing key nu[(1,1)]"));
    CHECK(contains(parse_error(replace(bundled(), "    1: [0.5, 0.75]\n", "")), "missing key h[(0,0)][1]"));
    CHECK(contains(parse_error(replace(bundled(), "gamma: 0.5\n", "")), "missing key gamma"));
    CHECK(contains(parse_error(replace(bundled(), "    g: 0.1\n", "")), "missing key regimes[2].g"));
}

TEST_CASE("invariant violations surface through validate") {
    CHECK(contains(parse_error(replace(bundled(), "g: 0.2", "g: 0")), "g must be positive"));
    CHECK(contains(parse_error(replace(bundled(), "[-0.5, 0.5]", "[-0.5, 0.4]")), "generator row 1"));
    CHECK(contains(parse_error(replace(bundled(), "gamma: 0.5", "gamma: 1.0")), "gamma must lie in (0,1)"));
}

TEST_CASE("structural errors") {
    CHECK(contains(parse_error("n: [1"), "malformed YAML"));
    CHECK(contains(parse_error("- 1\n- 2\n"), "top level must be a mapping"));
    CHECK(contains(parse_error(replace(bundled(), "gamma: 0.5", "gamma: half")), "gamma must be a number"));
    CHECK(contains(parse_error(replace(bundled(), "n: 2", "n: 1.5")), "n must be a positive integer"));
    CHECK(contains(parse_error(replace(bundled(), "\"(1,1)\": [2.6", "\"(1,2)\": [1, 1]\n  \"(1,1)\": [2.6")), "(1,2)"));
    CHECK(contains(parse_error(replace(bundled(), "    2: [0.9, 1.3]", "    2: [0.9, 1.3]\n    1: [1, 1]")),
                   "not a survivor"));
    CHECK(contains(parse_error(replace(bundled(), "[2.0, 3.0]", "[2.0, 3.0, 4.0]")), "expected 2"));
    CHECK(contains(parse_error(replace(bundled(), "m: 2", "m: 3")), "regimes has 2 entries"));
}

TEST_CASE("premium may be given per default state") {
    const std::string table = "p:\n"
                              "  \"(0,0)\": [0.8, 0.5]\n"
                              "  \"(1,0)\": [0.7, 0.4]\n"
                              "  \"(0,1)\": [0.6, 0.3]\n"
                              "  \"(1,1)\": [0.5, 0.2]\n";
    const auto p = validate(parse_config(replace(bundled(), "p: [0.8, 0.5]\n", table)));
    CHECK(p.premium_rate(1, DefaultState::parse("(0,1)")) == 0.3);
    CHECK(p.premium_rate(0, DefaultState::parse("(1,0)")) == 0.7);
    const std::string partial = "p:\n  \"(0,0)\": [0.8, 0.5]\n";
    CHECK(contains(parse_error(replace(bundled(), "p: [0.8, 0.5]\n", partial)), "missing key p[(1,0)]"));
}

TEST_CASE("unreadable files are I/O errors") {
    CHECK_THROWS_AS(load_config("/nonexistent/dir/model.cfg"), IoError);
    CHECK_THROWS_AS(read_text_file("/nonexistent/file"), IoError);
}
