#include "contagion/default_state.hpp"

#include <cctype>

#include "contagion/errors.hpp"

namespace contagion {

DefaultState::DefaultState(std::size_t n_stocks, std::uint32_t bits) : n_(n_stocks), bits_(bits) {
    if (n_stocks == 0 || n_stocks > kMaxStocks) {
        throw ValidationError("default state: stock count must lie in [1, 16], got " +
                              std::to_string(n_stocks));
    }
    if ((bits >> n_stocks) != 0u) {
        throw ValidationError("default state: bitmask " + std::to_string(bits) +
                              " has bits beyond stock count " + std::to_string(n_stocks));
    }
}

DefaultState DefaultState::all_defaulted(std::size_t n_stocks) {
    if (n_stocks == 0 || n_stocks > kMaxStocks) {
        throw ValidationError("default state: stock count must lie in [1, 16], got " +
                              std::to_string(n_stocks));
    }
    return {n_stocks, static_cast<std::uint32_t>((std::uint64_t{1} << n_stocks) - 1)};
}

DefaultState DefaultState::parse(std::string_view text) {
    std::uint32_t bits = 0;
    std::size_t count = 0;
    bool open = false;
    bool closed = false;
    for (char ch : text) {
        if (std::isspace(static_cast<unsigned char>(ch)) || ch == ',') continue;
        if (ch == '(' && !open && count == 0) {
            open = true;
        } else if (ch == ')' && open && !closed) {
            closed = true;
        } else if ((ch == '0' || ch == '1') && !closed) {
            if (count >= kMaxStocks) throw ValidationError("default state '" + std::string(text) + "': too many stocks");
            if (ch == '1') bits |= (1u << count);
            ++count;
        } else {
            throw ValidationError("default state '" + std::string(text) + "': expected form (z1,...,zn)");
        }
    }
    if (count == 0 || !open || !closed) {
        throw ValidationError("default state '" + std::string(text) + "': expected form (z1,...,zn)");
    }
    return {count, bits};
}

bool DefaultState::defaulted(std::size_t stock) const {
    if (stock >= n_) {
        throw std::out_of_range("stock index " + std::to_string(stock) + " out of range for " +
                                std::to_string(n_) + " stocks");
    }
    return (bits_ >> stock) & 1u;
}

DefaultState DefaultState::flip(std::size_t j) const {
    if (j > n_) {
        throw std::out_of_range("flip: stock index " + std::to_string(j) + " out of range [0, " +
                                std::to_string(n_) + "]");
    }
    if (j == 0) return *this;
    DefaultState out = *this;
    out.bits_ ^= (1u << (j - 1));
    return out;
}

std::vector<std::size_t> DefaultState::survivors() const {
    std::vector<std::size_t> out;
    out.reserve(n_);
    for (std::size_t j = 0; j < n_; ++j) {
        if (!((bits_ >> j) & 1u)) out.push_back(j);
    }
    return out;
}

std::string DefaultState::to_string() const {
    std::string s = "(";
    for (std::size_t j = 0; j < n_; ++j) {
        if (j) s += ',';
        s += ((bits_ >> j) & 1u) ? '1' : '0';
    }
    s += ')';
    return s;
}

std::vector<std::vector<DefaultState>> states_by_descending_weight(std::size_t n_stocks) {
    const DefaultState full = DefaultState::all_defaulted(n_stocks);
    std::vector<std::vector<DefaultState>> levels(n_stocks + 1);
    for (std::uint32_t bits = 0; bits <= full.bits(); ++bits) {
        DefaultState z(n_stocks, bits);
        levels[n_stocks - z.weight()].push_back(z);
    }
    return levels;
}

}  // namespace contagion
