#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace contagion {

/// Default indicator of n stocks packed into a bitmask.
///
/// Bit j-1 set means stock j (1-based) has defaulted. The all-zero mask is the
/// state where every stock is alive, the all-ones mask the state where every
/// stock has defaulted.
class DefaultState {
public:
    static constexpr std::size_t kMaxStocks = 16;

    DefaultState() = default;
    DefaultState(std::size_t n_stocks, std::uint32_t bits);

    static DefaultState all_alive(std::size_t n_stocks) { return {n_stocks, 0u}; }
    static DefaultState all_defaulted(std::size_t n_stocks);

    /// Parses "(z1,...,zn)" with each z in {0,1}; whitespace is ignored.
    static DefaultState parse(std::string_view text);

    std::size_t n_stocks() const noexcept { return n_; }
    std::uint32_t bits() const noexcept { return bits_; }
    std::size_t index() const noexcept { return bits_; }
    std::size_t state_count() const noexcept { return std::size_t{1} << n_; }

    /// Number of defaulted stocks.
    std::size_t weight() const noexcept { return static_cast<std::size_t>(std::popcount(bits_)); }

    bool defaulted(std::size_t stock) const;  // 0-based stock
    bool alive(std::size_t stock) const { return !defaulted(stock); }
    bool is_all_defaulted() const noexcept { return weight() == n_; }

    /// Toggles the bit of 1-based stock j; j = 0 returns the state unchanged.
    DefaultState flip(std::size_t j) const;

    /// 0-based indices of the stocks still alive, in increasing order.
    std::vector<std::size_t> survivors() const;

    std::string to_string() const;

    friend bool operator==(const DefaultState&, const DefaultState&) = default;

private:
    std::size_t n_ = 0;
    std::uint32_t bits_ = 0;
};

/// All 2^n states grouped by number of defaults, from all-defaulted down to all-alive.
std::vector<std::vector<DefaultState>> states_by_descending_weight(std::size_t n_stocks);

}  // namespace contagion
