#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace dxq::query {

/// Arbitrary-precision decimal supporting exactly what `sum` needs:
/// parsing, addition and minimal formatting.
class Decimal {
public:
    Decimal() = default;

    /// Accepts optional surrounding whitespace, an optional sign and
    /// `digits[.digits]` or `.digits`. No exponents.
    static std::optional<Decimal> parse(std::string_view text);

    /// Minimal form: no leading zeros, no trailing fractional zeros, no
    /// decimal point for integral values, never "-0".
    std::string to_string() const;

    bool is_zero() const { return digits_ == "0"; }

    friend Decimal operator+(const Decimal& a, const Decimal& b);
    Decimal& operator+=(const Decimal& other) { return *this = *this + other; }

    bool operator==(const Decimal&) const = default;

private:
    void normalize();

    bool negative_ = false;
    std::string digits_ = "0"; // unscaled magnitude, most significant first
    std::size_t scale_ = 0;    // number of fractional digits in digits_
};

} // namespace dxq::query
