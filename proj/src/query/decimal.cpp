#include "dxq/query/decimal.hpp"

#include <algorithm>

namespace dxq::query {

namespace {

std::string_view strip_zeros(std::string_view s)
{
    const auto nz = s.find_first_not_of('0');
    return nz == std::string_view::npos ? std::string_view{} : s.substr(nz);
}

int compare_magnitude(std::string_view a, std::string_view b)
{
    a = strip_zeros(a);
    b = strip_zeros(b);
    if (a.size() != b.size())
        return a.size() < b.size() ? -1 : 1;
    return a.compare(b) < 0 ? -1 : (a == b ? 0 : 1);
}

std::string add_magnitude(const std::string& a, const std::string& b)
{
    std::string out;
    int carry = 0;
    auto i = a.rbegin();
    auto j = b.rbegin();
    while (i != a.rend() || j != b.rend() || carry) {
        int sum = carry;
        if (i != a.rend())
            sum += *i++ - '0';
        if (j != b.rend())
            sum += *j++ - '0';
        out += static_cast<char>('0' + sum % 10);
        carry = sum / 10;
    }
    std::reverse(out.begin(), out.end());
    return out;
}

// Requires |a| >= |b|.
std::string subtract_magnitude(const std::string& a, const std::string& b)
{
    std::string out;
    int borrow = 0;
    auto j = b.rbegin();
    for (auto i = a.rbegin(); i != a.rend(); ++i) {
        int d = (*i - '0') - borrow;
        if (j != b.rend())
            d -= *j++ - '0';
        borrow = d < 0;
        out += static_cast<char>('0' + (d + 10) % 10);
    }
    std::reverse(out.begin(), out.end());
    return out;
}

} // namespace

std::optional<Decimal> Decimal::parse(std::string_view text)
{
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos)
        return std::nullopt;
    text = text.substr(first, text.find_last_not_of(" \t\r\n") - first + 1);

    Decimal d;
    if (text.front() == '+' || text.front() == '-') {
        d.negative_ = text.front() == '-';
        text.remove_prefix(1);
    }
    const auto dot = text.find('.');
    const auto whole = text.substr(0, dot);
    const auto frac = dot == std::string_view::npos ? std::string_view{} : text.substr(dot + 1);
    auto all_digits = [](std::string_view s) { return std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; }); };
    if (whole.empty() && frac.empty())
        return std::nullopt;
    if (!all_digits(whole) || !all_digits(frac))
        return std::nullopt;

    d.digits_ = std::string(whole) + std::string(frac);
    d.scale_ = frac.size();
    d.normalize();
    return d;
}

void Decimal::normalize()
{
    while (scale_ > 0 && digits_.size() > 1 && digits_.back() == '0') {
        digits_.pop_back();
        --scale_;
    }
    if (scale_ > 0 && digits_ == "0")
        scale_ = 0;
    const auto nz = digits_.find_first_not_of('0');
    digits_ = nz == std::string::npos ? "0" : digits_.substr(nz);
    // A value like 0.05 has digits "5" and scale 2; leading zeros are implied.
    if (digits_ == "0") {
        scale_ = 0;
        negative_ = false;
    }
}

std::string Decimal::to_string() const
{
    std::string digits = digits_;
    if (digits.size() <= scale_)
        digits.insert(0, scale_ - digits.size() + 1, '0');
    std::string out = negative_ ? "-" : "";
    if (scale_ == 0)
        return out + digits;
    out += digits.substr(0, digits.size() - scale_);
    out += '.';
    out += digits.substr(digits.size() - scale_);
    return out;
}

Decimal operator+(const Decimal& a, const Decimal& b)
{
    const auto scale = std::max(a.scale_, b.scale_);
    const std::string x = a.digits_ + std::string(scale - a.scale_, '0');
    const std::string y = b.digits_ + std::string(scale - b.scale_, '0');

    Decimal r;
    r.scale_ = scale;
    if (a.negative_ == b.negative_) {
        r.digits_ = add_magnitude(x, y);
        r.negative_ = a.negative_;
    } else if (compare_magnitude(x, y) >= 0) {
        r.digits_ = subtract_magnitude(x, y);
        r.negative_ = a.negative_;
    } else {
        r.digits_ = subtract_magnitude(y, x);
        r.negative_ = b.negative_;
    }
    r.normalize();
    return r;
}

} // namespace dxq::query
