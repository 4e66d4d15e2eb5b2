#include "dxq/protocol/lists.hpp"

#include "dxq/protocol/error_code.hpp"

namespace dxq::protocol {

namespace {

[[noreturn]] void malformed(std::string_view what, std::string_view text)
{
    throw ProtocolError(error_code::invalid_message, std::string(what) + ": '" + std::string(text) + "'");
}

} // namespace

std::string format_result_sources(const std::vector<NodeName>& names)
{
    std::string out;
    for (const auto& name : names) {
        if (!out.empty())
            out += ' ';
        out += '{';
        out += name.str();
        out += '}';
    }
    return out;
}

std::vector<NodeName> parse_result_sources(std::string_view text)
{
    std::vector<NodeName> names;
    std::size_t pos = 0;
    while (true) {
        if (pos >= text.size() || text[pos] != '{')
            malformed("malformed Result-Sources", text);
        const auto close = text.find('}', pos + 1);
        if (close == std::string_view::npos)
            malformed("unterminated name in Result-Sources", text);
        names.push_back(NodeName::parse(text.substr(pos + 1, close - pos - 1)));
        pos = close + 1;
        if (pos == text.size())
            break;
        if (text[pos] != ' ')
            malformed("malformed Result-Sources", text);
        ++pos;
    }
    return names;
}

std::vector<std::string> parse_space_list(std::string_view text)
{
    std::vector<std::string> items;
    if (text.empty())
        return items;
    std::size_t start = 0;
    while (true) {
        const auto space = text.find(' ', start);
        items.emplace_back(text.substr(start, space == std::string_view::npos ? std::string_view::npos : space - start));
        if (space == std::string_view::npos)
            break;
        start = space + 1;
    }
    return items;
}

std::string join_space_list(const std::vector<std::string>& items)
{
    std::string out;
    for (const auto& item : items) {
        if (!out.empty())
            out += ' ';
        out += item;
    }
    return out;
}

std::vector<XdpSpec> parse_xdp_spec_list(std::string_view text)
{
    std::vector<XdpSpec> specs;
    if (text.empty())
        return specs;
    std::size_t pos = 0;
    while (true) {
        const auto open = text.find('{', pos);
        if (open == std::string_view::npos)
            malformed("missing '{' in XDP list", text);
        const auto close = text.find('}', open + 1);
        if (close == std::string_view::npos)
            malformed("unterminated name in XDP list", text);

        XdpSpec spec;
        const auto ident = text.substr(pos, open - pos);
        if (!ident.empty()) {
            auto id = NodeIdentifier::try_parse(ident);
            if (!id)
                malformed("invalid identifier in XDP list", text);
            spec.identifier = std::move(*id);
        }
        spec.name = NodeName::parse(text.substr(open + 1, close - open - 1));
        specs.push_back(std::move(spec));

        pos = close + 1;
        if (pos == text.size())
            break;
        if (text[pos] != ' ')
            malformed("malformed XDP list", text);
        ++pos;
    }
    return specs;
}

std::string format_xdp_spec_list(const std::vector<XdpSpec>& specs)
{
    std::string out;
    for (const auto& spec : specs) {
        if (!out.empty())
            out += ' ';
        if (spec.identifier)
            out += spec.identifier->str();
        out += '{';
        out += spec.name.str();
        out += '}';
    }
    return out;
}

} // namespace dxq::protocol
