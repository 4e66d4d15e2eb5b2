#include "dxq/protocol/utf8.hpp"
#include "dxq/xml/node.hpp"

#include <cstdint>
#include <optional>

namespace dxq::xml {

namespace {

void append_utf8(std::uint32_t cp, std::string& out)
{
    if (cp < 0x80) {
        out += static_cast<char>(cp);
    } else if (cp < 0x800) {
        out += static_cast<char>(0xC0 | (cp >> 6));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    } else if (cp < 0x10000) {
        out += static_cast<char>(0xE0 | (cp >> 12));
        out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    } else {
        out += static_cast<char>(0xF0 | (cp >> 18));
        out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
        out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    }
}

bool is_xml_char(std::uint32_t cp)
{
    return cp == 0x9 || cp == 0xA || cp == 0xD || (cp >= 0x20 && cp <= 0xD7FF) || (cp >= 0xE000 && cp <= 0xFFFD) ||
           (cp >= 0x10000 && cp <= 0x10FFFF);
}

class Parser {
public:
    explicit Parser(std::string_view input) : in_(input) {}

    Node document()
    {
        skip_whitespace();
        if (starts_with("<?xml") && pos_ + 5 < in_.size() && is_space(in_[pos_ + 5])) {
            const auto end = in_.find("?>", pos_);
            if (end == std::string_view::npos)
                fail("unterminated XML declaration");
            pos_ = end + 2;
            skip_whitespace();
        }
        if (at_end() || peek() != '<')
            fail("expected root element");
        Node root = element();
        skip_whitespace();
        if (!at_end())
            fail("content after the root element");
        return root;
    }

    std::vector<Node> fragment()
    {
        Node holder = Node::element("fragment");
        content(holder, std::nullopt);
        std::vector<Node> nodes = holder.children();
        return nodes;
    }

private:
    static bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; }

    bool at_end() const { return pos_ >= in_.size(); }
    char peek() const { return in_[pos_]; }
    bool starts_with(std::string_view s) const { return in_.substr(pos_, s.size()) == s; }

    [[noreturn]] void fail(const std::string& what) const
    {
        throw XmlError("XML parse error at offset " + std::to_string(pos_) + ": " + what);
    }

    void skip_whitespace()
    {
        while (!at_end() && is_space(peek()))
            ++pos_;
    }

    void expect(char c)
    {
        if (at_end() || peek() != c)
            fail(std::string("expected '") + c + "'");
        ++pos_;
    }

    std::string name()
    {
        const auto start = pos_;
        if (at_end() || !is_name_start_char(peek()))
            fail("expected a name");
        while (!at_end() && is_name_char(peek()))
            ++pos_;
        if (!at_end() && peek() == ':')
            fail("namespaces are not supported");
        return std::string(in_.substr(start, pos_ - start));
    }

    void reject_markup()
    {
        if (starts_with("<!--"))
            fail("comments are not supported");
        if (starts_with("<![CDATA["))
            fail("CDATA sections are not supported");
        if (starts_with("<!"))
            fail("document type declarations are not supported");
        if (starts_with("<?"))
            fail("processing instructions are not supported");
    }

    std::string attribute_value()
    {
        if (at_end() || (peek() != '"' && peek() != '\''))
            fail("expected quoted attribute value");
        const char quote = peek();
        ++pos_;
        std::string value;
        while (true) {
            if (at_end())
                fail("unterminated attribute value");
            const char c = peek();
            if (c == quote) {
                ++pos_;
                break;
            }
            if (c == '<')
                fail("'<' in attribute value");
            if (c == '&') {
                decode_reference(in_, pos_, value);
                continue;
            }
            value += (c == '\t' || c == '\n' || c == '\r') ? ' ' : c;
            ++pos_;
        }
        return value;
    }

    Node element()
    {
        reject_markup();
        expect('<');
        std::string tag = name();
        std::vector<Attribute> attributes;
        while (true) {
            const bool had_space = !at_end() && is_space(peek());
            skip_whitespace();
            if (at_end())
                fail("unterminated start tag");
            if (starts_with("/>")) {
                pos_ += 2;
                return Node::element(std::move(tag), std::move(attributes));
            }
            if (peek() == '>') {
                ++pos_;
                break;
            }
            if (!had_space)
                fail("expected whitespace before attribute");
            Attribute attr;
            attr.name = name();
            skip_whitespace();
            expect('=');
            skip_whitespace();
            attr.value = attribute_value();
            for (const auto& existing : attributes) {
                if (existing.name == attr.name)
                    fail("duplicate attribute '" + attr.name + "'");
            }
            attributes.push_back(std::move(attr));
        }

        Node node = Node::element(std::move(tag), std::move(attributes));
        content(node, node.name());
        return node;
    }

    // Reads children into `parent` until the matching end tag, or until the
    // end of input when `end_tag` is empty.
    void content(Node& parent, const std::optional<std::string>& end_tag)
    {
        std::string text;
        auto flush = [&] {
            if (!text.empty() && !is_whitespace_only(text))
                parent.append(Node::text(std::move(text)));
            text.clear();
        };

        while (true) {
            if (at_end()) {
                if (end_tag)
                    fail("missing end tag for '" + *end_tag + "'");
                flush();
                return;
            }
            const char c = peek();
            if (c == '<') {
                flush();
                if (starts_with("</")) {
                    if (!end_tag)
                        fail("unexpected end tag");
                    pos_ += 2;
                    const auto closing = name();
                    if (closing != *end_tag)
                        fail("end tag '" + closing + "' does not match '" + *end_tag + "'");
                    skip_whitespace();
                    expect('>');
                    return;
                }
                parent.append(element());
                continue;
            }
            if (c == '&') {
                decode_reference(in_, pos_, text);
                continue;
            }
            if (c == '\r') {
                text += '\n';
                ++pos_;
                if (!at_end() && peek() == '\n')
                    ++pos_;
                continue;
            }
            if (starts_with("]]>"))
                fail("']]>' in content");
            text += c;
            ++pos_;
        }
    }

    std::string_view in_;
    std::size_t pos_ = 0;
};

} // namespace

void decode_reference(std::string_view input, std::size_t& pos, std::string& out)
{
    const auto semi = input.find(';', pos);
    if (semi == std::string_view::npos || semi - pos > 12)
        throw XmlError("unterminated reference at offset " + std::to_string(pos));
    const auto ref = input.substr(pos + 1, semi - pos - 1);
    if (ref == "lt")
        out += '<';
    else if (ref == "gt")
        out += '>';
    else if (ref == "amp")
        out += '&';
    else if (ref == "quot")
        out += '"';
    else if (ref == "apos")
        out += '\'';
    else if (ref.size() >= 2 && ref[0] == '#') {
        const bool hex = ref[1] == 'x';
        const auto digits = ref.substr(hex ? 2 : 1);
        if (digits.empty())
            throw XmlError("empty character reference");
        std::uint32_t cp = 0;
        for (char c : digits) {
            int d = -1;
            if (c >= '0' && c <= '9')
                d = c - '0';
            else if (hex && c >= 'a' && c <= 'f')
                d = c - 'a' + 10;
            else if (hex && c >= 'A' && c <= 'F')
                d = c - 'A' + 10;
            if (d < 0)
                throw XmlError("malformed character reference '&" + std::string(ref) + ";'");
            cp = cp * (hex ? 16 : 10) + static_cast<std::uint32_t>(d);
            if (cp > 0x10FFFF)
                throw XmlError("character reference out of range");
        }
        if (!is_xml_char(cp))
            throw XmlError("character reference to an illegal character");
        append_utf8(cp, out);
    } else {
        throw XmlError("unsupported entity '&" + std::string(ref) + ";'");
    }
    pos = semi + 1;
}

Node parse(std::string_view input)
{
    if (!protocol::is_valid_utf8(input))
        throw XmlError("document is not valid UTF-8");
    return Parser(input).document();
}

std::vector<Node> parse_fragment(std::string_view input)
{
    if (!protocol::is_valid_utf8(input))
        throw XmlError("fragment is not valid UTF-8");
    return Parser(input).fragment();
}

} // namespace dxq::xml
