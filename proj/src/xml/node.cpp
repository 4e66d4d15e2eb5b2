#include "dxq/xml/node.hpp"

namespace dxq::xml {

Node Node::element(std::string name, std::vector<Attribute> attributes, std::vector<Node> children)
{
    Node n;
    n.kind_ = Kind::element;
    n.name_ = std::move(name);
    n.attributes_ = std::move(attributes);
    for (auto& child : children)
        n.append(std::move(child));
    return n;
}

Node Node::text(std::string content)
{
    Node n;
    n.kind_ = Kind::text;
    n.text_ = std::move(content);
    return n;
}

void Node::append(Node child)
{
    if (child.is_text()) {
        if (child.text_.empty())
            return;
        if (!children_.empty() && children_.back().is_text()) {
            children_.back().text_ += child.text_;
            return;
        }
    }
    children_.push_back(std::move(child));
}

std::string Node::string_value() const
{
    if (is_text())
        return text_;
    std::string out;
    for (const auto& child : children_)
        out += child.string_value();
    return out;
}

bool is_name_start_char(char c)
{
    const auto u = static_cast<unsigned char>(c);
    return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || c == '_' || u >= 0x80;
}

bool is_name_char(char c)
{
    return is_name_start_char(c) || (c >= '0' && c <= '9') || c == '-' || c == '.';
}

bool is_valid_name(std::string_view name)
{
    if (name.empty() || !is_name_start_char(name.front()))
        return false;
    for (char c : name) {
        if (!is_name_char(c))
            return false;
    }
    return true;
}

bool is_whitespace_only(std::string_view text)
{
    return text.find_first_not_of(" \t\r\n") == std::string_view::npos;
}

std::string escape_text(std::string_view text)
{
    std::string out;
    out.reserve(text.size());
    for (char c : text) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '\r': out += "&#13;"; break;
        default: out += c; break;
        }
    }
    return out;
}

std::string escape_attribute(std::string_view text)
{
    std::string out;
    out.reserve(text.size());
    for (char c : text) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        case '\t': out += "&#9;"; break;
        case '\n': out += "&#10;"; break;
        case '\r': out += "&#13;"; break;
        default: out += c; break;
        }
    }
    return out;
}

namespace {

void serialize_into(const Node& node, std::string& out)
{
    if (node.is_text()) {
        out += escape_text(node.text());
        return;
    }
    out += '<';
    out += node.name();
    for (const auto& attr : node.attributes()) {
        out += ' ';
        out += attr.name;
        out += "=\"";
        out += escape_attribute(attr.value);
        out += '"';
    }
    if (node.children().empty()) {
        out += "/>";
        return;
    }
    out += '>';
    for (const auto& child : node.children())
        serialize_into(child, out);
    out += "</";
    out += node.name();
    out += '>';
}

} // namespace

std::string serialize(const Node& node)
{
    std::string out;
    serialize_into(node, out);
    return out;
}

std::string serialize(std::span<const Node> nodes)
{
    std::string out;
    for (const auto& node : nodes)
        serialize_into(node, out);
    return out;
}

} // namespace dxq::xml
