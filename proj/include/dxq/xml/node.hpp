#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace dxq::xml {

class XmlError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Attribute {
    std::string name;
    std::string value;

    bool operator==(const Attribute&) const = default;
};

/// Element or text node. Trees are plain values: copying a node deep-copies
/// the subtree.
class Node {
public:
    enum class Kind { element, text };

    static Node element(std::string name, std::vector<Attribute> attributes = {}, std::vector<Node> children = {});
    static Node text(std::string content);

    Kind kind() const { return kind_; }
    bool is_element() const { return kind_ == Kind::element; }
    bool is_text() const { return kind_ == Kind::text; }

    const std::string& name() const { return name_; }
    const std::string& text() const { return text_; }
    const std::vector<Attribute>& attributes() const { return attributes_; }
    const std::vector<Node>& children() const { return children_; }

    /// Appends a child, folding it into a preceding text node when both are
    /// text. Empty text is dropped.
    void append(Node child);

    /// Concatenated text of all descendant text nodes.
    std::string string_value() const;

    bool operator==(const Node&) const = default;

private:
    Kind kind_ = Kind::element;
    std::string name_;
    std::string text_;
    std::vector<Attribute> attributes_;
    std::vector<Node> children_;
};

bool is_valid_name(std::string_view name);
bool is_name_start_char(char c);
bool is_name_char(char c);
bool is_whitespace_only(std::string_view text);

/// Parses a single-rooted document. Whitespace-only text is discarded;
/// DOCTYPE, comments, processing instructions and CDATA are rejected.
Node parse(std::string_view input);

/// Parses a sequence of top-level elements and text (a query result body).
std::vector<Node> parse_fragment(std::string_view input);

/// Canonical form: attributes in order, empty elements as `<e/>`, no added
/// whitespace.
std::string serialize(const Node& node);
std::string serialize(std::span<const Node> nodes);

/// Decodes the character or predefined entity reference at `input[pos]`
/// (which is '&') into `out` and advances `pos` past the ';'.
void decode_reference(std::string_view input, std::size_t& pos, std::string& out);

std::string escape_text(std::string_view text);
std::string escape_attribute(std::string_view text);

} // namespace dxq::xml
