#include "dxq/protocol/utf8.hpp"
#include "dxq/query/query.hpp"

#include <algorithm>
#include <array>

namespace dxq::query {

namespace {

constexpr std::array<std::string_view, 10> unsupported_keywords{
    "for", "some", "every", "if", "typeswitch", "switch", "declare", "where", "order", "return"};

class QueryParser {
public:
    explicit QueryParser(std::string_view text) : in_(text) {}

    ExprPtr parse()
    {
        auto expr = expression();
        skip_whitespace();
        if (!at_end())
            fail("unexpected '" + std::string(in_.substr(pos_, 16)) + "'");
        return expr;
    }

private:
    static bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; }

    bool at_end() const { return pos_ >= in_.size(); }
    char peek() const { return in_[pos_]; }
    bool starts_with(std::string_view s) const { return in_.substr(pos_, s.size()) == s; }

    [[noreturn]] void fail(const std::string& what) const
    {
        throw QueryError("query syntax error at offset " + std::to_string(pos_) + ": " + what);
    }

    void skip_whitespace()
    {
        while (!at_end() && is_space(peek()))
            ++pos_;
    }

    void expect(std::string_view token)
    {
        if (!starts_with(token))
            fail("expected '" + std::string(token) + "'");
        pos_ += token.size();
    }

    // Next non-whitespace character without consuming anything.
    char lookahead() const
    {
        auto p = pos_;
        while (p < in_.size() && is_space(in_[p]))
            ++p;
        return p < in_.size() ? in_[p] : '\0';
    }

    bool keyword(std::string_view word)
    {
        if (!starts_with(word))
            return false;
        const auto after = pos_ + word.size();
        if (after < in_.size() && xml::is_name_char(in_[after]))
            return false;
        pos_ = after;
        return true;
    }

    std::string name()
    {
        if (at_end())
            fail("expected a name");
        if (peek() == '*')
            fail("wildcard steps are not supported");
        if (peek() == '@')
            fail("attribute steps are not supported");
        if (!xml::is_name_start_char(peek()))
            fail("expected a name");
        const auto start = pos_;
        while (!at_end() && xml::is_name_char(peek()))
            ++pos_;
        if (!at_end() && peek() == ':' && !starts_with(":="))
            fail("namespaces are not supported");
        return std::string(in_.substr(start, pos_ - start));
    }

    bool is_bound(const std::string& variable) const
    {
        return std::find(scope_.begin(), scope_.end(), variable) != scope_.end();
    }

    static ExprPtr make(auto node) { return std::make_shared<const Expr>(Expr{std::move(node)}); }

    ExprPtr expression()
    {
        skip_whitespace();
        if (at_end())
            fail("unexpected end of query");

        const char c = peek();
        if (c == '$') {
            ++pos_;
            auto variable = name();
            if (!is_bound(variable))
                throw QueryError("unbound variable $" + variable);
            return make(VariableRef{std::move(variable)});
        }
        if (c == '<')
            return make(constructor());
        if (c == '.') {
            if (starts_with(".."))
                fail("parent steps are not supported");
            ++pos_;
            PathExpr path;
            steps(path);
            return make(std::move(path));
        }
        if (c == '/')
            fail("absolute paths are not supported");
        if (xml::is_name_start_char(c)) {
            const auto start = pos_;
            auto word = name();
            const char next = lookahead();
            if (word == "let" && next == '$')
                return let_expression();
            if (std::find(unsupported_keywords.begin(), unsupported_keywords.end(), word) != unsupported_keywords.end() &&
                (next == '$' || next == '(')) {
                pos_ = start;
                fail("'" + word + "' expressions are not supported");
            }
            if (next == '(') {
                if (word != "sum") {
                    pos_ = start;
                    fail("unsupported function '" + word + "'");
                }
                skip_whitespace();
                expect("(");
                auto argument = expression();
                skip_whitespace();
                expect(")");
                return make(SumCall{std::move(argument)});
            }
            PathExpr path;
            path.steps.push_back(std::move(word));
            steps(path);
            return make(std::move(path));
        }
        fail(std::string("unexpected '") + c + "'");
    }

    void steps(PathExpr& path)
    {
        while (true) {
            const auto save = pos_;
            skip_whitespace();
            if (at_end() || peek() != '/') {
                pos_ = save;
                return;
            }
            ++pos_;
            if (!at_end() && peek() == '/')
                fail("'//' is not supported");
            skip_whitespace();
            path.steps.push_back(name());
        }
    }

    ExprPtr let_expression()
    {
        LetExpr let;
        const auto scope_size = scope_.size();
        while (true) {
            skip_whitespace();
            expect("$");
            auto variable = name();
            skip_whitespace();
            expect(":=");
            auto value = expression();
            let.bindings.emplace_back(variable, std::move(value));
            scope_.push_back(std::move(variable));
            skip_whitespace();
            if (keyword("let"))
                continue;
            if (keyword("return"))
                break;
            fail("expected 'return'");
        }
        let.result = expression();
        scope_.resize(scope_size);
        return make(std::move(let));
    }

    void reference(std::string& out)
    {
        try {
            xml::decode_reference(in_, pos_, out);
        } catch (const xml::XmlError& e) {
            fail(e.what());
        }
    }

    ElementConstructor constructor()
    {
        expect("<");
        ElementConstructor element;
        element.name = name();
        while (true) {
            const bool had_space = !at_end() && is_space(peek());
            skip_whitespace();
            if (at_end())
                fail("unterminated start tag");
            if (starts_with("/>")) {
                pos_ += 2;
                return element;
            }
            if (peek() == '>') {
                ++pos_;
                break;
            }
            if (!had_space)
                fail("expected whitespace before attribute");
            xml::Attribute attr;
            attr.name = name();
            skip_whitespace();
            expect("=");
            skip_whitespace();
            attr.value = attribute_value();
            element.attributes.push_back(std::move(attr));
        }

        std::string text;
        auto flush = [&] {
            if (!text.empty() && !xml::is_whitespace_only(text))
                element.content.emplace_back(std::move(text));
            text.clear();
        };
        while (true) {
            if (at_end())
                fail("missing end tag for '" + element.name + "'");
            if (starts_with("</")) {
                flush();
                pos_ += 2;
                const auto closing = name();
                skip_whitespace();
                expect(">");
                if (closing != element.name)
                    fail("end tag '" + closing + "' does not match '" + element.name + "'");
                return element;
            }
            if (starts_with("<!--") || starts_with("<![CDATA[") || starts_with("<?"))
                fail("comments, CDATA and processing instructions are not supported");
            if (peek() == '<') {
                flush();
                element.content.emplace_back(std::make_shared<const ElementConstructor>(constructor()));
                continue;
            }
            if (starts_with("{{") || starts_with("}}")) {
                text += peek();
                pos_ += 2;
                continue;
            }
            if (peek() == '}')
                fail("unmatched '}'");
            if (peek() == '{') {
                flush();
                ++pos_;
                auto inner = expression();
                skip_whitespace();
                expect("}");
                element.content.emplace_back(std::move(inner));
                continue;
            }
            if (peek() == '&') {
                reference(text);
                continue;
            }
            text += peek();
            ++pos_;
        }
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
                return value;
            }
            if (starts_with("{{") || starts_with("}}")) {
                value += c;
                pos_ += 2;
                continue;
            }
            if (c == '{' || c == '}')
                fail("enclosed expressions in attributes are not supported");
            if (c == '<')
                fail("'<' in attribute value");
            if (c == '&') {
                reference(value);
                continue;
            }
            value += c;
            ++pos_;
        }
    }

    std::string_view in_;
    std::size_t pos_ = 0;
    std::vector<std::string> scope_;
};

} // namespace

Query Query::parse(std::string_view text)
{
    if (!protocol::is_valid_utf8(text))
        throw QueryError("query is not valid UTF-8");
    return Query(QueryParser(text).parse());
}

} // namespace dxq::query
