#pragma once

#include "dxq/query/decimal.hpp"
#include "dxq/xml/node.hpp"

#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace dxq::query {

/// Parse or evaluation failure of a query. Reported on the wire as error 200
/// with `what()` as the ERROR body.
class QueryError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

using Item = std::variant<xml::Node, Decimal>;
using Value = std::vector<Item>;

/// Items concatenated; adjacent numbers are separated by one space.
std::string serialize(const Value& value);

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct LetExpr {
    std::vector<std::pair<std::string, ExprPtr>> bindings;
    ExprPtr result;
};

/// `.`, `./a/b` or `a/b`: child steps from the context item.
struct PathExpr {
    std::vector<std::string> steps;
};

struct VariableRef {
    std::string name;
};

struct SumCall {
    ExprPtr argument;
};

struct ElementConstructor;

/// Constructor content: literal text, a nested constructor, or `{expr}`.
using ConstructorPart = std::variant<std::string, std::shared_ptr<const ElementConstructor>, ExprPtr>;

struct ElementConstructor {
    std::string name;
    std::vector<xml::Attribute> attributes;
    std::vector<ConstructorPart> content;
};

struct Expr {
    std::variant<LetExpr, PathExpr, VariableRef, SumCall, ElementConstructor> node;
};

/// A parsed query of the supported subset: `let $v := E return E`, child
/// paths, `$v`, `sum(E)` and direct element constructors.
class Query {
public:
    /// Throws QueryError on syntax errors, constructs outside the subset and
    /// unbound variables.
    static Query parse(std::string_view text);

    /// Evaluates against `context` as the context item. Pure.
    Value evaluate(const xml::Node& context) const;

    const Expr& root() const { return *root_; }

private:
    explicit Query(ExprPtr root) : root_(std::move(root)) {}
    ExprPtr root_;
};

/// Executes query text against a document and returns the serialized
/// result. Nodes depend on this interface so a full XQuery engine can be
/// plugged in behind the same contract.
class QueryProcessor {
public:
    virtual ~QueryProcessor() = default;
    virtual std::string execute(std::string_view query, const xml::Node& context) const = 0;
};

class SubsetQueryProcessor final : public QueryProcessor {
public:
    std::string execute(std::string_view query, const xml::Node& context) const override;
};

} // namespace dxq::query
