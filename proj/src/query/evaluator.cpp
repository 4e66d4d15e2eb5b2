#include "dxq/query/query.hpp"

namespace dxq::query {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

class Evaluator {
public:
    explicit Evaluator(const xml::Node& context) : context_(context) {}

    Value eval(const Expr& expr)
    {
        return std::visit(overloaded{
                              [&](const LetExpr& e) { return let(e); },
                              [&](const PathExpr& e) { return path(e); },
                              [&](const VariableRef& e) { return variable(e); },
                              [&](const SumCall& e) { return sum(e); },
                              [&](const ElementConstructor& e) { return Value{Item{construct(e)}}; },
                          },
                          expr.node);
    }

private:
    Value let(const LetExpr& e)
    {
        const auto depth = bindings_.size();
        for (const auto& [name, value] : e.bindings) {
            auto v = eval(*value);
            bindings_.emplace_back(name, std::move(v));
        }
        auto result = eval(*e.result);
        bindings_.resize(depth);
        return result;
    }

    Value path(const PathExpr& e)
    {
        std::vector<const xml::Node*> current{&context_};
        for (const auto& step : e.steps) {
            std::vector<const xml::Node*> next;
            for (const auto* node : current) {
                for (const auto& child : node->children()) {
                    if (child.is_element() && child.name() == step)
                        next.push_back(&child);
                }
            }
            current = std::move(next);
        }
        Value out;
        out.reserve(current.size());
        for (const auto* node : current)
            out.emplace_back(*node);
        return out;
    }

    Value variable(const VariableRef& e)
    {
        for (auto it = bindings_.rbegin(); it != bindings_.rend(); ++it) {
            if (it->first == e.name)
                return it->second;
        }
        throw QueryError("unbound variable $" + e.name);
    }

    Value sum(const SumCall& e)
    {
        Decimal total;
        for (const auto& item : eval(*e.argument)) {
            if (const auto* number = std::get_if<Decimal>(&item)) {
                total += *number;
                continue;
            }
            const auto text = std::get<xml::Node>(item).string_value();
            const auto number = Decimal::parse(text);
            if (!number)
                throw QueryError("sum: cannot convert '" + text + "' to a number");
            total += *number;
        }
        return Value{Item{total}};
    }

    xml::Node construct(const ElementConstructor& e)
    {
        auto element = xml::Node::element(e.name, e.attributes);
        for (const auto& part : e.content) {
            std::visit(overloaded{
                           [&](const std::string& text) { element.append(xml::Node::text(text)); },
                           [&](const std::shared_ptr<const ElementConstructor>& nested) { element.append(construct(*nested)); },
                           [&](const ExprPtr& inner) { append_value(element, eval(*inner)); },
                       },
                       part);
        }
        return element;
    }

    static void append_value(xml::Node& parent, const Value& value)
    {
        bool previous_atomic = false;
        for (const auto& item : value) {
            if (const auto* number = std::get_if<Decimal>(&item)) {
                parent.append(xml::Node::text((previous_atomic ? " " : "") + number->to_string()));
                previous_atomic = true;
            } else {
                parent.append(std::get<xml::Node>(item));
                previous_atomic = false;
            }
        }
    }

    const xml::Node& context_;
    std::vector<std::pair<std::string, Value>> bindings_;
};

} // namespace

Value Query::evaluate(const xml::Node& context) const
{
    return Evaluator(context).eval(*root_);
}

std::string serialize(const Value& value)
{
    std::string out;
    bool previous_atomic = false;
    for (const auto& item : value) {
        if (const auto* number = std::get_if<Decimal>(&item)) {
            if (previous_atomic)
                out += ' ';
            out += number->to_string();
            previous_atomic = true;
        } else {
            out += xml::serialize(std::get<xml::Node>(item));
            previous_atomic = false;
        }
    }
    return out;
}

std::string SubsetQueryProcessor::execute(std::string_view query, const xml::Node& context) const
{
    return serialize(Query::parse(query).evaluate(context));
}

} // namespace dxq::query
